#pragma once

// Planar many-on-one engagement: exact deviated-pursuit time-to-go against a
// constant-velocity target, nonlinear polar kinematics, the cooperative
// impact-time guidance law, and the fixed-step salvo simulator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace salvo {

class EngagementError : public std::runtime_error {
public:
    explicit EngagementError(const std::string& msg) : std::runtime_error(msg) {}
};

class DeviationNearQuadratureError : public EngagementError {
public:
    explicit DeviationNearQuadratureError(const std::string& msg)
        : EngagementError(msg) {}
};

inline constexpr double kGravity = 9.81;  // m/s^2

// Wrap to (-pi, pi].
// Wrap into the half-open interval (-pi, pi]; both +pi and -pi map to +pi.
inline double wrap_angle(double a) {
    a = std::fmod(a - M_PI, 2.0 * M_PI);
    if (a > 0.0) a -= 2.0 * M_PI;
    return a + M_PI;
}

// One pursuer, polar state relative to the target. Angles in radians. The
// deviation angle is always derived as wrap(gamma_M - theta), never
// integrated separately.
struct InterceptorState {
    double r = 0.0;        // relative range, m
    double theta = 0.0;    // line-of-sight angle, rad (inertial)
    double gamma_M = 0.0;  // flight-path angle, rad
    double V_M = 0.0;      // speed, m/s (constant)
};

struct TargetState {
    double V_T = 0.0;      // speed, m/s (constant)
    double gamma_T = 0.0;  // heading, rad (constant; non-manoeuvring)
    double x = 0.0;        // inertial position, m
    double y = 0.0;
};

inline double deviation(const InterceptorState& s) {
    return wrap_angle(s.gamma_M - s.theta);
}

// Exact time-to-go of deviated pursuit:
// t_go = (r / Ups) * sec(delta) * [V_M + V_T cos(gamma_T - theta + delta)],
// Ups = V_M^2 - V_T^2. Zero at r = 0.
inline double time_to_go(const InterceptorState& s, const TargetState& t) {
    if (s.V_M <= t.V_T)
        throw EngagementError("interceptor must be faster than target");
    const double d = deviation(s);
    if (std::abs(std::cos(d)) < 1e-6)
        throw DeviationNearQuadratureError(
            "deviation angle within 1e-6 of quadrature; time-to-go is unbounded");
    const double ups = s.V_M * s.V_M - t.V_T * t.V_T;
    return (s.r / ups) *
           (s.V_M / std::cos(d) +
            t.V_T * std::cos(t.gamma_T - s.theta + d) / std::cos(d));
}

struct KinematicsDerivative {
    double r_dot = 0.0;
    double theta_dot = 0.0;
    double gamma_M_dot = 0.0;
};

// Polar engagement kinematics:
//   r_dot      = V_T cos(gamma_T - theta) - V_M cos(delta)
//   theta_dot  = [V_T sin(gamma_T - theta) - V_M sin(delta)] / r
//   gamma_M_dot = a_M / V_M
inline KinematicsDerivative kinematics_derivative(const InterceptorState& s,
                                                  const TargetState& t,
                                                  double a_M) {
    if (s.r <= 0.0) throw EngagementError("kinematics require r > 0");
    const double d = deviation(s);
    KinematicsDerivative out;
    out.r_dot = t.V_T * std::cos(t.gamma_T - s.theta) - s.V_M * std::cos(d);
    out.theta_dot =
        (t.V_T * std::sin(t.gamma_T - s.theta) - s.V_M * std::sin(d)) / s.r;
    out.gamma_M_dot = a_M / s.V_M;
    return out;
}

// Time derivative of the exact time-to-go along the flow:
//   tgo_dot = -1 - [r V_theta sec^2(delta) / (V_M Ups)] * (a_M - V_M theta_dot).
// The a_M and theta_dot contributions enter through the single factor
// (a_M - V_M theta_dot); under pure deviated pursuit (a_M = V_M theta_dot)
// the rate is exactly -1. Validated against finite differences of time_to_go.
inline double tgo_dynamics(const InterceptorState& s, const TargetState& t,
                           double a_M) {
    const double d = deviation(s);
    if (std::abs(std::cos(d)) < 1e-6)
        throw DeviationNearQuadratureError(
            "deviation angle within 1e-6 of quadrature; time-to-go is unbounded");
    const double ups = s.V_M * s.V_M - t.V_T * t.V_T;
    const double vth =
        t.V_T * std::sin(t.gamma_T - s.theta) - s.V_M * std::sin(d);
    const double thd = vth / s.r;
    const double sec2 = 1.0 / (std::cos(d) * std::cos(d));
    return -1.0 - (s.r * vth * sec2 / (s.V_M * ups)) * (a_M - s.V_M * thd);
}

// Cooperative command before saturation:
//   a_M = V_M theta_dot + [V_M Ups cos^2(delta) / (r V_theta)] * coupling,
// where coupling = sum_j l_ij t_go_j from the Laplacian row. This realizes
// tgo_dot_i = -1 - coupling, the shifted consensus protocol. When
// |V_theta| < v_eps the consensus term is frozen at `frozen_term` (in/out)
// instead of dividing by a vanishing V_theta; returns true in `guarded`.
inline double guidance_command(const InterceptorState& s, const TargetState& t,
                               double coupling, double v_eps,
                               double& frozen_term, bool& guarded) {
    const double d = deviation(s);
    const double ups = s.V_M * s.V_M - t.V_T * t.V_T;
    const double vth =
        t.V_T * std::sin(t.gamma_T - s.theta) - s.V_M * std::sin(d);
    const double thd = vth / s.r;
    const double base = s.V_M * thd;
    if (std::abs(vth) > v_eps) {
        frozen_term =
            (s.V_M * ups * std::cos(d) * std::cos(d) / (s.r * vth)) * coupling;
        guarded = false;
    } else {
        guarded = true;
    }
    return base + frozen_term;
}

struct EngagementParams {
    double a_max_g = 40.0;         // lateral-acceleration limit, g
    double capture_radius_m = 1.0;
    double sync_tol_s = 0.1;       // "simultaneous" spread tolerance
    double dt_s = 1e-3;
    double t_max_s = 600.0;
    double v_eps = 1e-3;           // V_theta guard threshold, m/s
    double divergence_window_s = 5.0;  // sustained t_go growth => diverged
    int trace_stride = 10;         // record every k-th step
};

enum class SalvoStatus { AllIntercepted, Timeout, Diverged };

inline const char* to_string(SalvoStatus s) {
    switch (s) {
        case SalvoStatus::AllIntercepted: return "intercepted";
        case SalvoStatus::Timeout: return "timeout";
        case SalvoStatus::Diverged: return "diverged";
    }
    return "?";
}

// One recorded sample of one interceptor.
struct TraceRow {
    double t = 0.0;
    int agent = 0;        // 1-based
    double x = 0.0;       // inertial position, m
    double y = 0.0;
    double r = 0.0;
    double theta = 0.0;   // rad
    double delta = 0.0;   // rad
    double a_cmd = 0.0;   // commanded lateral acceleration, m/s^2
    double a_applied = 0.0;
    double t_go = 0.0;
};

struct SalvoResult {
    SalvoStatus status = SalvoStatus::Timeout;
    std::vector<double> intercept_times;  // NaN where not intercepted
    double spread = std::numeric_limits<double>::quiet_NaN();
    long saturated_steps = 0;  // steps where any command exceeded the limit
    long guarded_steps = 0;    // agent-steps where the V_theta guard engaged
    double end_time = 0.0;
    std::vector<TraceRow> trace;
    std::vector<std::pair<double, double>> spread_series;  // (t, t_go spread)
};

// Initial conditions for one pursuer (radians; the CLI converts degrees).
struct InterceptorInit {
    double r0 = 0.0;
    double theta0 = 0.0;
    double gamma_M0 = 0.0;
    double V_M = 0.0;
};

// Fixed-step salvo simulation. All guidance commands within a step use the
// state snapshot from the step start and are held over the RK4 substeps.
// Captured interceptors are frozen at the capture radius but keep
// contributing their (tiny) time-to-go to neighbors through the Laplacian.
inline SalvoResult simulate_salvo(const Eigen::MatrixXd& L,
                                  const std::vector<InterceptorInit>& inits,
                                  double V_T, double gamma_T,
                                  const EngagementParams& params = {}) {
    const int n = static_cast<int>(inits.size());
    if (L.rows() != n || L.cols() != n)
        throw EngagementError("Laplacian dimension does not match interceptor count");
    for (const auto& ic : inits)
        if (ic.V_M <= V_T)
            throw EngagementError("interceptor must be faster than target");

    const double dt = params.dt_s;
    const double amax = params.a_max_g * kGravity;
    const double cap = params.capture_radius_m;

    std::vector<InterceptorState> s(n);
    for (int i = 0; i < n; ++i)
        s[i] = {inits[i].r0, inits[i].theta0, inits[i].gamma_M0, inits[i].V_M};
    TargetState tgt{V_T, gamma_T, 0.0, 0.0};

    std::vector<char> active(n, 1);
    std::vector<double> hit(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> frozen_term(n, 0.0);
    std::vector<long> grow(n, 0);
    std::vector<double> prev_tg;
    SalvoResult out;
    out.intercept_times.assign(n, std::numeric_limits<double>::quiet_NaN());

    double t = 0.0;
    long step = 0;
    bool diverged = false;
    const auto all_done = [&] {
        for (int i = 0; i < n; ++i)
            if (active[i]) return false;
        return true;
    };

    Eigen::VectorXd tg(n);
    std::vector<double> a_cmd(n, 0.0), a_app(n, 0.0);
    while (t < params.t_max_s - 1e-12) {
        if (all_done()) break;

        try {
            for (int i = 0; i < n; ++i) tg(i) = time_to_go(s[i], tgt);
        } catch (const DeviationNearQuadratureError&) {
            // An unbounded time-to-go mid-run means the pursuit geometry has
            // broken down: report divergence. At t = 0 it is a bad input.
            if (step == 0) throw;
            diverged = true;
            break;
        }

        if (!prev_tg.empty()) {
            long worst = 0;
            for (int i = 0; i < n; ++i) {
                if (active[i]) grow[i] = (tg(i) > prev_tg[i]) ? grow[i] + 1 : 0;
                worst = std::max(worst, grow[i]);
            }
            if (worst * dt >= params.divergence_window_s) {
                diverged = true;
                break;
            }
        }
        prev_tg.assign(tg.data(), tg.data() + n);

        const Eigen::VectorXd coup = L * tg;
        bool any_clipped = false;
        for (int i = 0; i < n; ++i) {
            if (!active[i]) {
                a_cmd[i] = a_app[i] = 0.0;
                continue;
            }
            bool guarded = false;
            a_cmd[i] = guidance_command(s[i], tgt, coup(i), params.v_eps,
                                        frozen_term[i], guarded);
            if (guarded) ++out.guarded_steps;
            a_app[i] = std::clamp(a_cmd[i], -amax, amax);
            if (std::abs(a_cmd[i]) > amax + 1e-12) any_clipped = true;
        }
        if (any_clipped) ++out.saturated_steps;

        if (step % params.trace_stride == 0) {
            double mx = -std::numeric_limits<double>::infinity();
            double mn = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                const double d = deviation(s[i]);
                out.trace.push_back({t, i + 1, tgt.x - s[i].r * std::cos(s[i].theta),
                                     tgt.y - s[i].r * std::sin(s[i].theta), s[i].r,
                                     s[i].theta, d, a_cmd[i], a_app[i], tg(i)});
                if (active[i]) {
                    mx = std::max(mx, tg(i));
                    mn = std::min(mn, tg(i));
                }
            }
            if (mx >= mn) out.spread_series.emplace_back(t, mx - mn);
        }

        for (int i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const InterceptorState s0 = s[i];
            const auto eval = [&](double r_, double th_, double gm_) {
                return kinematics_derivative({r_, th_, gm_, s0.V_M}, tgt, a_app[i]);
            };
            const auto k1 = eval(s0.r, s0.theta, s0.gamma_M);
            const auto k2 = eval(s0.r + 0.5 * dt * k1.r_dot,
                                 s0.theta + 0.5 * dt * k1.theta_dot,
                                 s0.gamma_M + 0.5 * dt * k1.gamma_M_dot);
            const auto k3 = eval(s0.r + 0.5 * dt * k2.r_dot,
                                 s0.theta + 0.5 * dt * k2.theta_dot,
                                 s0.gamma_M + 0.5 * dt * k2.gamma_M_dot);
            const auto k4 = eval(s0.r + dt * k3.r_dot,
                                 s0.theta + dt * k3.theta_dot,
                                 s0.gamma_M + dt * k3.gamma_M_dot);
            double rn = s0.r + dt / 6.0 *
                                   (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot +
                                    k4.r_dot);
            const double tn =
                s0.theta + dt / 6.0 *
                               (k1.theta_dot + 2.0 * k2.theta_dot +
                                2.0 * k3.theta_dot + k4.theta_dot);
            const double gn =
                s0.gamma_M + dt / 6.0 *
                                 (k1.gamma_M_dot + 2.0 * k2.gamma_M_dot +
                                  2.0 * k3.gamma_M_dot + k4.gamma_M_dot);
            if (rn <= cap) {
                // Linear interpolation of r across the final step.
                const double denom = std::max(s0.r - rn, 1e-300);
                hit[i] = t + dt * (s0.r - cap) / denom;
                active[i] = 0;
                rn = cap;
            }
            s[i].r = rn;
            s[i].theta = tn;
            s[i].gamma_M = gn;
        }

        // The target moves on a straight line; advance it exactly.
        ++step;
        t = step * dt;
        tgt.x = V_T * std::cos(gamma_T) * t;
        tgt.y = V_T * std::sin(gamma_T) * t;
    }

    out.end_time = t;
    out.intercept_times = hit;
    if (all_done()) {
        out.status = SalvoStatus::AllIntercepted;
        double mx = -std::numeric_limits<double>::infinity();
        double mn = std::numeric_limits<double>::infinity();
        for (double h : hit) {
            mx = std::max(mx, h);
            mn = std::min(mn, h);
        }
        out.spread = mx - mn;
    } else {
        out.status = diverged ? SalvoStatus::Diverged : SalvoStatus::Timeout;
    }
    return out;
}

}  // namespace salvo
