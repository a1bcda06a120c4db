#pragma once

// Single-edge uncertainty analysis: the edge-agreement transfer function seen
// by a perturbation on one directed weight, its phase crossovers, the
// effective gain margin, and the most-negative admissible weight it implies.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "salvo/graph.hpp"

namespace salvo {

class RobustnessError : public std::runtime_error {
public:
    explicit RobustnessError(const std::string& msg) : std::runtime_error(msg) {}
};

class SingularAtZeroError : public RobustnessError {
public:
    explicit SingularAtZeroError(const std::string& msg) : RobustnessError(msg) {}
};

// State-space realization of the loop transfer function
// M(s) = -e^T R^T [sI + E_tau^T E_out W R^T]^{-1} E_tau^T E_out e
// for a unit perturbation on one directed edge e.
struct EdgeTransferFunction {
    Eigen::MatrixXd A;     // (n-1) x (n-1), -E_tau^T E_out W R^T
    Eigen::VectorXd B;     // -E_tau^T E_out e
    Eigen::RowVectorXd C;  // e^T R^T
    int edge = -1;         // column index of the perturbed directed edge
    double nominal_weight = 0.0;
};

inline EdgeTransferFunction edge_transfer_function(const IncidenceDecomposition& d,
                                                   int from, int to) {
    const int k = d.edge_index(from, to);
    if (k < 0)
        throw RobustnessError("directed edge " + std::to_string(from) + "->" +
                              std::to_string(to) + " is not in the graph");
    EdgeTransferFunction tf;
    tf.A = -d.E_tau.transpose() * d.E_out * d.W * d.R.transpose();
    tf.B = -d.E_tau.transpose() * d.E_out.col(k);
    tf.C = d.R.col(k).transpose();
    tf.edge = k;
    tf.nominal_weight = d.W(k, k);
    return tf;
}

// M(s) by a per-frequency linear solve (no explicit inverse).
inline std::complex<double> evaluate(const EdgeTransferFunction& tf,
                                     std::complex<double> s) {
    const int n = static_cast<int>(tf.A.rows());
    const Eigen::MatrixXcd Ms =
        s * Eigen::MatrixXcd::Identity(n, n) - tf.A.cast<std::complex<double>>();
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(Ms);
    if (!lu.isInvertible())
        throw SingularAtZeroError(
            "sI - A is singular at s = (" + std::to_string(s.real()) + "," +
            std::to_string(s.imag()) + "); the edge system lost its spanning "
            "structure");
    return tf.C.cast<std::complex<double>>() *
           lu.solve(tf.B.cast<std::complex<double>>());
}

struct Crossover {
    double omega = 0.0;  // rad/s, reported as a non-negative magnitude
    double gain = 0.0;   // |M(j omega)|
};

// All omega in [0, omega_max] where the phase of M(j omega) is -180 degrees:
// Im M = 0 with Re M < 0. Found by a log-spaced sweep with sign-change
// detection on Im and bisection refinement; omega = 0 is always tested
// directly via the sign of M(0).
inline std::vector<Crossover> phase_crossovers(const EdgeTransferFunction& tf,
                                               double omega_max = 0.0,
                                               int points = 8192) {
    if (omega_max <= 0.0) {
        const Eigen::VectorXcd ev =
            Eigen::EigenSolver<Eigen::MatrixXd>(tf.A, false).eigenvalues();
        double rho = 1e-6;
        for (int i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
        omega_max = 1e3 * rho;
    }
    std::vector<Crossover> out;
    const std::complex<double> M0 = evaluate(tf, {0.0, 0.0});
    if (M0.real() < 0.0) out.push_back({0.0, std::abs(M0)});

    const double lo_exp = -4.0, hi_exp = std::log10(omega_max);
    std::vector<double> om(points);
    std::vector<std::complex<double>> val(points);
    for (int i = 0; i < points; ++i) {
        om[i] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (points - 1));
        val[i] = evaluate(tf, {0.0, om[i]});
    }
    for (int i = 0; i + 1 < points; ++i) {
        if (val[i].imag() == 0.0 || val[i + 1].imag() == 0.0) continue;
        if ((val[i].imag() > 0.0) == (val[i + 1].imag() > 0.0)) continue;
        double lo = om[i], hi = om[i + 1];
        const bool lo_pos = val[i].imag() > 0.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const std::complex<double> vm = evaluate(tf, {0.0, mid});
            if ((vm.imag() > 0.0) == lo_pos)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-10 * hi) break;
        }
        const double w = 0.5 * (lo + hi);
        const std::complex<double> vm = evaluate(tf, {0.0, w});
        if (vm.real() < 0.0) out.push_back({w, std::abs(vm)});
    }
    return out;
}

struct MarginReport {
    std::vector<Crossover> crossovers;
    double effective_gain_margin = std::numeric_limits<double>::infinity();
    double min_admissible_weight = 0.0;  // nominal - effective margin
};

inline MarginReport gain_margin(const EdgeTransferFunction& tf,
                                double omega_max = 0.0) {
    MarginReport rep;
    rep.crossovers = phase_crossovers(tf, omega_max);
    for (const Crossover& c : rep.crossovers)
        if (c.gain > 1e-300)
            rep.effective_gain_margin =
                std::min(rep.effective_gain_margin, 1.0 / c.gain);
    rep.min_admissible_weight = tf.nominal_weight - rep.effective_gain_margin;
    return rep;
}

enum class UnitTopology { Cycle, StarHubEdge, StarSpokeEdge };

// Gain margins of unit-weight reference topologies. For the n-cycle every
// edge sees 2/(1 - 1/n). For the n-star the margin depends on the perturbed
// direction: the hub's incoming weight w_1i supports a perturbation of n,
// the spoke's incoming weight w_i1 one of n/(n-1). (Derived from the in-tree
// determinant boundary; confirmed by brute-force eigenvalue bisection.)
inline double unit_weight_margin_closed_form(UnitTopology topo, int n) {
    switch (topo) {
        case UnitTopology::Cycle:
            if (n < 3) throw RobustnessError("cycle margin requires n >= 3");
            return 2.0 / (1.0 - 1.0 / n);
        case UnitTopology::StarHubEdge:
            if (n < 2) throw RobustnessError("star margin requires n >= 2");
            return static_cast<double>(n);
        case UnitTopology::StarSpokeEdge:
            if (n < 2) throw RobustnessError("star margin requires n >= 2");
            return static_cast<double>(n) / (n - 1);
    }
    throw RobustnessError("unknown topology");
}

struct NyquistSample {
    double omega = 0.0;
    double re = 0.0;
    double im = 0.0;
};

// Frequency-response samples for external plotting; the negative-omega half
// follows by conjugation and is not emitted.
inline std::vector<NyquistSample> nyquist_trace(const EdgeTransferFunction& tf,
                                                const std::vector<double>& omegas) {
    std::vector<NyquistSample> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (w < 0.0) throw RobustnessError("nyquist grid values must be >= 0");
        const std::complex<double> v = evaluate(tf, {0.0, w});
        out.push_back({w, v.real(), v.imag()});
    }
    return out;
}

// Independent oracle: bisect the destabilizing perturbation mu on one directed
// edge, testing stability of -E_tau^T E_out (W - mu e e^T) R^T by eigenvalues.
// Returns +inf when even `upper` does not destabilize.
inline double brute_force_margin(const IncidenceDecomposition& d, int from,
                                 int to, double upper) {
    const int k = d.edge_index(from, to);
    if (k < 0)
        throw RobustnessError("directed edge " + std::to_string(from) + "->" +
                              std::to_string(to) + " is not in the graph");
    const auto stable = [&](double mu) {
        Eigen::MatrixXd Wp = d.W;
        Wp(k, k) -= mu;
        const Eigen::MatrixXd Ap =
            -d.E_tau.transpose() * d.E_out * Wp * d.R.transpose();
        const Eigen::VectorXcd ev =
            Eigen::EigenSolver<Eigen::MatrixXd>(Ap, false).eigenvalues();
        double worst = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < ev.size(); ++i) worst = std::max(worst, ev(i).real());
        return worst < 1e-9;
    };
    if (!stable(0.0))
        throw RobustnessError("nominal edge system is not stable");
    if (stable(upper)) return std::numeric_limits<double>::infinity();
    double lo = 0.0, hi = upper;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (stable(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace salvo
