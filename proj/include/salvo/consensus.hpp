#pragma once

// Left null vector of the weighted Laplacian by three independent routes
// (generic null space, projection product, topology closed forms), the
// weighted consensus value it induces, the linear protocol integrator, and
// the eventual-positivity structural check.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "salvo/graph.hpp"

namespace salvo {

class ConsensusError : public std::runtime_error {
public:
    explicit ConsensusError(const std::string& msg) : std::runtime_error(msg) {}
};

class RankDeficientError : public ConsensusError {
public:
    explicit RankDeficientError(const std::string& msg) : ConsensusError(msg) {}
};

class NoUnitEigenvectorError : public ConsensusError {
public:
    explicit NoUnitEigenvectorError(const std::string& msg) : ConsensusError(msg) {}
};

class ZeroWeightError : public ConsensusError {
public:
    explicit ZeroWeightError(const std::string& msg) : ConsensusError(msg) {}
};

class DegenerateWeightingError : public ConsensusError {
public:
    explicit DegenerateWeightingError(const std::string& msg) : ConsensusError(msg) {}
};

class PositivityWitnessNotFoundError : public ConsensusError {
public:
    explicit PositivityWitnessNotFoundError(const std::string& msg)
        : ConsensusError(msg) {}
};

enum class NullVectorMethod {
    GenericNullspace,
    Projection,
    ClosedFormCycle,
    ClosedFormStar,
};

struct LeftNullVector {
    Eigen::VectorXd p;
    NullVectorMethod method = NullVectorMethod::GenericNullspace;
    double residual = 0.0;  // ||L^T p|| when a Laplacian was available
};

namespace detail {

// Scale so the max-magnitude entry becomes exactly +1 (first such entry on
// ties, matching a plain argmax scan).
inline void normalize_null_vector(Eigen::VectorXd& p) {
    int k = 0;
    for (int i = 1; i < p.size(); ++i)
        if (std::abs(p(i)) > std::abs(p(k))) k = i;
    p /= p(k);
}

}  // namespace detail

// Generic route: smallest singular direction of L^T.
inline LeftNullVector left_null_vector_generic(const Eigen::MatrixXd& L) {
    const int n = static_cast<int>(L.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.transpose(),
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    // Numerical rank must be exactly n-1: one vanishing singular value.
    const double tol = 1e-10 * sv(0);
    int rank = 0;
    for (int i = 0; i < n; ++i)
        if (sv(i) > tol) ++rank;
    if (rank < n - 1)
        throw RankDeficientError("Laplacian has numerical rank " +
                                 std::to_string(rank) + " < n-1 = " +
                                 std::to_string(n - 1) +
                                 "; weights are degenerate or the graph is "
                                 "effectively disconnected");
    LeftNullVector out;
    out.p = svd.matrixV().col(n - 1);
    detail::normalize_null_vector(out.p);
    out.method = NullVectorMethod::GenericNullspace;
    out.residual = (L.transpose() * out.p).norm();
    return out;
}

// Projection route: p is recovered from the unit-eigenvalue eigenvector of
// P_U P_V, where U spans the null space of E (block form over tree-forward,
// tree-reverse, chord-forward, chord-reverse columns) and V = W E_out^T.
inline LeftNullVector left_null_vector_projection(const IncidenceDecomposition& d) {
    const int m2 = static_cast<int>(d.E.cols());
    const int nt = static_cast<int>(d.E_tau.cols());
    const int nc = static_cast<int>(d.T_tau.cols());

    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(m2, nt + 2 * nc);
    U.block(0, 0, nt, nt) = Eigen::MatrixXd::Identity(nt, nt);
    U.block(nt, 0, nt, nt) = Eigen::MatrixXd::Identity(nt, nt);
    if (nc > 0) {
        U.block(0, nt, nt, nc) = -d.T_tau;
        U.block(2 * nt, nt, nc, nc) = Eigen::MatrixXd::Identity(nc, nc);
        U.block(0, nt + nc, nt, nc) = d.T_tau;
        U.block(2 * nt + nc, nt + nc, nc, nc) = Eigen::MatrixXd::Identity(nc, nc);
    }

    const Eigen::MatrixXd V = d.W * d.E_out.transpose();
    // The lifted subspace collapses when some vertex heads only zero-weight
    // columns; the alignment eigenproblem is then meaningless.
    if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(V).rank() < V.cols())
        throw NoUnitEigenvectorError(
            "weighted head subspace is rank-deficient (a vertex retains no "
            "nonzero incoming weight); the projection route does not apply");
    const Eigen::MatrixXd PU =
        U * (U.transpose() * U).ldlt().solve(U.transpose());
    const Eigen::MatrixXd PV =
        V * (V.transpose() * V).ldlt().solve(V.transpose());

    Eigen::EigenSolver<Eigen::MatrixXd> es(PU * PV);
    const auto& ev = es.eigenvalues();
    int k = 0;
    for (int i = 1; i < ev.size(); ++i)
        if (std::abs(ev(i) - 1.0) < std::abs(ev(k) - 1.0)) k = i;
    if (std::abs(ev(k) - 1.0) > 1e-6)
        throw NoUnitEigenvectorError(
            "projection product has no eigenvalue within 1e-6 of 1 (closest " +
            std::to_string(std::abs(ev(k) - 1.0)) +
            " away); a precondition is violated");

    // De-rotate the complex eigenvector so its dominant entry is real.
    Eigen::VectorXcd vc = es.eigenvectors().col(k);
    int km = 0;
    for (int i = 1; i < vc.size(); ++i)
        if (std::abs(vc(i)) > std::abs(vc(km))) km = i;
    vc *= std::abs(vc(km)) / vc(km);
    const Eigen::VectorXd v = vc.real();

    LeftNullVector out;
    out.p = (V.transpose() * V).ldlt().solve(V.transpose() * v);
    detail::normalize_null_vector(out.p);
    out.method = NullVectorMethod::Projection;
    const Eigen::MatrixXd L = d.E_out * d.W * d.E.transpose();
    out.residual = (L.transpose() * out.p).norm();
    return out;
}

// Closed form for a cycle 1-2-...-n-1. w_fwd = (w_12, w_23, ..., w_n1),
// w_rev = (w_21, w_32, ..., w_1n). Entry i is the sum over ring cuts of the
// in-tree weight products rooted at vertex i: cutting the undirected edge
// {c, c+1} leaves one path directed forward into i and one backward.
inline LeftNullVector closed_form_cycle(const std::vector<double>& w_fwd,
                                        const std::vector<double>& w_rev) {
    const int n = static_cast<int>(w_fwd.size());
    if (n < 4) throw ConsensusError("cycle closed form requires n >= 4");
    if (w_rev.size() != w_fwd.size())
        throw ConsensusError("cycle weight lists must have equal length");
    for (int k = 0; k < n; ++k)
        if (w_fwd[k] == 0.0 || w_rev[k] == 0.0)
            throw ZeroWeightError("cycle closed form requires nonzero weights");

    // fwd(a) = weight of directed edge a -> a+1, rev(a) = weight of a+1 -> a,
    // with vertices mod n (0-based internally).
    const auto fwd = [&](int a) { return w_fwd[((a % n) + n) % n]; };
    const auto rev = [&](int a) { return w_rev[((a % n) + n) % n]; };

    Eigen::VectorXd p(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int c = 0; c < n; ++c) {
            // Cut the undirected edge {c, c+1}; orient the two remaining
            // paths toward i. Walking forward from c+1 up to i uses forward
            // weights; walking backward from c down to i uses reverse ones.
            double prod = 1.0;
            for (int v = c + 1; ((v % n) + n) % n != i; ++v) prod *= fwd(v);
            for (int v = c; ((v % n) + n) % n != i; --v) prod *= rev(v - 1);
            sum += prod;
        }
        p(i) = sum;
    }
    LeftNullVector out;
    out.p = p;
    detail::normalize_null_vector(out.p);
    out.method = NullVectorMethod::ClosedFormCycle;
    return out;
}

// Closed form for a star with hub 1: hub_w = (w_12, ..., w_1n), spoke_w =
// (w_21, ..., w_n1). In-tree products give p_1 = prod_l w_l1 and
// p_i = w_1i * prod_{l != i} w_l1, i.e. p_i / p_1 = w_1i / w_i1.
inline LeftNullVector closed_form_star(const std::vector<double>& hub_w,
                                       const std::vector<double>& spoke_w) {
    const int ns = static_cast<int>(hub_w.size());
    if (ns < 1) throw ConsensusError("star closed form requires n >= 2");
    if (spoke_w.size() != hub_w.size())
        throw ConsensusError("star weight lists must have equal length");
    for (int k = 0; k < ns; ++k)
        if (hub_w[k] == 0.0 || spoke_w[k] == 0.0)
            throw ZeroWeightError("star closed form requires nonzero weights");

    Eigen::VectorXd p(ns + 1);
    double all = 1.0;
    for (double w : spoke_w) all *= w;
    p(0) = all;
    for (int i = 0; i < ns; ++i) {
        double prod = hub_w[i];
        for (int l = 0; l < ns; ++l)
            if (l != i) prod *= spoke_w[l];
        p(i + 1) = prod;
    }
    LeftNullVector out;
    out.p = p;
    detail::normalize_null_vector(out.p);
    out.method = NullVectorMethod::ClosedFormStar;
    return out;
}

struct ConsensusPrediction {
    double value = 0.0;
    Eigen::VectorXd weights;         // the p used
    Eigen::VectorXd initial_states;  // x(0)
};

// value = p^T x(0) / sum(p). Guards against a vanishing weight sum, where the
// weighted consensus value is unbounded.
inline ConsensusPrediction consensus_value(const LeftNullVector& nv,
                                           const Eigen::VectorXd& x0) {
    if (nv.p.size() != x0.size())
        throw ConsensusError("state dimension does not match weight vector");
    const double s = nv.p.sum();
    if (std::abs(s) < 1e-9 * nv.p.cwiseAbs().sum())
        throw DegenerateWeightingError(
            "weight entries cancel (|sum p| < 1e-9 * sum |p|); the weighted "
            "consensus value is undefined");
    ConsensusPrediction out;
    out.value = nv.p.dot(x0) / s;
    out.weights = nv.p;
    out.initial_states = x0;
    return out;
}

struct LinearTrajectory {
    std::vector<double> t;            // sample times (decimated)
    std::vector<Eigen::VectorXd> x;   // states at those times
    Eigen::VectorXd terminal;         // final state
    double terminal_spread = 0.0;     // max_i x_i - min_i x_i at the end
    bool diverged = false;            // spread grew 10x over initial
    double dt = 0.0;                  // step actually used
};

// Fixed-step classical 4th-order integration of xdot = -L x. dt <= 0 selects
// the default 1e-3 / max|eig(L)|. Integration stops early when the spread
// exceeds 10x its initial value (flagged as diverged).
inline LinearTrajectory simulate_linear_consensus(const Eigen::MatrixXd& L,
                                                  const Eigen::VectorXd& x0,
                                                  double dt, double horizon,
                                                  int max_samples = 4096) {
    LinearTrajectory out;
    if (dt <= 0.0) {
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(L, false).eigenvalues();
        double rho = 0.0;
        for (int i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
        dt = (rho > 0.0) ? 1e-3 / rho : 1e-3;
    }
    out.dt = dt;
    const long steps = static_cast<long>(horizon / dt);
    const long stride = std::max(1L, steps / std::max(1, max_samples));
    Eigen::VectorXd x = x0;
    const double spread0 = x.maxCoeff() - x.minCoeff();
    out.t.push_back(0.0);
    out.x.push_back(x);
    for (long k = 0; k < steps; ++k) {
        const Eigen::VectorXd k1 = -L * x;
        const Eigen::VectorXd k2 = -L * (x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = -L * (x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = -L * (x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((k + 1) % stride == 0 || k + 1 == steps) {
            out.t.push_back((k + 1) * dt);
            out.x.push_back(x);
        }
        if (x.maxCoeff() - x.minCoeff() > 10.0 * spread0 && spread0 > 0.0) {
            out.diverged = true;
            break;
        }
    }
    out.terminal = x;
    out.terminal_spread = x.maxCoeff() - x.minCoeff();
    return out;
}

struct PositivityWitness {
    int k = 0;  // smallest exponent with (L*)^k entrywise positive
};

// Structural check: with positive edge weights, L* = A - D + (2 d_g + eps) I
// (equivalently -L + (2 d_g + eps) I, d_g the largest out-degree) has an
// entrywise-positive power with exponent at most the skeleton diameter.
inline PositivityWitness check_eventual_positivity(const PseudoUndirectedGraph& g,
                                                   double epsilon) {
    if (epsilon <= 0.0) throw ConsensusError("epsilon must be positive");
    for (const EdgePair& e : g.edges())
        if (e.w_ij <= 0.0 || e.w_ji <= 0.0)
            throw ConsensusError("eventual positivity requires positive weights");
    const Eigen::MatrixXd L = g.laplacian();
    const double dg = L.diagonal().maxCoeff();
    const Eigen::MatrixXd Ls =
        -L + (2.0 * dg + epsilon) * Eigen::MatrixXd::Identity(g.n(), g.n());
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(g.n(), g.n());
    for (int k = 1; k <= g.n(); ++k) {
        P = P * Ls;
        if ((P.array() > 0.0).all()) return PositivityWitness{k};
    }
    throw PositivityWitnessNotFoundError(
        "no entrywise-positive power with exponent <= n; a precondition is "
        "violated");
}

}  // namespace salvo
