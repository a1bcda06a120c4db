#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "random_graphs.hpp"
#include "salvo/consensus.hpp"
#include "salvo/graph.hpp"

using salvo::EdgePair;
using salvo::PseudoUndirectedGraph;

namespace {

PseudoUndirectedGraph cycle5() {
    return PseudoUndirectedGraph(5, {{1, 2, 7.0, 0.3},
                                     {2, 3, 3.0, 1.25},
                                     {3, 4, 3.0, 5.0},
                                     {4, 5, 8.0, 0.1},
                                     {1, 5, 5.0, 0.1}});
}

PseudoUndirectedGraph star5() {
    return PseudoUndirectedGraph(5, {{1, 2, 0.7, 2.4},
                                     {1, 3, 1.4, 2.85},
                                     {1, 4, 1.0, 4.0},
                                     {1, 5, 0.23, 1.35}});
}

PseudoUndirectedGraph unit_cycle(int n, double w12 = 1.0) {
    std::vector<EdgePair> e;
    for (int v = 1; v < n; ++v) e.push_back({v, v + 1, 1.0, 1.0});
    e.push_back({1, n, 1.0, 1.0});
    e[0].w_ij = w12;
    return PseudoUndirectedGraph(n, std::move(e));
}

// Independently computed weighting vectors for the two bundled graphs
// (normalized so the first maximal-magnitude entry is +1).
const double kPCycle[5] = {0.009298174442, 0.038593644354, 0.049817444219,
                           0.019188640974, 1.0};
const double kPStar[5] = {1.0, 0.291666666667, 0.491228070175, 0.25,
                          0.170370370370};

void expect_p_near(const Eigen::VectorXd& p, const double* want, double tol) {
    ASSERT_EQ(p.size(), 5);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(p(i), want[i], tol);
}

}  // namespace

TEST(NullVector, GenericRouteOnCycleTable) {
    const Eigen::MatrixXd L = cycle5().laplacian();
    const auto nv = salvo::left_null_vector_generic(L);
    expect_p_near(nv.p, kPCycle, 1e-9);
    EXPECT_EQ(nv.p(4), 1.0);  // normalization anchor
    EXPECT_NEAR(nv.p.sum(), 1.116897903989, 1e-9);
    EXPECT_LE(nv.residual, 1e-9 * L.norm() * nv.p.norm());
}

TEST(NullVector, GenericRouteOnStarTable) {
    const Eigen::MatrixXd L = star5().laplacian();
    const auto nv = salvo::left_null_vector_generic(L);
    expect_p_near(nv.p, kPStar, 1e-9);
    EXPECT_EQ(nv.p(0), 1.0);
    EXPECT_NEAR(nv.p.sum(), 2.203265107212, 1e-9);
    EXPECT_LE(nv.residual, 1e-9 * L.norm() * nv.p.norm());
}

TEST(NullVector, ProjectionRouteAgreesWithGeneric) {
    for (const auto& g : {cycle5(), star5()}) {
        const auto nv1 = salvo::left_null_vector_generic(g.laplacian());
        const auto nv2 =
            salvo::left_null_vector_projection(salvo::incidence_decomposition(g));
        EXPECT_LE((nv1.p - nv2.p).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE(nv2.residual, 1e-9 * g.laplacian().norm() * nv2.p.norm());
    }
}

TEST(NullVector, ProjectionRouteAgreesOnRandomGraphs) {
    std::mt19937 rng(90210u);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 11);
        const auto g = testutil::random_graph(rng, n);
        const auto nv1 = salvo::left_null_vector_generic(g.laplacian());
        const auto nv2 =
            salvo::left_null_vector_projection(salvo::incidence_decomposition(g));
        EXPECT_LE((nv1.p - nv2.p).cwiseAbs().maxCoeff(), 1e-8)
            << "n=" << n << " trial=" << trial;
    }
}

TEST(NullVector, ClosedFormCycleMatchesGeneric) {
    // Ring orientation (1->2->...->5->1) and its reverse, from the table.
    const std::vector<double> fwd = {7.0, 3.0, 3.0, 8.0, 0.1};
    const std::vector<double> rev = {0.3, 1.25, 5.0, 0.1, 5.0};
    const auto nv = salvo::closed_form_cycle(fwd, rev);
    expect_p_near(nv.p, kPCycle, 1e-9);
    EXPECT_EQ(nv.method, salvo::NullVectorMethod::ClosedFormCycle);
}

TEST(NullVector, ClosedFormStarMatchesGeneric) {
    const auto nv = salvo::closed_form_star({0.7, 1.4, 1.0, 0.23},
                                            {2.4, 2.85, 4.0, 1.35});
    expect_p_near(nv.p, kPStar, 1e-9);
    // Spoke-to-hub weighting ratio: p_i / p_1 = w_1i / w_i1.
    EXPECT_NEAR(nv.p(1) / nv.p(0), 0.7 / 2.4, 1e-12);
    EXPECT_NEAR(nv.p(4) / nv.p(0), 0.23 / 1.35, 1e-12);
}

TEST(NullVector, ClosedFormsAgreeWithGenericOnRandomWeights) {
    std::mt19937 rng(4242u);
    std::uniform_real_distribution<double> mag(0.3, 4.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 7);
        std::vector<double> fwd(n), rev(n);
        for (int k = 0; k < n; ++k) {
            fwd[k] = mag(rng);
            rev[k] = mag(rng);
        }
        std::vector<EdgePair> edges;
        for (int v = 1; v < n; ++v) edges.push_back({v, v + 1, fwd[v - 1], rev[v - 1]});
        edges.push_back({1, n, rev[n - 1], fwd[n - 1]});  // w_n1 is forward
        const auto g = PseudoUndirectedGraph(n, std::move(edges));
        const auto nv1 = salvo::left_null_vector_generic(g.laplacian());
        const auto nv2 = salvo::closed_form_cycle(fwd, rev);
        EXPECT_LE((nv1.p - nv2.p).cwiseAbs().maxCoeff(), 1e-8) << "n=" << n;

        std::vector<double> hub(n - 1), spoke(n - 1);
        std::vector<EdgePair> star_edges;
        for (int k = 0; k < n - 1; ++k) {
            hub[k] = mag(rng);
            spoke[k] = mag(rng);
            star_edges.push_back({1, k + 2, hub[k], spoke[k]});
        }
        const auto s = PseudoUndirectedGraph(n, std::move(star_edges));
        const auto sv1 = salvo::left_null_vector_generic(s.laplacian());
        const auto sv2 = salvo::closed_form_star(hub, spoke);
        EXPECT_LE((sv1.p - sv2.p).cwiseAbs().maxCoeff(), 1e-8) << "n=" << n;
    }
}

TEST(NullVector, RankDeficientLaplacianIsRejected) {
    // A both-zero pair keeps the skeleton connected but strands vertex 3,
    // leaving a second vector in the left null space.
    const PseudoUndirectedGraph g(3, {{1, 2, 2.0, 1.0}, {2, 3, 0.0, 0.0}});
    EXPECT_THROW(salvo::left_null_vector_generic(g.laplacian()),
                 salvo::RankDeficientError);
}

TEST(NullVector, ZeroWeightRejectedInClosedForms) {
    EXPECT_THROW(salvo::closed_form_cycle({1.0, 0.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}),
                 salvo::ZeroWeightError);
    EXPECT_THROW(salvo::closed_form_star({1.0, 1.0}, {1.0, 0.0}),
                 salvo::ZeroWeightError);
}

TEST(NullVector, CorruptedDecompositionHasNoUnitEigenvector) {
    auto d = salvo::incidence_decomposition(cycle5());
    // Silence every column headed at vertex 5: any null vector then lifts to
    // zero through W E_out^T, so the subspaces cannot align.
    for (int k = 0; k < d.W.cols(); ++k)
        if (d.columns[k].first == 5) d.W(k, k) = 0.0;
    EXPECT_THROW(salvo::left_null_vector_projection(d),
                 salvo::NoUnitEigenvectorError);
}

TEST(Prediction, WeightedValueOnBothTables) {
    const Eigen::VectorXd tgc =
        (Eigen::VectorXd(5) << 33.333333, 22.267896, 15.924982, 21.591297,
         21.509136)
            .finished();
    const auto pc = salvo::consensus_value(
        salvo::left_null_vector_generic(cycle5().laplacian()), tgc);
    EXPECT_NEAR(pc.value, 21.3861301621, 1e-8);

    const Eigen::VectorXd tgs =
        (Eigen::VectorXd(5) << 71.847983, 48.575835, 33.847554, 27.403539,
         40.977196)
            .finished();
    const auto ps = salvo::consensus_value(
        salvo::left_null_vector_generic(star5().laplacian()), tgs);
    EXPECT_NEAR(ps.value, 52.8647178837, 1e-8);

    // Positive weights confine the value to the hull of the initial states.
    EXPECT_GT(pc.value, tgc.minCoeff());
    EXPECT_LT(pc.value, tgc.maxCoeff());
}

TEST(Prediction, DegenerateWeightingIsRejected) {
    // w_12 = 1, w_21 = -1 gives p proportional to (1, -1): the weight sum
    // cancels and no weighted consensus value exists.
    const PseudoUndirectedGraph g(2, {{1, 2, 1.0, -1.0}});
    const auto nv = salvo::left_null_vector_generic(g.laplacian());
    const Eigen::VectorXd x0 = (Eigen::VectorXd(2) << 3.0, 4.0).finished();
    EXPECT_THROW(salvo::consensus_value(nv, x0), salvo::DegenerateWeightingError);
}

TEST(Prediction, DimensionMismatchIsRejected) {
    const auto nv = salvo::left_null_vector_generic(cycle5().laplacian());
    EXPECT_THROW(salvo::consensus_value(nv, Eigen::VectorXd::Ones(3)),
                 salvo::ConsensusError);
}

TEST(Protocol, UniformWeightsConvergeToTheMean) {
    const Eigen::MatrixXd L = unit_cycle(5).laplacian();
    const Eigen::VectorXd x0 =
        (Eigen::VectorXd(5) << 4.0, -1.0, 7.5, 0.25, 2.0).finished();
    const auto traj = salvo::simulate_linear_consensus(L, x0, 0.0, 40.0);
    EXPECT_FALSE(traj.diverged);
    EXPECT_LE(traj.terminal_spread, 1e-6);
    for (int i = 0; i < 5; ++i)
        EXPECT_NEAR(traj.terminal(i), x0.mean(), 1e-6);
}

TEST(Protocol, DefaultStepIsScaledBySpectralRadius) {
    const Eigen::MatrixXd L = unit_cycle(5).laplacian();
    const Eigen::VectorXcd ev =
        Eigen::EigenSolver<Eigen::MatrixXd>(L, false).eigenvalues();
    double rho = 0.0;
    for (int i = 0; i < ev.size(); ++i) rho = std::max(rho, std::abs(ev(i)));
    const auto traj =
        salvo::simulate_linear_consensus(L, Eigen::VectorXd::Ones(5), 0.0, 0.1);
    EXPECT_NEAR(traj.dt, 1e-3 / rho, 1e-15);
}

TEST(Protocol, ConsensusSubspaceIsInvariant) {
    const Eigen::MatrixXd L = cycle5().laplacian();
    const auto traj = salvo::simulate_linear_consensus(
        L, Eigen::VectorXd::Constant(5, 3.5), 0.0, 1.0);
    EXPECT_LE((traj.terminal - Eigen::VectorXd::Constant(5, 3.5)).cwiseAbs().maxCoeff(),
              1e-12);
}

TEST(Protocol, ConservedQuantityHasNegligibleDrift) {
    const Eigen::MatrixXd L = cycle5().laplacian();
    const auto nv = salvo::left_null_vector_generic(L);
    const Eigen::VectorXd x0 =
        (Eigen::VectorXd(5) << 33.333333, 22.267896, 15.924982, 21.591297,
         21.509136)
            .finished();
    const auto traj = salvo::simulate_linear_consensus(L, x0, 0.0, 20.0);
    const double drift =
        std::abs(nv.p.dot(traj.terminal) - nv.p.dot(x0)) / std::abs(nv.p.dot(x0));
    EXPECT_LE(drift, 1e-9);
    // Terminal state agrees with the predicted weighted value.
    const double predicted = nv.p.dot(x0) / nv.p.sum();
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(traj.terminal(i), predicted, 1e-4);
}

TEST(Protocol, UnstableWeightDiverges) {
    const Eigen::MatrixXd L = unit_cycle(5, -1.55).laplacian();
    const Eigen::VectorXd x0 =
        (Eigen::VectorXd(5) << 1.0, 2.0, 3.0, 4.0, 5.0).finished();
    // The unstable mode starts from a small component of x0, so give the
    // exponential growth enough runway to trip the divergence detector.
    const auto traj = salvo::simulate_linear_consensus(L, x0, 0.0, 300.0);
    EXPECT_TRUE(traj.diverged);
    EXPECT_GE(traj.terminal_spread, 10.0 * 4.0);
}

TEST(Positivity, WitnessWithinDiameterOnStandardShapes) {
    EXPECT_EQ(salvo::check_eventual_positivity(unit_cycle(5), 1.0).k, 2);
    EXPECT_EQ(salvo::check_eventual_positivity(star5(), 1.0).k, 2);
    std::mt19937 rng(5150u);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 11);
        const auto g = testutil::random_graph(rng, n);
        EXPECT_LE(salvo::check_eventual_positivity(g, 0.5).k, g.diameter());
    }
}

TEST(Positivity, RequiresPositiveWeightsAndEpsilon) {
    EXPECT_THROW(salvo::check_eventual_positivity(unit_cycle(5), 0.0),
                 salvo::ConsensusError);
    EXPECT_THROW(salvo::check_eventual_positivity(unit_cycle(5, -0.5), 1.0),
                 salvo::ConsensusError);
}
