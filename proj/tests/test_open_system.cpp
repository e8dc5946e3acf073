#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace lz;

namespace {

SweepProtocol sweep(int N, double g, double alpha, int mode = 1) {
    SweepProtocol p;
    p.N = N;
    p.g = g;
    p.alpha = alpha;
    p.initial_mode = mode;
    return with_default_window(p);
}

DensityMatrix wrap(const oracle::Mat& m) {
    DensityMatrix d;
    d.rho = m;
    return d;
}

}  // namespace

TEST(Dissipator, MatchesOperatorProducts) {
    std::mt19937_64 rng(31);
    for (int N : {1, 2, 5}) {
        const oracle::Mat rho = oracle::random_density(N, rng);
        const double gamma = 0.37;
        EXPECT_LT((dissipator_apply(rho, gamma) - oracle::dissipator(rho, gamma)).cwiseAbs().maxCoeff(), 1e-12) << N;
    }
    EXPECT_THROW(dissipator_apply(oracle::Mat::Identity(3, 3), -1), InvalidArgument);
}

TEST(Dissipator, LeavesPopulationsUntouched) {
    oracle::Mat rho = oracle::Mat::Zero(4, 4);
    rho.diagonal() << 0.1, 0.2, 0.3, 0.4;
    EXPECT_EQ(dissipator_apply(rho, 2.0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Master, PureDephasingDecaysExtremeCoherence) {
    SweepProtocol p;
    p.N = 4;
    p.J = 0;
    p.alpha = 0;
    p.g = 1.5;
    p.t_start = 0;
    p.t_end = 3;
    const double gamma = 0.05;
    const auto rho0 = DensityMatrix::pure(coherent_state(p.N, std::numbers::pi / 2, 0.3));
    const auto res = propagate_master(rho0, p, gamma, 0.5);
    const double c0 = std::abs(rho0.rho(0, p.N));
    EXPECT_NEAR(std::abs(res.final_state.rho(0, p.N)), c0 * std::exp(-gamma * p.N * p.N * p.t_end), 1e-9);
    for (std::size_t i = 1; i < res.samples.size(); ++i) EXPECT_LE(res.samples[i].purity, res.samples[i - 1].purity + 1e-12);
    for (int n = 0; n <= p.N; ++n) EXPECT_NEAR(res.final_state.rho(n, n).real(), rho0.rho(n, n).real(), 1e-10);
}

TEST(Master, ClosedLimitMatchesSchrodinger) {
    auto p = sweep(6, 2.5, 0.8);
    std::mt19937_64 rng(2);
    const auto psi0 = oracle::random_state(p.N, rng);
    const auto rho = propagate_master(DensityMatrix::pure(psi0), p, 0.0).final_state.rho;
    const auto psi = oracle::to_eigen(propagate_schrodinger(psi0, p).final_state);
    const double fidelity = (psi.adjoint() * rho * psi)(0, 0).real();
    EXPECT_GT(fidelity, 1 - 1e-8);
}

TEST(Master, ConservationAlongTrajectory) {
    const auto p = sweep(8, -3, 0.5);
    const auto res = propagate_master(DensityMatrix::pure(initial_state(p)), p, 0.2, 2.0);
    const double span = p.t_end - p.t_start;
    EXPECT_LT(res.trace_drift, 1e-8 * span);
    EXPECT_GE(res.min_eigenvalue, -1e-8);
    EXPECT_LT(res.max_hermiticity_error, 1e-10);
    for (const auto& o : res.samples) {
        EXPECT_LT(std::abs(o.trace - 1), 1e-8 * span);
        EXPECT_LE(o.purity, 1 + 1e-8);
    }
}

TEST(Master, RejectsInvalidInput) {
    const auto p = sweep(2, 0, 1);
    oracle::Mat bad = oracle::Mat::Identity(3, 3);
    EXPECT_THROW(propagate_master(wrap(bad), p, 0.1), InvariantViolation);
    bad /= 3.0;
    EXPECT_THROW(propagate_master(wrap(bad), p, -0.1), InvalidArgument);
    EXPECT_THROW(propagate_master(wrap(oracle::Mat::Identity(4, 4) / 4.0), p, 0.1), InvalidArgument);
    bad(0, 1) = 0.1;
    EXPECT_THROW(wrap(bad).validate(), InvariantViolation);
}

TEST(Observables, MatchDenseOracle) {
    std::mt19937_64 rng(17);
    const int N = 3;
    const oracle::TwoModeSpace sp(N);
    const oracle::Mat ops[3] = {sp.Lx(), sp.Ly(), sp.Lz()};
    for (int trial = 0; trial < 5; ++trial) {
        const oracle::Mat rho = oracle::random_density(N, rng);
        const auto o = observables_from_rho(wrap(rho));
        for (int k = 0; k < 3; ++k) {
            const double m = (rho * ops[k]).trace().real();
            const double m2 = (rho * ops[k] * ops[k]).trace().real();
            EXPECT_NEAR(o.L[k], m, 1e-12);
            EXPECT_NEAR(o.var[k], m2 - m * m, 1e-12);
        }
        EXPECT_NEAR(o.purity, (rho * rho).trace().real(), 1e-12);
        EXPECT_NEAR(o.n1, (rho * sp.n1()).trace().real(), 1e-12);
        EXPECT_NEAR(o.n2, (rho * sp.n2()).trace().real(), 1e-12);
        // SPDM rho_kl = <a_k^+ a_l> / N on the full space.
        const oracle::Mat P = sp.sector();
        const oracle::Mat full = P * rho * P.adjoint();
        EXPECT_NEAR(o.spdm.rho11, (full * sp.a1.adjoint() * sp.a1).trace().real() / N, 1e-12);
        EXPECT_LT(std::abs(o.spdm.rho12 - (full * sp.a1.adjoint() * sp.a2).trace() / double(N)), 1e-12);
    }
}

TEST(Observables, BinomialMixtureHasPopulationEigenvalues) {
    const int N = 12;
    const double P = 0.3;
    oracle::Mat rho = oracle::Mat::Zero(N + 1, N + 1);
    for (int n = 0; n <= N; ++n)
        rho(n, n) = std::exp(std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0)) *
                    std::pow(P, N - n) * std::pow(1 - P, n);
    const auto o = observables_from_rho(wrap(rho));
    EXPECT_NEAR(std::abs(o.spdm.rho12), 0.0, 1e-15);
    EXPECT_NEAR(o.lambda1, 1 - P, 1e-12);
    EXPECT_NEAR(o.lambda2, P, 1e-12);
    EXPECT_NEAR(o.spdm.rho11, P, 1e-12);
    EXPECT_NEAR(observables_from_rho(DensityMatrix::pure(coherent_state(9, 0.7, 0.2))).purity, 1.0, 1e-12);
}

TEST(NoisyLz, ClosedLimitEqualsExactDynamics) {
    const auto p = sweep(8, 1, 1);
    EXPECT_NEAR(plz_master(p, 0.0).P, plz_many_particle(p).P, 1e-6);
}

TEST(NoisyLz, FastSweepBarelyAffected) {
    const auto p = sweep(10, -1, 10);
    EXPECT_LT(std::abs(plz_master(p, 0.1).P - plz_master(p, 0.0).P), 0.02);
}

TEST(NoisyLz, SlowSweepIsIncoherent) {
    const auto p = sweep(20, -1, 0.01);
    const double master = plz_master(p, 0.1).P;
    const double bloch = plz_mean_field(p, 0.1).P;
    EXPECT_NEAR(master, 0.5, 0.05);
    EXPECT_NEAR(bloch, 0.5, 0.05);
    EXPECT_LT(std::abs(master - bloch), 0.05);
}

TEST(NoisyLz, PlateauBoundaryNearGamma) {
    // P(alpha) falls through 0.45 between alpha = gamma / 3 and 3 gamma.
    for (double gamma : {0.01, 0.1}) {
        auto at = [&](double alpha) {
            const auto p = with_default_window(sweep(4, -1, alpha), 2);
            return plz_master(p, gamma, WindowPolicy{false}).P;
        };
        EXPECT_GT(at(gamma / 3), 0.45) << gamma;
        EXPECT_LT(at(3 * gamma), 0.45) << gamma;
    }
}
