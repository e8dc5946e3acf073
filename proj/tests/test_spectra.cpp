#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace lz;

TEST(Tridiagonal, MatchesJacobiOracle) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int n : {1, 2, 7, 15}) {
        SymTridiagonal H;
        H.diag.resize(n);
        H.off.resize(n - 1);
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) D(i, i) = H.diag[i] = u(rng);
        for (int i = 0; i + 1 < n; ++i) D(i, i + 1) = D(i + 1, i) = H.off[i] = u(rng);
        const auto e = eigen_tridiagonal(H, true);
        const auto ref = oracle::jacobi_eigenvalues(D);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(e.values[i], ref[i], 1e-12);
        for (int k = 0; k < n; ++k) {
            const Eigen::VectorXd v = e.vectors.col(k);
            EXPECT_LT((D * v - e.values[k] * v).norm(), 1e-12);
        }
    }
}

TEST(Spectrum, TwoLevelFormula) {
    SweepProtocol p;
    p.N = 1;
    p.g = 0;
    for (double eps : {-2.0, 0.0, 0.3}) {
        const auto lv = many_body_spectrum(p, {eps})[0];
        const double e = std::sqrt(eps * eps + p.J * p.J);
        EXPECT_NEAR(lv[0], -e, 1e-14);
        EXPECT_NEAR(lv[1], e, 1e-14);
    }
    EXPECT_NEAR(many_body_spectrum(p, {0.0})[0][1] - many_body_spectrum(p, {0.0})[0][0], 2.0, 1e-14);
}

TEST(Spectrum, MatchesDenseNumberFormOracle) {
    SweepProtocol p;
    p.N = 5;
    p.g = 3;
    const oracle::TwoModeSpace sp(5);
    const Eigen::MatrixXd H = sp.number_hamiltonian(0.7, 1.0, 3.0 / 5).real();
    const auto ref = oracle::jacobi_eigenvalues(H);
    const auto lv = many_body_spectrum(p, {0.7})[0];
    for (int k = 0; k <= 5; ++k) EXPECT_NEAR(lv[k], ref[k], 1e-10);
}

TEST(Spectrum, ExtremalLevelsApproachMeanFieldBounds) {
    // Per-particle extremal eigenvalues converge monotonically toward the extremal stationary energies.
    const double eps = 0.4, g = 5;
    const auto set = mean_field_stationary_states(eps, 1, g);
    double emin = 1e300, emax = -1e300;
    for (const auto& s : set.states) {
        emin = std::min(emin, s.energy);
        emax = std::max(emax, s.energy);
    }
    double prev_lo = 1e300, prev_hi = 1e300;
    for (int N : {10, 20, 40}) {
        SweepProtocol p;
        p.N = N;
        p.g = g;
        const auto lv = many_body_spectrum(p, {eps})[0];
        const double lo = std::abs(lv.front() / N - emin), hi = std::abs(lv.back() / N - emax);
        EXPECT_LT(lo, prev_lo);
        EXPECT_LT(hi, prev_hi);
        prev_lo = lo;
        prev_hi = hi;
    }
    EXPECT_LT(prev_lo, 0.1);
    EXPECT_LT(prev_hi, 0.1);
}

TEST(Spectrum, CaustricOnlyInsideTail) {
    // Quasi-degenerate neighbours (splitting far below the mean level spacing) exist only for g > 2J.
    auto min_split = [](double g) {
        SweepProtocol p;
        p.N = 20;
        p.g = g;
        double m = 1e300;
        for (double eps = -0.5; eps <= 0.5; eps += 0.01) {
            const auto lv = many_body_spectrum(p, {eps})[0];
            for (std::size_t k = 1; k < lv.size(); ++k) m = std::min(m, lv[k] - lv[k - 1]);
        }
        return m;
    };
    EXPECT_GT(min_split(1.0), 0.05);
    EXPECT_LT(min_split(5.0), 1e-3);
}

TEST(StationaryStates, LinearSymmetricCase) {
    const auto set = mean_field_stationary_states(0.0, 1.0, 0.0);
    ASSERT_EQ(set.states.size(), 2u);
    for (const auto& s : set.states) {
        EXPECT_NEAR(std::abs(s.s[0]), 0.5, 1e-12);
        EXPECT_NEAR(s.s[2], 0.0, 1e-12);
        EXPECT_NEAR(s.energy, s.s[0] > 0 ? -1.0 : 1.0, 1e-12);
        EXPECT_EQ(s.stability, Stability::elliptic);
    }
}

TEST(StationaryStates, InvariantsAndLandscapeOracle) {
    for (double g : {-5.0, 0.0, 1.0, 2.0, 5.0}) {
        for (double eps : {-1.3, -0.2, 0.0, 0.35, 2.0}) {
            const auto set = mean_field_stationary_states(eps, 1.0, g);
            ASSERT_TRUE(set.states.size() == 2 || set.states.size() == 4) << g << " " << eps;
            for (const auto& st : set.states) {
                EXPECT_NEAR(bloch_norm(st.s), 0.5, 1e-10);
                EXPECT_DOUBLE_EQ(st.s[1], 0.0);
                EXPECT_LT(std::abs(2 * st.s[2] + (2 * eps + 2 * g * st.s[2]) * st.s[0]), 1e-10);
            }
            const auto ref = oracle::landscape_fixed_points(eps, 1.0, g);
            ASSERT_EQ(ref.size(), set.states.size()) << "g=" << g << " eps=" << eps;
            for (const auto& r : ref) {
                double best = 1e300;
                for (const auto& st : set.states)
                    best = std::min(best, std::hypot(r[0] - st.s[0], r[1] - st.s[1], r[2] - st.s[2]));
                EXPECT_LT(best, 1e-8);
            }
            if (std::abs(g) <= 2) EXPECT_EQ(set.states.size(), 2u);
        }
    }
}

TEST(StationaryStates, TailHasOneHyperbolicPoint) {
    const auto set = mean_field_stationary_states(0.0, 1.0, 5.0);
    ASSERT_EQ(set.states.size(), 4u);
    int hyper = 0;
    std::vector<double> energies;
    for (const auto& s : set.states) {
        hyper += s.stability == Stability::hyperbolic;
        bool dup = false;
        for (double e : energies) dup = dup || std::abs(e - s.energy) < 1e-9;
        if (!dup) energies.push_back(s.energy);
    }
    EXPECT_EQ(hyper, 1);
    EXPECT_EQ(energies.size(), 3u);
}

TEST(StationaryStates, EnergyMatchesManyBodyCoherentExpectation) {
    // <H>/N in a coherent state approaches E_mf with O(1/N) corrections.
    const double eps = 0.3, g = 2.0;
    const Vec3 s = bloch_of_angles(1.0, 0.4);
    const double emf = mean_field_energy(s, eps, 1.0, g);
    double prev = 1e300;
    for (int N : {20, 80, 320}) {
        SweepProtocol p;
        p.N = N;
        p.g = g;
        p.alpha = eps;
        const auto c = coherent_state(N, 1.0, 0.4);
        const auto H = build_hamiltonian(p, 1.0);
        const auto Hc = H.apply(c.amplitudes);
        cplx e = 0;
        for (int n = 0; n <= N; ++n) e += std::conj(c.amplitudes[n]) * Hc[n];
        const double err = std::abs((e.real() + number_form_offset(p)) / N - emf);
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 0.02);
}

TEST(SwallowTail, ExistsOnlyAboveThreshold) {
    EXPECT_FALSE(has_swallow_tail(1.0, 1.9));
    EXPECT_FALSE(has_swallow_tail(1.0, -2.0));
    EXPECT_TRUE(has_swallow_tail(1.0, 2.1));
    EXPECT_TRUE(has_swallow_tail(1.0, -2.1));
    EXPECT_THROW(swallow_tail_boundary(1.0, 1.5), InvalidArgument);
    EXPECT_NEAR(swallow_tail_threshold(1.0), 2.0, 1e-5);
}

TEST(SwallowTail, BoundaryMatchesClosedFormAndCountFlips) {
    const double J = 1, g = 5;
    const double ec = swallow_tail_boundary(J, g);
    const double closed = 0.5 * std::pow(std::pow(g, 2.0 / 3) - std::pow(2 * J, 2.0 / 3), 1.5);
    EXPECT_NEAR(ec, closed, 2e-6);
    EXPECT_EQ(mean_field_stationary_states(ec - 1e-4, J, g).states.size(), 4u);
    EXPECT_EQ(mean_field_stationary_states(ec + 1e-4, J, g).states.size(), 2u);
    EXPECT_EQ(mean_field_stationary_states(-ec + 1e-4, J, g).states.size(), 4u);
    EXPECT_EQ(mean_field_stationary_states(-ec - 1e-4, J, g).states.size(), 2u);
    EXPECT_LT(swallow_tail_boundary(J, 2 * J * (1 + 1e-9)), 1e-5);
}

TEST(GapScaling, SingleParticleGapAndPositivity) {
    SweepProtocol p;
    p.N = 1;
    const auto lv = many_body_spectrum(p, {0.0})[0];
    EXPECT_NEAR(lv[1] - lv[0], 2.0, 1e-14);
    const auto fit = min_gap_scaling(1.0, 5.0, {10, 14, 18, 22});
    for (std::size_t i = 0; i < fit.N.size(); ++i) EXPECT_GT(fit.gap[i], 0.0);
    for (std::size_t i = 1; i < fit.gap.size(); ++i) EXPECT_LT(fit.gap[i], fit.gap[i - 1]);
    EXPECT_GT(fit.eta, 0.0);
    EXPECT_GE(fit.r2, 0.95);
    EXPECT_THROW(min_gap_scaling(1.0, 1.0, {10, 20, 30}), InvalidArgument);
}

TEST(GapScaling, GridRefinementStable) {
    GapScanOptions coarse, fine;
    fine.grid_points = 2 * coarse.grid_points;
    const auto a = min_diabatic_gap(1.0, 5.0, 16, coarse);
    const auto b = min_diabatic_gap(1.0, 5.0, 16, fine);
    EXPECT_NEAR(a.second, b.second, 0.01 * b.second);
    EXPECT_NEAR(a.first, b.first, 1e-3);
}
