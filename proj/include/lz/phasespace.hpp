#ifndef LZ_PHASESPACE_HPP
#define LZ_PHASESPACE_HPP

// SU(2) Husimi representation and the truncated (classical Liouville) phase-space dynamics,
// realized as an ensemble of GPE trajectories whose starting points follow the initial Husimi
// density.
//
// Coherent states |theta, phi> carry (cos(theta/2), sin(theta/2) e^{-i phi}); the Bloch vector of
// that single-particle state is s = (sin theta cos phi, sin theta sin phi, -cos theta) / 2.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lz/error.hpp"
#include "lz/exact.hpp"
#include "lz/fock.hpp"
#include "lz/meanfield.hpp"
#include "lz/parallel.hpp"
#include "lz/protocol.hpp"

namespace lz {

inline Vec3 bloch_of_angles(double theta, double phi) {
    return {0.5 * std::sin(theta) * std::cos(phi), 0.5 * std::sin(theta) * std::sin(phi), -0.5 * std::cos(theta)};
}

namespace detail {

// sqrt(C(N,n)) cos^{N-n}(theta/2) sin^n(theta/2), evaluated in log space.
inline std::vector<double> coherent_weights(int N, double theta) {
    std::vector<double> a(N + 1, 0.0);
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    const double lc = std::log(std::abs(c)), ls = std::log(std::abs(s));
    const double sign_c = c < 0 ? -1.0 : 1.0;
    for (int n = 0; n <= N; ++n) {
        const int pc = N - n, ps = n;
        if ((pc > 0 && c == 0.0) || (ps > 0 && s == 0.0)) continue;
        const double lg = 0.5 * (std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0));
        double v = std::exp(lg + (pc > 0 ? pc * lc : 0.0) + (ps > 0 ? ps * ls : 0.0));
        if (pc % 2 == 1) v *= sign_c;
        a[n] = v;
    }
    return a;
}

}  // namespace detail

/// <theta, phi | Psi> = sum_n sqrt(C(N,n)) cos^{N-n}(theta/2) sin^n(theta/2) e^{+i n phi} c_n.
inline cplx coherent_overlap(double theta, double phi, const ManyBodyState& s) {
    const int N = s.N();
    const auto a = detail::coherent_weights(N, theta);
    cplx acc = 0;
    for (int n = 0; n <= N; ++n) acc += a[n] * std::polar(1.0, n * phi) * s.amplitudes[n];
    return acc;
}

struct HusimiGridSpec {
    int n_theta = 0;  ///< 0: 4N
    int n_phi = 0;    ///< 0: 4N
};

/// Q(theta, phi) on Gauss-Legendre nodes in cos(theta) and a uniform periodic grid in phi.
struct HusimiGrid {
    int N = 0;
    double time = 0;
    std::vector<double> theta;         ///< ascending in (0, pi)
    std::vector<double> theta_weight;  ///< quadrature weights for sin(theta) d(theta)
    std::vector<double> phi;           ///< k 2 pi / n_phi
    std::vector<double> Q;             ///< row-major: Q[i * phi.size() + k]
    double normalization_residual = 0; ///< |int Q dOmega - 4 pi/(N+1)| / (4 pi/(N+1))

    double at(std::size_t i, std::size_t k) const { return Q[i * phi.size() + k]; }

    double integral() const {
        const double dphi = 2 * std::numbers::pi / phi.size();
        double acc = 0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            double row = 0;
            for (std::size_t k = 0; k < phi.size(); ++k) row += at(i, k);
            acc += theta_weight[i] * row * dphi;
        }
        return acc;
    }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch), nodes descending.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    if (n < 1) throw InvalidArgument("gauss_legendre: need n >= 1");
    if (n == 1) return {{0.0}, {2.0}};
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n), e(n - 1);
    for (int k = 1; k < n; ++k) e[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NotConverged("gauss_legendre: eigensolver failed");
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        x[i] = es.eigenvalues()[n - 1 - i];
        const double v0 = es.eigenvectors()(0, n - 1 - i);
        w[i] = 2.0 * v0 * v0;
    }
    return {x, w};
}

/// Husimi function of `s` on the grid; the normalization residual is recorded, not enforced.
inline HusimiGrid husimi(const ManyBodyState& s, const HusimiGridSpec& spec = {}, double time = 0.0) {
    require_normalized(s);
    const int N = s.N();
    const int nt = spec.n_theta > 0 ? spec.n_theta : 4 * N;
    const int np = spec.n_phi > 0 ? spec.n_phi : 4 * N;
    HusimiGrid g;
    g.N = N;
    g.time = time;
    const auto [x, w] = gauss_legendre(nt);
    for (int i = 0; i < nt; ++i) {
        g.theta.push_back(std::acos(x[i]));
        g.theta_weight.push_back(w[i]);
    }
    for (int k = 0; k < np; ++k) g.phi.push_back(2 * std::numbers::pi * k / np);
    g.Q.resize(static_cast<std::size_t>(nt) * np);
    std::vector<cplx> a(N + 1);
    for (int i = 0; i < nt; ++i) {
        const auto wts = detail::coherent_weights(N, g.theta[i]);
        for (int n = 0; n <= N; ++n) a[n] = wts[n] * s.amplitudes[n];
        for (int k = 0; k < np; ++k) {
            // Horner in e^{i phi}
            const cplx z = std::polar(1.0, g.phi[k]);
            cplx acc = 0;
            for (int n = N; n >= 0; --n) acc = acc * z + a[n];
            g.Q[static_cast<std::size_t>(i) * np + k] = std::norm(acc);
        }
    }
    const double expected = 4 * std::numbers::pi / (N + 1);
    g.normalization_residual = std::abs(g.integral() - expected) / expected;
    return g;
}

/**
 * <L> reconstructed from the Husimi density: (N+1)(N+2)/(4 pi) int s(theta, phi) Q dOmega.
 * Throws when the grid does not resolve the normalization to 1e-6.
 */
inline Vec3 reconstruct_bloch_from_husimi(const HusimiGrid& g, double max_residual = 1e-6) {
    if (!(g.normalization_residual <= max_residual))
        throw InvariantViolation("reconstruct_bloch_from_husimi: normalization residual " +
                                 std::to_string(g.normalization_residual) + " exceeds " +
                                 std::to_string(max_residual) + "; refine the grid");
    const double dphi = 2 * std::numbers::pi / g.phi.size();
    Vec3 acc{};
    for (std::size_t i = 0; i < g.theta.size(); ++i) {
        for (std::size_t k = 0; k < g.phi.size(); ++k) {
            const Vec3 s = bloch_of_angles(g.theta[i], g.phi[k]);
            const double wq = g.theta_weight[i] * dphi * g.at(i, k);
            for (int c = 0; c < 3; ++c) acc[c] += wq * s[c];
        }
    }
    const double pref = (g.N + 1.0) * (g.N + 2.0) / (4 * std::numbers::pi);
    return {pref * acc[0], pref * acc[1], pref * acc[2]};
}

// ---------------------------------------------------------------------------------------------
// Ensembles

struct Ensemble {
    int N = 1;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<MeanFieldState> members;

    std::size_t size() const { return members.size(); }
};

/// SplitMix64 step, used to derive independent per-member seeds from the master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits (platform independent, unlike std distributions).
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/**
 * M samples of the Husimi density of |N, 0> (all particles in mode 1):
 * phi uniform, cos^2(theta/2) = v^{1/(N+1)} with v uniform on (0, 1].
 */
inline Ensemble sample_initial_ensemble(int N, int M, std::uint64_t seed) {
    if (N < 1) throw InvalidArgument("sample_initial_ensemble: N must be >= 1");
    if (M < 1) throw InvalidArgument("sample_initial_ensemble: M must be >= 1");
    Ensemble e;
    e.N = N;
    e.master_seed = seed;
    e.seeds.resize(M);
    e.members.resize(M);
    for (int j = 0; j < M; ++j) {
        e.seeds[j] = splitmix64(seed + static_cast<std::uint64_t>(j) * 0x632be59bd9b4e019ULL);
        std::mt19937_64 rng(e.seeds[j]);
        const double v = 1.0 - uniform01(rng);
        const double phi = 2 * std::numbers::pi * uniform01(rng);
        const double c2 = std::pow(v, 1.0 / (N + 1));
        const double theta = 2 * std::acos(std::sqrt(c2));
        e.members[j] = MeanFieldState::polar(theta, phi);
    }
    return e;
}

/// Rotate every member about the y axis so that the mode-1 pole maps onto `target` (t_y = 0).
inline Ensemble orient_ensemble(Ensemble e, const Vec3& target) {
    const double r = bloch_norm(target);
    if (!(r > 0)) throw InvalidArgument("orient_ensemble: zero target");
    if (std::abs(target[1]) > 1e-12 * r) throw InvalidArgument("orient_ensemble: target must lie in the x-z plane");
    // (0, 0, -1) -> (-sin b, 0, -cos b)
    const double sb = -target[0] / r, cb = -target[2] / r;
    for (auto& m : e.members) {
        const Vec3 s = m.bloch();
        const Vec3 t{s[0] * cb + s[2] * sb, s[1], -s[0] * sb + s[2] * cb};
        m = MeanFieldState::from_bloch(t);
    }
    return e;
}

struct EnsembleMoments {
    double t = 0;
    Vec3 mean{};  ///< N <s_k>
    Vec3 dev{};   ///< N Delta s_k
    Spdm spdm;    ///< rho_kl = <psi_k* psi_l>
    double lambda1 = 0, lambda2 = 0;
    std::optional<double> xi_n;  ///< N^2 Var(s_z) / (N rho11 rho22)
};

struct EnsembleOptions {
    int workers = 0;          ///< 0: LZ_WORKERS or hardware concurrency
    double member_tol = 0;    ///< 0: protocol tol
    double sample_dt = 0;     ///< moment series spacing; 0: endpoints only
};

struct EnsembleResult {
    Ensemble final_ensemble;           ///< evolved members (failed members keep their initial state)
    std::vector<bool> ok;
    int failed = 0;
    std::vector<EnsembleMoments> series;
};

namespace detail {

inline constexpr std::size_t ensemble_chunk = 32;

struct MomentSums {
    std::vector<std::array<double, 6>> s;  // per sample: sum s_k, sum s_k^2
    std::size_t count = 0;
};

inline EnsembleMoments finish_moments(double t, const std::array<double, 6>& sum, std::size_t count, int N) {
    EnsembleMoments m;
    m.t = t;
    const double c = static_cast<double>(count);
    Vec3 mean{}, var{};
    for (int k = 0; k < 3; ++k) {
        mean[k] = sum[k] / c;
        var[k] = std::max(0.0, sum[3 + k] / c - mean[k] * mean[k]);
        m.mean[k] = N * mean[k];
        m.dev[k] = N * std::sqrt(var[k]);
    }
    m.spdm = spdm_from_bloch(mean);
    const auto ev = m.spdm.eigenvalues();
    m.lambda1 = ev.first;
    m.lambda2 = ev.second;
    m.xi_n = squeezing_number_from(double(N) * N * var[2], N * m.spdm.rho11, N * m.spdm.rho22, N);
    return m;
}

}  // namespace detail

/**
 * Evolve every member with the GPE and record ensemble moments. Members are processed in fixed
 * chunks and reduced in member order, so results do not depend on the worker count.
 */
inline EnsembleResult propagate_ensemble(const Ensemble& ens, const SweepProtocol& p, const EnsembleOptions& opt = {}) {
    p.validate();
    if (ens.size() == 0) throw InvalidArgument("propagate_ensemble: empty ensemble");
    if (ens.N != p.N) throw InvalidArgument("propagate_ensemble: ensemble N does not match protocol N");
    SweepProtocol q = p;
    if (opt.member_tol > 0) q.tol = opt.member_tol;
    const auto times = ode::sample_times(p.t_start, p.t_end, opt.sample_dt);
    const std::size_t M = ens.size();
    const std::size_t n_chunks = (M + detail::ensemble_chunk - 1) / detail::ensemble_chunk;

    EnsembleResult res;
    res.final_ensemble = ens;
    res.ok.assign(M, false);

    auto run_chunk = [&](std::size_t c) {
        detail::MomentSums sums;
        sums.s.assign(times.size(), {});
        const std::size_t lo = c * detail::ensemble_chunk, hi = std::min(M, lo + detail::ensemble_chunk);
        for (std::size_t j = lo; j < hi; ++j) {
            try {
                const auto r = propagate_gpe(ens.members[j], q, opt.sample_dt);
                if (r.trajectory.s.size() != times.size()) throw InvariantViolation("sample count mismatch");
                for (std::size_t i = 0; i < times.size(); ++i)
                    for (int k = 0; k < 3; ++k) {
                        sums.s[i][k] += r.trajectory.s[i][k];
                        sums.s[i][3 + k] += r.trajectory.s[i][k] * r.trajectory.s[i][k];
                    }
                ++sums.count;
                res.final_ensemble.members[j] = r.final_state;
                res.ok[j] = true;
            } catch (const Error&) {
            }
        }
        return sums;
    };
    const auto chunks = parallel_map(n_chunks, resolve_workers(opt.workers), run_chunk);

    std::vector<std::array<double, 6>> total(times.size());
    std::size_t count = 0;
    for (const auto& ch : chunks) {
        count += ch.count;
        for (std::size_t i = 0; i < times.size(); ++i)
            for (int k = 0; k < 6; ++k) total[i][k] += ch.s[i][k];
    }
    res.failed = static_cast<int>(M - count);
    if (count == 0) throw IntegrationError("propagate_ensemble: every member failed", p.t_start);
    for (std::size_t i = 0; i < times.size(); ++i) res.series.push_back(detail::finish_moments(times[i], total[i], count, p.N));
    return res;
}

struct EnsemblePlzOptions {
    EnsembleOptions ensemble{0, 1e-8, 0};
    WindowPolicy window{true, 1e-3, 6};
    double base_scale = 0.25;  ///< first window tried, as a fraction of the default window
    Readout readout = Readout::dressed;
};

struct EnsembleSweep {
    SurvivalResult survival;
    EnsembleMoments final_moments;  ///< raw ensemble moments at the end of the window
    /// xi_N^2 of the members' asymptotic mode populations, the counterpart of final_squeezing_number.
    /// Taken without the (N + 2) rescaling, like final_moments.
    std::optional<double> final_xi_n;
};

/**
 * Landau-Zener probability from a phase-space ensemble of M trajectories.
 *
 * Each member contributes its asymptotic mode population f_j. Since the Husimi moments satisfy
 * <L> = (N + 2) E_Q[s], the many-particle survival is reconstructed as
 * P = ((N + 2)/N) E[f] - 1/N, with the standard error scaled alike.
 *
 * The window is certified on the single mean-field trajectory starting from the distribution's
 * centre: starting at base_scale times the default window, it is doubled until P changes by less
 * than the tolerance, and the ensemble runs on the smaller of the last two windows.
 */
inline EnsembleSweep ensemble_sweep(const SweepProtocol& p, int M, std::uint64_t seed,
                                    const EnsemblePlzOptions& opt = {}) {
    p.validate();
    SweepProtocol q = p;
    SurvivalResult out;
    if (opt.window.certify) {
        WindowPolicy single = opt.window;
        single.certify = false;
        auto single_p = [&](double scale) {
            SweepProtocol w = with_default_window(p, scale);
            w.tol = opt.ensemble.member_tol > 0 ? opt.ensemble.member_tol : p.tol;
            return plz_mean_field(w, 0.0, single, opt.readout).P;
        };
        double scale = opt.base_scale;
        double prev = single_p(scale);
        bool ok = false;
        for (int d = 1; d <= opt.window.max_doublings; ++d) {
            const double cur = single_p(2 * scale);
            if (std::abs(cur - prev) < opt.window.tolerance) {
                out.doublings = d;
                out.last_change = std::abs(cur - prev);
                ok = true;
                break;
            }
            prev = cur;
            scale *= 2;
        }
        if (!ok) throw NotConverged("plz_ensemble: window not converged; use a larger |t_end|");
        q = with_default_window(p, scale);
    }
    const Vec3 centre = mean_field_initial_bloch(q, opt.readout);
    const Ensemble ens = orient_ensemble(sample_initial_ensemble(p.N, M, seed), centre);
    SweepProtocol qm = q;
    if (opt.ensemble.member_tol > 0) qm.tol = opt.ensemble.member_tol;

    const std::size_t n_chunks = (ens.size() + detail::ensemble_chunk - 1) / detail::ensemble_chunk;
    struct ChunkSum {
        double f = 0, f2 = 0;
        std::array<double, 6> moments{};
        int count = 0;
    };
    auto run_chunk = [&](std::size_t c) {
        ChunkSum s;
        const std::size_t lo = c * detail::ensemble_chunk, hi = std::min(ens.size(), lo + detail::ensemble_chunk);
        for (std::size_t j = lo; j < hi; ++j) {
            try {
                const auto r = propagate_gpe(ens.members[j], qm);
                const double f = mean_field_survival(r.final_bloch, qm, opt.readout);
                s.f += f;
                s.f2 += f * f;
                for (int k = 0; k < 3; ++k) {
                    s.moments[k] += r.final_bloch[k];
                    s.moments[3 + k] += r.final_bloch[k] * r.final_bloch[k];
                }
                ++s.count;
            } catch (const Error&) {
            }
        }
        return s;
    };
    const auto chunks = parallel_map(n_chunks, resolve_workers(opt.ensemble.workers), run_chunk);
    ChunkSum tot;
    for (const auto& c : chunks) {
        tot.f += c.f;
        tot.f2 += c.f2;
        for (int k = 0; k < 6; ++k) tot.moments[k] += c.moments[k];
        tot.count += c.count;
    }
    out.failed_members = M - tot.count;
    if (tot.count < 2) throw IntegrationError("plz_ensemble: fewer than two members succeeded", q.t_start);
    const double n = tot.count;
    const double mean = tot.f / n;
    const double var = std::max(0.0, (tot.f2 - n * mean * mean) / (n - 1));
    const double scale = (p.N + 2.0) / p.N;
    out.P = scale * mean - 1.0 / p.N;
    out.std_error = scale * std::sqrt(var / n);
    out.half_window = q.t_end;
    const double var_pop = std::max(0.0, tot.f2 / n - mean * mean);
    const double N = p.N;
    return {out, detail::finish_moments(q.t_end, tot.moments, static_cast<std::size_t>(tot.count), p.N),
            squeezing_number_from(N * N * var_pop, N * (1 - mean), N * mean, p.N)};
}

inline SurvivalResult plz_ensemble(const SweepProtocol& p, int M, std::uint64_t seed,
                                   const EnsemblePlzOptions& opt = {}) {
    return ensemble_sweep(p, M, seed, opt).survival;
}

}  // namespace lz

#endif  // LZ_PHASESPACE_HPP
