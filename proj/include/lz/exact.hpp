#ifndef LZ_EXACT_HPP
#define LZ_EXACT_HPP

// Exact many-particle propagation of i dPsi/dt = H(t) Psi in the Fock basis.
//
// The diagonal of H is integrated analytically: with phi_n(t) = alpha t^2 m_n + U m_n^2 t
// (m_n = n - N/2) and c_n = exp(-i phi_n) b_n, the amplitudes b obey
//     i b_n' = e^{i theta_n} V_n b_{n+1} + e^{-i theta_{n-1}} V_{n-1} b_{n-1},
// theta_n = phi_n - phi_{n+1} = -alpha t^2 - U (2 m_n + 1) t, V_n = H(n, n+1).
// The step size is then set by the coupling frequencies instead of by N |eps|.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "lz/dopri5.hpp"
#include "lz/error.hpp"
#include "lz/fock.hpp"
#include "lz/meanfield.hpp"
#include "lz/protocol.hpp"
#include "lz/spectra.hpp"

namespace lz {

struct ExactSample {
    double t = 0;
    Vec3 L{};        ///< <L_x>, <L_y>, <L_z>
    Vec3 var{};      ///< Delta L_k^2
    double lambda1 = 0, lambda2 = 0;  ///< SPDM eigenvalues, largest first
    double n1 = 0, n2 = 0;
    double norm = 1;
};

struct TrajectoryRecord {
    std::vector<ExactSample> samples;
    double max_norm_drift = 0;
};

inline ExactSample measure(double t, const ManyBodyState& s) {
    ExactSample x;
    x.t = t;
    x.norm = s.norm_squared();
    ManyBodyState u = s;
    const double scale = 1.0 / std::sqrt(x.norm);
    for (auto& c : u.amplitudes) c *= scale;
    x.L = expectation_L(u);
    x.var = variance_L(u);
    const auto ev = spdm_from_moments(x.L, u.N()).eigenvalues();
    x.lambda1 = ev.first;
    x.lambda2 = ev.second;
    const auto pop = populations(u);
    x.n1 = pop.first;
    x.n2 = pop.second;
    return x;
}

namespace detail {

struct InteractionPicture {
    int N;
    double alpha, U;
    std::vector<double> m, V;

    explicit InteractionPicture(const SweepProtocol& p) : N(p.N), alpha(p.alpha), U(p.U()) {
        const AngularMomentumOps L(N);
        m = L.lz;
        V.resize(N);
        for (int n = 0; n < N; ++n) V[n] = -2.0 * p.J * L.lx_off[n];
    }

    double phase(double t, int n) const { return alpha * t * t * m[n] + U * m[n] * m[n] * t; }

    void to_lab(double t, const std::vector<cplx>& b, std::vector<cplx>& c) const {
        c.resize(b.size());
        for (int n = 0; n <= N; ++n) c[n] = std::polar(1.0, -phase(t, n)) * b[n];
    }
    void from_lab(double t, const std::vector<cplx>& c, std::vector<cplx>& b) const {
        b.resize(c.size());
        for (int n = 0; n <= N; ++n) b[n] = std::polar(1.0, phase(t, n)) * c[n];
    }

    void operator()(double t, const std::vector<cplx>& b, std::vector<cplx>& db) const {
        const double theta0 = -alpha * t * t - U * (2 * m[0] + 1) * t;
        const cplx w = std::polar(1.0, -2 * U * t);
        cplx z = std::polar(1.0, theta0);  // e^{i theta_n}
        cplx z_prev = 0;                   // e^{i theta_{n-1}}
        for (int n = 0; n <= N; ++n) {
            cplx acc = 0;
            if (n < N) acc += z * V[n] * b[n + 1];
            if (n > 0) acc += std::conj(z_prev) * V[n - 1] * b[n - 1];
            db[n] = cplx(acc.imag(), -acc.real());  // -i acc
            z_prev = z;
            z *= w;
        }
    }
};

}  // namespace detail

inline ode::StepControl exact_step_control(const SweepProtocol& p) {
    ode::StepControl c;
    c.rtol = p.tol;
    c.atol = 1e-2 * p.tol;
    return c;
}

/**
 * Propagate `init` from t0 to t1 under H(t) of `p`, calling emit(t, state) at every time in
 * `times` (ascending, inside [t0, t1]). emit returns true to stop early. Returns the state at
 * the time reached, which is written to `t_reached`.
 */
template <class Emit>
ManyBodyState evolve_exact(const ManyBodyState& init, const SweepProtocol& p, double t0, double t1,
                           const std::vector<double>& times, Emit&& emit, ode::Statistics* stats = nullptr,
                           double* t_reached = nullptr) {
    if (init.N() != p.N) throw InvalidArgument("evolve_exact: state dimension does not match N");
    const detail::InteractionPicture ip(p);
    std::vector<cplx> b;
    ip.from_lab(t0, init.amplitudes, b);
    ManyBodyState lab;
    auto on_sample = [&](double t, const std::vector<cplx>& v) {
        ip.to_lab(t, v, lab.amplitudes);
        return emit(t, std::as_const(lab));
    };
    ode::GridSampler<std::vector<cplx>, decltype(on_sample)> sampler(times, on_sample, b);
    const double t = ode::integrate(ip, b, t0, t1, exact_step_control(p), sampler, stats);
    if (t_reached) *t_reached = t;
    ManyBodyState out;
    ip.to_lab(t, b, out.amplitudes);
    return out;
}

struct ExactResult {
    TrajectoryRecord record;
    ManyBodyState final_state;
    double norm_drift = 0;  ///< |1 - |Psi(t_end)|^2|
    ode::Statistics stats;
};

/// Schroedinger propagation over the protocol window, sampled every `sample_dt` (0: endpoints only).
inline ExactResult propagate_schrodinger(const ManyBodyState& init, const SweepProtocol& p, double sample_dt = 0.0) {
    p.validate();
    require_normalized(init);
    ExactResult res;
    const auto times = ode::sample_times(p.t_start, p.t_end, sample_dt);
    auto emit = [&](double t, const ManyBodyState& s) {
        res.record.samples.push_back(measure(t, s));
        res.record.max_norm_drift = std::max(res.record.max_norm_drift, std::abs(1.0 - res.record.samples.back().norm));
        return false;
    };
    res.final_state = evolve_exact(init, p, p.t_start, p.t_end, times, emit, &res.stats);
    res.norm_drift = std::abs(1.0 - res.final_state.norm_squared());
    return res;
}

// ---------------------------------------------------------------------------------------------
// Squeezing

/// xi_N^2 = Delta L_z^2 / (<n1><n2>/N); nullopt when the reference vanishes.
inline std::optional<double> squeezing_number_from(double var_z, double n1, double n2, int N) {
    const double ref = n1 * n2 / N;
    if (!(ref > 1e-12 * N)) return std::nullopt;
    return var_z / ref;
}

/// xi_S^2 = N Delta L_z^2 / (<L_x>^2 + <L_y>^2); nullopt when the phase coherence vanishes.
inline std::optional<double> squeezing_spectroscopic_from(double var_z, const Vec3& L, int N) {
    const double coh = L[0] * L[0] + L[1] * L[1];
    if (!(coh > 1e-12 * double(N) * N)) return std::nullopt;
    return N * var_z / coh;
}

// ---------------------------------------------------------------------------------------------
// Landau-Zener probability

/// Fock index whose particles all sit in `mode`.
inline int mode_index(int N, int mode) { return mode == 1 ? 0 : N; }

/// Starting state: the bare Fock state, or the eigenstate of H(t_start) connected to it.
inline ManyBodyState sweep_initial_state(const SweepProtocol& p, Readout readout) {
    if (readout == Readout::diabatic || p.J == 0.0 || p.epsilon(p.t_start) == 0.0) return initial_state(p);
    const auto basis = adiabatic_basis(p, p.t_start);
    const int k = level_with_label(basis, mode_index(p.N, p.initial_mode));
    ManyBodyState s;
    s.amplitudes.resize(p.N + 1);
    for (int n = 0; n <= p.N; ++n) s.amplitudes[n] = basis.eig.vectors(n, k);
    return s;
}

/**
 * Population fraction of the initial mode that the state at t_end will carry as t -> inf.
 * Dressed readout projects on the eigenstates of H(t_end) and weights each by the Fock state it
 * connects to; diabatic readout takes the bare population at t_end.
 */
template <class Weights>
double survival_from_level_weights(const SweepProtocol& p, Readout readout, Weights&& level_weight) {
    const int N = p.N;
    if (readout == Readout::diabatic || p.J == 0.0 || p.epsilon(p.t_end) == 0.0) {
        double acc = 0, tot = 0;
        for (int n = 0; n <= N; ++n) {
            const double w = level_weight.fock(n);
            acc += w * (p.initial_mode == 1 ? N - n : n);
            tot += w;
        }
        return acc / (N * tot);
    }
    const auto basis = adiabatic_basis(p, p.t_end);
    double acc = 0, tot = 0;
    for (int k = 0; k <= N; ++k) {
        const double w = level_weight.level(basis, k);
        const int lab = basis.label[k];
        acc += w * (p.initial_mode == 1 ? N - lab : lab);
        tot += w;
    }
    return acc / (N * tot);
}

inline double many_body_survival(const ManyBodyState& s, const SweepProtocol& p, Readout readout) {
    struct {
        const ManyBodyState& s;
        double fock(int n) const { return std::norm(s.amplitudes[n]); }
        double level(const AdiabaticBasis& b, int k) const {
            cplx a = 0;
            for (std::size_t n = 0; n < s.amplitudes.size(); ++n) a += b.eig.vectors(n, k) * s.amplitudes[n];
            return std::norm(a);
        }
    } w{s};
    return survival_from_level_weights(p, readout, w);
}

/**
 * Distribution of the mode-2 occupation n that the state at t_end will show as t -> inf
 * (dressed readout), or the bare Fock distribution at t_end (diabatic readout).
 */
inline std::vector<double> asymptotic_number_distribution(const ManyBodyState& s, const SweepProtocol& p,
                                                          Readout readout = Readout::dressed) {
    const int N = p.N;
    std::vector<double> w(N + 1, 0.0);
    if (readout == Readout::diabatic || p.J == 0.0 || p.epsilon(p.t_end) == 0.0) {
        for (int n = 0; n <= N; ++n) w[n] = std::norm(s.amplitudes[n]);
    } else {
        const auto b = adiabatic_basis(p, p.t_end);
        for (int k = 0; k <= N; ++k) {
            cplx a = 0;
            for (int n = 0; n <= N; ++n) a += b.eig.vectors(n, k) * s.amplitudes[n];
            w[b.label[k]] += std::norm(a);
        }
    }
    double tot = 0;
    for (double x : w) tot += x;
    for (double& x : w) x /= tot;
    return w;
}

/// xi_N^2 of the asymptotic number distribution after the sweep.
inline std::optional<double> final_squeezing_number(const ManyBodyState& s, const SweepProtocol& p,
                                                    Readout readout = Readout::dressed) {
    const auto w = asymptotic_number_distribution(s, p, readout);
    const int N = p.N;
    double mean = 0, sq = 0;
    for (int n = 0; n <= N; ++n) {
        mean += w[n] * n;
        sq += w[n] * double(n) * n;
    }
    const double var = std::max(0.0, sq - mean * mean);
    return squeezing_number_from(var, N - mean, mean, N);
}

/// Many-particle Landau-Zener probability <n_j(+inf)> / N for the initially occupied mode j.
inline SurvivalResult plz_many_particle(const SweepProtocol& p, const WindowPolicy& policy = {},
                                        Readout readout = Readout::dressed) {
    p.validate();
    auto eval = [&](const SweepProtocol& q) {
        const auto init = sweep_initial_state(q, readout);
        const auto res = propagate_schrodinger(init, q);
        SurvivalResult r;
        r.P = std::clamp(many_body_survival(res.final_state, q, readout), 0.0, 1.0);
        return r;
    };
    return certify_window(p, policy, eval);
}

inline std::optional<double> squeezing_number(const ManyBodyState& s) {
    const auto x = measure(0.0, s);
    return squeezing_number_from(x.var[2], x.n1, x.n2, s.N());
}

inline std::optional<double> squeezing_spectroscopic(const ManyBodyState& s) {
    const auto x = measure(0.0, s);
    return squeezing_spectroscopic_from(x.var[2], x.L, s.N());
}

// ---------------------------------------------------------------------------------------------
// Revival of spectroscopic squeezing

/**
 * Amplitudes of `s` in the adiabatic basis at time t, indexed by asymptotic label. Each
 * eigenvector is signed so that its component on its own label is positive, which keeps the
 * relative phases continuous in t.
 */
inline ManyBodyState dressed_state(const ManyBodyState& s, const SweepProtocol& p, double t) {
    const auto basis = adiabatic_basis(p, t);
    ManyBodyState out;
    out.amplitudes.assign(s.amplitudes.size(), cplx{0, 0});
    const auto& V = basis.eig.vectors;
    for (int k = 0; k <= p.N; ++k) {
        const int n = basis.label[k];
        cplx a{0, 0};
        for (int m = 0; m <= p.N; ++m) a += V(m, k) * s.amplitudes[m];
        out.amplitudes[n] = V(n, k) < 0 ? -a : a;
    }
    return out;
}


struct RevivalOptions {
    double horizon = 0;          ///< time after t_end to search; 0: three beat periods 3 pi N / |g|
    double sample_dt = 0.02;
    double loss_threshold = 2;   ///< xi_S^2 at or above this (or undefined) counts as lost coherence
    double degenerate_tolerance = 0.05;  ///< |xi_S^2 - 1| bound for "coherence never lost"
    Readout start = Readout::dressed;
};

struct RevivalResult {
    double time = std::numeric_limits<double>::infinity();  ///< absolute time; +inf if none
    bool found = false;
    bool degenerate = false;  ///< xi_S^2 stayed near 1 over the horizon: time = t_end
    double t_loss = std::numeric_limits<double>::quiet_NaN();
    double xi_s_at_revival = std::numeric_limits<double>::quiet_NaN();
};

/**
 * First time after the sweep at which the state is spectroscopically squeezed again.
 *
 * The sweep runs over the protocol window; afterwards the Hamiltonian keeps its form
 * eps = alpha t. Squeezing is measured on the amplitudes in the adiabatic basis, so the fast
 * tilt of the eigenbasis away from the Fock basis does not show up as spurious oscillations.
 * Coherence is declared lost at the first t >= t_end where xi_S^2 reaches the loss threshold;
 * the revival is the next time with xi_S^2 < 1. If xi_S^2 stays within degenerate_tolerance of
 * 1 over the whole horizon the result is t_end, flagged degenerate; any other run without a
 * revival inside the horizon returns +inf.
 */
inline RevivalResult revival_time(const SweepProtocol& p, const RevivalOptions& opt = {}) {
    p.validate();
    if (!(opt.sample_dt > 0)) throw InvalidArgument("revival_time: sample_dt must be > 0");
    double horizon = opt.horizon;
    if (horizon <= 0) horizon = p.g != 0.0 ? 3 * std::numbers::pi * p.N / std::abs(p.g) : 100.0 / std::max(p.J, 1e-3);

    const auto init = sweep_initial_state(p, opt.start);
    const auto swept = evolve_exact(init, p, p.t_start, p.t_end, {}, [](double, const ManyBodyState&) { return false; });

    RevivalResult out;
    const double t_stop = p.t_end + horizon;
    const auto times = ode::sample_times(p.t_end, t_stop, opt.sample_dt);
    double max_deviation = 0;  // max |xi_S^2 - 1| before coherence is lost
    auto emit = [&](double t, const ManyBodyState& s) {
        const auto x = measure(t, dressed_state(s, p, t));
        const auto xi = squeezing_spectroscopic_from(x.var[2], x.L, p.N);
        if (std::isnan(out.t_loss)) {
            max_deviation = std::max(max_deviation, xi ? std::abs(*xi - 1.0) : HUGE_VAL);
            if (!xi || *xi >= opt.loss_threshold) out.t_loss = t;
            return false;
        }
        if (xi && *xi < 1.0) {
            out.time = t;
            out.found = true;
            out.xi_s_at_revival = *xi;
            return true;
        }
        return false;
    };
    evolve_exact(swept, p, p.t_end, t_stop, times, emit);
    if (std::isnan(out.t_loss) && max_deviation <= opt.degenerate_tolerance) {
        out.time = p.t_end;
        out.degenerate = true;
    }
    return out;
}

}  // namespace lz

#endif  // LZ_EXACT_HPP
