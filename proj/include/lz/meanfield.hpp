#ifndef LZ_MEANFIELD_HPP
#define LZ_MEANFIELD_HPP

// Mean-field dynamics of the two-mode condensate.
//
// Discrete GPE in the many-body sign convention (mode 1 carries -eps):
//     i psi1' = (-eps + g |psi1|^2) psi1 - J psi2
//     i psi2' = -J psi1 + (eps + g |psi2|^2) psi2
// Bloch vector s_x = Re(psi1* psi2), s_y = -Im(psi1* psi2), s_z = (|psi2|^2 - |psi1|^2) / 2,
// which moves as s' = grad E x s with E = 2 eps s_z - 2 J s_x + g s_z^2.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "lz/dopri5.hpp"
#include "lz/error.hpp"
#include "lz/fock.hpp"
#include "lz/protocol.hpp"
#include "lz/spectra.hpp"

namespace lz {

struct MeanFieldState {
    cplx psi1{1.0, 0.0};
    cplx psi2{0.0, 0.0};

    double norm_squared() const { return std::norm(psi1) + std::norm(psi2); }

    Vec3 bloch() const {
        const cplx c = std::conj(psi1) * psi2;
        return {c.real(), -c.imag(), 0.5 * (std::norm(psi2) - std::norm(psi1))};
    }

    /// All weight in `mode` (1 or 2).
    static MeanFieldState mode(int m) {
        if (m != 1 && m != 2) throw InvalidArgument("MeanFieldState::mode: mode must be 1 or 2");
        MeanFieldState s;
        if (m == 2) std::swap(s.psi1, s.psi2);
        return s;
    }

    /// psi = (cos(theta/2), sin(theta/2) e^{-i phi}).
    static MeanFieldState polar(double theta, double phi) {
        return {cplx(std::cos(0.5 * theta), 0.0), std::sin(0.5 * theta) * std::polar(1.0, -phi)};
    }

    /// A normalized state with the given Bloch vector (|s| = 1/2); the global phase makes psi1 real.
    static MeanFieldState from_bloch(const Vec3& s) {
        const double r = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
        if (!(r > 0)) throw InvalidArgument("MeanFieldState::from_bloch: zero Bloch vector");
        const double sx = 0.5 * s[0] / r, sy = 0.5 * s[1] / r, sz = 0.5 * s[2] / r;
        MeanFieldState out;
        const double a1 = std::sqrt(std::max(0.0, 0.5 - sz));
        const double a2 = std::sqrt(std::max(0.0, 0.5 + sz));
        if (a1 >= a2) {
            out.psi1 = a1;
            out.psi2 = cplx(sx, -sy) / a1;
        } else {
            out.psi2 = a2;
            out.psi1 = std::conj(cplx(sx, -sy)) / a2;
        }
        return out;
    }
};

inline double bloch_norm(const Vec3& s) { return std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]); }

inline Spdm spdm_from_bloch(const Vec3& s) {
    Spdm r;
    r.rho11 = 0.5 - s[2];
    r.rho22 = 0.5 + s[2];
    r.rho12 = cplx(s[0], -s[1]);
    return r;
}

struct MeanFieldTrajectory {
    std::vector<double> t;
    std::vector<Vec3> s;
    std::vector<double> norm;  ///< |psi|^2 (GPE) or |s| (Bloch)
};

struct MeanFieldResult {
    MeanFieldTrajectory trajectory;
    MeanFieldState final_state;  ///< GPE only
    Vec3 final_bloch{};
    ode::Statistics stats;
};

inline ode::StepControl step_control(const SweepProtocol& p) {
    ode::StepControl c;
    c.rtol = p.tol;
    c.atol = 1e-2 * p.tol;
    return c;
}

namespace detail {

using Gpe4 = std::array<double, 4>;  // Re psi1, Im psi1, Re psi2, Im psi2
using Bloch3 = std::array<double, 3>;

struct GpeRhs {
    double alpha, J, g;
    void operator()(double t, const Gpe4& y, Gpe4& dy) const {
        const double eps = alpha * t;
        const double n1 = y[0] * y[0] + y[1] * y[1], n2 = y[2] * y[2] + y[3] * y[3];
        const double d1 = -eps + g * n1, d2 = eps + g * n2;
        // psi' = -i h psi: Re' = Im(h psi), Im' = -Re(h psi)
        const double hr1 = d1 * y[0] - J * y[2], hi1 = d1 * y[1] - J * y[3];
        const double hr2 = d2 * y[2] - J * y[0], hi2 = d2 * y[3] - J * y[1];
        dy = {hi1, -hr1, hi2, -hr2};
    }
};

struct BlochRhs {
    double alpha, J, g, gamma;
    void operator()(double t, const Bloch3& s, Bloch3& ds) const {
        const double w = 2 * alpha * t + 2 * g * s[2];
        ds[0] = -w * s[1] - gamma * s[0];
        ds[1] = 2 * J * s[2] + w * s[0] - gamma * s[1];
        ds[2] = -2 * J * s[1];
    }
};

inline Gpe4 pack(const MeanFieldState& m) { return {m.psi1.real(), m.psi1.imag(), m.psi2.real(), m.psi2.imag()}; }
inline MeanFieldState unpack(const Gpe4& y) { return {cplx(y[0], y[1]), cplx(y[2], y[3])}; }

}  // namespace detail

/// Integrate the GPE over [t_start, t_end], sampling every `sample_dt` (0: endpoints only).
inline MeanFieldResult propagate_gpe(const MeanFieldState& init, const SweepProtocol& p, double sample_dt = 0.0) {
    p.validate();
    if (std::abs(init.norm_squared() - 1.0) > 1e-6)
        throw InvariantViolation("propagate_gpe: initial state not normalized");
    MeanFieldResult res;
    auto y = detail::pack(init);
    const auto times = ode::sample_times(p.t_start, p.t_end, sample_dt);
    auto emit = [&](double t, const detail::Gpe4& v) {
        const auto m = detail::unpack(v);
        res.trajectory.t.push_back(t);
        res.trajectory.s.push_back(m.bloch());
        res.trajectory.norm.push_back(m.norm_squared());
        return false;
    };
    ode::GridSampler<detail::Gpe4, decltype(emit)> sampler(times, emit, y);
    ode::integrate(detail::GpeRhs{p.alpha, p.J, p.g}, y, p.t_start, p.t_end, step_control(p), sampler, &res.stats);
    res.final_state = detail::unpack(y);
    res.final_bloch = res.final_state.bloch();
    return res;
}

/// Damped Bloch equations with transverse relaxation rate gamma (gamma = 0: Bloch image of the GPE).
inline MeanFieldResult propagate_bloch_noisy(const Vec3& init, const SweepProtocol& p, double gamma,
                                             double sample_dt = 0.0) {
    p.validate();
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("propagate_bloch_noisy: gamma must be >= 0");
    if (bloch_norm(init) > 0.5 + 1e-9) throw InvariantViolation("propagate_bloch_noisy: |s| > 1/2");
    MeanFieldResult res;
    detail::Bloch3 y = init;
    const auto times = ode::sample_times(p.t_start, p.t_end, sample_dt);
    auto emit = [&](double t, const detail::Bloch3& v) {
        res.trajectory.t.push_back(t);
        res.trajectory.s.push_back(v);
        res.trajectory.norm.push_back(bloch_norm(v));
        return false;
    };
    ode::GridSampler<detail::Bloch3, decltype(emit)> sampler(times, emit, y);
    ode::integrate(detail::BlochRhs{p.alpha, p.J, p.g, gamma}, y, p.t_start, p.t_end, step_control(p), sampler,
                   &res.stats);
    res.final_bloch = y;
    return res;
}

inline MeanFieldResult propagate_bloch_noisy(const MeanFieldState& init, const SweepProtocol& p, double gamma,
                                             double sample_dt = 0.0) {
    return propagate_bloch_noisy(init.bloch(), p, gamma, sample_dt);
}

// ---------------------------------------------------------------------------------------------
// Asymptotic readout

/**
 * Bloch vector direction (unit) of the elliptic fixed point that is adiabatically connected to
 * the pole s_z = sign * R as |eps| -> inf, for the flow on a sphere of radius R at fixed eps.
 * Requires eps outside the swallow tail (exactly two fixed points).
 */
inline Vec3 pole_fixed_point(double eps, double J, double g, double R, int sign) {
    // Fixed points on radius R are those of radius 1/2 with g replaced by 2 R g.
    const auto set = mean_field_stationary_states(eps, J, 2 * R * g);
    if (set.states.size() != 2)
        throw NotConverged("offset eps = " + std::to_string(eps) +
                           " lies inside the swallow tail; enlarge the sweep window");
    const auto& a = set.states[0].s;
    const auto& b = set.states[1].s;
    const Vec3& pick = (sign > 0) == (a[2] > b[2]) ? a : b;
    return {2 * pick[0], 2 * pick[1], 2 * pick[2]};
}

/**
 * Depth R - s_z that the state would have at eps -> inf (adiabatic invariant of the orbit).
 *
 * At fixed eps = eps_end, the gamma = 0 flow moves s on a closed orbit around the fixed point
 * n connected to the upper pole. The action I = oint (R - z') dPhi', with z' = s . n and Phi' the
 * azimuth about n, is an adiabatic invariant; as eps -> inf the orbit becomes a circle about the
 * z axis and I = 2 pi (R - s_z).
 */
inline double asymptotic_depth(const Vec3& s, double eps, double J, double g, double tol = 1e-10) {
    const double R = bloch_norm(s);
    if (R < 1e-14) return 0.0;
    if (J == 0.0) return R - s[2];
    auto dot = [](const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; };
    // Work with the unit vector u = s / R; the flow is u' = (-2J, 0, 2 eps + 2 g R u_z) x u.
    const Vec3 u0{s[0] / R, s[1] / R, s[2] / R};
    // Measure the action about whichever pole-connected fixed point the state is nearer to: the
    // orbit winds once around that axis. About the lower point the action tends to 2 pi (R + s_z).
    const Vec3 up = pole_fixed_point(eps, J, g, R, +1);
    const Vec3 down = pole_fixed_point(eps, J, g, R, -1);
    const bool use_up = dot(u0, up) >= dot(u0, down);
    const Vec3 n = use_up ? up : down;
    // Orthonormal frame (e1, e2, n); fixed points have n_y = 0.
    const Vec3 e2{0, 1, 0};
    const Vec3 e1{n[1] * e2[2] - n[2] * e2[1], n[2] * e2[0] - n[0] * e2[2], n[0] * e2[1] - n[1] * e2[0]};

    const double zp0 = dot(u0, n);
    const double r0sq = std::max(0.0, 1.0 - zp0 * zp0);
    // On the fixed point to within the resolution of the action (depth error R r^2 / 2).
    if (r0sq < 1e-14) return use_up ? 0.5 * R * r0sq : 2 * R - 0.5 * R * r0sq;

    using Y = std::array<double, 5>;  // u, Phi', I / R
    Y y{u0[0], u0[1], u0[2], 0.0, 0.0};
    const double gR = g * R;
    auto rhs = [&](double, const Y& v, Y& dv) {
        const double w = 2 * eps + 2 * gR * v[2];
        dv[0] = -w * v[1];
        dv[1] = 2 * J * v[2] + w * v[0];
        dv[2] = -2 * J * v[1];
        const Vec3 sv{v[0], v[1], v[2]}, ds{dv[0], dv[1], dv[2]};
        const double x = dot(sv, e1), yv = dot(sv, e2), z = dot(sv, n);
        const double dx = dot(ds, e1), dy = dot(ds, e2);
        const double cross = x * dy - yv * dx;
        const double r2 = std::max(x * x + yv * yv, 1e-300);
        dv[3] = cross / r2;
        dv[4] = cross / (1 + z);  // (1 - z') dPhi'/dt with r^2 = (1 - z')(1 + z')
    };
    ode::StepControl ctl;
    ctl.rtol = std::min(tol, 1e-9);
    ctl.atol = 1e-3 * ctl.rtol;
    const double omega = std::max({2 * std::abs(eps), 2 * J, 2 * std::abs(gR), 1e-3});
    ctl.h_max = 0.05 / omega;
    const double t_cap = 1e4 / omega;
    const double two_pi = 2 * std::numbers::pi;
    double action = std::numeric_limits<double>::quiet_NaN();
    auto observer = [&](const ode::DenseStep<Y>& st) {
        if (std::abs((*st.y_new)[3]) < two_pi) return false;
        double lo = st.t_old, hi = st.t_new;
        Y buf{};
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            st.interpolate(mid, buf);
            (std::abs(buf[3]) < two_pi ? lo : hi) = mid;
        }
        st.interpolate(hi, buf);
        action = buf[4];
        return true;
    };
    ode::integrate(rhs, y, 0.0, t_cap, ctl, observer);
    if (std::isnan(action)) throw NotConverged("asymptotic_depth: orbit did not close");
    const double area = R * std::abs(action) / two_pi;
    return use_up ? area : 2 * R - area;
}

/**
 * Probability of finding the particle in `mode` at eps -> inf given the Bloch vector at offset eps.
 * For a pure state (|s| = 1/2 up to integration drift) the populations are taken relative to |s|,
 * so that norm drift does not leak into tiny probabilities.
 */
inline double asymptotic_mode_population(const Vec3& s, double eps, double J, double g, int mode, bool pure) {
    const double R = bloch_norm(s);
    const double depth = asymptotic_depth(s, eps, J, g);
    const double p1 = pure ? (R > 0 ? depth / (2 * R) : 0.5) : 0.5 - R + depth;
    return mode == 1 ? p1 : 1.0 - p1;
}

/// Analytic Landau-Zener probability exp(-pi J^2 / alpha).
inline double analytic_plz_linear(double J, double alpha) {
    if (!(alpha > 0.0)) throw InvalidArgument("analytic_plz_linear: alpha must be > 0");
    return std::exp(-std::numbers::pi * J * J / alpha);
}

/// A survival probability together with its window certification.
struct SurvivalResult {
    double P = 0;
    double half_window = 0;   ///< T of the final window [-T, T] (or the protocol window if uncertified)
    int doublings = 0;
    double last_change = 0;   ///< |P(2T) - P(T)| at acceptance (0 if uncertified)
    double std_error = 0;     ///< ensemble only
    int failed_members = 0;   ///< ensemble only
};

/**
 * Run `eval(protocol)` on the default window and keep doubling it until successive values
 * differ by less than policy.tolerance. Without certification the protocol window is used as is.
 */
template <class Eval>
SurvivalResult certify_window(const SweepProtocol& p, const WindowPolicy& policy, Eval&& eval) {
    SurvivalResult out;
    if (!policy.certify) {
        out = eval(p);
        out.half_window = std::max(std::abs(p.t_start), std::abs(p.t_end));
        return out;
    }
    double scale = 1.0;
    SweepProtocol q = with_default_window(p, scale);
    SurvivalResult prev = eval(q);
    for (int d = 1; d <= policy.max_doublings; ++d) {
        scale *= 2;
        q = with_default_window(p, scale);
        SurvivalResult cur = eval(q);
        const double change = std::abs(cur.P - prev.P);
        if (change < policy.tolerance) {
            cur.half_window = q.t_end;
            cur.doublings = d;
            cur.last_change = change;
            return cur;
        }
        prev = cur;
    }
    throw NotConverged("survival probability not converged after " + std::to_string(policy.max_doublings) +
                       " window doublings; use a larger |t_end|");
}

/// Initial mean-field Bloch vector for a protocol: the fixed point connected to the initial mode
/// (dressed) or the bare pole (diabatic).
inline Vec3 mean_field_initial_bloch(const SweepProtocol& p, Readout readout) {
    const int sign = p.initial_mode == 2 ? +1 : -1;
    if (readout == Readout::diabatic || p.J == 0.0) return {0, 0, 0.5 * sign};
    const Vec3 n = pole_fixed_point(p.epsilon(p.t_start), p.J, p.g, 0.5, sign);
    return {0.5 * n[0], 0.5 * n[1], 0.5 * n[2]};
}

/// Survival of the initial mode from a final Bloch vector.
inline double mean_field_survival(const Vec3& s_end, const SweepProtocol& p, Readout readout, bool pure = true) {
    if (readout == Readout::diabatic) return p.initial_mode == 1 ? 0.5 - s_end[2] : 0.5 + s_end[2];
    return asymptotic_mode_population(s_end, p.epsilon(p.t_end), p.J, p.g, p.initial_mode, pure);
}

/**
 * Mean-field Landau-Zener probability: survival of the initially occupied mode.
 * gamma = 0 integrates the GPE, gamma > 0 the damped Bloch equations.
 */
inline SurvivalResult plz_mean_field(const SweepProtocol& p, double gamma = 0.0, const WindowPolicy& policy = {},
                                     Readout readout = Readout::dressed) {
    p.validate();
    if (!(gamma >= 0.0)) throw InvalidArgument("plz_mean_field: gamma must be >= 0");
    auto eval = [&](const SweepProtocol& q) {
        const Vec3 s0 = mean_field_initial_bloch(q, readout);
        Vec3 s_end;
        if (gamma == 0.0)
            s_end = propagate_gpe(MeanFieldState::from_bloch(s0), q).final_bloch;
        else
            s_end = propagate_bloch_noisy(s0, q, gamma).final_bloch;
        SurvivalResult r;
        r.P = std::clamp(mean_field_survival(s_end, q, readout, gamma == 0.0), 0.0, 1.0);
        return r;
    };
    return certify_window(p, policy, eval);
}

}  // namespace lz

#endif  // LZ_MEANFIELD_HPP
