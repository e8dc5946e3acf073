#ifndef LZ_OPEN_SYSTEM_HPP
#define LZ_OPEN_SYSTEM_HPP

// Phase-noise master equation
//     d rho/dt = -i [H(t), rho] - gamma/2 sum_j (n_j^2 rho + rho n_j^2 - 2 n_j rho n_j)
// in the Fock basis. With n_1 = N - n_2 the dissipator is elementwise,
// (D rho)_{mn} = -gamma (m - n)^2 rho_{mn}.
//
// As for pure states the diagonal of H is removed analytically:
// sigma_{mn} = exp(i (phi_m - phi_n)) rho_{mn}, which commutes with the dissipator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "lz/dopri5.hpp"
#include "lz/error.hpp"
#include "lz/exact.hpp"
#include "lz/fock.hpp"
#include "lz/meanfield.hpp"
#include "lz/protocol.hpp"

namespace lz {

struct DensityMatrix {
    Eigen::MatrixXcd rho;

    int N() const { return static_cast<int>(rho.rows()) - 1; }

    static DensityMatrix pure(const ManyBodyState& s) {
        require_normalized(s);
        DensityMatrix d;
        const Eigen::Map<const Eigen::VectorXcd> v(s.amplitudes.data(), s.amplitudes.size());
        d.rho = v * v.adjoint();
        return d;
    }

    double trace() const { return rho.trace().real(); }

    double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
        return es.eigenvalues()[0];
    }

    /// Throws InvariantViolation unless Hermitian (1e-10), trace one (1e-8) and min eigenvalue >= -1e-8.
    void validate(double herm_tol = 1e-10, double trace_tol = 1e-8, double pos_tol = 1e-8) const {
        if (rho.rows() != rho.cols() || rho.rows() < 2) throw InvalidArgument("DensityMatrix: need a square matrix, N >= 1");
        if (hermiticity_error() > herm_tol) throw InvariantViolation("DensityMatrix not Hermitian");
        if (std::abs(trace() - 1.0) > trace_tol) throw InvariantViolation("DensityMatrix trace != 1: " + std::to_string(trace()));
        const double lmin = min_eigenvalue();
        if (lmin < -pos_tol) throw InvariantViolation("DensityMatrix not positive: min eigenvalue " + std::to_string(lmin));
    }
};

/// (D rho)_{mn} = -gamma (m - n)^2 rho_{mn}.
inline Eigen::MatrixXcd dissipator_apply(const Eigen::MatrixXcd& rho, double gamma) {
    if (!(gamma >= 0.0)) throw InvalidArgument("dissipator_apply: gamma must be >= 0");
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    for (Eigen::Index n = 0; n < rho.cols(); ++n)
        for (Eigen::Index m = 0; m < rho.rows(); ++m) {
            const double d = static_cast<double>(m - n);
            out(m, n) = -gamma * d * d * rho(m, n);
        }
    return out;
}

struct RhoObservables {
    double t = 0;
    Vec3 L{};
    Vec3 var{};
    Spdm spdm;
    double lambda1 = 0, lambda2 = 0;
    double purity = 1;
    double n1 = 0, n2 = 0;
    double trace = 1;
};

/// Expectations traced against the tridiagonal operators (no dense operator products).
inline RhoObservables observables_from_rho(const DensityMatrix& d) {
    const int N = d.N();
    const AngularMomentumOps L(N);
    const auto& r = d.rho;
    RhoObservables o;
    o.trace = d.trace();
    if (!(std::abs(o.trace - 1.0) <= 1e-6)) throw InvariantViolation("observables_from_rho: trace " + std::to_string(o.trace));
    cplx x = 0;  // sum rho_{n,n+1} l_n
    double lz = 0, lz2 = 0, n2 = 0;
    for (int n = 0; n <= N; ++n) {
        const double p = r(n, n).real();
        lz += p * L.lz[n];
        lz2 += p * L.lz[n] * L.lz[n];
        n2 += p * n;
        if (n < N) x += r(n, n + 1) * L.lx_off[n];
    }
    o.L = {2 * x.real(), 2 * x.imag(), lz};
    // <L_x^2> and <L_y^2>: (L_x^2)_{nn} = l_{n-1}^2 + l_n^2, (L_x^2)_{n,n+2} = l_n l_{n+1}, L_y^2 flips the sign of the latter.
    double diag = 0;
    cplx two = 0;
    for (int n = 0; n <= N; ++n) {
        const double a = n > 0 ? L.lx_off[n - 1] : 0.0, b = n < N ? L.lx_off[n] : 0.0;
        diag += r(n, n).real() * (a * a + b * b);
        if (n + 2 <= N) two += r(n, n + 2) * L.lx_off[n] * L.lx_off[n + 1];
    }
    const double lx2 = diag + 2 * two.real(), ly2 = diag - 2 * two.real();
    o.var = {std::max(0.0, lx2 - o.L[0] * o.L[0]), std::max(0.0, ly2 - o.L[1] * o.L[1]), std::max(0.0, lz2 - lz * lz)};
    o.spdm = spdm_from_moments(o.L, N);
    const auto ev = o.spdm.eigenvalues();
    o.lambda1 = ev.first;
    o.lambda2 = ev.second;
    o.purity = r.cwiseAbs2().sum();
    o.n2 = n2;
    o.n1 = N * o.trace - n2;
    return o;
}

namespace detail {

// Interaction-picture Liouvillian on the packed upper triangle (row-major, m <= n).
struct MasterRhs {
    InteractionPicture ip;
    double gamma;
    int dim;
    std::vector<std::size_t> row_start;
    mutable std::vector<cplx> coupling;  // e^{i theta_n} V_n

    MasterRhs(const SweepProtocol& p, double g) : ip(p), gamma(g), dim(p.N + 1) {
        row_start.resize(dim + 1);
        std::size_t acc = 0;
        for (int m = 0; m < dim; ++m) {
            row_start[m] = acc;
            acc += dim - m;
        }
        row_start[dim] = acc;
        coupling.resize(p.N);
    }

    std::size_t size() const { return row_start[dim]; }
    std::size_t idx(int m, int n) const { return row_start[m] + (n - m); }
    cplx get(const std::vector<cplx>& s, int m, int n) const {
        return m <= n ? s[idx(m, n)] : std::conj(s[idx(n, m)]);
    }

    void pack(const Eigen::MatrixXcd& M, std::vector<cplx>& s) const {
        s.resize(size());
        for (int m = 0; m < dim; ++m)
            for (int n = m; n < dim; ++n) s[idx(m, n)] = M(m, n);
    }
    void unpack(const std::vector<cplx>& s, Eigen::MatrixXcd& M) const {
        M.resize(dim, dim);
        for (int m = 0; m < dim; ++m)
            for (int n = m; n < dim; ++n) {
                M(m, n) = s[idx(m, n)];
                if (n != m) M(n, m) = std::conj(s[idx(m, n)]);
            }
        for (int m = 0; m < dim; ++m) M(m, m) = M(m, m).real();
    }

    // sigma_{mn} <-> rho_{mn} e^{-i (phi_m - phi_n)}
    void to_lab(double t, const std::vector<cplx>& s, Eigen::MatrixXcd& M) const {
        unpack(s, M);
        std::vector<cplx> ph(dim);
        for (int n = 0; n < dim; ++n) ph[n] = std::polar(1.0, -ip.phase(t, n));
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) M(m, n) *= ph[m] * std::conj(ph[n]);
    }
    void from_lab(double t, const Eigen::MatrixXcd& M, std::vector<cplx>& s) const {
        Eigen::MatrixXcd W = M;
        std::vector<cplx> ph(dim);
        for (int n = 0; n < dim; ++n) ph[n] = std::polar(1.0, ip.phase(t, n));
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) W(m, n) *= ph[m] * std::conj(ph[n]);
        pack(W, s);
    }

    void operator()(double t, const std::vector<cplx>& s, std::vector<cplx>& ds) const {
        const int N = dim - 1;
        const double theta0 = -ip.alpha * t * t - ip.U * (2 * ip.m[0] + 1) * t;
        const cplx w = std::polar(1.0, -2 * ip.U * t);
        cplx z = std::polar(1.0, theta0);
        for (int n = 0; n < N; ++n) {
            coupling[n] = z * ip.V[n];
            z *= w;
        }
        // Ht_{a,a+1} = coupling[a], Ht_{a+1,a} = conj(coupling[a])
        for (int m = 0; m < dim; ++m) {
            for (int n = m; n < dim; ++n) {
                cplx hs = 0, sh = 0;
                if (m < N) hs += coupling[m] * get(s, m + 1, n);
                if (m > 0) hs += std::conj(coupling[m - 1]) * get(s, m - 1, n);
                if (n > 0) sh += get(s, m, n - 1) * coupling[n - 1];
                if (n < N) sh += get(s, m, n + 1) * std::conj(coupling[n]);
                const cplx c = hs - sh;
                const double d = static_cast<double>(n - m);
                ds[idx(m, n)] = cplx(c.imag(), -c.real()) - gamma * d * d * s[idx(m, n)];
            }
        }
    }
};

}  // namespace detail

struct MasterResult {
    std::vector<RhoObservables> samples;
    DensityMatrix final_state;
    double trace_drift = 0;        ///< |1 - Tr rho(t_end)|
    double min_eigenvalue = 0;     ///< smallest eigenvalue seen at the checked times
    double max_hermiticity_error = 0;
    ode::Statistics stats;
};

/**
 * Integrate the master equation over the protocol window. Positivity is checked at every sample
 * time and at t_end; an eigenvalue below -1e-6 aborts with InvariantViolation.
 */
inline MasterResult propagate_master(const DensityMatrix& rho0, const SweepProtocol& p, double gamma,
                                     double sample_dt = 0.0) {
    p.validate();
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("propagate_master: gamma must be >= 0");
    if (rho0.N() != p.N) throw InvalidArgument("propagate_master: dimension does not match N");
    rho0.validate();
    const detail::MasterRhs rhs(p, gamma);
    std::vector<cplx> s;
    rhs.from_lab(p.t_start, rho0.rho, s);

    MasterResult res;
    res.min_eigenvalue = rho0.min_eigenvalue();
    DensityMatrix lab;
    auto check = [&](double t, const DensityMatrix& d) {
        const double lmin = d.min_eigenvalue();
        res.min_eigenvalue = std::min(res.min_eigenvalue, lmin);
        res.max_hermiticity_error = std::max(res.max_hermiticity_error, d.hermiticity_error());
        if (lmin < -1e-6)
            throw InvariantViolation("propagate_master: positivity lost at t = " + std::to_string(t) +
                                     " (min eigenvalue " + std::to_string(lmin) + "); tighten tol");
    };
    const auto times = ode::sample_times(p.t_start, p.t_end, sample_dt);
    const bool sampled = sample_dt > 0;
    auto emit = [&](double t, const std::vector<cplx>& v) {
        if (!sampled) return false;
        rhs.to_lab(t, v, lab.rho);
        check(t, lab);
        auto o = observables_from_rho(lab);
        o.t = t;
        res.samples.push_back(o);
        return false;
    };
    ode::GridSampler<std::vector<cplx>, decltype(emit)> sampler(times, emit, s);
    ode::integrate(rhs, s, p.t_start, p.t_end, exact_step_control(p), sampler, &res.stats);
    rhs.to_lab(p.t_end, s, res.final_state.rho);
    check(p.t_end, res.final_state);
    res.trace_drift = std::abs(1.0 - res.final_state.trace());
    if (!sampled) {
        auto o0 = observables_from_rho(rho0);
        o0.t = p.t_start;
        auto o1 = observables_from_rho(res.final_state);
        o1.t = p.t_end;
        res.samples = {o0, o1};
    }
    return res;
}

inline double master_survival(const DensityMatrix& d, const SweepProtocol& p, Readout readout) {
    struct {
        const Eigen::MatrixXcd& r;
        double fock(int n) const { return r(n, n).real(); }
        double level(const AdiabaticBasis& b, int k) const {
            const Eigen::VectorXcd v = b.eig.vectors.col(k).cast<cplx>();
            return (v.adjoint() * r * v)(0, 0).real();
        }
    } w{d.rho};
    return survival_from_level_weights(p, readout, w);
}

/// Many-particle Landau-Zener probability with phase noise.
inline SurvivalResult plz_master(const SweepProtocol& p, double gamma, const WindowPolicy& policy = {},
                                 Readout readout = Readout::dressed) {
    p.validate();
    auto eval = [&](const SweepProtocol& q) {
        const auto rho0 = DensityMatrix::pure(sweep_initial_state(q, readout));
        const auto res = propagate_master(rho0, q, gamma);
        SurvivalResult r;
        r.P = std::clamp(master_survival(res.final_state, q, readout), 0.0, 1.0);
        return r;
    };
    return certify_window(p, policy, eval);
}

}  // namespace lz

#endif  // LZ_OPEN_SYSTEM_HPP
