#ifndef LZ_FOCK_HPP
#define LZ_FOCK_HPP

// Two-mode Fock basis |n1 = N - n, n2 = n>, n = 0..N. The index counts mode-2 particles, so
// L_z = diag(n - N/2) is ascending.
//
// The Hamiltonian is kept in angular-momentum form
//     H = 2 eps(t) L_z - 2 J L_x + U L_z^2,
// which differs from the number-operator form by the constant U N (N - 2) / 4.

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lz/error.hpp"
#include "lz/protocol.hpp"

namespace lz {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

/// Real symmetric tridiagonal matrix: diag[0..n-1], off[k] = M(k, k+1) = M(k+1, k).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }

    template <class T>
    void apply(std::span<const T> x, std::span<T> y) const {
        const std::size_t n = diag.size();
        for (std::size_t k = 0; k < n; ++k) {
            T acc = diag[k] * x[k];
            if (k > 0) acc += off[k - 1] * x[k - 1];
            if (k + 1 < n) acc += off[k] * x[k + 1];
            y[k] = acc;
        }
    }

    std::vector<cplx> apply(const std::vector<cplx>& x) const {
        std::vector<cplx> y(x.size());
        apply<cplx>(std::span<const cplx>(x), std::span<cplx>(y));
        return y;
    }
};

/// Number-conserving collective spin operators for N bosons in two modes.
struct AngularMomentumOps {
    int N = 0;
    std::vector<double> lz;      ///< diagonal of L_z
    std::vector<double> lx_off;  ///< <n|L_x|n+1> = sqrt((n+1)(N-n)) / 2; <n|L_y|n+1> = i * lx_off[n]

    explicit AngularMomentumOps(int n_particles) : N(n_particles) {
        if (N < 1) throw InvalidArgument("AngularMomentumOps: N must be >= 1");
        lz.resize(N + 1);
        lx_off.resize(N);
        for (int n = 0; n <= N; ++n) lz[n] = n - 0.5 * N;
        for (int n = 0; n < N; ++n) lx_off[n] = 0.5 * std::sqrt(double(n + 1) * double(N - n));
    }

    std::size_t dim() const { return lz.size(); }

    /// y = L_k x for k = 0 (x), 1 (y), 2 (z).
    std::vector<cplx> apply(int k, std::span<const cplx> x) const {
        const std::size_t n = dim();
        std::vector<cplx> y(n);
        if (k == 2) {
            for (std::size_t i = 0; i < n; ++i) y[i] = lz[i] * x[i];
            return y;
        }
        const cplx up = k == 0 ? cplx(1, 0) : cplx(0, 1);  // factor on M(i, i+1)
        for (std::size_t i = 0; i < n; ++i) {
            cplx acc = 0;
            if (i + 1 < n) acc += up * lx_off[i] * x[i + 1];
            if (i > 0) acc += std::conj(up) * lx_off[i - 1] * x[i - 1];
            y[i] = acc;
        }
        return y;
    }
};

/// H(t) = 2 alpha t L_z - 2 J L_x + (g/N) L_z^2 in the Fock basis.
inline SymTridiagonal build_hamiltonian(const SweepProtocol& p, double t) {
    const AngularMomentumOps L(p.N);
    const double eps = p.epsilon(t), U = p.U();
    SymTridiagonal H;
    H.diag.resize(L.dim());
    H.off.resize(p.N);
    for (std::size_t n = 0; n < L.dim(); ++n) H.diag[n] = 2.0 * eps * L.lz[n] + U * L.lz[n] * L.lz[n];
    for (int n = 0; n < p.N; ++n) H.off[n] = -2.0 * p.J * L.lx_off[n];
    return H;
}

/// Constant to add to eigenvalues of the angular-momentum form to obtain the number-operator form.
inline double number_form_offset(const SweepProtocol& p) {
    return p.U() * p.N * (p.N - 2) / 4.0;
}

/// Complex amplitudes c_n over the Fock basis (n = particles in mode 2).
struct ManyBodyState {
    std::vector<cplx> amplitudes;

    int N() const { return static_cast<int>(amplitudes.size()) - 1; }

    double norm_squared() const {
        double s = 0;
        for (const auto& c : amplitudes) s += std::norm(c);
        return s;
    }
};

inline void require_normalized(const ManyBodyState& s, double tol = 1e-6) {
    if (s.amplitudes.size() < 2) throw InvalidArgument("ManyBodyState: need N >= 1");
    const double nrm = s.norm_squared();
    if (!(std::abs(nrm - 1.0) <= tol))
        throw InvariantViolation("ManyBodyState not normalized: |psi|^2 = " + std::to_string(nrm));
}

/// Fock state with all N particles in `mode` (1 or 2).
inline ManyBodyState fock_state(int N, int mode) {
    if (N < 1) throw InvalidArgument("fock_state: N must be >= 1");
    if (mode != 1 && mode != 2) throw InvalidArgument("fock_state: mode must be 1 or 2");
    ManyBodyState s;
    s.amplitudes.assign(N + 1, cplx(0));
    s.amplitudes[mode == 1 ? 0 : N] = 1.0;
    return s;
}

inline ManyBodyState initial_state(const SweepProtocol& p) {
    if (p.initial_mode != 1 && p.initial_mode != 2)
        throw InvalidArgument("initial_state: initial_mode must be 1 or 2");
    return fock_state(p.N, p.initial_mode);
}

/// sqrt of the binomial coefficient, via lgamma so that large N stays finite.
inline double sqrt_binomial(int N, int n) {
    return std::exp(0.5 * (std::lgamma(N + 1.0) - std::lgamma(n + 1.0) - std::lgamma(N - n + 1.0)));
}

/// SU(2) coherent state (cos(theta/2) a1^+ + sin(theta/2) e^{-i phi} a2^+)^N |0> / sqrt(N!).
inline ManyBodyState coherent_state(int N, double theta, double phi) {
    ManyBodyState s;
    s.amplitudes.resize(N + 1);
    const double c = std::cos(0.5 * theta), sn = std::sin(0.5 * theta);
    for (int n = 0; n <= N; ++n) {
        const double mag = sqrt_binomial(N, n) * std::pow(c, N - n) * std::pow(sn, n);
        s.amplitudes[n] = mag * std::polar(1.0, -n * phi);
    }
    return s;
}

/// <L_x>, <L_y>, <L_z>.
inline Vec3 expectation_L(const ManyBodyState& s) {
    require_normalized(s);
    const int N = s.N();
    const AngularMomentumOps L(N);
    const auto& c = s.amplitudes;
    cplx cross = 0;  // sum_n conj(c_n) c_{n+1} lx_off[n] = <a1^+ a2> / 2
    double lz = 0;
    for (int n = 0; n <= N; ++n) {
        lz += L.lz[n] * std::norm(c[n]);
        if (n < N) cross += std::conj(c[n]) * c[n + 1] * L.lx_off[n];
    }
    // <L_x> = 2 Re(cross); <L_y> = 2 Re(i cross) = -2 Im(cross)
    return {2.0 * cross.real(), -2.0 * cross.imag(), lz};
}

/// Variances Delta L_k^2 = || (L_k - <L_k>) psi ||^2, non-negative by construction.
inline Vec3 variance_L(const ManyBodyState& s) {
    const Vec3 mean = expectation_L(s);
    const AngularMomentumOps L(s.N());
    Vec3 var{};
    for (int k = 0; k < 3; ++k) {
        auto y = L.apply(k, s.amplitudes);
        double acc = 0;
        for (std::size_t i = 0; i < y.size(); ++i) acc += std::norm(y[i] - mean[k] * s.amplitudes[i]);
        var[k] = acc;
    }
    return var;
}

/// Mean occupations <n1>, <n2>.
inline std::pair<double, double> populations(const ManyBodyState& s) {
    const int N = s.N();
    double n2 = 0, tot = 0;
    for (int n = 0; n <= N; ++n) {
        n2 += n * std::norm(s.amplitudes[n]);
        tot += std::norm(s.amplitudes[n]);
    }
    return {N * tot - n2, n2};
}

/// Reduced single-particle density matrix [[rho11, rho12], [conj(rho12), rho22]].
struct Spdm {
    double rho11 = 1, rho22 = 0;
    cplx rho12 = 0;

    /// Eigenvalues, largest first.
    std::pair<double, double> eigenvalues() const {
        const double mean = 0.5 * (rho11 + rho22);
        const double half_gap = std::sqrt(0.25 * (rho11 - rho22) * (rho11 - rho22) + std::norm(rho12));
        return {mean + half_gap, mean - half_gap};
    }

    double condensate_fraction() const { return eigenvalues().first; }
    double trace() const { return rho11 + rho22; }
};

/// SPDM from <L>/N: rho11 = 1/2 - Lz/N, rho22 = 1/2 + Lz/N, rho12 = (Lx - i Ly)/N.
inline Spdm spdm_from_moments(const Vec3& L, int N) {
    Spdm r;
    r.rho11 = 0.5 - L[2] / N;
    r.rho22 = 0.5 + L[2] / N;
    r.rho12 = cplx(L[0], -L[1]) / double(N);
    return r;
}

inline Spdm spdm(const ManyBodyState& s) { return spdm_from_moments(expectation_L(s), s.N()); }

}  // namespace lz

#endif  // LZ_FOCK_HPP
