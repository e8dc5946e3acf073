#ifndef LZ_SPECTRA_HPP
#define LZ_SPECTRA_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "lz/error.hpp"
#include "lz/fock.hpp"
#include "lz/protocol.hpp"

namespace lz {

// ---------------------------------------------------------------------------------------------
// Many-body spectra

/// H at a given offset eps (instead of a given time).
inline SymTridiagonal hamiltonian_at_offset(const SweepProtocol& p, double eps) {
    SweepProtocol q = p;
    q.alpha = 1.0;
    return build_hamiltonian(q, eps);
}

struct TridiagonalEigen {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXd vectors;  ///< columns; empty when not requested
};

inline TridiagonalEigen eigen_tridiagonal(const SymTridiagonal& H, bool with_vectors) {
    const Eigen::Index n = static_cast<Eigen::Index>(H.size());
    TridiagonalEigen out;
    if (n == 1) {
        out.values = Eigen::VectorXd::Constant(1, H.diag[0]);
        if (with_vectors) out.vectors = Eigen::MatrixXd::Identity(1, 1);
        return out;
    }
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(H.diag.data(), n);
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(H.off.data(), n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NotConverged("tridiagonal eigensolver failed");
    out.values = es.eigenvalues();
    if (with_vectors) out.vectors = es.eigenvectors();
    return out;
}

/**
 * Instantaneous eigenbasis of H(t) with asymptotic labels.
 *
 * For J > 0 the spectrum is simple, so levels never cross along eps. Continuing eps to
 * +inf (-inf) with the sign of eps(t), the k-th level ends in the Fock state n = k
 * (n = N - k). `label[k]` is that Fock index: the mode-2 occupation the level carries
 * asymptotically.
 */
struct AdiabaticBasis {
    TridiagonalEigen eig;
    std::vector<int> label;
};

inline AdiabaticBasis adiabatic_basis(const SweepProtocol& p, double t) {
    if (!(p.J > 0.0)) throw InvalidArgument("adiabatic_basis: requires J > 0");
    const double eps = p.epsilon(t);
    if (eps == 0.0) throw InvalidArgument("adiabatic_basis: eps(t) = 0 has no asymptotic labels");
    AdiabaticBasis b;
    b.eig = eigen_tridiagonal(build_hamiltonian(p, t), true);
    b.label.resize(p.N + 1);
    for (int k = 0; k <= p.N; ++k) b.label[k] = eps > 0 ? k : p.N - k;
    return b;
}

/// Column index of the level whose asymptotic label is Fock index `n`.
inline int level_with_label(const AdiabaticBasis& b, int n) {
    for (std::size_t k = 0; k < b.label.size(); ++k)
        if (b.label[k] == n) return static_cast<int>(k);
    throw InvalidArgument("level_with_label: no such label");
}

/**
 * All N+1 eigenvalues of H(eps) for every eps in the grid, ascending, in the
 * number-operator energy convention (the constant U N (N-2)/4 is added back).
 */
inline std::vector<std::vector<double>> many_body_spectrum(const SweepProtocol& p,
                                                           const std::vector<double>& eps_grid) {
    const double shift = number_form_offset(p);
    std::vector<std::vector<double>> out;
    out.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        if (!std::isfinite(eps)) throw InvalidArgument("many_body_spectrum: non-finite offset");
        const auto eig = eigen_tridiagonal(hamiltonian_at_offset(p, eps), false);
        std::vector<double> row(eig.values.size());
        for (Eigen::Index k = 0; k < eig.values.size(); ++k) row[k] = eig.values[k] + shift;
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// Mean-field stationary states

enum class Stability { elliptic, hyperbolic };

struct StationaryState {
    Vec3 s{};              ///< Bloch vector, |s| = 1/2, s_y = 0
    double energy = 0;     ///< E^mf per particle
    Stability stability = Stability::elliptic;
    double lambda_sq = 0;  ///< squared linearization eigenvalue (< 0 elliptic, > 0 hyperbolic)
    bool marginal = false; ///< |Re lambda| below 1e-8, tagged elliptic
};

struct StationaryStateSet {
    double eps = 0;
    std::vector<StationaryState> states;  ///< ordered by the angle atan2(s_z, s_x)
};

/// E^mf = eps (|psi2|^2 - |psi1|^2) - J (psi1* psi2 + c.c.) + g/2 (|psi1|^4 + |psi2|^4) on the sphere.
inline double mean_field_energy(const Vec3& s, double eps, double J, double g) {
    return 2.0 * eps * s[2] - 2.0 * J * s[0] + 0.25 * g + g * s[2] * s[2];
}

namespace detail {

// Fixed-point condition on the great circle s = (cos b, 0, sin b) / 2.
inline double fixed_point_residual(double b, double eps, double J, double g) {
    return J * std::sin(b) + eps * std::cos(b) + 0.25 * g * std::sin(2 * b);
}
inline double fixed_point_residual_db(double b, double eps, double J, double g) {
    return J * std::cos(b) - eps * std::sin(b) + 0.5 * g * std::cos(2 * b);
}

// Newton in extended precision: at the bifurcation the root is triple and double round-off
// would scatter it over ~1e-5 rad.
inline bool polish_angle(double& b, double eps, double J, double g, double scale) {
    using ld = long double;
    auto f = [&](ld x) { return ld(J) * std::sin(x) + ld(eps) * std::cos(x) + 0.25L * ld(g) * std::sin(2 * x); };
    auto df = [&](ld x) { return ld(J) * std::cos(x) - ld(eps) * std::sin(x) + 0.5L * ld(g) * std::cos(2 * x); };
    const ld floor = 16 * std::numeric_limits<ld>::epsilon() * scale;
    ld x = b;
    for (int it = 0; it < 400; ++it) {
        const ld fx = f(x), dfx = df(x);
        if (std::abs(fx) <= floor) break;
        if (dfx == 0) return false;
        const ld step = std::clamp(fx / dfx, -0.5L, 0.5L);
        x -= step;
        if (std::abs(step) < 4 * std::numeric_limits<ld>::epsilon()) break;
    }
    b = static_cast<double>(x);
    return std::abs(fixed_point_residual(b, eps, J, g)) <= 1e-12 * scale;
}

inline double wrap_angle(double b) {
    b = std::fmod(b, 2 * std::numbers::pi);
    if (b < 0) b += 2 * std::numbers::pi;
    return b;
}

}  // namespace detail

/**
 * All stationary states of the mean-field Bloch flow at fixed offset.
 *
 * Fixed points satisfy s_y = 0, 2J s_z + (2 eps + 2 g s_z) s_x = 0, s_x^2 + s_z^2 = 1/4.
 * Eliminating s_x gives the real quartic
 *     -g^2 s^4 - 2 eps g s^3 + (g^2/4 - eps^2 - J^2) s^2 + (eps g / 2) s + eps^2 / 4 = 0
 * in s = s_z. Its roots seed Newton polishing on the great circle; only points whose
 * residual vanishes to round-off survive.
 */
inline StationaryStateSet mean_field_stationary_states(double eps, double J, double g) {
    if (!(J > 0.0)) throw InvalidArgument("mean_field_stationary_states: requires J > 0");
    const double scale = std::max({J, std::abs(eps), std::abs(g)});

    Eigen::Matrix<double, 5, 1> coeff;  // ascending powers
    coeff << eps * eps / 4, eps * g / 2, g * g / 4 - eps * eps - J * J, -2 * eps * g, -g * g;
    int degree = 4;
    const double cmax = coeff.cwiseAbs().maxCoeff();
    while (degree > 0 && std::abs(coeff[degree]) <= 1e-14 * cmax) --degree;

    std::vector<double> seeds;  // candidate angles
    auto add_from_sz = [&](double sz) {
        sz = std::clamp(sz, -0.5, 0.5);
        const double sx = std::sqrt(std::max(0.0, 0.25 - sz * sz));
        seeds.push_back(std::atan2(sz, sx));
        seeds.push_back(std::atan2(sz, -sx));
    };
    if (degree >= 1) {
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
        solver.compute(Eigen::VectorXd(coeff.head(degree + 1)));
        for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
            const auto r = solver.roots()[i];
            if (std::abs(r.imag()) < 1e-3) add_from_sz(r.real());
        }
    }
    // Sign changes on a coarse circle catch anything the quartic route lost to round-off.
    constexpr int n_scan = 256;
    for (int i = 0; i < n_scan; ++i) {
        const double b0 = 2 * std::numbers::pi * i / n_scan, b1 = 2 * std::numbers::pi * (i + 1) / n_scan;
        if (detail::fixed_point_residual(b0, eps, J, g) * detail::fixed_point_residual(b1, eps, J, g) <= 0)
            seeds.push_back(0.5 * (b0 + b1));
    }

    std::vector<double> roots;
    for (double b : seeds) {
        if (!detail::polish_angle(b, eps, J, g, scale)) continue;
        b = detail::wrap_angle(b);
        bool dup = false;
        for (double r : roots) {
            double d = std::abs(r - b);
            d = std::min(d, 2 * std::numbers::pi - d);
            if (d < 1e-5) dup = true;
        }
        if (!dup) roots.push_back(b);
    }
    std::sort(roots.begin(), roots.end());

    StationaryStateSet set;
    set.eps = eps;
    for (double b : roots) {
        StationaryState st;
        st.s = {0.5 * std::cos(b), 0.0, 0.5 * std::sin(b)};
        st.energy = mean_field_energy(st.s, eps, J, g);
        // Tangent basis {y, (-s_z, 0, s_x)/|s|}; the 2x2 linearization is off-diagonal.
        const double w = 2 * eps + 2 * g * st.s[2];
        const double R = 0.5;
        const double m21 = (w * st.s[2] - 2 * J * st.s[0]) / R;
        const double m12 = (-w * st.s[2] + 2 * J * st.s[0] + 2 * g * st.s[0] * st.s[0]) / R;
        st.lambda_sq = m12 * m21;
        if (st.lambda_sq > 0 && std::sqrt(st.lambda_sq) >= 1e-8) {
            st.stability = Stability::hyperbolic;
        } else {
            st.stability = Stability::elliptic;
            st.marginal = st.lambda_sq > 0 || std::sqrt(std::abs(st.lambda_sq)) < 1e-8;
        }
        set.states.push_back(st);
    }
    if (set.states.size() < 2)
        throw NotConverged("mean_field_stationary_states: found " + std::to_string(set.states.size()) +
                           " fixed points at eps = " + std::to_string(eps));
    return set;
}

/// True when the stationary states at eps = 0 have bifurcated (four of them), i.e. |g| > 2J.
inline bool has_swallow_tail(double J, double g) {
    return mean_field_stationary_states(0.0, J, g).states.size() >= 4;
}

/**
 * Half-width eps_c of the offset interval carrying four stationary states, by bisection on the
 * fixed-point count to 1e-6 J. The tail sits in the upper level for g > 0 and the lower level
 * for g < 0; it exists only for |g| > 2J.
 */
inline double swallow_tail_boundary(double J, double g, double tol = -1.0) {
    if (!(J > 0.0)) throw InvalidArgument("swallow_tail_boundary: requires J > 0");
    if (!has_swallow_tail(J, g))
        throw InvalidArgument("swallow_tail_boundary: no swallow tail for |g| <= 2J (g = " +
                              std::to_string(g) + ", J = " + std::to_string(J) + ")");
    if (tol <= 0) tol = 1e-6 * J;
    double lo = 0.0, hi = std::abs(g) + J;
    while (mean_field_stationary_states(hi, J, g).states.size() >= 4) hi *= 2;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mean_field_stationary_states(mid, J, g).states.size() >= 4)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/**
 * Interaction strength g* > 0 at which the swallow tail appears, by bisection on the fixed-point
 * count at eps = 0 to `tol` (default 1e-6 J).
 */
inline double swallow_tail_threshold(double J, double tol = -1.0) {
    if (!(J > 0.0)) throw InvalidArgument("swallow_tail_threshold: requires J > 0");
    if (tol <= 0) tol = 1e-6 * J;
    double lo = 0.0, hi = J;
    while (!has_swallow_tail(J, hi)) hi *= 2;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (has_swallow_tail(J, mid))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------------------------
// Quasi-degenerate gap scaling

struct GapScalingFit {
    std::vector<int> N;
    std::vector<double> gap;        ///< minimal splitting Delta_N
    std::vector<double> eps_at_gap; ///< offset where it occurs
    std::vector<bool> degenerate;   ///< Delta_N below 1e-13: excluded from the fit
    double eta = 0;                 ///< ln(Delta/N) = log_prefactor - eta N
    double log_prefactor = 0;
    double r2 = 0;
};

struct GapScanOptions {
    int grid_points = 800;   ///< even, so that eps = 0 is not a grid point
    double range = 1.25;     ///< scan eps in [-range eps_c, range eps_c]
};

namespace detail {

// Golden-section minimisation of E_{hi} - E_{lo} over [a, b].
inline std::pair<double, double> refine_gap(const SweepProtocol& p, int lo, int hi, double a, double b) {
    auto gap = [&](double e) {
        const auto v = eigen_tridiagonal(hamiltonian_at_offset(p, e), false).values;
        return v[hi] - v[lo];
    };
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = gap(x1), f2 = gap(x2);
    for (int it = 0; it < 300 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = gap(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = gap(x2);
        }
    }
    return f1 < f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

}  // namespace detail

/**
 * Minimal splitting met by the level diabatically connected to the initial state.
 *
 * The tracked level starts as the top level (g > 0, upper-level sweep) or the bottom level
 * (g < 0) at eps = -range eps_c and is continued along the eps grid by maximal eigenvector
 * overlap, so it passes straight through the quasi-degenerate crossings inside the caustic.
 * Every rank change marks a crossing; its splitting is refined by golden section.
 * Returns {eps, Delta}.
 */
inline std::pair<double, double> min_diabatic_gap(double J, double g, int N, const GapScanOptions& opt = {}) {
    SweepProtocol p;
    p.J = J;
    p.g = g;
    p.N = N;
    p.validate();
    const double eps_c = swallow_tail_boundary(J, g);
    const int n = opt.grid_points + (opt.grid_points % 2);
    const double a = -opt.range * eps_c, b = opt.range * eps_c;
    const double h = (b - a) / (n - 1);

    int rank = g > 0 ? N : 0;
    Eigen::VectorXd prev;
    double best_eps = 0, best_gap = std::numeric_limits<double>::infinity();

    auto consider = [&](int k1, int k2, double lo, double hi) {
        const auto [e, d] = detail::refine_gap(p, std::min(k1, k2), std::max(k1, k2), lo, hi);
        if (d < best_gap) {
            best_gap = d;
            best_eps = e;
        }
    };

    for (int i = 0; i < n; ++i) {
        const double eps = a + i * h;
        const auto eig = eigen_tridiagonal(hamiltonian_at_offset(p, eps), true);
        if (i == 0) {
            prev = eig.vectors.col(rank);
            continue;
        }
        Eigen::Index next = 0;
        (eig.vectors.transpose() * prev).cwiseAbs().maxCoeff(&next);
        const int new_rank = static_cast<int>(next);
        if (new_rank != rank) {
            // A jump by more than one rank crosses several levels inside one cell; refine each pair.
            const int step = new_rank > rank ? 1 : -1;
            for (int k = rank; k != new_rank; k += step) consider(k, k + step, eps - 2 * h, eps + h);
            rank = new_rank;
        }
        prev = eig.vectors.col(rank);
    }
    if (!std::isfinite(best_gap)) {
        // No crossing on the path: fall back to the closest approach of the tracked level.
        const int other = rank == N ? N - 1 : rank + 1;
        consider(rank, other, a, b);
    }
    return {best_eps, best_gap};
}

/// Fit ln(Delta_N / N) = c - eta N over N_list (g beyond the bifurcation threshold).
inline GapScalingFit min_gap_scaling(double J, double g, const std::vector<int>& N_list,
                                     const GapScanOptions& opt = {}) {
    if (!has_swallow_tail(J, g)) throw InvalidArgument("min_gap_scaling: requires |g| > 2J");
    if (N_list.size() < 3) throw InvalidArgument("min_gap_scaling: need at least three particle numbers");
    GapScalingFit fit;
    for (int N : N_list) {
        const auto [e, d] = min_diabatic_gap(J, g, N, opt);
        fit.N.push_back(N);
        fit.gap.push_back(d);
        fit.eps_at_gap.push_back(e);
        fit.degenerate.push_back(!(d >= 1e-13));
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < fit.N.size(); ++i) {
        if (fit.degenerate[i]) continue;
        x.push_back(fit.N[i]);
        y.push_back(std::log(fit.gap[i] / fit.N[i]));
    }
    if (x.size() < 3) throw NotConverged("min_gap_scaling: fewer than three non-degenerate gaps");
    const double m = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    fit.eta = -slope;
    fit.log_prefactor = my - slope * mx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace lz

#endif  // LZ_SPECTRA_HPP
