#ifndef LZ_PROTOCOL_HPP
#define LZ_PROTOCOL_HPP

#include <algorithm>
#include <cmath>

#include "lz/error.hpp"

namespace lz {

/**
 * Parameters of a linear Landau-Zener sweep of the two-mode Bose-Hubbard model.
 *
 * Units: hbar = 1, energies in units of J when J = 1. The offset is eps(t) = alpha * t.
 * The per-particle interaction U = g / N is always derived from g.
 */
struct SweepProtocol {
    double J = 1.0;        ///< tunneling energy
    double g = 0.0;        ///< macroscopic interaction g = U N
    int N = 1;             ///< particle number
    double alpha = 1.0;    ///< sweep rate
    double t_start = -10.0;
    double t_end = 10.0;
    int initial_mode = 1;  ///< mode (1 or 2) that holds all particles initially
    double tol = 1e-10;    ///< integrator relative tolerance

    double U() const { return g / static_cast<double>(N); }
    double epsilon(double t) const { return alpha * t; }

    void validate() const {
        if (N < 1) throw InvalidArgument("SweepProtocol: N must be >= 1");
        if (!(J >= 0.0) || !std::isfinite(J)) throw InvalidArgument("SweepProtocol: J must be finite and >= 0");
        if (!std::isfinite(g) || !std::isfinite(alpha)) throw InvalidArgument("SweepProtocol: g and alpha must be finite");
        if (!(t_start < t_end) || !std::isfinite(t_start) || !std::isfinite(t_end))
            throw InvalidArgument("SweepProtocol: need finite t_start < t_end");
        if (initial_mode != 1 && initial_mode != 2)
            throw InvalidArgument("SweepProtocol: initial_mode must be 1 or 2");
        if (!(tol > 0.0) || tol >= 1e-2) throw InvalidArgument("SweepProtocol: tol must lie in (0, 1e-2)");
    }
};

/// Half-width T of the default symmetric window [-T, T]: T = max(10 J, 4 |g|, 10) / |alpha|.
inline double default_half_window(const SweepProtocol& p) {
    if (p.alpha == 0.0) throw InvalidArgument("default window needs alpha != 0");
    return std::max({10.0 * p.J, 4.0 * std::abs(p.g), 10.0}) / std::abs(p.alpha);
}

/// Copy of `p` with the window set to [-scale T, scale T].
inline SweepProtocol with_default_window(SweepProtocol p, double scale = 1.0) {
    const double T = scale * default_half_window(p);
    p.t_start = -T;
    p.t_end = T;
    return p;
}

/// Window certification: the window is doubled until the probability changes by less than `tolerance`.
struct WindowPolicy {
    bool certify = true;        ///< false: use the protocol's own [t_start, t_end]
    double tolerance = 1e-3;
    int max_doublings = 4;
};

/// How the survival probability is read from a finite window.
enum class Readout {
    /// Start in the adiabatic state connected to the initial Fock state and read the
    /// population the state will have at t -> +inf (adiabatic labels at t_end).
    dressed,
    /// Start in the bare Fock state and read the bare mode population at t_end.
    diabatic,
};

}  // namespace lz

#endif  // LZ_PROTOCOL_HPP
