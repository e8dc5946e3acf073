#ifndef LZ_DOPRI5_HPP
#define LZ_DOPRI5_HPP

// Adaptive Dormand-Prince 5(4) integrator with the 4th-order continuous extension.
//
// State is any contiguous container of double or std::complex<double> with size() and
// operator[] (std::array for the small mean-field systems, std::vector otherwise).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

#include "lz/error.hpp"

namespace lz::ode {

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  ///< 0: pick automatically
    double h_max = std::numeric_limits<double>::infinity();
    long max_steps = 200'000'000;
};

struct Statistics {
    long accepted = 0;
    long rejected = 0;
    long rhs_calls = 0;
};

namespace detail {

inline double abs2(double x) { return x * x; }
inline double abs2(const std::complex<double>& z) { return std::norm(z); }
inline double absval(double x) { return std::abs(x); }
inline double absval(const std::complex<double>& z) { return std::abs(z); }

// Butcher tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

}  // namespace detail

/// The last accepted step, with dense output on [t_old, t_new].
template <class State>
class DenseStep {
public:
    double t_old = 0, t_new = 0;
    const State* y_old = nullptr;
    const State* y_new = nullptr;
    const State* k1 = nullptr;
    const State* k3 = nullptr;
    const State* k4 = nullptr;
    const State* k5 = nullptr;
    const State* k6 = nullptr;
    const State* k7 = nullptr;

    /// Interpolated state at t in [t_old, t_new], written into `out` (same size as the state).
    void interpolate(double t, State& out) const {
        using namespace detail;
        const double h = t_new - t_old;
        const double th = h == 0.0 ? 1.0 : (t - t_old) / h;
        const double th1 = 1.0 - th;
        const State& y0 = *y_old;
        const State& y1 = *y_new;
        for (std::size_t i = 0; i < y0.size(); ++i) {
            const auto r2 = y1[i] - y0[i];
            const auto r3 = h * (*k1)[i] - r2;
            const auto r4 = r2 - h * (*k7)[i] - r3;
            const auto r5 = h * (d1 * (*k1)[i] + d3 * (*k3)[i] + d4 * (*k4)[i] + d5 * (*k5)[i] +
                                 d6 * (*k6)[i] + d7 * (*k7)[i]);
            out[i] = y0[i] + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
        }
    }
};

/// Observer that never stops the integration.
struct NoObserver {
    template <class D>
    bool operator()(const D&) const { return false; }
};

/**
 * Integrate y' = f(t, y) from t0 to t1 (t1 may be below t0).
 *
 * `f(t, y, dydt)` writes the derivative. After every accepted step `observe(step)` is called
 * with a DenseStep; returning true stops the integration at step.t_new. Returns the time
 * reached. Throws IntegrationError when the step size underflows or the step budget runs out.
 */
template <class State, class Rhs, class Observer = NoObserver>
double integrate(Rhs&& f, State& y, double t0, double t1, const StepControl& ctl,
                 Observer&& observe = Observer{}, Statistics* stats = nullptr) {
    using namespace detail;
    const std::size_t n = y.size();
    if (t0 == t1) return t0;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, ynew = y;
    Statistics local;
    Statistics& st = stats ? *stats : local;

    auto scaled_norm = [&](const State& v, const State& ref) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = ctl.atol + ctl.rtol * absval(ref[i]);
            acc += abs2(v[i]) / (sc * sc);
        }
        return std::sqrt(acc / static_cast<double>(n));
    };

    double t = t0;
    f(t, y, k1);
    ++st.rhs_calls;

    double h = ctl.h_init;
    if (h <= 0.0) {
        const double d0 = scaled_norm(y, y), d1n = scaled_norm(k1, y);
        h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    }
    h = std::min({h, span, ctl.h_max});

    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
    long steps = 0;
    DenseStep<State> dense;

    while (dir * (t1 - t) > 0.0) {
        if (++steps > ctl.max_steps) throw IntegrationError("step budget exhausted", t);
        const double h_floor = 1e-13 * std::max(1.0, std::abs(t));
        if (h < h_floor) throw IntegrationError("step size underflow", t);
        bool last = false;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double hs = dir * h;

        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a21 * k1[i]);
        f(t + c2 * hs, ytmp, k2);
        for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * hs, ytmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * hs, ytmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * hs, ytmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double t_new = last ? t1 : t + hs;
        f(t_new, ytmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        f(t_new, ynew, k7);
        st.rhs_calls += 6;

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = ctl.atol + ctl.rtol * std::max(absval(y[i]), absval(ynew[i]));
            err += abs2(ei) / (sc * sc);
        }
        err = std::sqrt(err / static_cast<double>(n));
        if (!std::isfinite(err)) {
            ++st.rejected;
            h *= fac_min;
            continue;
        }

        if (err <= 1.0) {
            ++st.accepted;
            dense.t_old = t;
            dense.t_new = t_new;
            // y still holds the old state; expose it before swapping.
            dense.y_old = &y;
            dense.y_new = &ynew;
            dense.k1 = &k1;
            dense.k3 = &k3;
            dense.k4 = &k4;
            dense.k5 = &k5;
            dense.k6 = &k6;
            dense.k7 = &k7;
            const bool stop = observe(std::as_const(dense));
            std::swap(y, ynew);
            std::swap(k1, k7);  // FSAL
            t = t_new;
            if (stop) return t;
            const double fac = err == 0.0 ? fac_max : std::clamp(safety * std::pow(err, -0.2), fac_min, fac_max);
            h = std::min(h * fac, ctl.h_max);
        } else {
            ++st.rejected;
            h *= std::max(fac_min, safety * std::pow(err, -0.2));
        }
    }
    return t;
}

/// Strictly increasing sample times t0, t0 + dt, ..., ending exactly at t1. dt <= 0 gives {t0, t1}.
inline std::vector<double> sample_times(double t0, double t1, double dt) {
    std::vector<double> ts{t0};
    if (dt > 0) {
        const long n = static_cast<long>(std::floor((t1 - t0) / dt));
        for (long k = 1; k <= n; ++k) {
            const double t = t0 + k * dt;
            if (t < t1 - 1e-12 * dt) ts.push_back(t);
        }
    }
    ts.push_back(t1);
    return ts;
}

/// Observer that emits interpolated states at prescribed times (ascending, within the span).
template <class State, class Emit>
class GridSampler {
public:
    GridSampler(const std::vector<double>& times, Emit emit, const State& like)
        : times_(times), emit_(std::move(emit)), buf_(like) {}

    bool operator()(const DenseStep<State>& st) {
        while (next_ < times_.size() && times_[next_] <= st.t_new) {
            st.interpolate(times_[next_], buf_);
            if (emit_(times_[next_], std::as_const(buf_))) return true;
            ++next_;
        }
        return false;
    }

    std::size_t emitted() const { return next_; }

private:
    const std::vector<double>& times_;
    Emit emit_;
    State buf_;
    std::size_t next_ = 0;
};

}  // namespace lz::ode

#endif  // LZ_DOPRI5_HPP
