// Independent dense reference implementations used to check the library.
#ifndef LZ_TEST_ORACLES_HPP
#define LZ_TEST_ORACLES_HPP

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "lz/lz.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Two-mode operators on the full truncated space (n1, n2 in 0..N), index n1 * (N+1) + n2.
struct TwoModeSpace {
    int N;
    Mat a1, a2;

    explicit TwoModeSpace(int N_) : N(N_) {
        const int d = N + 1;
        Mat a = Mat::Zero(d, d);
        for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(double(k));
        const Mat I = Mat::Identity(d, d);
        a1 = kron(a, I);
        a2 = kron(I, a);
    }

    static Mat kron(const Mat& A, const Mat& B) {
        Mat K(A.rows() * B.rows(), A.cols() * B.cols());
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
        return K;
    }

    /// Isometry from the N-particle sector (index = mode-2 count) into the full space.
    Mat sector() const {
        const int d = N + 1;
        Mat P = Mat::Zero(d * d, d);
        for (int n = 0; n <= N; ++n) P((N - n) * d + n, n) = 1;
        return P;
    }

    Mat restrict(const Mat& op) const {
        const Mat P = sector();
        return P.adjoint() * op * P;
    }

    // Schwinger representation with L_z = (n2 - n1)/2.
    Mat Lx() const { return restrict(0.5 * (a1.adjoint() * a2 + a2.adjoint() * a1)); }
    Mat Ly() const { return restrict((a2.adjoint() * a1 - a1.adjoint() * a2) / cplx(0, 2)); }
    Mat Lz() const { return restrict(0.5 * (a2.adjoint() * a2 - a1.adjoint() * a1)); }
    Mat n1() const { return restrict(a1.adjoint() * a1); }
    Mat n2() const { return restrict(a2.adjoint() * a2); }

    /// H = eps (n2 - n1) - J (a1^+ a2 + h.c.) + U/2 sum_j n_j (n_j - 1), restricted to the sector.
    Mat number_hamiltonian(double eps, double J, double U) const {
        const Mat n1f = a1.adjoint() * a1, n2f = a2.adjoint() * a2;
        const Mat I = Mat::Identity(n1f.rows(), n1f.cols());
        const Mat H = eps * (n2f - n1f) - J * (a1.adjoint() * a2 + a2.adjoint() * a1) +
                      0.5 * U * (n1f * (n1f - I) + n2f * (n2f - I));
        return restrict(H);
    }
};

/// Dense Hamiltonian of the protocol at time t, from the number-operator form minus its constant.
inline Mat dense_hamiltonian(const lz::SweepProtocol& p, double t) {
    TwoModeSpace sp(p.N);
    const double U = p.g / p.N;
    Mat H = sp.number_hamiltonian(p.alpha * t, p.J, U);
    H -= U * p.N * (p.N - 2) / 4.0 * Mat::Identity(p.N + 1, p.N + 1);
    return H;
}

/// Fourth-order commutator-free Magnus propagation with matrix exponentials (two Gauss points per step).
inline Vec magnus4(const lz::SweepProtocol& p, Vec psi, double t0, double t1, int steps) {
    const double h = (t1 - t0) / steps;
    const double c = std::sqrt(3.0) / 6;
    const double a1 = 0.25 + c, a2 = 0.25 - c;
    for (int k = 0; k < steps; ++k) {
        const double t = t0 + k * h;
        const Mat H1 = dense_hamiltonian(p, t + (0.5 - c) * h), H2 = dense_hamiltonian(p, t + (0.5 + c) * h);
        const Mat A = (cplx(0, -h) * (a1 * H1 + a2 * H2)).exp();
        const Mat B = (cplx(0, -h) * (a2 * H1 + a1 * H2)).exp();
        psi = B * (A * psi);
    }
    return psi;
}

inline Vec to_eigen(const lz::ManyBodyState& s) {
    Vec v(s.amplitudes.size());
    for (std::size_t i = 0; i < s.amplitudes.size(); ++i) v[i] = s.amplitudes[i];
    return v;
}

inline lz::ManyBodyState from_eigen(const Vec& v) {
    lz::ManyBodyState s;
    s.amplitudes.assign(v.data(), v.data() + v.size());
    return s;
}

inline lz::ManyBodyState random_state(int N, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(N + 1);
    for (int i = 0; i <= N; ++i) v[i] = cplx(g(rng), g(rng));
    v.normalize();
    return from_eigen(v);
}

inline Mat random_density(int N, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Mat A(N + 1, N + 1);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) A(i, j) = cplx(g(rng), g(rng));
    Mat rho = A * A.adjoint();
    return rho / rho.trace();
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd A, double tol = 1e-14) {
    const int n = static_cast<int>(A.rows());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += A(i, j) * A(i, j);
        if (std::sqrt(off) < tol * std::max(1.0, A.norm())) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (A(p, q) == 0.0) continue;
                const double theta = (A(q, q) - A(p, p)) / (2 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = A(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Dephasing dissipator from operator products: -gamma/2 sum_j (n_j^2 rho + rho n_j^2 - 2 n_j rho n_j).
inline Mat dissipator(const Mat& rho, double gamma) {
    TwoModeSpace sp(static_cast<int>(rho.rows()) - 1);
    Mat out = Mat::Zero(rho.rows(), rho.cols());
    for (const Mat& n : {sp.n1(), sp.n2()}) out += -0.5 * gamma * (n * n * rho + rho * n * n - 2.0 * n * rho * n);
    return out;
}

/// Stationary points of E on the Bloch sphere of radius 1/2 by a dense scan of |grad E x s|^2,
/// polished with Newton steps on the angles using finite differences.
inline std::vector<lz::Vec3> landscape_fixed_points(double eps, double J, double g, int n_theta = 400, int n_phi = 800) {
    auto s_of = [](double th, double ph) {
        return lz::Vec3{0.5 * std::sin(th) * std::cos(ph), 0.5 * std::sin(th) * std::sin(ph), 0.5 * std::cos(th)};
    };
    auto F = [&](double th, double ph) {
        const auto s = s_of(th, ph);
        const lz::Vec3 grad{-2 * J, 0.0, 2 * eps + 2 * g * s[2]};
        const lz::Vec3 c{grad[1] * s[2] - grad[2] * s[1], grad[2] * s[0] - grad[0] * s[2], grad[0] * s[1] - grad[1] * s[0]};
        return c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
    };
    const double pi = std::numbers::pi;
    std::vector<lz::Vec3> found;
    auto grid = [&](int i, int k) { return F(pi * (i + 0.5) / n_theta, 2 * pi * k / n_phi); };
    for (int i = 0; i < n_theta; ++i)
        for (int k = 0; k < n_phi; ++k) {
            const double f = grid(i, k);
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dk = -1; dk <= 1 && is_min; ++dk) {
                    if (!di && !dk) continue;
                    const int ii = i + di;
                    if (ii < 0 || ii >= n_theta) continue;
                    if (grid(ii, (k + dk + n_phi) % n_phi) < f) is_min = false;
                }
            if (!is_min) continue;
            // Gauss-Newton on the residual vector in (theta, phi).
            double th = pi * (i + 0.5) / n_theta, ph = 2 * pi * k / n_phi;
            auto resid = [&](double a, double b) {
                const auto s = s_of(a, b);
                const double gx = -2 * J, gz = 2 * eps + 2 * g * s[2];
                return Eigen::Vector3d(-gz * s[1], gz * s[0] - gx * s[2], gx * s[1]);
            };
            for (int it = 0; it < 60; ++it) {
                const double h = 1e-7;
                const Eigen::Vector3d r = resid(th, ph);
                Eigen::Matrix<double, 3, 2> Jm;
                Jm.col(0) = (resid(th + h, ph) - resid(th - h, ph)) / (2 * h);
                Jm.col(1) = (resid(th, ph + h) - resid(th, ph - h)) / (2 * h);
                const Eigen::Vector2d step = Jm.colPivHouseholderQr().solve(-r);
                th += step[0];
                ph += step[1];
                if (step.norm() < 1e-15) break;
            }
            if (resid(th, ph).norm() > 1e-10) continue;
            const auto s = s_of(th, ph);
            bool dup = false;
            for (const auto& q : found)
                if (std::hypot(q[0] - s[0], q[1] - s[1], q[2] - s[2]) < 1e-6) dup = true;
            if (!dup) found.push_back(s);
        }
    return found;
}

/// Linear least squares y = a x + b; returns {a, b, r2}.
inline std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double a = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double b = (sy - a * sx) / n;
    const double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    return {a, b, r * r};
}

}  // namespace oracle

#endif  // LZ_TEST_ORACLES_HPP
