#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <utility>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

namespace uvt {

namespace detail {

template <std::floating_point T>
void require_finite(T z, const char* who) {
    if (!std::isfinite(z)) throw std::invalid_argument(std::string(who) + ": non-finite argument");
}

// Power series sum_k (-1)^k (z^2/4)^k / (k! (k+order)!) for order 0 or 1,
// accumulated in long double; callers multiply by (z/2)^order.
template <std::floating_point T>
T bessel_series(T z, int order) {
    using Acc = long double;
    const Acc q = static_cast<Acc>(z) * static_cast<Acc>(z) / 4.0L;
    Acc term = 1.0L;
    Acc sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -q / (static_cast<Acc>(k) * static_cast<Acc>(k + order));
        sum += term;
        if (std::fabs(term) < 1e-18L) break;
    }
    return static_cast<T>(sum);
}

// Hankel large-argument expansion for order 0 or 1: returns (P, Q) with
// J = sqrt(2/(pi z)) (P cos chi - Q sin chi), truncated at the smallest term.
template <std::floating_point T>
std::pair<T, T> hankel_pq(T z, int order) {
    const T mu = T(4 * order * order);
    T p = 1, q = 0;
    T term = 1;
    T prev = std::numeric_limits<T>::infinity();
    for (int k = 1; k < 200; ++k) {
        const T odd = T(2 * k - 1);
        term *= (mu - odd * odd) / (T(k) * T(8) * z);
        const T mag = std::fabs(term);
        if (mag >= prev) break;
        prev = mag;
        if (k % 2 == 1)
            q += ((k / 2) % 2 == 0) ? term : -term;
        else
            p += ((k / 2) % 2 == 0) ? term : -term;
        if (mag < std::numeric_limits<T>::epsilon() * T(1e-2)) break;
    }
    return {p, q};
}

inline constexpr double kSeriesCutoff = 12.0;

}  // namespace detail

/// Bessel function of the first kind, order zero.
template <std::floating_point T>
T bessel_j0(T z) {
    detail::require_finite(z, "bessel_j0");
    const T x = std::fabs(z);
    if (x <= T(detail::kSeriesCutoff)) return detail::bessel_series(x, 0);
    const auto [p, q] = detail::hankel_pq(x, 0);
    const T c = std::cos(x), s = std::sin(x);
    // cos(x - pi/4) and sin(x - pi/4) without forming the shifted argument.
    const T cos_chi = (c + s) / std::numbers::sqrt2_v<T>;
    const T sin_chi = (s - c) / std::numbers::sqrt2_v<T>;
    return std::sqrt(T(2) / (std::numbers::pi_v<T> * x)) * (p * cos_chi - q * sin_chi);
}

/// Bessel function of the first kind, order one.
template <std::floating_point T>
T bessel_j1(T z) {
    detail::require_finite(z, "bessel_j1");
    const T x = std::fabs(z);
    T value;
    if (x <= T(detail::kSeriesCutoff)) {
        value = x / T(2) * detail::bessel_series(x, 1);
    } else {
        const auto [p, q] = detail::hankel_pq(x, 1);
        const T c = std::cos(x), s = std::sin(x);
        const T cos_chi = (s - c) / std::numbers::sqrt2_v<T>;
        const T sin_chi = -(s + c) / std::numbers::sqrt2_v<T>;
        value = std::sqrt(T(2) / (std::numbers::pi_v<T> * x)) * (p * cos_chi - q * sin_chi);
    }
    return z < 0 ? -value : value;
}

/// Leading-order large-argument form sqrt(2/(pi z)) cos(z - pi/4).
template <std::floating_point T>
T bessel_j0_asymptotic(T z) {
    if (!(z > 0)) throw std::domain_error("bessel_j0_asymptotic: argument must be positive");
    return std::sqrt(T(2) / (std::numbers::pi_v<T> * z)) * std::cos(z - std::numbers::pi_v<T> / T(4));
}

/// Nodes and weights of a quadrature rule on [0, cutoff].
template <typename Scalar>
struct QuadratureRule {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
    Scalar cutoff{};

    Eigen::Index size() const noexcept { return nodes.size(); }

    template <typename Derived>
    Scalar integrate(const Eigen::MatrixBase<Derived>& values) const {
        return weights.dot(values);
    }
};

using QuadratureRuled = QuadratureRule<double>;

/// n-point Gauss-Legendre rule mapped to [0, c]; nodes ascending.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(Eigen::Index n, Scalar c) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    if (!(c > 0)) throw std::invalid_argument("gauss_legendre: cutoff must be positive");
    QuadratureRule<Scalar> rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    rule.cutoff = c;
    const Eigen::Index half = (n + 1) / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
        Scalar x = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar deriv = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Scalar p0 = 1, p1 = x;
            for (Eigen::Index k = 2; k <= n; ++k) {
                const Scalar p2 = (Scalar(2 * k - 1) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            deriv = Scalar(n) * (x * p1 - p0) / (x * x - Scalar(1));
            const Scalar dx = p1 / deriv;
            x -= dx;
            if (std::fabs(dx) < Scalar(1e-15)) break;
        }
        // Derivative at the converged root.
        {
            Scalar p0 = 1, p1 = x;
            for (Eigen::Index k = 2; k <= n; ++k) {
                const Scalar p2 = (Scalar(2 * k - 1) * x * p1 - Scalar(k - 1) * p0) / Scalar(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            deriv = Scalar(n) * (x * p1 - p0) / (x * x - Scalar(1));
        }
        const Scalar w = Scalar(2) / ((Scalar(1) - x * x) * deriv * deriv);
        // x > 0 here; mirror to fill both ends in ascending order.
        rule.nodes(n - 1 - i) = c * (Scalar(1) + x) / Scalar(2);
        rule.nodes(i) = c * (Scalar(1) - x) / Scalar(2);
        rule.weights(n - 1 - i) = rule.weights(i) = w * c / Scalar(2);
    }
    return rule;
}

/// Closed form of the integral of t J0(u t) J0(v t) over [0, c]; uses the
/// analytic limit (c^2/2)(J0(uc)^2 + J1(uc)^2) when u and v coincide.
template <std::floating_point T>
T truncated_bessel_product_integral(T u, T v, T c) {
    if (u < 0 || v < 0) throw std::domain_error("truncated_bessel_product_integral: negative frequency");
    if (!(c > 0)) throw std::invalid_argument("truncated_bessel_product_integral: cutoff must be positive");
    if (std::fabs(u - v) < T(1e-8) * std::max(T(1), u)) {
        const T w = (u + v) / T(2);
        const T j0 = bessel_j0(w * c), j1 = bessel_j1(w * c);
        return c * c / T(2) * (j0 * j0 + j1 * j1);
    }
    const T uc = u * c, vc = v * c;
    return c * (u * bessel_j1(uc) * bessel_j0(vc) - v * bessel_j0(uc) * bessel_j1(vc)) / (u * u - v * v);
}

}  // namespace uvt
