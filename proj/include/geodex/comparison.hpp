#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/constants/constants.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace geodex {

// Upper sectional-curvature bound; only non-positive values are admissible.
class CurvatureBound {
public:
    CurvatureBound() = default;
    CurvatureBound(double kappa) : kappa_(kappa) {
        if (!(kappa <= 0.0))
            throw std::invalid_argument("curvature bound must be non-positive");
    }
    double value() const { return kappa_; }
    double magnitude() const { return -kappa_; }
    double root() const { return std::sqrt(-kappa_); }
    bool flat() const { return kappa_ == 0.0; }

private:
    double kappa_ = 0.0;
};

namespace detail {

// Below this value of r*sqrt|K| the hyperbolic functions switch to series.
inline constexpr double series_cutoff = 1e-4;

// sinh(x)/x - 1 without cancellation.
inline double sinhc_minus_one(double x) {
    if (std::abs(x) < series_cutoff) {
        const double x2 = x * x;
        return x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0));
    }
    if (std::abs(x) < 0.5) {
        // Maclaurin series converges fast enough here to beat sinh(x)/x - 1.
        const double x2 = x * x;
        double term = 1.0, sum = 0.0;
        for (int k = 1; k < 12; ++k) {
            term *= x2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
        }
        return sum;
    }
    return std::sinh(x) / x - 1.0;
}

// Power series coefficients c_j with (sinh x / x)^p = sum_j c_j x^{2j}.
inline std::vector<double> sinhc_power_series(int p, int terms) {
    std::vector<double> base(terms, 0.0);
    double f = 1.0;
    for (int k = 0; k < terms; ++k) {
        base[k] = 1.0 / f;
        f *= (2.0 * k + 2.0) * (2.0 * k + 3.0);
    }
    std::vector<double> out(terms, 0.0);
    out[0] = 1.0;
    for (int e = 0; e < p; ++e) {
        std::vector<double> next(terms, 0.0);
        for (int i = 0; i < terms; ++i)
            for (int j = 0; i + j < terms; ++j) next[i + j] += out[i] * base[j];
        out.swap(next);
    }
    return out;
}

inline void require_dim(int n) {
    if (n < 2) throw std::invalid_argument("dimension must be at least 2");
}

}  // namespace detail

inline double sn(CurvatureBound k, double r) {
    if (k.flat()) return r;
    const double a = k.root();
    return r * (1.0 + detail::sinhc_minus_one(a * r));
}

inline double cs(CurvatureBound k, double r) {
    if (k.flat()) return 1.0;
    return std::cosh(k.root() * r);
}

inline double ct(CurvatureBound k, double r) {
    if (r == 0.0) throw std::domain_error("ct has a pole at r = 0");
    return cs(k, r) / sn(k, r);
}

// sn_K(r) - r, accurate for small r.
inline double sn_minus_r(CurvatureBound k, double r) {
    if (k.flat()) return 0.0;
    return r * detail::sinhc_minus_one(k.root() * r);
}

namespace detail {

// Small-argument series shared by V and W: integrates t^{n-1} (sinh(at)/(at))^{n-1}.
inline double v_series(CurvatureBound k, int n, double s) {
    const auto c = sinhc_power_series(n - 1, 10);
    const double a2s2 = k.magnitude() * s * s;
    double sum = 0.0, pw = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        sum += c[j] * pw / (n + 2.0 * j);
        pw *= a2s2;
    }
    return std::pow(s, n) * sum;
}

inline double w_series(CurvatureBound k, int n, double r) {
    const auto c = sinhc_power_series(n - 1, 10);
    const double a2r2 = k.magnitude() * r * r;
    double sum = 0.0, pw = 1.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        sum += c[j] * pw / ((n + 2.0 * j) * (n + 1.0 + 2.0 * j));
        pw *= a2r2;
    }
    return std::pow(r, n + 1) * sum;
}

inline constexpr double recursion_cutoff = 0.1;

}  // namespace detail

// V^n_K(s) = int_0^s sn^{n-1}
inline double v_ball(CurvatureBound k, int n, double s) {
    detail::require_dim(n);
    if (s < 0.0) throw std::domain_error("v_ball requires s >= 0");
    if (k.flat()) return std::pow(s, n) / n;
    const double mag = k.magnitude();
    if (n == 2) {
        const double h = std::sinh(0.5 * k.root() * s);
        return 2.0 * h * h / mag;
    }
    if (n == 3) return sn_minus_r(k, 2.0 * s) / (4.0 * mag);
    if (k.root() * s < detail::recursion_cutoff) return detail::v_series(k, n, s);
    const double snv = sn(k, s);
    return (std::pow(snv, n - 2) * cs(k, s) - (n - 2) * v_ball(k, n - 2, s)) /
           ((n - 1) * mag);
}

// W^n_K(r) = int_0^r V^n_K
inline double w_double(CurvatureBound k, int n, double r) {
    detail::require_dim(n);
    if (r < 0.0) throw std::domain_error("w_double requires r >= 0");
    if (k.flat()) return std::pow(r, n + 1) / (n * (n + 1.0));
    const double mag = k.magnitude();
    if (n == 2) return sn_minus_r(k, r) / mag;
    if (n == 3) return sn_minus_r(k, r) * (sn(k, r) + r) / (4.0 * mag);
    if (k.root() * r < detail::recursion_cutoff) return detail::w_series(k, n, r);
    return (std::pow(sn(k, r), n - 1) / (n - 1) - (n - 2) * w_double(k, n - 2, r)) /
           ((n - 1) * mag);
}

// Integrand of the quantitative Yau inequality; g stands for |grad r| on M x M.
inline double psi(CurvatureBound k, int n, double r, double g) {
    detail::require_dim(n);
    if (k.flat()) throw std::domain_error("psi requires a negative curvature bound");
    if (!(r > 0.0)) throw std::domain_error("psi requires r > 0");
    if (g < 0.0 || g > 1.0) throw std::domain_error("psi requires 0 <= g <= 1");
    const double snv = sn(k, r);
    double ratio;
    if (n == 2)
        ratio = r / snv;
    else if (n == 3)
        ratio = (r / snv) * (r / snv);
    else
        ratio = (n - 1.0) * (n - 2.0) * w_double(k, n - 2, r) / std::pow(snv, n - 1);
    return g + (1.0 - g) * ratio;
}

// Surface area of the unit d-sphere.
inline double sphere_area(int d) {
    if (d < 0) throw std::invalid_argument("sphere dimension must be non-negative");
    const double pi = boost::math::constants::pi<double>();
    return 2.0 * std::pow(pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

// Volume of the unit n-ball.
inline double ball_volume(int n) {
    if (n < 0) throw std::invalid_argument("ball dimension must be non-negative");
    const double pi = boost::math::constants::pi<double>();
    return std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline long binomial2(int m) { return static_cast<long>(m) * (m - 1) / 2; }

inline double d_m(int m) {
    if (m < 1) throw std::invalid_argument("D_m requires m >= 1");
    const long e = binomial2(m + 1) + 1;
    return (e % 2 == 0 ? 1.0 : -1.0) / std::tgamma(m + 1.0);
}

// Croke normalizer: 2 / int_{S^{n-1}} |<u,nu>|^{n/(n-2)} du, reduced to latitude.
inline double croke_k(int n) {
    if (n < 3) throw std::invalid_argument("croke_k requires n >= 3");
    const double p = static_cast<double>(n) / (n - 2);
    const double pi = boost::math::constants::pi<double>();
    auto f = [&](double theta) { return std::pow(std::cos(theta), p) * std::pow(std::sin(theta), n - 2); };
    double err = 0.0;
    const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, 0.5 * pi, 30, 1e-14, &err);
    return 2.0 / (sphere_area(n - 2) * 2.0 * half);
}

inline double croke_c(int n) {
    detail::require_dim(n);
    if (n == 2) return 4.0 * boost::math::constants::pi<double>();
    return sphere_area(n - 1) * std::pow(croke_k(n), (n - 2.0) / (n - 1.0));
}

struct DimensionalConstants {
    int n;

    explicit DimensionalConstants(int dim) : n(dim) { detail::require_dim(dim); }
    double sigma() const { return sphere_area(n - 1); }
    double ball() const { return ball_volume(n); }
    static double d(int m) { return geodex::d_m(m); }
    double k_n() const { return croke_k(n); }
    double c_n_big() const { return croke_c(n); }
};

}  // namespace geodex
