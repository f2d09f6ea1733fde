#pragma once

#include <cmath>
#include <limits>

#include "tabml/errors.hpp"

namespace tabml {

namespace stats_detail {

// Continued fraction for the incomplete beta (Lentz's method).
inline double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double result = d;

    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        result *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        result *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return result;
}

}  // namespace stats_detail

// Regularized incomplete beta I_x(a, b), accurate to ~1e-12.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw ParamError("incomplete beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * stats_detail::beta_cf(a, b, x) / a;
    return 1.0 - front * stats_detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a Student-t statistic: I_{v/(v+t^2)}(v/2, 1/2).
inline double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) throw ParamError("degrees of freedom must be positive");
    if (t == 0.0) return 1.0;
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

}  // namespace tabml
