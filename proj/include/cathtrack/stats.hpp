#pragma once

#include <cmath>
#include <span>

#include "cathtrack/errors.hpp"

namespace cathtrack {

inline double mean(std::span<const double> v) {
    require(!v.empty(), ErrorCode::invalid_argument, "mean of empty sample");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace detail {

inline double log_gamma(double x) { return std::lgamma(x); }

// Continued fraction for the regularized incomplete beta function.
inline double betacf(double a, double b, double x) {
    const double eps = 3e-14;
    const double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// One-sided p-value of Student's t with nu degrees of freedom, P(T > t).
inline double student_t_sf(double t, double nu) {
    const double x = nu / (nu + t * t);
    const double tail = 0.5 * detail::incomplete_beta(0.5 * nu, 0.5, x);
    return t >= 0.0 ? tail : 1.0 - tail;
}

// Welch's one-sided test of mean(a) > mean(b); returns the p-value.
inline double welch_p_greater(std::span<const double> a, std::span<const double> b) {
    require(a.size() >= 2 && b.size() >= 2, ErrorCode::invalid_argument,
            "welch test needs at least two samples per group");
    const double ma = mean(a), mb = mean(b);
    const double va = sample_sd(a) * sample_sd(a) / static_cast<double>(a.size());
    const double vb = sample_sd(b) * sample_sd(b) / static_cast<double>(b.size());
    const double se2 = va + vb;
    if (se2 <= 0.0) return ma > mb ? 0.0 : 1.0;
    const double t = (ma - mb) / std::sqrt(se2);
    const double nu = se2 * se2 /
                      (va * va / (static_cast<double>(a.size()) - 1.0) +
                       vb * vb / (static_cast<double>(b.size()) - 1.0));
    return student_t_sf(t, nu);
}

}  // namespace cathtrack
