#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ehcrn/error.hpp"

namespace ehcrn::stats {

inline double mean(std::span<const double> x) {
    detail::require(!x.empty(), "mean of an empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased (n - 1) sample variance.
inline double variance(std::span<const double> x) {
    detail::require(x.size() >= 2, "variance needs at least two samples");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

/// Standard error of the mean; 0 for a single sample.
inline double standard_error(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

struct TTest {
    double statistic = 0.0;
    double dof = 0.0;
    double p_greater = 0.5;  ///< H1: mean difference > 0
    double p_less = 0.5;     ///< H1: mean difference < 0
    double p_two_sided = 1.0;
};

namespace detail {

inline TTest t_from(double statistic, double dof) {
    TTest r;
    r.statistic = statistic;
    r.dof = dof;
    if (std::isnan(statistic)) {
        return r;
    }
    if (std::isinf(statistic)) {
        r.p_greater = statistic > 0 ? 0.0 : 1.0;
        r.p_less = 1.0 - r.p_greater;
        r.p_two_sided = 0.0;
        return r;
    }
    const boost::math::students_t dist(dof);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, statistic));
    r.p_less = boost::math::cdf(dist, statistic);
    r.p_two_sided = 2.0 * std::min(r.p_greater, r.p_less);
    return r;
}

} // namespace detail

/// Paired t-test on a - b.
inline TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    ehcrn::detail::require(a.size() == b.size() && a.size() >= 2, "paired t-test needs two equal series of n >= 2");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double se = standard_error(d);
    const double m = mean(d);
    const double t = se > 0.0 ? m / se : (m == 0.0 ? 0.0 : std::copysign(INFINITY, m));
    return detail::t_from(t, static_cast<double>(d.size() - 1));
}

/// Welch's unequal-variance two-sample t-test on mean(a) - mean(b).
inline TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
    ehcrn::detail::require(a.size() >= 2 && b.size() >= 2, "Welch test needs n >= 2 per sample");
    const double va = variance(a) / static_cast<double>(a.size());
    const double vb = variance(b) / static_cast<double>(b.size());
    const double diff = mean(a) - mean(b);
    const double se = std::sqrt(va + vb);
    if (se == 0.0) return detail::t_from(diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff), 1.0);
    const double dof = (va + vb) * (va + vb) /
                       (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    return detail::t_from(diff / se, dof);
}

struct SlopeTest {
    double slope = 0.0;
    double standard_error = 0.0;
    TTest test;
};

/// Least-squares slope of y against its index, with the t-test of slope = 0.
inline SlopeTest slope_test(std::span<const double> y) {
    ehcrn::detail::require(y.size() >= 3, "slope test needs at least three points");
    const double n = static_cast<double>(y.size());
    const double xbar = (n - 1.0) / 2.0;
    const double ybar = mean(y);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dx = static_cast<double>(i) - xbar;
        sxx += dx * dx;
        sxy += dx * (y[i] - ybar);
    }
    SlopeTest r;
    r.slope = sxy / sxx;
    const double intercept = ybar - r.slope * xbar;
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - (intercept + r.slope * static_cast<double>(i));
        sse += e * e;
    }
    r.standard_error = std::sqrt(sse / (n - 2.0) / sxx);
    const double t = r.standard_error > 0.0 ? r.slope / r.standard_error : (r.slope == 0.0 ? 0.0 : INFINITY);
    r.test = detail::t_from(t, n - 2.0);
    return r;
}

/// One-sample Kolmogorov-Smirnov statistic D_n against a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    ehcrn::detail::require(!samples.empty(), "KS statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic KS critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

} // namespace ehcrn::stats
