#include "core/stats.hpp"

#include <cmath>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "core/common.hpp"

namespace rhythmlab {

double pearson_r(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw Error::invalid("correlation inputs differ in length");
    if (x.size() < 3) throw Error::invalid("correlation needs at least 3 observations");
    const double mx = x.mean(), my = y.mean();
    const Eigen::ArrayXd dx = x.array() - mx;
    const Eigen::ArrayXd dy = y.array() - my;
    const double sxx = (dx * dx).sum();
    const double syy = (dy * dy).sum();
    if (sxx <= 0.0 || syy <= 0.0) throw Error::numeric("zero variance in correlation input");
    return (dx * dy).sum() / std::sqrt(sxx * syy);
}

double student_t_cdf(double t, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::cdf(dist, t);
}

double f_distribution_sf(double f, double df1, double df2) {
    if (f <= 0.0) return 1.0;
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

double pearson_p_value(double r, long n) {
    if (n < 3) throw Error::invalid("p-value needs at least 3 observations");
    const double dof = static_cast<double>(n - 2);
    const double clamped = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);
    const double t = clamped * std::sqrt(dof / (1.0 - clamped * clamped));
    return 2.0 * (1.0 - student_t_cdf(std::abs(t), dof));
}

CorrelationResult correlation_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    CorrelationResult out;
    try {
        out.r = pearson_r(x, y);
        out.p = pearson_p_value(out.r, x.size());
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        out.defined = false;
        out.r = std::numeric_limits<double>::quiet_NaN();
        out.p = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

FRatioResult f_ratio(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw Error::invalid("f_ratio needs at least 2 groups");
    long total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw Error::invalid("f_ratio groups must be non-empty");
        total += static_cast<long>(g.size());
        for (double v : g) grand_sum += v;
    }
    const long k = static_cast<long>(groups.size());
    if (total - k < 1) throw Error::invalid("f_ratio needs at least 1 residual dof");
    const double grand_mean = grand_sum / static_cast<double>(total);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }

    FRatioResult out;
    out.df_between = k - 1;
    out.df_within = total - k;
    const double ms_between = ss_between / static_cast<double>(out.df_between);
    const double ms_within = ss_within / static_cast<double>(out.df_within);
    if (ms_within <= 0.0) {
        out.infinite = true;
        out.f = std::numeric_limits<double>::infinity();
        out.p = ss_between > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.f = ms_between / ms_within;
    out.p = f_distribution_sf(out.f, static_cast<double>(out.df_between),
                              static_cast<double>(out.df_within));
    return out;
}

}  // namespace rhythmlab
