#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace rhythmlab {

double pearson_r(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Two-sided p-value for H0: rho = 0, from the t statistic with n-2 dof.
double pearson_p_value(double r, long n);

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    bool defined = true;  // false for zero-variance inputs
};

CorrelationResult correlation_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct FRatioResult {
    double f = 0.0;
    long df_between = 0;
    long df_within = 0;
    double p = 1.0;
    bool infinite = false;  // zero within-group variance
};

// One-way ANOVA over the groups.
FRatioResult f_ratio(const std::vector<std::vector<double>>& groups);

double student_t_cdf(double t, double dof);
double f_distribution_sf(double f, double df1, double df2);  // upper tail

}  // namespace rhythmlab
