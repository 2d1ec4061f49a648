#pragma once

#include <span>
#include <string>
#include <vector>

namespace primsep {

// Scale-dependent SDR: 10*log10(||alpha*s||^2 / ||s - s_hat||^2) with
// alpha = <s_hat, s>/||s||^2. +inf when the estimate equals the reference,
// -inf when the estimate is orthogonal to it.
double sd_sdr(std::span<const double> reference, std::span<const double> estimate);

// Scale-invariant variant: error is measured against the projection alpha*s.
double si_sdr(std::span<const double> reference, std::span<const double> estimate);

struct MetricResult {
    std::string source;
    double sd_sdr_db = 0.0;
    double si_sdr_db = 0.0;
};

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_value = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Ordinary least squares y on x with Pearson r and the two-sided p-value of
// the slope (t statistic, n-2 degrees of freedom). Requires >= 3 finite
// points and nonzero variance in both coordinates.
RegressionResult correlation_report(std::span<const double> x, std::span<const double> y);

// Arithmetic mean over finite values; counts how many were excluded.
double finite_mean(std::span<const double> values, std::size_t* excluded = nullptr);

} // namespace primsep
