#include "primsep/eval.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace primsep {

namespace {

void check_pair(std::span<const double> reference, std::span<const double> estimate) {
    if (reference.size() != estimate.size()) throw std::invalid_argument("sdr: length mismatch");
    if (reference.empty()) throw std::invalid_argument("sdr: empty signals");
    double energy = 0.0;
    for (double v : reference) energy += v * v;
    if (energy == 0.0) throw std::invalid_argument("sdr: reference is all zero");
}

double projection_alpha(std::span<const double> reference, std::span<const double> estimate) {
    double dot = 0.0, energy = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        dot += estimate[i] * reference[i];
        energy += reference[i] * reference[i];
    }
    return dot / energy;
}

} // namespace

double sd_sdr(std::span<const double> reference, std::span<const double> estimate) {
    check_pair(reference, estimate);
    const double alpha = projection_alpha(reference, estimate);
    double target = 0.0, error = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double t = alpha * reference[i];
        const double e = reference[i] - estimate[i];
        target += t * t;
        error += e * e;
    }
    if (error == 0.0) return std::numeric_limits<double>::infinity();
    if (target == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(target / error);
}

double si_sdr(std::span<const double> reference, std::span<const double> estimate) {
    check_pair(reference, estimate);
    const double alpha = projection_alpha(reference, estimate);
    double target = 0.0, error = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double t = alpha * reference[i];
        const double e = t - estimate[i];
        target += t * t;
        error += e * e;
    }
    if (error == 0.0) return std::numeric_limits<double>::infinity();
    if (target == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(target / error);
}

RegressionResult correlation_report(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("correlation_report: size mismatch");
    if (x.size() < 3) throw std::invalid_argument("correlation_report: need at least 3 points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw std::invalid_argument("correlation_report: non-finite point");

    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("correlation_report: zero variance input");

    RegressionResult result;
    result.n = x.size();
    result.slope = sxy / sxx;
    result.intercept = my - result.slope * mx;
    result.r_value = sxy / std::sqrt(sxx * syy);

    const double r2 = result.r_value * result.r_value;
    const double df = n - 2.0;
    if (r2 >= 1.0) {
        result.p_value = 0.0;
    } else {
        const double t = std::abs(result.r_value) * std::sqrt(df / (1.0 - r2));
        boost::math::students_t_distribution<double> dist(df);
        result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
    }
    return result;
}

double finite_mean(std::span<const double> values, std::size_t* excluded) {
    double sum = 0.0;
    std::size_t count = 0, skipped = 0;
    for (double v : values) {
        if (std::isfinite(v)) {
            sum += v;
            ++count;
        } else {
            ++skipped;
        }
    }
    if (excluded != nullptr) *excluded = skipped;
    return count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace primsep
