#include "primsep/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "primsep/rng.hpp"

namespace primsep {

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

} // namespace

std::vector<double> silhouette_scores(const std::vector<std::vector<double>>& points,
                                      const std::vector<std::uint8_t>& labels) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("silhouette: no points");
    if (labels.size() != n) throw std::invalid_argument("silhouette: labels/points size mismatch");

    std::uint8_t max_label = 0;
    for (auto l : labels) max_label = std::max(max_label, l);
    const std::size_t num_clusters = static_cast<std::size_t>(max_label) + 1;
    std::vector<std::size_t> cluster_size(num_clusters, 0);
    for (auto l : labels) ++cluster_size[l];
    std::size_t occupied = 0;
    for (auto c : cluster_size) occupied += c > 0 ? 1 : 0;
    if (occupied < 2) throw std::invalid_argument("silhouette: only one cluster present");

    std::vector<double> scores(n, 0.0);
    std::vector<double> mean_dist(num_clusters);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean_dist.begin(), mean_dist.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            mean_dist[labels[j]] += euclidean(points[i], points[j]);
        }
        const std::uint8_t own = labels[i];
        if (cluster_size[own] <= 1) {
            scores[i] = 0.0; // singleton cluster
            continue;
        }
        const double a = mean_dist[own] / static_cast<double>(cluster_size[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < num_clusters; ++k) {
            if (k == own || cluster_size[k] == 0) continue;
            b = std::min(b, mean_dist[k] / static_cast<double>(cluster_size[k]));
        }
        const double denom = std::max(a, b);
        scores[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return scores;
}

double silhouette_mean(const std::vector<std::vector<double>>& points,
                       const std::vector<std::uint8_t>& labels) {
    const std::vector<double> scores = silhouette_scores(points, labels);
    double sum = 0.0;
    for (double s : scores) sum += s;
    return sum / static_cast<double>(scores.size());
}

double sample_silhouette(const EmbeddingTensor& emb, const MagnitudeSpectrogram& mag,
                         std::size_t n, std::uint64_t seed, bool* degenerate,
                         std::size_t* n_sampled, double loud_fraction) {
    if (n < 2) throw std::invalid_argument("sample_silhouette: need n >= 2");
    if (emb.shape() != mag.shape()) throw std::invalid_argument("sample_silhouette: geometry mismatch");
    if (degenerate != nullptr) *degenerate = false;

    const auto loud = loudest_bins(mag, loud_fraction);
    if (loud.empty()) throw std::invalid_argument("sample_silhouette: empty loud set");

    std::vector<std::size_t> chosen;
    if (loud.size() <= n) {
        chosen.resize(loud.size());
        for (std::size_t i = 0; i < loud.size(); ++i) chosen[i] = i;
    } else {
        Rng rng(seed);
        chosen = rng.sample_without_replacement(loud.size(), n);
        std::sort(chosen.begin(), chosen.end());
    }
    if (n_sampled != nullptr) *n_sampled = chosen.size();

    std::vector<std::vector<double>> points(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto [t, f] = loud[chosen[i]];
        const double* p = emb.point(t, f);
        points[i].assign(p, p + emb.dims);
    }

    EmbeddingTensor flat;
    flat.num_frames = points.size();
    flat.num_bins = 1;
    flat.dims = emb.dims;
    flat.values.reserve(points.size() * emb.dims);
    for (const auto& p : points) flat.values.insert(flat.values.end(), p.begin(), p.end());
    const std::vector<std::uint8_t> labels = hard_assign(flat);

    bool has0 = false, has1 = false;
    for (auto l : labels) (l == 0 ? has0 : has1) = true;
    if (!has0 || !has1) {
        if (degenerate != nullptr) *degenerate = true;
        return 0.0;
    }
    return silhouette_mean(points, labels);
}

double posterior_strength(std::span<const double> gamma) {
    const std::size_t k = gamma.size();
    if (k < 2) throw std::invalid_argument("posterior_strength: need K >= 2");
    double sum = 0.0, max_g = 0.0;
    for (double g : gamma) {
        if (!(g >= 0.0 && g <= 1.0))
            throw std::invalid_argument("posterior_strength: gamma outside [0, 1]");
        sum += g;
        max_g = std::max(max_g, g);
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("posterior_strength: gamma does not sum to 1");
    return (static_cast<double>(k) * max_g - 1.0) / (static_cast<double>(k) - 1.0);
}

ConfidenceReport confidence_report(const EmbeddingTensor& emb, const ClusterAssignment& assignment,
                                   const MagnitudeSpectrogram& mag, std::size_t n, std::uint64_t seed) {
    if (emb.shape() != mag.shape() || assignment.shape() != mag.shape())
        throw std::invalid_argument("confidence_report: geometry mismatch");

    ConfidenceReport report;
    report.seed = seed;
    const double sil =
        sample_silhouette(emb, mag, n, seed, &report.degenerate, &report.n_sampled);
    // Negative silhouette means (worse than random clustering) are clamped so
    // the product cannot flip sign.
    report.silhouette_mean = std::max(0.0, sil);

    const auto loud = loudest_bins(mag, kLoudFraction);
    double sum = 0.0;
    for (const auto& [t, f] : loud) {
        const double g[2] = {assignment.gamma_at(t, f, 0), assignment.gamma_at(t, f, 1)};
        sum += posterior_strength(std::span<const double>(g, 2));
    }
    report.posterior_strength_mean = sum / static_cast<double>(loud.size());
    report.confidence = report.silhouette_mean * report.posterior_strength_mean;
    return report;
}

} // namespace primsep
