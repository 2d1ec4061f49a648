#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "primsep/ensemble.hpp"
#include "primsep/tfr.hpp"

namespace primsep {

// Ground-truth-free quality estimate for one separation: mean silhouette of
// sampled loud points times mean posterior strength over all loud points.
struct ConfidenceReport {
    double silhouette_mean = 0.0;         // clamped at 0 from below
    double posterior_strength_mean = 0.0; // in [0, 1]
    double confidence = 0.0;              // product of the two fields
    std::size_t n_sampled = 0;
    std::uint64_t seed = 0;
    bool degenerate = false; // sampled points fell into a single cluster
};

constexpr std::size_t kDefaultSilhouetteSamples = 1000;
constexpr double kLoudFraction = 0.01;

// Per-point silhouette scores (Euclidean distance): s = (b-a)/max(a,b),
// 0 for singleton clusters. Throws if only one cluster is present.
std::vector<double> silhouette_scores(const std::vector<std::vector<double>>& points,
                                      const std::vector<std::uint8_t>& labels);
double silhouette_mean(const std::vector<std::vector<double>>& points,
                       const std::vector<std::uint8_t>& labels);

// Draws min(n, |loud set|) points without replacement from the loudest
// `loud_fraction` bins, labels them by nearest centroid, and returns the mean
// silhouette. `degenerate` is set (and 0 returned) if one cluster is empty.
double sample_silhouette(const EmbeddingTensor& emb, const MagnitudeSpectrogram& mag,
                         std::size_t n, std::uint64_t seed, bool* degenerate = nullptr,
                         std::size_t* n_sampled = nullptr, double loud_fraction = kLoudFraction);

// Rescaled max membership: (K*max_k gamma_k - 1)/(K - 1), mapping uniform
// assignment to 0 and certain assignment to 1.
double posterior_strength(std::span<const double> gamma);

ConfidenceReport confidence_report(const EmbeddingTensor& emb, const ClusterAssignment& assignment,
                                   const MagnitudeSpectrogram& mag,
                                   std::size_t n = kDefaultSilhouetteSamples, std::uint64_t seed = 0);

} // namespace primsep
