#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "primsep/audio.hpp"
#include "primsep/primitives.hpp"
#include "primsep/tfr.hpp"

namespace primsep {

// T x F x D stack of primitive masks: the coordinates of each
// time-frequency point in the primitive embedding space.
struct EmbeddingTensor {
    std::vector<double> values; // index (t*F + f)*D + d
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    std::size_t dims = 0;
    std::vector<std::string> primitive_names;

    RasterShape shape() const { return {num_frames, num_bins}; }
    const double* point(std::size_t t, std::size_t f) const {
        return values.data() + (t * num_bins + f) * dims;
    }
};

// Soft memberships toward the two fixed centroids [0]^D (accompaniment)
// and [1]^D (vocals). gamma_k sums to 1 per point.
struct ClusterAssignment {
    std::vector<double> gamma; // index (t*F + f)*2 + k, k=0 accompaniment, k=1 vocals
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    double beta = 0.0;

    RasterShape shape() const { return {num_frames, num_bins}; }
    double gamma_at(std::size_t t, std::size_t f, std::size_t k) const {
        return gamma[(t * num_bins + f) * 2 + k];
    }
};

constexpr double kDefaultBeta = 5.0;

EmbeddingTensor embed(const std::vector<SoftMask>& masks,
                      const std::vector<std::string>& names = primitive_names());

// Distance softmax against the fixed centroids: membership of each point in
// cluster k is exp(-beta*d_k) / sum_j exp(-beta*d_j), d = Euclidean distance.
// Evaluated with max-subtraction so large beta cannot underflow both terms.
struct ClusterResult {
    ClusterAssignment assignment;
    SoftMask vocals;
    SoftMask accompaniment; // exactly 1 - vocals
};
ClusterResult primitive_cluster(const EmbeddingTensor& emb, double beta);

// Nearest fixed centroid per point; ties go to 0 (accompaniment).
std::vector<std::uint8_t> hard_assign(const EmbeddingTensor& emb);

struct SeparationResult {
    AudioClip vocals;
    AudioClip accompaniment;
    SoftMask vocals_mask;
    SoftMask accompaniment_mask;
    std::vector<SoftMask> primitive_masks;
    EmbeddingTensor embedding;
    ClusterAssignment assignment;
    MagnitudeSpectrogram mixture_magnitude;
};

// Full single-mixture pipeline: stft -> primitives -> embed -> cluster ->
// mask -> istft. vocals + accompaniment reconstruct the input.
SeparationResult separate(const AudioClip& clip, const PrimitiveConfig& cfg, double beta = kDefaultBeta);

} // namespace primsep
