#include "primsep/ensemble.hpp"

#include <cmath>
#include <stdexcept>

namespace primsep {

EmbeddingTensor embed(const std::vector<SoftMask>& masks, const std::vector<std::string>& names) {
    if (masks.empty()) throw std::invalid_argument("embed: need at least one mask");
    const RasterShape shape = masks[0].shape();
    for (const auto& m : masks) {
        if (m.shape() != shape) throw std::invalid_argument("embed: mask geometry mismatch");
        for (double v : m.values)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("embed: mask value outside [0, 1]");
    }
    EmbeddingTensor emb;
    emb.num_frames = shape.num_frames;
    emb.num_bins = shape.num_bins;
    emb.dims = masks.size();
    emb.primitive_names = names.size() == masks.size() ? names : std::vector<std::string>(masks.size());
    emb.values.resize(shape.size() * emb.dims);
    for (std::size_t i = 0; i < shape.size(); ++i)
        for (std::size_t d = 0; d < emb.dims; ++d) emb.values[i * emb.dims + d] = masks[d].values[i];
    return emb;
}

namespace {

inline void centroid_distances(const double* point, std::size_t dims, double& d0, double& d1) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        const double v = point[d];
        s0 += v * v;
        s1 += (1.0 - v) * (1.0 - v);
    }
    d0 = std::sqrt(s0);
    d1 = std::sqrt(s1);
}

} // namespace

ClusterResult primitive_cluster(const EmbeddingTensor& emb, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("primitive_cluster: beta must be > 0");
    if (emb.dims == 0 || emb.values.empty()) throw std::invalid_argument("primitive_cluster: empty embedding");
    for (double v : emb.values)
        if (!std::isfinite(v)) throw std::invalid_argument("primitive_cluster: non-finite embedding value");

    const std::size_t points = emb.num_frames * emb.num_bins;
    ClusterResult result;
    result.assignment.num_frames = emb.num_frames;
    result.assignment.num_bins = emb.num_bins;
    result.assignment.beta = beta;
    result.assignment.gamma.resize(points * 2);
    result.vocals = make_mask(emb.num_frames, emb.num_bins);

    for (std::size_t i = 0; i < points; ++i) {
        double d0, d1;
        centroid_distances(emb.values.data() + i * emb.dims, emb.dims, d0, d1);
        const double a0 = -beta * d0;
        const double a1 = -beta * d1;
        const double m = std::max(a0, a1);
        const double e0 = std::exp(a0 - m);
        const double e1 = std::exp(a1 - m);
        const double vocals = e1 / (e0 + e1);
        result.vocals.values[i] = vocals;
        result.assignment.gamma[i * 2 + 0] = 1.0 - vocals;
        result.assignment.gamma[i * 2 + 1] = vocals;
    }
    result.accompaniment = complement(result.vocals);
    return result;
}

std::vector<std::uint8_t> hard_assign(const EmbeddingTensor& emb) {
    if (emb.dims == 0 || emb.values.empty()) throw std::invalid_argument("hard_assign: empty embedding");
    const std::size_t points = emb.num_frames * emb.num_bins;
    std::vector<std::uint8_t> labels(points);
    for (std::size_t i = 0; i < points; ++i) {
        double d0, d1;
        centroid_distances(emb.values.data() + i * emb.dims, emb.dims, d0, d1);
        labels[i] = d1 < d0 ? 1 : 0; // tie -> accompaniment
    }
    return labels;
}

SeparationResult separate(const AudioClip& clip, const PrimitiveConfig& cfg, double beta) {
    clip.validate();
    if (!clip.is_mono()) throw std::invalid_argument("separate: clip must be mono (downmix first)");
    if (clip.sample_rate != kCanonicalSampleRate)
        throw std::invalid_argument("separate: clip must be 44100 Hz");

    const ComplexSpectrogram spec = stft(clip);
    MagnitudeSpectrogram mag = magnitude(spec);

    SeparationResult result;
    result.primitive_masks = run_all_primitives(mag, cfg);
    result.embedding = embed(result.primitive_masks);
    ClusterResult clusters = primitive_cluster(result.embedding, beta);
    result.assignment = std::move(clusters.assignment);
    result.vocals_mask = std::move(clusters.vocals);
    result.accompaniment_mask = std::move(clusters.accompaniment);

    const std::size_t n = clip.num_samples();
    result.vocals = istft(apply_mask(spec, result.vocals_mask), n);
    result.accompaniment = istft(apply_mask(spec, result.accompaniment_mask), n);
    result.mixture_magnitude = std::move(mag);
    return result;
}

} // namespace primsep
