#pragma once

#include <cstdint>

#include "orthoerase/eraser.hpp"
#include "orthoerase/linalg.hpp"
#include "orthoerase/tokens.hpp"

namespace orthoerase::attention {

// Latent image features: HW spatial positions x D_z channels.
struct LatentFeatures {
    linalg::Mat data;

    std::size_t positions() const { return data.rows; }
    std::size_t channels() const { return data.cols; }
};

// One cross-attention layer. The output nonlinearity is a single linear map
// so value-path properties can be checked exactly; the erasure mechanism
// itself never looks at this map.
struct CALayer {
    linalg::Mat key_proj;            // d_c x d
    eraser::ValueProjector value_proj;  // d_c x d
    linalg::Mat query_proj;          // d_z x d
    linalg::Mat output_map;          // d x d_z

    std::size_t head_dim() const { return key_proj.cols; }

    // Gaussian-initialized layer with 1/sqrt(fan-in) scaling. When
    // split_value_space is set, W_V is block diagonal over the two halves of
    // the embedding and value coordinates, so token embeddings supported on
    // one half produce values supported on the matching half.
    static CALayer seeded(std::uint64_t seed, std::size_t d_c,
                          std::size_t d_z, std::size_t d,
                          bool split_value_space = false);
};

// Row-stochastic attention map softmax(Q K^T / sqrt(d)), HW x l. Softmax is
// computed with per-row max subtraction.
linalg::Mat attention_map(const LatentFeatures& z,
                          const tokens::EmbeddingMatrix& emb,
                          const CALayer& layer);

// (A V) * output_map with V = emb * W_V.
LatentFeatures forward(const LatentFeatures& z,
                       const tokens::EmbeddingMatrix& emb,
                       const CALayer& layer);

// Same aggregation with the value matrix injected directly; forward() is
// this with compute_values, and tests use it to check linearity in V.
LatentFeatures forward_with_values(const LatentFeatures& z,
                                   const tokens::EmbeddingMatrix& emb,
                                   const CALayer& layer,
                                   const eraser::ValueMatrix& values);

struct ErasedForward {
    LatentFeatures features;
    eraser::ValueMatrix erased_values;
};

// Forward pass with the value path replaced by the erased values. The
// attention map comes from the unmodified keys; only V changes. Throws
// BasisLayerMismatch when the basis was built with a different value
// projector than this layer's.
ErasedForward forward_erased(const LatentFeatures& z,
                             const tokens::EmbeddingMatrix& emb,
                             const CALayer& layer,
                             const eraser::TargetBasis& basis,
                             const eraser::ShiftConfig& cfg,
                             eraser::ShiftMode mode);

// Single-concept variant taking the target value matrix directly.
ErasedForward forward_erased(const LatentFeatures& z,
                             const tokens::EmbeddingMatrix& emb,
                             const CALayer& layer,
                             const eraser::ValueMatrix& single_target,
                             const eraser::ShiftConfig& cfg,
                             eraser::ShiftMode mode);

}  // namespace orthoerase::attention
