#include "orthoerase/attention.hpp"

#include <cmath>
#include <string>

#include "orthoerase/errors.hpp"
#include "orthoerase/rng.hpp"

namespace orthoerase::attention {

namespace {

linalg::Mat seeded_matrix(std::uint64_t seed, std::string_view tag,
                          std::size_t rows, std::size_t cols) {
    SplitMix64 rng(derive_seed(seed, tag));
    linalg::Mat m(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
    for (double& x : m.data) x = scale * rng.next_gaussian();
    return m;
}

// Block-diagonal gaussian matrix: the two off-diagonal quadrants are zero.
linalg::Mat seeded_block_diagonal(std::uint64_t seed, std::string_view tag,
                                  std::size_t rows, std::size_t cols) {
    SplitMix64 rng(derive_seed(seed, tag));
    linalg::Mat m(rows, cols);
    const std::size_t rh = rows / 2;
    const std::size_t ch = cols / 2;
    const double scale = 1.0 / std::sqrt(static_cast<double>(rh));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if ((i < rh) == (j < ch)) m(i, j) = scale * rng.next_gaussian();
        }
    }
    return m;
}

void require_layer_dims(const LatentFeatures& z,
                        const tokens::EmbeddingMatrix& emb,
                        const CALayer& layer) {
    if (emb.rows.cols != layer.key_proj.rows ||
        emb.rows.cols != layer.value_proj.matrix.rows) {
        throw DimensionMismatch("attention: embedding dim vs key/value "
                                "projector");
    }
    if (z.data.cols != layer.query_proj.rows) {
        throw DimensionMismatch("attention: latent channels " +
                                std::to_string(z.data.cols) +
                                " vs query projector rows " +
                                std::to_string(layer.query_proj.rows));
    }
    if (layer.key_proj.cols != layer.query_proj.cols ||
        layer.key_proj.cols != layer.value_proj.matrix.cols ||
        layer.output_map.rows != layer.key_proj.cols) {
        throw DimensionMismatch("attention: inconsistent head dimension");
    }
    if (z.data.rows == 0 || emb.rows.rows == 0) {
        throw DimensionMismatch("attention: empty latent or embedding");
    }
}

}  // namespace

CALayer CALayer::seeded(std::uint64_t seed, std::size_t d_c, std::size_t d_z,
                        std::size_t d, bool split_value_space) {
    CALayer layer;
    layer.key_proj = seeded_matrix(seed, "key", d_c, d);
    layer.value_proj.matrix =
        split_value_space ? seeded_block_diagonal(seed, "value", d_c, d)
                          : seeded_matrix(seed, "value", d_c, d);
    layer.query_proj = seeded_matrix(seed, "query", d_z, d);
    layer.output_map = seeded_matrix(seed, "output", d, d_z);
    return layer;
}

linalg::Mat attention_map(const LatentFeatures& z,
                          const tokens::EmbeddingMatrix& emb,
                          const CALayer& layer) {
    require_layer_dims(z, emb, layer);
    linalg::require_finite(z.data, "attention_map");
    linalg::require_finite(emb.rows, "attention_map");

    const linalg::Mat q = linalg::matmul(z.data, layer.query_proj);
    const linalg::Mat k = linalg::matmul(emb.rows, layer.key_proj);
    const double inv_sqrt_d =
        1.0 / std::sqrt(static_cast<double>(layer.head_dim()));

    linalg::Mat a(z.data.rows, emb.rows.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a.cols; ++j) {
            double logit = 0.0;
            for (std::size_t t = 0; t < q.cols; ++t) {
                logit += q(i, t) * k(j, t);
            }
            logit *= inv_sqrt_d;
            a(i, j) = logit;
            row_max = std::max(row_max, logit);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            a(i, j) = std::exp(a(i, j) - row_max);
            sum += a(i, j);
        }
        for (std::size_t j = 0; j < a.cols; ++j) a(i, j) /= sum;
    }
    return a;
}

LatentFeatures forward_with_values(const LatentFeatures& z,
                                   const tokens::EmbeddingMatrix& emb,
                                   const CALayer& layer,
                                   const eraser::ValueMatrix& values) {
    if (values.rows.rows != emb.rows.rows ||
        values.rows.cols != layer.head_dim()) {
        throw DimensionMismatch("forward_with_values: value shape");
    }
    const linalg::Mat a = attention_map(z, emb, layer);
    return LatentFeatures{
        linalg::matmul(linalg::matmul(a, values.rows), layer.output_map)};
}

LatentFeatures forward(const LatentFeatures& z,
                       const tokens::EmbeddingMatrix& emb,
                       const CALayer& layer) {
    return forward_with_values(z, emb, layer,
                               eraser::compute_values(emb, layer.value_proj));
}

namespace {

ErasedForward finish_erased(const LatentFeatures& z,
                            const tokens::EmbeddingMatrix& emb,
                            const CALayer& layer,
                            eraser::ValueMatrix erased) {
    LatentFeatures features = forward_with_values(z, emb, layer, erased);
    return ErasedForward{std::move(features), std::move(erased)};
}

}  // namespace

ErasedForward forward_erased(const LatentFeatures& z,
                             const tokens::EmbeddingMatrix& emb,
                             const CALayer& layer,
                             const eraser::TargetBasis& basis,
                             const eraser::ShiftConfig& cfg,
                             eraser::ShiftMode mode) {
    if (basis.projector_fp != 0 &&
        basis.projector_fp != layer.value_proj.fingerprint()) {
        throw BasisLayerMismatch(
            "forward_erased: basis was built with a different value "
            "projector than this layer");
    }
    const eraser::ValueMatrix values =
        eraser::compute_values(emb, layer.value_proj);
    return finish_erased(z, emb, layer,
                         eraser::erase_multi(values, basis, cfg, mode));
}

ErasedForward forward_erased(const LatentFeatures& z,
                             const tokens::EmbeddingMatrix& emb,
                             const CALayer& layer,
                             const eraser::ValueMatrix& single_target,
                             const eraser::ShiftConfig& cfg,
                             eraser::ShiftMode mode) {
    if (single_target.projector_fp != 0 &&
        single_target.projector_fp != layer.value_proj.fingerprint()) {
        throw BasisLayerMismatch(
            "forward_erased: target values come from a different value "
            "projector than this layer");
    }
    const eraser::ValueMatrix values =
        eraser::compute_values(emb, layer.value_proj);
    return finish_erased(z, emb, layer,
                         eraser::erase_single(values, single_target, cfg, mode));
}

}  // namespace orthoerase::attention
