#pragma once

#include <cstdint>
#include <vector>

#include "orthoerase/linalg.hpp"
#include "orthoerase/tokens.hpp"

namespace orthoerase::eraser {

enum class ValueKind { original, target_modified, erased };

// Per-token value vectors of one cross-attention layer: token_length x d.
// A target-modified matrix always has a zero row 0 (the [SOT] position is
// excluded from erasure).
struct ValueMatrix {
    linalg::Mat rows;
    ValueKind kind = ValueKind::original;
    // Fingerprint of the value projector that produced these rows; 0 when
    // the matrix was built by hand.
    std::uint64_t projector_fp = 0;
};

// The W_V map of one layer, d_c x d.
struct ValueProjector {
    linalg::Mat matrix;

    std::uint64_t fingerprint() const;
};

// Shift-factor hyperparameters:
//   delta(x, y) = s / (1 + exp(-p (cos(x, y) - epsilon)))
struct ShiftConfig {
    double s = 2.0;
    double p = 100.0;
    double epsilon = 0.93;
    double zero_tol = 1e-12;

    // Throws ConfigError unless s > 0, p > 0 and epsilon in (0, 1).
    void validate() const;
};

// How the per-token erasure coefficient delta is chosen:
//   projection - plain orthogonal-complement projection (delta absent)
//   unit_shift - the shifted code path with delta identically 1; must agree
//                with projection and exists so the two code paths are
//                independently testable
//   sigmoid    - the adaptive shift factor
enum class ShiftMode { projection, unit_shift, sigmoid };

inline ShiftMode mode_from_adaptive(bool adaptive) {
    return adaptive ? ShiftMode::sigmoid : ShiftMode::projection;
}

// Row-wise linear map: values = embeddings * projector. Output kind is
// original and carries the projector fingerprint.
ValueMatrix compute_values(const tokens::EmbeddingMatrix& emb,
                           const ValueProjector& proj);

// compute_values on a target-preprocessed embedding, then zero row 0.
// Throws WrongProvenance unless the embedding is target-preprocessed.
ValueMatrix make_target_values(const tokens::EmbeddingMatrix& emb_pre,
                               const ValueProjector& proj);

// Sigmoid shift factor; a zero-norm input on either side is treated as
// cosine 0, i.e. essentially no erasure for any epsilon >= 0.5.
double shift_factor(const linalg::Vec& vt, const linalg::Vec& v,
                    const ShiftConfig& cfg);

// Single-concept erasure. Per token j >= 1:
//   v_r = v - delta * (vt.v / vt.vt) * vt
// with delta = 1 in projection/unit_shift mode and the sigmoid factor in
// sigmoid mode. Row 0 is copied unchanged; zero target rows pass v through.
// v_orig may be original or erased (so double application is expressible);
// v_target must be target-modified.
ValueMatrix erase_single(const ValueMatrix& v_orig,
                         const ValueMatrix& v_target, const ShiftConfig& cfg,
                         ShiftMode mode);

// Per-position orthonormal bases over n target concepts. Position 0 is
// intentionally absent ([SOT] is never erased).
struct TargetBasis {
    struct Position {
        std::vector<linalg::Vec> raw;  // v_t^{h,j}, h = 0..n-1
        linalg::OrthonormalSet ortho;  // basis o_t^{h,j} and weights W_j
    };

    std::size_t token_length = 0;
    std::size_t dim = 0;
    std::size_t concepts = 0;
    std::uint64_t projector_fp = 0;
    std::vector<Position> positions;  // index 0 holds token position 1

    const Position& at(std::size_t token_position) const {
        return positions[token_position - 1];
    }
};

// Gram-Schmidt per token position over the target value vectors. Throws
// LinearlyDependentConcepts(position, index) when a concept's value vector
// falls into the span of the previous ones, mirroring the assumption that
// concepts to erase are semantically distinct.
TargetBasis build_target_basis(const std::vector<ValueMatrix>& targets,
                               double dep_tol = 1e-8);

// Multi-concept erasure. Per token j >= 1, in projection mode
//   v_r = v - sum_h (o_h . v) o_h
// and in unit_shift/sigmoid mode
//   v_r = v - sum_h delta_h (sum_k W[h][k] (o_k . v)) v_t^h
// with W the Gram-Schmidt weight matrix, so the removed component is a
// combination of the raw target vectors. Row 0 is copied unchanged.
ValueMatrix erase_multi(const ValueMatrix& v_orig, const TargetBasis& basis,
                        const ShiftConfig& cfg, ShiftMode mode);

}  // namespace orthoerase::eraser
