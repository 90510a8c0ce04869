#include "orthoerase/eraser.hpp"

#include <cmath>
#include <string>

#include "orthoerase/errors.hpp"
#include "orthoerase/rng.hpp"

namespace orthoerase::eraser {

std::uint64_t ValueProjector::fingerprint() const {
    std::uint64_t h = fnv1a(&matrix.rows, sizeof(matrix.rows));
    h = fnv1a(&matrix.cols, sizeof(matrix.cols), h);
    return fnv1a(matrix.data.data(), matrix.data.size() * sizeof(double), h);
}

void ShiftConfig::validate() const {
    if (!(s > 0.0)) throw ConfigError("shift config: s must be > 0");
    if (!(p > 0.0)) throw ConfigError("shift config: p must be > 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ConfigError("shift config: epsilon must be in (0, 1)");
    }
    if (!(zero_tol >= 0.0)) {
        throw ConfigError("shift config: zero_tol must be >= 0");
    }
}

ValueMatrix compute_values(const tokens::EmbeddingMatrix& emb,
                           const ValueProjector& proj) {
    if (emb.rows.cols != proj.matrix.rows) {
        throw DimensionMismatch("compute_values: embedding dim " +
                                std::to_string(emb.rows.cols) +
                                " vs projector rows " +
                                std::to_string(proj.matrix.rows));
    }
    linalg::require_finite(emb.rows, "compute_values");
    linalg::require_finite(proj.matrix, "compute_values");

    ValueMatrix out;
    out.rows = linalg::matmul(emb.rows, proj.matrix);
    out.kind = ValueKind::original;
    out.projector_fp = proj.fingerprint();
    return out;
}

ValueMatrix make_target_values(const tokens::EmbeddingMatrix& emb_pre,
                               const ValueProjector& proj) {
    if (emb_pre.provenance != tokens::Provenance::target_preprocessed) {
        throw WrongProvenance(
            "make_target_values: embedding is not target-preprocessed");
    }
    ValueMatrix out = compute_values(emb_pre, proj);
    for (std::size_t c = 0; c < out.rows.cols; ++c) out.rows(0, c) = 0.0;
    out.kind = ValueKind::target_modified;
    return out;
}

double shift_factor(const linalg::Vec& vt, const linalg::Vec& v,
                    const ShiftConfig& cfg) {
    cfg.validate();
    double cos = 0.0;
    try {
        cos = linalg::cosine(vt, v, cfg.zero_tol);
    } catch (const ZeroNorm&) {
        cos = 0.0;
    }
    return cfg.s / (1.0 + std::exp(-cfg.p * (cos - cfg.epsilon)));
}

namespace {

void require_erasable(const ValueMatrix& v_orig, const char* where) {
    if (v_orig.kind == ValueKind::target_modified) {
        throw ShapeMismatch(std::string(where) +
                            ": target-modified matrix passed as the "
                            "original values");
    }
}

}  // namespace

ValueMatrix erase_single(const ValueMatrix& v_orig,
                         const ValueMatrix& v_target, const ShiftConfig& cfg,
                         ShiftMode mode) {
    cfg.validate();
    require_erasable(v_orig, "erase_single");
    if (v_target.kind != ValueKind::target_modified) {
        throw ShapeMismatch("erase_single: target matrix is not "
                            "target-modified");
    }
    if (v_orig.rows.rows != v_target.rows.rows ||
        v_orig.rows.cols != v_target.rows.cols) {
        throw ShapeMismatch("erase_single: value shapes differ");
    }

    ValueMatrix out;
    out.rows = v_orig.rows;
    out.kind = ValueKind::erased;
    out.projector_fp = v_orig.projector_fp;

    for (std::size_t j = 1; j < out.rows.rows; ++j) {
        const linalg::Vec v = v_orig.rows.row(j);
        const linalg::Vec vt = v_target.rows.row(j);
        const double vtvt = linalg::dot(vt, vt);
        if (std::sqrt(vtvt) < cfg.zero_tol) continue;  // zero target row

        double delta = 1.0;
        if (mode == ShiftMode::sigmoid) delta = shift_factor(vt, v, cfg);
        const double coeff = delta * linalg::dot(vt, v) / vtvt;

        linalg::Vec row = v;
        linalg::axpy(row, -coeff, vt);
        out.rows.set_row(j, row);
    }
    return out;
}

TargetBasis build_target_basis(const std::vector<ValueMatrix>& targets,
                               double dep_tol) {
    if (targets.empty()) {
        throw std::invalid_argument("build_target_basis: no targets");
    }
    const std::size_t l = targets.front().rows.rows;
    const std::size_t d = targets.front().rows.cols;
    for (const ValueMatrix& t : targets) {
        if (t.kind != ValueKind::target_modified) {
            throw ShapeMismatch(
                "build_target_basis: matrix is not target-modified");
        }
        if (t.rows.rows != l || t.rows.cols != d) {
            throw ShapeMismatch("build_target_basis: target shapes differ");
        }
        if (t.projector_fp != targets.front().projector_fp) {
            throw BasisLayerMismatch(
                "build_target_basis: targets come from different value "
                "projectors");
        }
    }
    if (l < 2) {
        throw ShapeMismatch("build_target_basis: need at least one "
                            "non-[SOT] token position");
    }

    TargetBasis basis;
    basis.token_length = l;
    basis.dim = d;
    basis.concepts = targets.size();
    basis.projector_fp = targets.front().projector_fp;
    basis.positions.resize(l - 1);

    for (std::size_t j = 1; j < l; ++j) {
        TargetBasis::Position& pos = basis.positions[j - 1];
        pos.raw.reserve(targets.size());
        for (const ValueMatrix& t : targets) pos.raw.push_back(t.rows.row(j));
        try {
            pos.ortho = linalg::gram_schmidt(pos.raw, dep_tol);
        } catch (const LinearlyDependent& e) {
            throw LinearlyDependentConcepts(
                j, e.index(),
                "build_target_basis: concept " + std::to_string(e.index()) +
                    " is linearly dependent at token position " +
                    std::to_string(j));
        }
    }
    return basis;
}

ValueMatrix erase_multi(const ValueMatrix& v_orig, const TargetBasis& basis,
                        const ShiftConfig& cfg, ShiftMode mode) {
    cfg.validate();
    require_erasable(v_orig, "erase_multi");
    if (v_orig.rows.rows != basis.token_length ||
        v_orig.rows.cols != basis.dim) {
        throw ShapeMismatch("erase_multi: value shape vs basis shape");
    }

    const std::size_t n = basis.concepts;
    ValueMatrix out;
    out.rows = v_orig.rows;
    out.kind = ValueKind::erased;
    out.projector_fp = v_orig.projector_fp;

    for (std::size_t j = 1; j < out.rows.rows; ++j) {
        const TargetBasis::Position& pos = basis.at(j);
        linalg::Vec row = v_orig.rows.row(j);

        if (mode == ShiftMode::projection) {
            row = linalg::project_complement_basis(row, pos.ortho);
        } else {
            // Basis coefficients beta_k = o_k . v, brought back to raw
            // target-vector coordinates through the weight matrix.
            const linalg::Vec v = row;
            linalg::Vec beta(n);
            for (std::size_t k = 0; k < n; ++k) {
                beta[k] = linalg::dot(pos.ortho.basis[k], v);
            }
            for (std::size_t h = 0; h < n; ++h) {
                double gamma = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    gamma += pos.ortho.weights(h, k) * beta[k];
                }
                const double delta = (mode == ShiftMode::sigmoid)
                                         ? shift_factor(pos.raw[h], v, cfg)
                                         : 1.0;
                linalg::axpy(row, -delta * gamma, pos.raw[h]);
            }
        }
        out.rows.set_row(j, row);
    }
    return out;
}

}  // namespace orthoerase::eraser
