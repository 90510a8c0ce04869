#pragma once

#include <cstddef>
#include <vector>

#include "orthoerase/errors.hpp"

namespace orthoerase::linalg {

using Vec = std::vector<double>;

// Dense row-major matrix. Small and value-semantic; everything in this
// project is desk scale, so no attempt is made at BLAS-level performance.
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, rows * cols entries

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        return data[r * cols + c];
    }

    Vec row(std::size_t r) const {
        return Vec(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                   data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    }
    void set_row(std::size_t r, const Vec& v);

    static Mat identity(std::size_t n);
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

double dot(const Vec& x, const Vec& y);
double norm(const Vec& x);
Vec add(const Vec& x, const Vec& y);
Vec sub(const Vec& x, const Vec& y);
Vec scale(const Vec& x, double a);
// y += a * x
void axpy(Vec& y, double a, const Vec& x);

bool all_finite(const Vec& x);
bool all_finite(const Mat& m);
// Throws NonFiniteValue when an entry is NaN or infinite.
void require_finite(const Vec& x, const char* where);
void require_finite(const Mat& m, const char* where);

// Orthonormal basis of a vector span together with the upper-triangular
// weight matrix W mapping the original inputs onto the basis:
//   [v_1 ... v_n] * W = [o_1 ... o_n]   (vectors as columns)
struct OrthonormalSet {
    std::vector<Vec> basis;
    Mat weights;  // n x n, upper triangular

    std::size_t size() const { return basis.size(); }
    std::size_t dim() const { return basis.empty() ? 0 : basis.front().size(); }
};

// Cosine similarity x.y / (|x| |y|), clamped to [-1, 1] against rounding.
// Throws ZeroNorm if either norm is below zero_tol; callers decide the
// zero-vector policy themselves.
double cosine(const Vec& x, const Vec& y, double zero_tol = 1e-12);

// Modified Gram-Schmidt with one re-orthogonalization pass. Returns the
// orthonormal basis and the weight matrix W = R^{-1} taken straight from the
// triangular bookkeeping rather than from a post-hoc solve. Throws
// LinearlyDependent(i) when vector i's residual norm falls below
// dep_tol * |input_i|.
OrthonormalSet gram_schmidt(const std::vector<Vec>& vectors,
                            double dep_tol = 1e-8);

// v minus its projection onto the span of the basis:
//   v - sum_h (o_h . v) o_h
Vec project_complement_basis(const Vec& v, const OrthonormalSet& basis);

// Same projection computed with the raw spanning set, inverse form:
//   (I - S (S^T S)^{-1} S^T) v
// where `spanning` is d x n with linearly independent columns. The n x n
// Gram matrix is factored by a diagonally pivoted Cholesky; throws
// SingularGram when the pivot-ratio condition estimate exceeds cond_max.
Vec project_complement_inverse(const Vec& v, const Mat& spanning,
                               double cond_max = 1e12);

// First and second moments of a feature distribution.
struct GaussianStats {
    Vec mean;
    Mat covariance;  // d x d symmetric
};

// Population-covariance fit (divides by N); well defined for one sample.
GaussianStats fit_gaussian(const std::vector<Vec>& samples);

// Squared Frechet distance between two Gaussians:
//   |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa^{1/2} Sb Sa^{1/2})^{1/2})
// Matrix square roots go through a symmetric eigendecomposition with
// negative eigenvalues clamped to zero; the result is clamped to be >= 0.
double frechet_gaussian(const GaussianStats& a, const GaussianStats& b,
                        double sym_tol = 1e-9);

// Eigendecomposition of a symmetric matrix (cyclic Jacobi). Columns of
// `vectors` are the eigenvectors: a = vectors * diag(values) * vectors^T.
struct SymmetricEigen {
    Vec values;
    Mat vectors;
};
SymmetricEigen eigen_symmetric(const Mat& a);

}  // namespace orthoerase::linalg
