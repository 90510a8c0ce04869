#include "orthoerase/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace orthoerase::linalg {

namespace {

void require_same_dim(const Vec& x, const Vec& y, const char* where) {
    if (x.size() != y.size()) {
        throw DimensionMismatch(std::string(where) + ": dims " +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
    }
}

}  // namespace

void Mat::set_row(std::size_t r, const Vec& v) {
    if (v.size() != cols) {
        throw DimensionMismatch("Mat::set_row: row length " +
                                std::to_string(v.size()) + " vs cols " +
                                std::to_string(cols));
    }
    std::copy(v.begin(), v.end(),
              data.begin() + static_cast<std::ptrdiff_t>(r * cols));
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) {
        throw DimensionMismatch("matmul: " + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows));
    }
    Mat out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

Mat transpose(const Mat& a) {
    Mat out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out(j, i) = a(i, j);
        }
    }
    return out;
}

double dot(const Vec& x, const Vec& y) {
    require_same_dim(x, y, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec add(const Vec& x, const Vec& y) {
    require_same_dim(x, y, "add");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
}

Vec sub(const Vec& x, const Vec& y) {
    require_same_dim(x, y, "sub");
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
}

Vec scale(const Vec& x, double a) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
    return out;
}

void axpy(Vec& y, double a, const Vec& x) {
    require_same_dim(y, x, "axpy");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

bool all_finite(const Vec& x) {
    return std::all_of(x.begin(), x.end(),
                       [](double v) { return std::isfinite(v); });
}

bool all_finite(const Mat& m) {
    return std::all_of(m.data.begin(), m.data.end(),
                       [](double v) { return std::isfinite(v); });
}

void require_finite(const Vec& x, const char* where) {
    if (!all_finite(x)) {
        throw NonFiniteValue(std::string(where) + ": non-finite entry");
    }
}

void require_finite(const Mat& m, const char* where) {
    if (!all_finite(m.data)) {
        throw NonFiniteValue(std::string(where) + ": non-finite entry");
    }
}

double cosine(const Vec& x, const Vec& y, double zero_tol) {
    require_same_dim(x, y, "cosine");
    require_finite(x, "cosine");
    require_finite(y, "cosine");
    const double nx = norm(x);
    const double ny = norm(y);
    if (nx < zero_tol || ny < zero_tol) {
        throw ZeroNorm("cosine: norm below zero_tol");
    }
    return std::clamp(dot(x, y) / (nx * ny), -1.0, 1.0);
}

OrthonormalSet gram_schmidt(const std::vector<Vec>& vectors, double dep_tol) {
    const std::size_t n = vectors.size();
    if (n == 0) {
        throw std::invalid_argument("gram_schmidt: empty input");
    }
    for (const Vec& v : vectors) {
        require_same_dim(v, vectors.front(), "gram_schmidt");
        require_finite(v, "gram_schmidt");
    }

    OrthonormalSet out;
    out.basis.reserve(n);
    // Upper-triangular R with [v_1 .. v_n] = [o_1 .. o_n] R.
    Mat r(n, n);

    for (std::size_t i = 0; i < n; ++i) {
        const double input_norm = norm(vectors[i]);
        Vec u = vectors[i];
        // MGS sweep plus one re-orthogonalization pass; coefficients from
        // both passes accumulate into the same R entry.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < i; ++k) {
                const double c = dot(out.basis[k], u);
                axpy(u, -c, out.basis[k]);
                r(k, i) += c;
            }
        }
        const double residual = norm(u);
        if (input_norm == 0.0 || residual <= dep_tol * input_norm) {
            throw LinearlyDependent(
                i, "gram_schmidt: vector " + std::to_string(i) +
                       " is linearly dependent on its predecessors");
        }
        r(i, i) = residual;
        out.basis.push_back(scale(u, 1.0 / residual));
    }

    // W = R^{-1} by back substitution; upper triangular like R.
    Mat w(n, n);
    for (std::size_t jj = n; jj-- > 0;) {
        w(jj, jj) = 1.0 / r(jj, jj);
        for (std::size_t ii = jj; ii-- > 0;) {
            double s = 0.0;
            for (std::size_t k = ii + 1; k <= jj; ++k) {
                s += r(ii, k) * w(k, jj);
            }
            w(ii, jj) = -s / r(ii, ii);
        }
    }
    out.weights = std::move(w);
    return out;
}

Vec project_complement_basis(const Vec& v, const OrthonormalSet& basis) {
    require_finite(v, "project_complement_basis");
    Vec out = v;
    for (const Vec& o : basis.basis) {
        require_same_dim(v, o, "project_complement_basis");
        axpy(out, -dot(o, out), o);
    }
    return out;
}

namespace {

// Diagonally pivoted Cholesky of a symmetric positive definite matrix.
// P g P^T = L L^T with P recorded as an index permutation.
struct PivotedCholesky {
    Mat l;                      // lower triangular
    std::vector<std::size_t> perm;
};

PivotedCholesky pivoted_cholesky(Mat g, double cond_max) {
    const std::size_t n = g.rows;
    PivotedCholesky f;
    f.perm.resize(n);
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});

    // Work in place; the trailing block is updated on both triangles so the
    // symmetric row/column swaps stay exact.
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t j = k + 1; j < n; ++j) {
            if (g(j, j) > g(pivot, pivot)) pivot = j;
        }
        if (pivot != k) {
            std::swap(f.perm[k], f.perm[pivot]);
            for (std::size_t j = 0; j < n; ++j) std::swap(g(k, j), g(pivot, j));
            for (std::size_t j = 0; j < n; ++j) std::swap(g(j, k), g(j, pivot));
        }
        const double diag = g(k, k);
        if (!(diag > 0.0)) {
            throw SingularGram("project_complement_inverse: Gram matrix is "
                               "not positive definite");
        }
        const double lkk = std::sqrt(diag);
        g(k, k) = lkk;
        for (std::size_t i = k + 1; i < n; ++i) {
            g(i, k) /= lkk;
        }
        for (std::size_t j = k + 1; j < n; ++j) {
            for (std::size_t i = k + 1; i < n; ++i) {
                g(i, j) -= g(i, k) * g(j, k);
            }
        }
    }

    // Pivot-ratio condition estimate: cond(G) >= (max pivot / min pivot).
    double dmax = 0.0, dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const double p = g(k, k) * g(k, k);
        dmax = std::max(dmax, p);
        dmin = std::min(dmin, p);
    }
    if (dmax / dmin > cond_max) {
        throw SingularGram(
            "project_complement_inverse: Gram condition estimate " +
            std::to_string(dmax / dmin) + " exceeds cond_max");
    }

    f.l = Mat(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) f.l(i, j) = g(i, j);
    }
    return f;
}

}  // namespace

Vec project_complement_inverse(const Vec& v, const Mat& spanning,
                               double cond_max) {
    require_finite(v, "project_complement_inverse");
    require_finite(spanning, "project_complement_inverse");
    const std::size_t d = spanning.rows;
    const std::size_t n = spanning.cols;
    if (v.size() != d) {
        throw DimensionMismatch("project_complement_inverse: vector dim " +
                                std::to_string(v.size()) + " vs " +
                                std::to_string(d));
    }
    if (n == 0) return v;

    // Gram matrix G = S^T S and right-hand side b = S^T v.
    Mat g(n, n);
    Vec b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                s += spanning(k, i) * spanning(k, j);
            }
            g(i, j) = s;
            g(j, i) = s;
        }
        for (std::size_t k = 0; k < d; ++k) b[i] += spanning(k, i) * v[k];
    }

    const PivotedCholesky f = pivoted_cholesky(std::move(g), cond_max);

    // Solve G x = b through the permuted factorization.
    Vec pb(n);
    for (std::size_t i = 0; i < n; ++i) pb[i] = b[f.perm[i]];
    for (std::size_t i = 0; i < n; ++i) {  // L y = pb
        double s = pb[i];
        for (std::size_t j = 0; j < i; ++j) s -= f.l(i, j) * pb[j];
        pb[i] = s / f.l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {  // L^T z = y
        double s = pb[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.l(j, i) * pb[j];
        pb[i] = s / f.l(i, i);
    }
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i) x[f.perm[i]] = pb[i];

    // v - S x
    Vec out = v;
    for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += spanning(k, i) * x[i];
        out[k] -= s;
    }
    return out;
}

GaussianStats fit_gaussian(const std::vector<Vec>& samples) {
    if (samples.empty()) {
        throw std::invalid_argument("fit_gaussian: no samples");
    }
    const std::size_t d = samples.front().size();
    GaussianStats stats;
    stats.mean.assign(d, 0.0);
    for (const Vec& s : samples) {
        require_same_dim(s, samples.front(), "fit_gaussian");
        for (std::size_t i = 0; i < d; ++i) stats.mean[i] += s[i];
    }
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (double& m : stats.mean) m *= inv_n;

    stats.covariance = Mat(d, d);
    for (const Vec& s : samples) {
        for (std::size_t i = 0; i < d; ++i) {
            const double di = s[i] - stats.mean[i];
            for (std::size_t j = i; j < d; ++j) {
                stats.covariance(i, j) += di * (s[j] - stats.mean[j]);
            }
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            stats.covariance(i, j) *= inv_n;
            stats.covariance(j, i) = stats.covariance(i, j);
        }
    }
    return stats;
}

SymmetricEigen eigen_symmetric(const Mat& a) {
    if (a.rows != a.cols) {
        throw DimensionMismatch("eigen_symmetric: matrix not square");
    }
    const std::size_t n = a.rows;
    Mat m = a;
    Mat q = Mat::identity(n);

    // Cyclic Jacobi. Desk-scale dimensions, so plain sweeps are plenty.
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
        }
        if (off <= 1e-30 * static_cast<double>(n * n)) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t qi = p + 1; qi < n; ++qi) {
                const double apq = m(p, qi);
                if (apq == 0.0) continue;
                const double app = m(p, p);
                const double aqq = m(qi, qi);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, qi);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, qi) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(qi, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(qi, k) = s * mpk + c * mqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double qkp = q(k, p);
                    const double qkq = q(k, qi);
                    q(k, p) = c * qkp - s * qkq;
                    q(k, qi) = s * qkp + c * qkq;
                }
            }
        }
    }

    SymmetricEigen e;
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.values[i] = m(i, i);
    e.vectors = std::move(q);
    return e;
}

namespace {

void require_symmetric(const Mat& m, double tol, const char* where) {
    if (m.rows != m.cols) {
        throw DimensionMismatch(std::string(where) + ": covariance not square");
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = i + 1; j < m.cols; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > tol) {
                throw NotSymmetric(std::string(where) +
                                   ": covariance asymmetric beyond tol");
            }
        }
    }
}

// Q diag(sqrt(clamp(lambda, 0))) Q^T
Mat sqrtm_psd(const Mat& m) {
    const SymmetricEigen e = eigen_symmetric(m);
    const std::size_t n = m.rows;
    Mat out(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lam = std::max(e.values[k], 0.0);
        const double s = std::sqrt(lam);
        if (s == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) {
            const double vis = e.vectors(i, k) * s;
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += vis * e.vectors(j, k);
            }
        }
    }
    return out;
}

}  // namespace

double frechet_gaussian(const GaussianStats& a, const GaussianStats& b,
                        double sym_tol) {
    if (a.mean.size() != b.mean.size()) {
        throw DimensionMismatch("frechet_gaussian: mean dims differ");
    }
    if (a.covariance.rows != a.mean.size() ||
        b.covariance.rows != b.mean.size()) {
        throw DimensionMismatch("frechet_gaussian: covariance dim vs mean dim");
    }
    require_finite(a.mean, "frechet_gaussian");
    require_finite(b.mean, "frechet_gaussian");
    require_finite(a.covariance, "frechet_gaussian");
    require_finite(b.covariance, "frechet_gaussian");
    require_symmetric(a.covariance, sym_tol, "frechet_gaussian");
    require_symmetric(b.covariance, sym_tol, "frechet_gaussian");

    const std::size_t d = a.mean.size();
    double mean_term = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double diff = a.mean[i] - b.mean[i];
        mean_term += diff * diff;
    }

    const Mat sa = sqrtm_psd(a.covariance);
    Mat middle = matmul(matmul(sa, b.covariance), sa);
    // Symmetrize before the second eigendecomposition.
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const double avg = 0.5 * (middle(i, j) + middle(j, i));
            middle(i, j) = avg;
            middle(j, i) = avg;
        }
    }
    // tr((Sa^{1/2} Sb Sa^{1/2})^{1/2}) = sum of sqrt of eigenvalues.
    const SymmetricEigen em = eigen_symmetric(middle);
    double tr_sqrt = 0.0;
    for (double lam : em.values) tr_sqrt += std::sqrt(std::max(lam, 0.0));

    double tr_a = 0.0, tr_b = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        tr_a += a.covariance(i, i);
        tr_b += b.covariance(i, i);
    }

    return std::max(0.0, mean_term + tr_a + tr_b - 2.0 * tr_sqrt);
}

}  // namespace orthoerase::linalg
