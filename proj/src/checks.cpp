#include "orthoerase/checks.hpp"

#include <cmath>
#include <functional>

#include "orthoerase/rng.hpp"

namespace orthoerase::checks {

namespace {

linalg::Vec random_vec(SplitMix64& rng, std::size_t d) {
    linalg::Vec v(d);
    for (double& x : v) x = rng.next_gaussian();
    return v;
}

// Orthonormal columns through Gram-Schmidt of gaussian draws; retries on the
// (measure-zero) dependent case.
std::vector<linalg::Vec> random_orthonormal(SplitMix64& rng, std::size_t n,
                                            std::size_t d) {
    for (;;) {
        std::vector<linalg::Vec> cols;
        cols.reserve(n);
        for (std::size_t i = 0; i < n; ++i) cols.push_back(random_vec(rng, d));
        try {
            return linalg::gram_schmidt(cols).basis;
        } catch (const LinearlyDependent&) {
            continue;
        }
    }
}

}  // namespace

ProjectionInstance random_projection_instance(std::uint64_t seed,
                                              std::size_t max_n,
                                              std::size_t max_d,
                                              double max_col_cond) {
    SplitMix64 rng(seed);
    const std::size_t n = 1 + rng.next() % max_n;
    const std::size_t d =
        std::max<std::size_t>(n + 1, 2 + rng.next() % (max_d - 1));

    // spanning = U diag(sigma) Q^T with orthonormal U (d x n) and Q (n x n);
    // the column condition number is exactly sigma_max / sigma_min.
    const std::vector<linalg::Vec> u = random_orthonormal(rng, n, d);
    const std::vector<linalg::Vec> q = random_orthonormal(rng, n, n);
    linalg::Vec sigma(n, 1.0);
    for (std::size_t k = 1; k < n; ++k) {
        // log-uniform in [1/max_col_cond, 1]
        sigma[k] = std::exp(-rng.next_unit() * std::log(max_col_cond));
    }

    ProjectionInstance inst;
    inst.spanning_mat = linalg::Mat(d, n);
    for (std::size_t j = 0; j < n; ++j) {
        linalg::Vec col(d, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            linalg::axpy(col, sigma[k] * q[k][j], u[k]);
        }
        for (std::size_t i = 0; i < d; ++i) inst.spanning_mat(i, j) = col[i];
        inst.spanning.push_back(std::move(col));
    }
    inst.v = random_vec(rng, d);
    return inst;
}

EraseInstance random_erase_instance(std::uint64_t seed, std::size_t max_n,
                                    std::size_t token_length,
                                    std::size_t max_d) {
    SplitMix64 rng(seed);
    const std::size_t n = 1 + rng.next() % max_n;
    const std::size_t d =
        std::max<std::size_t>(n + 1, 2 + rng.next() % (max_d - 1));

    EraseInstance inst;
    inst.original.rows = linalg::Mat(token_length, d);
    inst.original.kind = eraser::ValueKind::original;
    for (double& x : inst.original.rows.data) x = rng.next_gaussian();

    inst.targets.reserve(n);
    for (std::size_t h = 0; h < n; ++h) {
        eraser::ValueMatrix t;
        t.rows = linalg::Mat(token_length, d);
        t.kind = eraser::ValueKind::target_modified;
        for (std::size_t j = 1; j < token_length; ++j) {
            for (std::size_t c = 0; c < d; ++c) {
                t.rows(j, c) = rng.next_gaussian();
            }
        }
        inst.targets.push_back(std::move(t));
    }
    return inst;
}

namespace {

using Trial = std::function<bool(std::uint64_t inst_seed, std::string& detail)>;

PropertyResult run_property(const std::string& name, std::size_t trials,
                            std::uint64_t seed, const Trial& trial) {
    PropertyResult res;
    res.name = name;
    res.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t inst_seed = derive_seed(seed, name, t);
        std::string detail;
        if (!trial(inst_seed, detail)) {
            res.passed = false;
            res.failing_seed = inst_seed;
            res.detail = detail;
            break;
        }
    }
    return res;
}

double max_abs_diff(const linalg::Vec& a, const linalg::Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double max_abs_diff(const linalg::Mat& a, const linalg::Mat& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    }
    return m;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(std::size_t trials,
                                               std::uint64_t seed,
                                               bool inject_fault) {
    std::vector<PropertyResult> results;
    const eraser::ShiftConfig cfg;

    results.push_back(run_property(
        "oracle-equivalence", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const ProjectionInstance inst = random_projection_instance(s);
            const linalg::OrthonormalSet basis =
                linalg::gram_schmidt(inst.spanning);
            const linalg::Vec via_basis =
                linalg::project_complement_basis(inst.v, basis);
            const linalg::Vec via_inverse =
                linalg::project_complement_inverse(inst.v, inst.spanning_mat);
            const double diff = max_abs_diff(via_basis, via_inverse);
            if (inject_fault || diff >= 1e-8) {
                detail = "max diff " + std::to_string(diff);
                return false;
            }
            return true;
        }));

    results.push_back(run_property(
        "orthogonality", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const EraseInstance inst = random_erase_instance(s);
            const eraser::TargetBasis basis =
                eraser::build_target_basis(inst.targets);
            const eraser::ValueMatrix erased = eraser::erase_multi(
                inst.original, basis, cfg, eraser::ShiftMode::projection);
            for (std::size_t j = 1; j < erased.rows.rows; ++j) {
                const linalg::Vec vr = erased.rows.row(j);
                const double vn = linalg::norm(inst.original.rows.row(j));
                for (const linalg::Vec& vt : basis.at(j).raw) {
                    if (std::abs(linalg::dot(vt, vr)) / linalg::norm(vt) >
                        1e-10 * vn) {
                        detail = "residual aligned with a target at token " +
                                 std::to_string(j);
                        return false;
                    }
                }
            }
            return true;
        }));

    results.push_back(run_property(
        "idempotence", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const EraseInstance inst = random_erase_instance(s);
            const eraser::TargetBasis basis =
                eraser::build_target_basis(inst.targets);
            const eraser::ValueMatrix once = eraser::erase_multi(
                inst.original, basis, cfg, eraser::ShiftMode::projection);
            const eraser::ValueMatrix twice = eraser::erase_multi(
                once, basis, cfg, eraser::ShiftMode::projection);
            const double diff = max_abs_diff(once.rows, twice.rows);
            if (diff >= 1e-10) {
                detail = "double application drifted by " +
                         std::to_string(diff);
                return false;
            }
            return true;
        }));

    results.push_back(run_property(
        "pythagoras", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const ProjectionInstance inst = random_projection_instance(s);
            const linalg::OrthonormalSet basis =
                linalg::gram_schmidt(inst.spanning);
            const linalg::Vec vr =
                linalg::project_complement_basis(inst.v, basis);
            const double v2 = linalg::dot(inst.v, inst.v);
            const double vr2 = linalg::dot(vr, vr);
            const linalg::Vec comp = linalg::sub(inst.v, vr);
            const double c2 = linalg::dot(comp, comp);
            if (std::abs(v2 - vr2 - c2) > 1e-9 * v2) {
                detail = "norm split off by " + std::to_string(v2 - vr2 - c2);
                return false;
            }
            return true;
        }));

    results.push_back(run_property(
        "weights-relation", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const ProjectionInstance inst = random_projection_instance(s);
            const linalg::OrthonormalSet set =
                linalg::gram_schmidt(inst.spanning);
            const std::size_t n = set.size();
            const std::size_t d = set.dim();
            // Column h of [v_1 .. v_n] W must equal o_h.
            for (std::size_t h = 0; h < n; ++h) {
                linalg::Vec col(d, 0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    linalg::axpy(col, set.weights(k, h), inst.spanning[k]);
                }
                if (max_abs_diff(col, set.basis[h]) >= 1e-10) {
                    detail = "inputs * W != basis at column " +
                             std::to_string(h);
                    return false;
                }
            }
            return true;
        }));

    results.push_back(run_property(
        "reduction-single", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            EraseInstance inst = random_erase_instance(s, /*max_n=*/1);
            inst.targets.resize(1);
            const eraser::TargetBasis basis =
                eraser::build_target_basis(inst.targets);
            for (const eraser::ShiftMode mode :
                 {eraser::ShiftMode::projection, eraser::ShiftMode::sigmoid}) {
                const eraser::ValueMatrix multi =
                    eraser::erase_multi(inst.original, basis, cfg, mode);
                const eraser::ValueMatrix single = eraser::erase_single(
                    inst.original, inst.targets.front(), cfg, mode);
                const double diff = max_abs_diff(multi.rows, single.rows);
                if (diff >= 1e-10) {
                    detail = "n=1 multi vs single differ by " +
                             std::to_string(diff);
                    return false;
                }
            }
            return true;
        }));

    results.push_back(run_property(
        "reduction-unit-shift", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            const EraseInstance inst = random_erase_instance(s);
            const eraser::TargetBasis basis =
                eraser::build_target_basis(inst.targets);
            const eraser::ValueMatrix off = eraser::erase_multi(
                inst.original, basis, cfg, eraser::ShiftMode::projection);
            const eraser::ValueMatrix unit = eraser::erase_multi(
                inst.original, basis, cfg, eraser::ShiftMode::unit_shift);
            const double diff = max_abs_diff(off.rows, unit.rows);
            if (diff >= 1e-10) {
                detail = "delta==1 vs projection differ by " +
                         std::to_string(diff);
                return false;
            }
            return true;
        }));

    results.push_back(run_property(
        "shift-shape", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            // Strictly increasing in cosine and bounded in (0, s), with the
            // midpoint value s/2 at cosine == epsilon, over random
            // hyperparameters.
            SplitMix64 rng(s);
            eraser::ShiftConfig c;
            c.s = 0.5 + 3.0 * rng.next_unit();
            c.p = 5.0 + 200.0 * rng.next_unit();
            c.epsilon = 0.05 + 0.9 * rng.next_unit();

            const linalg::Vec x{1.0, 0.0};
            double previous = -1.0;
            for (int k = 0; k <= 40; ++k) {
                const double cos = -1.0 + 2.0 * k / 40.0;
                const linalg::Vec y{cos, std::sqrt(1.0 - cos * cos)};
                const double delta = eraser::shift_factor(x, y, c);
                // Strictly increasing and inside (0, s); at large p the top
                // of the sigmoid saturates to s in double precision, where
                // only non-decrease can be asked for.
                const bool saturated = delta >= c.s * (1.0 - 1e-12);
                const bool increasing =
                    saturated ? delta >= previous : delta > previous;
                if (!(delta > 0.0) || delta > c.s || !increasing) {
                    detail = "sigmoid shape violated at cos " +
                             std::to_string(cos);
                    return false;
                }
                previous = delta;
            }
            const linalg::Vec y{c.epsilon,
                                std::sqrt(1.0 - c.epsilon * c.epsilon)};
            if (std::abs(eraser::shift_factor(x, y, c) - c.s / 2.0) > 1e-9) {
                detail = "midpoint is not s/2";
                return false;
            }
            return true;
        }));

    results.push_back(run_property(
        "sot-preservation", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            EraseInstance inst = random_erase_instance(s);
            // Give the [SOT] row nonzero content to make the check real.
            SplitMix64 rng(derive_seed(s, "sot"));
            for (std::size_t c = 0; c < inst.original.rows.cols; ++c) {
                inst.original.rows(0, c) = rng.next_gaussian();
            }
            const eraser::TargetBasis basis =
                eraser::build_target_basis(inst.targets);
            for (const eraser::ShiftMode mode :
                 {eraser::ShiftMode::projection, eraser::ShiftMode::unit_shift,
                  eraser::ShiftMode::sigmoid}) {
                const eraser::ValueMatrix erased =
                    eraser::erase_multi(inst.original, basis, cfg, mode);
                for (std::size_t c = 0; c < erased.rows.cols; ++c) {
                    if (erased.rows(0, c) != inst.original.rows(0, c)) {
                        detail = "[SOT] row changed";
                        return false;
                    }
                }
            }
            return true;
        }));

    results.push_back(run_property(
        "frechet-symmetry", trials, seed,
        [&](std::uint64_t s, std::string& detail) {
            SplitMix64 rng(s);
            const std::size_t d = 2 + rng.next() % 6;
            auto random_stats = [&]() {
                linalg::GaussianStats g;
                g.mean = random_vec(rng, d);
                linalg::Mat a(d, d);
                for (double& x : a.data) x = rng.next_gaussian();
                g.covariance = linalg::matmul(linalg::transpose(a), a);
                return g;
            };
            const linalg::GaussianStats a = random_stats();
            const linalg::GaussianStats b = random_stats();
            const double ab = linalg::frechet_gaussian(a, b);
            const double ba = linalg::frechet_gaussian(b, a);
            if (std::abs(ab - ba) > 1e-8 * (1.0 + std::abs(ab))) {
                detail = "asymmetry " + std::to_string(ab - ba);
                return false;
            }
            if (linalg::frechet_gaussian(a, a) > 1e-8) {
                detail = "self distance not ~0";
                return false;
            }
            return true;
        }));

    return results;
}

}  // namespace orthoerase::checks
