#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "orthoerase/eraser.hpp"
#include "orthoerase/linalg.hpp"

namespace orthoerase::checks {

// Randomized projection instance: a query vector plus a spanning set with a
// bounded column condition number (so the Gram matrix stays comfortably
// inside the solver's cond_max).
struct ProjectionInstance {
    linalg::Vec v;
    std::vector<linalg::Vec> spanning;
    linalg::Mat spanning_mat;  // d x n, columns = spanning vectors
};

ProjectionInstance random_projection_instance(std::uint64_t seed,
                                              std::size_t max_n = 8,
                                              std::size_t max_d = 64,
                                              double max_col_cond = 1e3);

// Randomized erase instance: an original value matrix plus n independent
// target-modified matrices of the same shape.
struct EraseInstance {
    eraser::ValueMatrix original;
    std::vector<eraser::ValueMatrix> targets;
};

EraseInstance random_erase_instance(std::uint64_t seed, std::size_t max_n = 4,
                                    std::size_t token_length = 6,
                                    std::size_t max_d = 32);

struct PropertyResult {
    std::string name;
    bool passed = true;
    std::size_t trials = 0;
    std::uint64_t failing_seed = 0;  // instance seed of the first failure
    std::string detail;
};

// The randomized invariant suite behind `check`: oracle equivalence,
// orthogonality, idempotence, Pythagoras, the weight-matrix relation, the
// n=1 and delta==1 reductions, shift-factor shape, [SOT] preservation and
// Frechet symmetry. inject_fault forces one deliberate failure so the
// harness's failure path can be exercised.
std::vector<PropertyResult> run_property_suite(std::size_t trials,
                                               std::uint64_t seed,
                                               bool inject_fault = false);

}  // namespace orthoerase::checks
