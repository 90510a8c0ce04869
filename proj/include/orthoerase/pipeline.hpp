#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orthoerase/attention.hpp"
#include "orthoerase/eraser.hpp"

namespace orthoerase::pipeline {

inline constexpr std::size_t kEraseAllSteps = static_cast<std::size_t>(-1);

struct PipelineConfig {
    std::size_t layers = 4;
    std::size_t steps = 5;
    std::size_t d = 64;    // value/head dimension
    std::size_t d_c = 64;  // embedding dimension
    std::size_t d_z = 16;  // latent channels
    std::size_t l = 77;    // token length
    std::size_t hw = 64;   // spatial positions
    std::uint64_t seed = 0;
    eraser::ShiftConfig shift{};
    bool adaptive = true;
    // Per-step twin evaluation: the erased stack pass starts from the plain
    // trajectory's step input, so per-step differences are attributable to
    // the erasure alone. When false the two trajectories diverge.
    bool twin_eval = true;
    // Erasure is applied to steps < erase_steps; default everywhere.
    std::size_t erase_steps = kEraseAllSteps;
    // Places non-target prompt tokens and target tokens in disjoint
    // embedding coordinate halves and makes every W_V block diagonal, so
    // non-target prompt values are exactly orthogonal to all target values.
    bool orthogonal_split = false;

    void validate() const;

    eraser::ShiftMode mode() const {
        return eraser::mode_from_adaptive(adaptive);
    }
};

// Erased components of one (step, layer) evaluation.
struct ComponentRecord {
    std::size_t step = 0;
    std::size_t layer = 0;
    linalg::Mat components;      // l x d, row j holds v^j - v_r^j
    std::vector<double> norms;   // per token
};

struct ErasureReport {
    std::string prompt;
    std::size_t n_targets = 0;
    std::vector<ComponentRecord> components;  // step-major, layer-minor
    double cs_before = 0.0;
    double cs_after = 0.0;
    double fid = 0.0;
    // Per target concept: whether its value vector met the cosine threshold
    // against any prompt token value at step 0 in any layer.
    std::vector<bool> concept_engaged;

    double mean_component_norm() const;
};

struct RunResult {
    attention::LatentFeatures before;
    attention::LatentFeatures after;
    std::vector<attention::LatentFeatures> before_steps;
    std::vector<attention::LatentFeatures> after_steps;
    ErasureReport report;
};

std::vector<attention::CALayer> build_layers(const PipelineConfig& cfg);
attention::LatentFeatures initial_latent(const PipelineConfig& cfg);

// End-to-end synthetic generation: seeds the latent, walks the layer stack
// per step once plain and once erased, and collects erased components plus
// the CS/FID analogs. With no targets the two passes are bit-identical.
RunResult run(const std::string& prompt,
              const std::vector<std::string>& targets,
              const PipelineConfig& cfg);

// Cosine between the mean-pooled feature vector and the concept's pooled
// toy-encoder embedding mapped through a fixed seeded probe matrix (the last
// layer's value-projector composed with its output map). Zero features give 0.
double cs_analog(const attention::LatentFeatures& features,
                 const std::string& concept_text, const PipelineConfig& cfg);

// Frechet distance between Gaussians fitted to the pooled per-sample mean
// vectors of the two sets. Throws TooFewSamples when either set has < 2.
double fid_analog(const std::vector<attention::LatentFeatures>& set_a,
                  const std::vector<attention::LatentFeatures>& set_b);

struct ScenarioRow {
    std::string prompt;
    std::size_t n_targets = 0;
    double cs = 0.0;
    double fid = 0.0;
    double mean_component_norm = 0.0;
};

// Cumulative multi-concept sweep: n = 0, 1, ..., |targets| target sets, each
// prompt run against each prefix of the target list. Deterministic row order
// (n-major, prompt-minor).
std::vector<ScenarioRow> scenario_multi(
    const std::vector<std::string>& prompts,
    const std::vector<std::string>& targets, const PipelineConfig& cfg);

// Report CSV, one row per (step, layer, token):
//   prompt,n_targets,step,layer,token,component_norm,cs_before,cs_after,fid
// Floats carry 17 significant digits so they round trip exactly.
void write_report_csv(const ErasureReport& report,
                      const std::filesystem::path& path);

// AVDE dumps: components_s<step>_l<layer>.avde per record plus
// features_before_s<step>.avde / features_after_s<step>.avde per step.
void write_run_dumps(const RunResult& result,
                     const std::filesystem::path& dir);

}  // namespace orthoerase::pipeline
