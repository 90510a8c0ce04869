#include "orthoerase/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "orthoerase/errors.hpp"
#include "orthoerase/io_util.hpp"
#include "orthoerase/avde.hpp"
#include "orthoerase/rng.hpp"

namespace orthoerase::pipeline {

namespace {

bool is_target(const std::string& prompt,
               const std::vector<std::string>& targets) {
    return std::find(targets.begin(), targets.end(), prompt) != targets.end();
}

tokens::ChannelBand prompt_band(const PipelineConfig& cfg, bool target_side) {
    if (!cfg.orthogonal_split) return {};
    return target_side ? tokens::ChannelBand{cfg.d_c / 2, cfg.d_c}
                       : tokens::ChannelBand{0, cfg.d_c / 2};
}

linalg::Vec pooled_mean(const attention::LatentFeatures& f) {
    linalg::Vec mean(f.channels(), 0.0);
    for (std::size_t i = 0; i < f.positions(); ++i) {
        for (std::size_t c = 0; c < f.channels(); ++c) {
            mean[c] += f.data(i, c);
        }
    }
    const double inv = 1.0 / static_cast<double>(f.positions());
    for (double& x : mean) x *= inv;
    return mean;
}

double fid_from_samples(const std::vector<attention::LatentFeatures>& set_a,
                        const std::vector<attention::LatentFeatures>& set_b) {
    std::vector<linalg::Vec> a, b;
    a.reserve(set_a.size());
    b.reserve(set_b.size());
    for (const auto& f : set_a) a.push_back(pooled_mean(f));
    for (const auto& f : set_b) b.push_back(pooled_mean(f));
    return linalg::frechet_gaussian(linalg::fit_gaussian(a),
                                    linalg::fit_gaussian(b));
}

void append_17g(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

// Minimal CSV quoting: wrap in quotes when the field contains a comma,
// quote or newline, doubling embedded quotes.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    if (layers < 1 || steps < 1 || d < 1 || d_c < 1 || d_z < 1 || hw < 1) {
        throw ConfigError("pipeline config: all counts must be >= 1");
    }
    if (l < 3) {
        throw ConfigError("pipeline config: token length must be >= 3");
    }
    if (orthogonal_split && (d_c % 2 != 0 || d % 2 != 0)) {
        throw ConfigError(
            "pipeline config: orthogonal split needs even d_c and d");
    }
    shift.validate();
}

double ErasureReport::mean_component_norm() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const ComponentRecord& rec : components) {
        for (double n : rec.norms) sum += n;
        count += rec.norms.size();
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::vector<attention::CALayer> build_layers(const PipelineConfig& cfg) {
    std::vector<attention::CALayer> layers;
    layers.reserve(cfg.layers);
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        layers.push_back(attention::CALayer::seeded(
            derive_seed(cfg.seed, "layer", i), cfg.d_c, cfg.d_z, cfg.d,
            cfg.orthogonal_split));
    }
    return layers;
}

attention::LatentFeatures initial_latent(const PipelineConfig& cfg) {
    SplitMix64 rng(derive_seed(cfg.seed, "latent"));
    attention::LatentFeatures z;
    z.data = linalg::Mat(cfg.hw, cfg.d_z);
    for (double& x : z.data.data) x = rng.next_gaussian();
    return z;
}

RunResult run(const std::string& prompt,
              const std::vector<std::string>& targets,
              const PipelineConfig& cfg) {
    cfg.validate();
    const std::size_t n = targets.size();
    const eraser::ShiftMode mode = cfg.mode();

    const tokens::TokenSequence prompt_tokens = tokens::tokenize(prompt, cfg.l);
    const tokens::EmbeddingMatrix emb = tokens::encode_causal(
        prompt_tokens, cfg.seed, cfg.d_c, tokens::Provenance::prompt,
        prompt_band(cfg, is_target(prompt, targets)));

    const std::vector<attention::CALayer> layers = build_layers(cfg);

    // Target embeddings and per-layer bases.
    std::vector<tokens::EmbeddingMatrix> target_embs;
    target_embs.reserve(n);
    for (const std::string& target : targets) {
        const tokens::TokenSequence ts = tokens::tokenize(target, cfg.l);
        const tokens::EmbeddingMatrix raw = tokens::encode_causal(
            ts, cfg.seed, cfg.d_c, tokens::Provenance::target_raw,
            prompt_band(cfg, /*target_side=*/true));
        target_embs.push_back(tokens::preprocess_target(raw, ts));
    }
    std::vector<eraser::TargetBasis> bases;
    if (n > 0) {
        bases.reserve(cfg.layers);
        for (std::size_t i = 0; i < cfg.layers; ++i) {
            std::vector<eraser::ValueMatrix> target_values;
            target_values.reserve(n);
            for (const tokens::EmbeddingMatrix& te : target_embs) {
                target_values.push_back(
                    eraser::make_target_values(te, layers[i].value_proj));
            }
            bases.push_back(eraser::build_target_basis(target_values));
        }
    }

    RunResult result;
    result.report.prompt = prompt;
    result.report.n_targets = n;
    result.report.concept_engaged.assign(n, false);
    result.before_steps.reserve(cfg.steps);
    result.after_steps.reserve(cfg.steps);

    attention::LatentFeatures z_before = initial_latent(cfg);
    attention::LatentFeatures z_after = z_before;

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const bool erase_this_step = n > 0 && step < cfg.erase_steps;

        attention::LatentFeatures plain = z_before;
        for (const attention::CALayer& layer : layers) {
            plain = attention::forward(plain, emb, layer);
        }

        attention::LatentFeatures erased = cfg.twin_eval ? z_before : z_after;
        for (std::size_t i = 0; i < cfg.layers; ++i) {
            ComponentRecord rec;
            rec.step = step;
            rec.layer = i;
            if (erase_this_step) {
                const eraser::ValueMatrix values =
                    eraser::compute_values(emb, layers[i].value_proj);
                attention::ErasedForward ef = attention::forward_erased(
                    erased, emb, layers[i], bases[i], cfg.shift, mode);
                rec.components =
                    linalg::Mat(values.rows.rows, values.rows.cols);
                for (std::size_t k = 0; k < rec.components.data.size(); ++k) {
                    rec.components.data[k] =
                        values.rows.data[k] - ef.erased_values.rows.data[k];
                }
                erased = std::move(ef.features);

                if (step == 0) {
                    for (std::size_t h = 0; h < n; ++h) {
                        if (result.report.concept_engaged[h]) continue;
                        for (std::size_t j = 1; j < cfg.l; ++j) {
                            double cos = 0.0;
                            try {
                                cos = linalg::cosine(bases[i].at(j).raw[h],
                                                     values.rows.row(j),
                                                     cfg.shift.zero_tol);
                            } catch (const ZeroNorm&) {
                                continue;
                            }
                            if (cos >= cfg.shift.epsilon) {
                                result.report.concept_engaged[h] = true;
                                break;
                            }
                        }
                    }
                }
            } else {
                erased = attention::forward(erased, emb, layers[i]);
                rec.components = linalg::Mat(cfg.l, cfg.d);
            }
            rec.norms.resize(cfg.l);
            for (std::size_t j = 0; j < cfg.l; ++j) {
                rec.norms[j] = linalg::norm(rec.components.row(j));
            }
            result.report.components.push_back(std::move(rec));
        }

        result.before_steps.push_back(plain);
        result.after_steps.push_back(erased);
        z_before = std::move(plain);
        z_after = std::move(erased);
    }

    result.before = z_before;
    result.after = z_after;
    result.report.cs_before = cs_analog(result.before, prompt, cfg);
    result.report.cs_after = cs_analog(result.after, prompt, cfg);
    result.report.fid =
        fid_from_samples(result.before_steps, result.after_steps);
    return result;
}

double cs_analog(const attention::LatentFeatures& features,
                 const std::string& concept_text, const PipelineConfig& cfg) {
    cfg.validate();
    const std::vector<attention::CALayer> layers = build_layers(cfg);
    const attention::CALayer& last = layers.back();
    // Fixed seeded probe: the last layer's value path composed with its
    // output map, d_c x d_z.
    const linalg::Mat probe =
        linalg::matmul(last.value_proj.matrix, last.output_map);

    const tokens::TokenSequence ts = tokens::tokenize(concept_text, cfg.l);
    const tokens::EmbeddingMatrix emb =
        tokens::encode_causal(ts, cfg.seed, cfg.d_c);
    // Pool over every non-[SOT] row. The [EOT] tail carries the causally
    // mixed prompt content, so this tracks the attention-weighted value mean
    // the features are built from.
    linalg::Vec pooled(cfg.d_c, 0.0);
    for (std::size_t j = 1; j < cfg.l; ++j) {
        const linalg::Vec row = emb.rows.row(j);
        for (std::size_t i = 0; i < cfg.d_c; ++i) pooled[i] += row[i];
    }
    const double inv = 1.0 / static_cast<double>(cfg.l - 1);
    for (double& x : pooled) x *= inv;

    linalg::Vec probe_vec(cfg.d_z, 0.0);
    for (std::size_t i = 0; i < cfg.d_c; ++i) {
        if (pooled[i] == 0.0) continue;
        for (std::size_t c = 0; c < cfg.d_z; ++c) {
            probe_vec[c] += pooled[i] * probe(i, c);
        }
    }

    try {
        return linalg::cosine(pooled_mean(features), probe_vec);
    } catch (const ZeroNorm&) {
        return 0.0;
    }
}

double fid_analog(const std::vector<attention::LatentFeatures>& set_a,
                  const std::vector<attention::LatentFeatures>& set_b) {
    if (set_a.size() < 2 || set_b.size() < 2) {
        throw TooFewSamples("fid_analog: need at least 2 samples per set");
    }
    return fid_from_samples(set_a, set_b);
}

std::vector<ScenarioRow> scenario_multi(
    const std::vector<std::string>& prompts,
    const std::vector<std::string>& targets, const PipelineConfig& cfg) {
    std::vector<ScenarioRow> rows;
    rows.reserve((targets.size() + 1) * prompts.size());
    for (std::size_t n = 0; n <= targets.size(); ++n) {
        const std::vector<std::string> subset(targets.begin(),
                                              targets.begin() +
                                                  static_cast<std::ptrdiff_t>(n));
        for (const std::string& prompt : prompts) {
            const RunResult res = run(prompt, subset, cfg);
            rows.push_back(ScenarioRow{prompt, n, res.report.cs_after,
                                       res.report.fid,
                                       res.report.mean_component_norm()});
        }
    }
    return rows;
}

void write_report_csv(const ErasureReport& report,
                      const std::filesystem::path& path) {
    std::string out =
        "prompt,n_targets,step,layer,token,component_norm,cs_before,"
        "cs_after,fid\n";
    const std::string prompt = csv_field(report.prompt);
    for (const ComponentRecord& rec : report.components) {
        for (std::size_t j = 0; j < rec.norms.size(); ++j) {
            out += prompt;
            out += ',';
            out += std::to_string(report.n_targets);
            out += ',';
            out += std::to_string(rec.step);
            out += ',';
            out += std::to_string(rec.layer);
            out += ',';
            out += std::to_string(j);
            out += ',';
            append_17g(out, rec.norms[j]);
            out += ',';
            append_17g(out, report.cs_before);
            out += ',';
            append_17g(out, report.cs_after);
            out += ',';
            append_17g(out, report.fid);
            out += '\n';
        }
    }
    io::atomic_write(path, out);
}

void write_run_dumps(const RunResult& result,
                     const std::filesystem::path& dir) {
    for (const ComponentRecord& rec : result.report.components) {
        avde::write_matrix(dir / ("components_s" + std::to_string(rec.step) +
                                  "_l" + std::to_string(rec.layer) + ".avde"),
                           rec.components);
    }
    for (std::size_t s = 0; s < result.before_steps.size(); ++s) {
        avde::write_matrix(dir / ("features_before_s" + std::to_string(s) +
                                  ".avde"),
                           result.before_steps[s].data);
        avde::write_matrix(dir / ("features_after_s" + std::to_string(s) +
                                  ".avde"),
                           result.after_steps[s].data);
    }
}

}  // namespace orthoerase::pipeline
