// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the PairEdit toy pipeline.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pairedit/checkpoint.hpp"
#include "pairedit/config.hpp"
#include "pairedit/datagen.hpp"
#include "pairedit/evaluation.hpp"
#include "pairedit/sampler.hpp"
#include "pairedit/tensor_io.hpp"
#include "pairedit/trainer.hpp"
#include "pairedit/verify.hpp"

using namespace pairedit;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& s : split(text, ',')) out.push_back(parse_double_value(key, s));
    if (out.empty()) throw std::invalid_argument(key + ": empty list");
    return out;
}

// Config file keys, then --set overrides on top.
KeyValues merged_keys(const std::string& config_path, const std::vector<std::string>& sets) {
    KeyValues keys = config_path.empty() ? KeyValues{} : read_key_values(config_path);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got " + s);
        keys[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return keys;
}

PairSpec load_spec(const std::string& spec_path, const std::string& benchmark) {
    if (!spec_path.empty() && !benchmark.empty()) throw std::invalid_argument("give --spec or --benchmark, not both");
    if (!spec_path.empty()) return spec_from_keys(read_key_values(spec_path));
    return benchmark_spec(benchmark.empty() ? "V1" : benchmark);
}

bool is_image(const DenoiserParams& base) {
    return base.shape().image_height > 0 && base.shape().image_width > 0;
}

void write_sample(const DenoiserParams& base, const Tensor& x, const std::string& out, const std::string& pgm) {
    save_tensor(out, x);
    if (pgm.empty()) return;
    if (!is_image(base)) throw std::invalid_argument("--pgm needs an image-mode base");
    save_pgm(pgm, x, base.shape().image_height, base.shape().image_width);
}

struct SampleFlags {
    std::size_t steps = 28;
    std::size_t off_steps = 14;

    void add(CLI::App* app) {
        app->add_option("--steps", steps, "Sampler steps")->capture_default_str();
        app->add_option("--off-steps", off_steps, "Steps before semantic adapters switch on")->capture_default_str();
    }
    SampleConfig config() const {
        SampleConfig c;
        c.num_steps = steps;
        c.off_steps = off_steps;
        c.validate();
        return c;
    }
};

DirectionFn direction_for(const PairSet& pairs) {
    const Tensor fallback = pairs.g_defined ? pairs.g : Tensor::full({pairs.spec.data_dim()}, 1.0);
    return semantic_direction(Semantic(pairs.spec), fallback);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PairEdit: learn edits from source/target pairs on toy data"};
    app.require_subcommand(1);

    // pretrain
    std::string spec_path, benchmark, config_path, out_path;
    std::vector<std::string> sets;
    std::size_t n_data = 4096;
    auto* pretrain = app.add_subcommand("pretrain", "Generate unpaired data and pretrain the base denoiser");
    pretrain->add_option("--spec", spec_path, "Dataset spec (key = value file)");
    pretrain->add_option("--benchmark", benchmark, "Built-in spec: V1, V2, I1, I2");
    pretrain->add_option("--config", config_path, "Pretraining config");
    pretrain->add_option("--set", sets, "Config override key=value (repeatable)");
    pretrain->add_option("--n-data", n_data, "Number of unpaired samples")->capture_default_str();
    pretrain->add_option("--out", out_path, "Output checkpoint")->required();

    // make-pairs
    std::size_t n_pairs = 0;
    auto* make_pairs_cmd = app.add_subcommand("make-pairs", "Write a paired dataset");
    make_pairs_cmd->add_option("--spec", spec_path, "Dataset spec (key = value file)");
    make_pairs_cmd->add_option("--benchmark", benchmark, "Built-in spec: V1, V2, I1, I2");
    make_pairs_cmd->add_option("--n-pairs", n_pairs, "Override the number of pairs");
    make_pairs_cmd->add_option("--out", out_path, "Output PFDS file")->required();

    // train
    std::string base_path, pairs_path, out_content, out_semantic, log_path;
    auto* train = app.add_subcommand("train", "Train content and semantic adapters on pairs");
    train->add_option("--base", base_path, "Base checkpoint")->required();
    train->add_option("--pairs", pairs_path, "PFDS pairs")->required();
    train->add_option("--config", config_path, "Training config");
    train->add_option("--set", sets, "Config override key=value (repeatable)");
    train->add_option("--out-content", out_content, "Content adapter output (full method and variant C)");
    train->add_option("--out-semantic", out_semantic, "Semantic adapter output")->required();
    train->add_option("--log", log_path, "Loss log CSV");

    // generate / edit
    std::string semantic_path, content_path, pgm_path;
    double edit_scale = 1.0;
    std::uint64_t seed = 0;
    SampleFlags sample_flags;
    auto* generate_cmd = app.add_subcommand("generate", "Sample from the base (optionally with adapters)");
    generate_cmd->add_option("--base", base_path, "Base checkpoint")->required();
    generate_cmd->add_option("--content", content_path, "Adapter applied at every step");
    generate_cmd->add_option("--seed", seed, "Sampler seed")->capture_default_str();
    generate_cmd->add_option("--out", out_path, "Output tensor (PFT1)")->required();
    generate_cmd->add_option("--pgm", pgm_path, "Also write a PGM image (image mode)");
    sample_flags.add(generate_cmd);

    auto* edit = app.add_subcommand("edit", "Generate and edit with a semantic adapter");
    edit->add_option("--base", base_path, "Base checkpoint")->required();
    edit->add_option("--semantic", semantic_path, "Semantic adapter")->required();
    edit->add_option("--content", content_path, "Adapter applied at every step");
    edit->add_option("--scale", edit_scale, "Semantic adapter scale")->capture_default_str();
    edit->add_option("--seed", seed, "Sampler seed")->capture_default_str();
    edit->add_option("--out", out_path, "Output tensor (PFT1)")->required();
    edit->add_option("--pgm", pgm_path, "Also write a PGM image (image mode)");
    sample_flags.add(edit);

    // recon
    std::string input_path;
    std::size_t input_row = 0;
    std::string input_side = "a";
    auto* recon = app.add_subcommand("recon", "Fit a reconstruction adapter for one sample");
    recon->add_option("--base", base_path, "Base checkpoint")->required();
    recon->add_option("--input", input_path, "Sample to reconstruct: PFT1 tensor, or PFDS pairs with --row")
        ->required();
    recon->add_option("--row", input_row, "Row of a PFDS input")->capture_default_str();
    recon->add_option("--side", input_side, "a (source) or b (target) for a PFDS input")->capture_default_str();
    recon->add_option("--config", config_path, "Reconstruction config");
    recon->add_option("--set", sets, "Config override key=value (repeatable)");
    recon->add_option("--out", out_path, "Output adapter")->required();

    // fuse-edit
    std::string recon_path;
    double gamma = 0.75;
    auto* fuse = app.add_subcommand("fuse-edit", "Edit a reconstructed sample by guidance fusion");
    fuse->add_option("--base", base_path, "Base checkpoint")->required();
    fuse->add_option("--recon", recon_path, "Reconstruction adapter")->required();
    fuse->add_option("--semantic", semantic_path, "Semantic adapter")->required();
    fuse->add_option("--gamma", gamma, "Fusion weight")->capture_default_str();
    fuse->add_option("--out", out_path, "Output tensor (PFT1)")->required();
    fuse->add_option("--pgm", pgm_path, "Also write a PGM image (image mode)");
    sample_flags.add(fuse);

    // compose
    std::string semantic_list, gamma_list;
    auto* compose_cmd = app.add_subcommand("compose", "Apply several semantic adapters to a reconstruction");
    compose_cmd->add_option("--base", base_path, "Base checkpoint")->required();
    compose_cmd->add_option("--recon", recon_path, "Reconstruction adapter")->required();
    compose_cmd->add_option("--semantic", semantic_list, "Comma-separated semantic adapters")->required();
    compose_cmd->add_option("--gammas", gamma_list, "Comma-separated weights, one per adapter")->required();
    compose_cmd->add_option("--out", out_path, "Output tensor (PFT1)")->required();
    compose_cmd->add_option("--pgm", pgm_path, "Also write a PGM image (image mode)");
    sample_flags.add(compose_cmd);

    // ablate
    std::string report_path;
    std::size_t n_seeds = 64;
    auto* ablate = app.add_subcommand("ablate", "Train the full method and variants A-C and compare");
    ablate->add_option("--pairs", pairs_path, "PFDS pairs")->required();
    ablate->add_option("--config", config_path, "Training config");
    ablate->add_option("--set", sets, "Config override key=value (repeatable)");
    ablate->add_option("--base", base_path, "Base checkpoint (default: pretrain one on the pairs' spec)");
    ablate->add_option("--eval-seeds", n_seeds, "Number of evaluation seeds (from 1000)")->capture_default_str();
    ablate->add_option("--out-report", report_path, "Report CSV")->required();
    sample_flags.add(ablate);

    // sweep
    std::string scale_list = "0,0.5,1,1.5";
    auto* sweep = app.add_subcommand("sweep", "Edit projection and drift over a list of scales");
    sweep->add_option("--scales", scale_list, "Comma-separated scales")->capture_default_str();
    sweep->add_option("--base", base_path, "Base checkpoint")->required();
    sweep->add_option("--semantic", semantic_path, "Semantic adapter")->required();
    sweep->add_option("--content", content_path, "Adapter applied at every step");
    sweep->add_option("--pairs", pairs_path, "PFDS pairs defining the ground-truth edit")->required();
    sweep->add_option("--eval-seeds", n_seeds, "Number of evaluation seeds (from 1000)")->capture_default_str();
    sweep->add_option("--out-report", report_path, "Report CSV")->required();
    sample_flags.add(sweep);

    auto* verify = app.add_subcommand("verify", "Run the invariant self-checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (pretrain->parsed()) {
            const PairSpec spec = load_spec(spec_path, benchmark);
            PretrainConfig cfg;
            apply_pretrain_keys(cfg, merged_keys(config_path, sets));
            const bool image = spec.mode == DataMode::Image;
            const PretrainResult r = pretrain_base(make_pretrain_set(spec, n_data), cfg, image ? spec.height : 0,
                                                   image ? spec.width : 0);
            save_denoiser(out_path, r.base, cfg.seed);
            std::printf("pretrained %zu steps, final loss %.6f\n", r.losses.size(), r.losses.back());
        } else if (make_pairs_cmd->parsed()) {
            PairSpec spec = load_spec(spec_path, benchmark);
            if (n_pairs > 0) spec.n_pairs = n_pairs;
            save_pairs(out_path, make_pairs(spec));
            std::printf("wrote %zu pairs of dimension %zu\n", spec.n_pairs, spec.data_dim());
        } else if (train->parsed()) {
            const DenoiserParams base = load_denoiser(base_path);
            const PairSet pairs = load_pairs(pairs_path);
            TrainConfig cfg;
            apply_train_keys(cfg, merged_keys(config_path, sets));
            const PairTrainResult r = train_pairedit(base, pairs.x0a, pairs.x0b, cfg);
            save_adapter(out_semantic, r.semantic, {"semantic", cfg.seed});
            if (!out_content.empty()) {
                if (!r.content) throw std::invalid_argument("method " + to_string(cfg.method) + " has no content adapter");
                save_adapter(out_content, *r.content, {"content", cfg.seed});
            }
            if (!log_path.empty()) write_loss_log(log_path, r.log);
            std::printf("trained %s for %zu steps, final total loss %.6f\n", to_string(cfg.method).c_str(),
                        r.log.size(), r.log.empty() ? 0.0 : r.log.back().total);
        } else if (generate_cmd->parsed() || edit->parsed()) {
            const DenoiserParams base = load_denoiser(base_path);
            SampleConfig cfg = sample_flags.config();
            cfg.seed = seed;
            cfg.scale = edit_scale;
            AdapterStack stack;
            LoraAdapter content, semantic;
            if (!content_path.empty()) {
                content = load_adapter(content_path);
                stack.push(content);
            }
            if (edit->parsed()) {
                semantic = load_adapter(semantic_path);
                stack.push_delayed(semantic);
            }
            write_sample(base, generate(base, stack, cfg), out_path, pgm_path);
        } else if (recon->parsed()) {
            const DenoiserParams base = load_denoiser(base_path);
            Tensor x;
            std::ifstream probe(input_path, std::ios::binary);
            char magic[4] = {};
            probe.read(magic, 4);
            probe.close();
            if (std::string(magic, 4) == "PFDS") {
                const PairSet pairs = load_pairs(input_path);
                if (input_side != "a" && input_side != "b") throw std::invalid_argument("--side must be a or b");
                const Tensor& m = input_side == "a" ? pairs.x0a : pairs.x0b;
                if (input_row >= m.rows()) throw std::invalid_argument("--row out of range");
                x = m.row_copy(input_row);
            } else {
                x = load_tensor(input_path);
            }
            ReconConfig cfg;
            apply_recon_keys(cfg, merged_keys(config_path, sets));
            std::vector<double> losses;
            const LoraAdapter rec = fit_reconstruction_lora(base, x, cfg, &losses);
            save_adapter(out_path, rec, {"reconstruction", cfg.seed});
            std::printf("reconstruction loss %.6g after %zu steps\n", losses.empty() ? 0.0 : losses.back(),
                        losses.size());
        } else if (fuse->parsed() || compose_cmd->parsed()) {
            const DenoiserParams base = load_denoiser(base_path);
            AdapterMeta meta;
            const LoraAdapter rec = load_adapter(recon_path, &meta);
            SampleConfig cfg = sample_flags.config();
            cfg.seed = meta.seed;
            Tensor out;
            if (fuse->parsed()) {
                cfg.gamma_real = gamma;
                out = fused_edit(base, &rec, load_adapter(semantic_path), cfg);
            } else {
                std::vector<LoraAdapter> sems;
                for (const auto& p : split(semantic_list, ',')) sems.push_back(load_adapter(p));
                const std::vector<double> gammas = parse_list("--gammas", gamma_list);
                if (gammas.size() != sems.size()) throw std::invalid_argument("--gammas needs one weight per adapter");
                std::vector<const LoraAdapter*> ptrs;
                for (const auto& s : sems) ptrs.push_back(&s);
                out = compose_edit(base, &rec, ptrs, gammas, cfg);
            }
            write_sample(base, out, out_path, pgm_path);
        } else if (ablate->parsed()) {
            const PairSet pairs = load_pairs(pairs_path);
            TrainConfig cfg;
            apply_train_keys(cfg, merged_keys(config_path, sets));
            DenoiserParams base = [&] {
                if (!base_path.empty()) return load_denoiser(base_path);
                const PairSpec& spec = pairs.spec;
                const bool image = spec.mode == DataMode::Image;
                return pretrain_base(make_pretrain_set(spec, 4096), PretrainConfig{}, image ? spec.height : 0,
                                     image ? spec.width : 0)
                    .base;
            }();
            const auto seeds = eval_seeds(n_seeds);
            AblationOptions options;
            options.seeds = seeds;
            options.sample = sample_flags.config();
            const AblationResult r = ablation_table(base, pairs, cfg, options, direction_for(pairs));
            r.report.save(report_path);
            for (const auto& e : r.entries) {
                std::printf("%-10s scale %.4f drift %.4f alignment %.4f projection %.4f\n",
                            to_string(e.method).c_str(), e.scale, e.summary.identity_drift, e.summary.alignment,
                            e.summary.projection);
            }
        } else if (sweep->parsed()) {
            const DenoiserParams base = load_denoiser(base_path);
            const PairSet pairs = load_pairs(pairs_path);
            const LoraAdapter semantic = load_adapter(semantic_path);
            LoraAdapter content;
            EditAdapters adapters{nullptr, &semantic};
            if (!content_path.empty()) {
                content = load_adapter(content_path);
                adapters.content = &content;
            }
            const std::vector<double> scales = parse_list("--scales", scale_list);
            const auto seeds = eval_seeds(n_seeds);
            const EditReport r = scale_sweep(base, adapters, scales, seeds, sample_flags.config(), direction_for(pairs),
                                             pairs.spec.name, "full");
            r.save(report_path);
            for (double s : scales) {
                const ReportSummary m = summarize(r, "full", s);
                std::printf("scale %-6g projection %.4f drift %.4f alignment %.4f\n", s, m.projection,
                            m.identity_drift, m.alignment);
            }
            if (scales.size() > 1) std::printf("monotone fraction %.4f\n", monotone_fraction(r, "full", scales));
        } else if (verify->parsed()) {
            bool all = true;
            for (const auto& c : run_invariant_checks()) {
                std::printf("%s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
                all = all && c.passed;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pairedit: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
