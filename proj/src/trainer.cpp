// SPDX-License-Identifier: Apache-2.0
#include "pairedit/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pairedit/sampler.hpp"
#include "pairedit/schedule.hpp"
#include "pairedit/tensor_io.hpp"

namespace pairedit {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kTagBaseInit = 1;
constexpr std::uint64_t kTagBatches = 2;
constexpr std::uint64_t kTagContentInit = 3;
constexpr std::uint64_t kTagSemanticInit = 4;
constexpr std::uint64_t kTagReconInit = 5;

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx) {
    Tensor out({idx.size(), src.dim(1)});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto r = src.row(idx[i]);
        std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    return out;
}

std::vector<std::size_t> draw_rows(RngState& rng, std::size_t n, std::size_t batch) {
    std::vector<std::size_t> idx;
    if (n < batch) {
        for (std::size_t i = 0; i < batch; ++i) idx.push_back(rng.next_index(n));
        return idx;
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t j = i + rng.next_index(n - i);
        std::swap(perm[i], perm[j]);
    }
    perm.resize(batch);
    return perm;
}

void scale_grad(AdapterGrad& g, double s) {
    for (auto& l : g) {
        l.down = scale(l.down, s);
        l.up = scale(l.up, s);
    }
}

std::vector<std::span<double>> base_spans(std::vector<Linear>& layers) {
    std::vector<std::span<double>> out;
    for (auto& l : layers) {
        out.push_back(l.weight.data());
        out.push_back(l.bias.data());
    }
    return out;
}

std::vector<std::span<const double>> base_spans(const std::vector<Linear>& layers) {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers) {
        out.push_back(l.weight.data());
        out.push_back(l.bias.data());
    }
    return out;
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::Full: return "full";
        case Method::VariantA: return "variant_a";
        case Method::VariantB: return "variant_b";
        case Method::VariantC: return "variant_c";
    }
    return "full";
}

Method parse_method(const std::string& text) {
    if (text == "full") return Method::Full;
    if (text == "variant_a" || text == "a") return Method::VariantA;
    if (text == "variant_b" || text == "b") return Method::VariantB;
    if (text == "variant_c" || text == "c") return Method::VariantC;
    throw std::invalid_argument("unknown method '" + text + "'");
}

PretrainResult pretrain_base(const Tensor& dataset, const PretrainConfig& cfg, std::size_t image_height,
                             std::size_t image_width) {
    if (dataset.empty() || dataset.rank() != 2) throw std::invalid_argument("pretrain_base: empty dataset");
    if (cfg.steps == 0 || cfg.batch_size == 0) throw std::invalid_argument("pretrain_base: steps and batch must be positive");

    NetworkShape shape;
    shape.data_dim = dataset.dim(1);
    shape.hidden_width = cfg.hidden_width;
    shape.hidden_layers = cfg.hidden_layers;
    shape.fourier_k = cfg.fourier_k;
    shape.image_height = image_height;
    shape.image_width = image_width;

    RngState init_rng(derive_seed(cfg.seed, kTagBaseInit));
    const DenoiserParams initial = DenoiserParams::initialize(init_rng, shape);
    std::vector<Linear> layers(initial.layers().begin(), initial.layers().end());

    RngState rng(derive_seed(cfg.seed, kTagBatches));
    Adam adam(cfg.lr, cfg.adam);
    const NoiseSchedule sched = NoiseSchedule::standard();
    PretrainResult result{initial, {}};
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        try {
            const DenoiserParams current(shape, layers);
            const Tensor x0 = gather_rows(dataset, draw_rows(rng, dataset.dim(0), cfg.batch_size));
            const Tensor eps = gauss(rng, x0.shape());
            std::vector<double> t(cfg.batch_size);
            for (double& v : t) v = 1.0 - rng.next_uniform();
            const Tensor x_t = forward_noise_rows(x0, eps, t, sched);
            const Tensor target = path_velocity(x0, eps, sched);

            const AdapterStack none;
            const ForwardTrace trace = forward_trace(current, none, x_t, t);
            Tensor grad;
            const double loss = mse(trace.output, target, &grad);
            if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss");
            BackwardRequest request;
            request.base = true;
            const auto grads = backward(current, none, trace, grad, request).base;
            adam.step(base_spans(layers), base_spans(grads));
            result.losses.push_back(loss);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("pretraining diverged at step " + std::to_string(step) + ": " + e.what());
        }
    }
    result.base = DenoiserParams(shape, std::move(layers));
    return result;
}

void TrainConfig::validate() const {
    if (steps == 0) throw std::invalid_argument("steps must be at least 1");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    if (rank == 0) throw std::invalid_argument("rank must be at least 1");
    if (!(t_min >= 0.0 && t_min < 1.0)) throw std::invalid_argument("t_min must lie in [0, 1)");
    loss.validate();
}

PairedBatch sample_batch(RngState& rng, const Tensor& x0a, const Tensor& x0b, std::size_t batch_size,
                         double t_min) {
    const auto idx = draw_rows(rng, x0a.dim(0), batch_size);
    PairedBatch batch;
    batch.x0a = gather_rows(x0a, idx);
    batch.x0b = gather_rows(x0b, idx);
    batch.eps0 = gauss(rng, batch.x0a.shape());
    batch.t.resize(batch_size);
    for (double& v : batch.t) v = rng.next_uniform_in(t_min, 1.0);
    return batch;
}

PairTrainResult train_pairedit(const DenoiserParams& base, const Tensor& x0a, const Tensor& x0b,
                               const TrainConfig& cfg) {
    cfg.validate();
    if (x0a.empty() || x0a.rank() != 2) throw std::invalid_argument("train_pairedit: at least one pair required");
    require_same_shape(x0a, x0b, "train_pairedit pairs");
    if (x0a.dim(1) != base.data_dim()) throw std::invalid_argument("train_pairedit: pair dim does not match base");

    LossConfig loss = cfg.loss;
    if (cfg.method == Method::VariantC) {
        loss.content_schedule = ScheduleKind::Standard;
        loss.semantic_schedule = ScheduleKind::Standard;
    }
    const bool has_content = cfg.method == Method::Full || cfg.method == Method::VariantC;

    PairTrainResult result;
    RngState content_rng(derive_seed(cfg.seed, kTagContentInit));
    RngState semantic_rng(derive_seed(cfg.seed, kTagSemanticInit));
    if (has_content) result.content = init_adapter(content_rng, base, cfg.rank, cfg.init_scale);
    result.semantic = init_adapter(semantic_rng, base, cfg.rank, cfg.init_scale);

    Adam content_opt(cfg.lr, cfg.adam);
    Adam semantic_opt(cfg.lr, cfg.adam);
    RngState rng(derive_seed(cfg.seed, kTagBatches));
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const PairedBatch batch = sample_batch(rng, x0a, x0b, cfg.batch_size, cfg.t_min);
        StepLog entry;
        entry.step = step;
        if (cfg.method == Method::VariantA) {
            LossResult r = variant_a_loss(base, result.semantic, batch, loss);
            entry.semantic = r.value;
            entry.total = r.value;
            semantic_opt.step(parameter_spans(result.semantic), parameter_spans(r.grads[0]));
            result.log.push_back(entry);
            continue;
        }

        // Both losses see the adapters as they were at the start of the step.
        std::optional<LossResult> c;
        if (has_content) c = content_loss(base, *result.content, batch, loss);
        LossResult s = semantic_loss(base, has_content ? &*result.content : nullptr, result.semantic, batch, loss);
        entry.content = c ? c->value : 0.0;
        entry.semantic = s.value;
        entry.total = joint_objective(entry.content, entry.semantic, loss.lambda_sem);

        if (c) content_opt.step(parameter_spans(*result.content), parameter_spans(c->grads[0]));
        if (loss.lambda_sem != 0.0) {
            scale_grad(s.grads[0], loss.lambda_sem);
            semantic_opt.step(parameter_spans(result.semantic), parameter_spans(s.grads[0]));
        }
        result.log.push_back(entry);
    }
    return result;
}

std::string loss_log_csv(const std::vector<StepLog>& log) {
    std::ostringstream os;
    os.precision(17);
    os << "step,L_content,L_semantic,L_total\n";
    for (const auto& e : log) os << e.step << ',' << e.content << ',' << e.semantic << ',' << e.total << '\n';
    return os.str();
}

void write_loss_log(const std::filesystem::path& path, const std::vector<StepLog>& log) {
    const std::string text = loss_log_csv(log);
    write_atomically(path, [&](std::ostream& os) { os << text; });
}

LoraAdapter fit_reconstruction_lora(const DenoiserParams& base, const Tensor& x_real, const ReconConfig& cfg,
                                    std::vector<double>* losses) {
    if (x_real.size() != base.data_dim()) throw std::invalid_argument("fit_reconstruction_lora: input dim mismatch");
    if (cfg.num_steps == 0) throw std::invalid_argument("fit_reconstruction_lora: num_steps must be positive");
    const Tensor target = x_real.reshaped({1, base.data_dim()});

    RngState init_rng(derive_seed(cfg.seed, kTagReconInit));
    LoraAdapter rec = init_adapter(init_rng, base, cfg.rank, cfg.init_scale);
    if (cfg.steps == 0) return rec;

    Adam opt(cfg.lr, cfg.adam);
    const std::vector<double> grid = time_grid(cfg.num_steps);
    const double dt = 1.0 / static_cast<double>(cfg.num_steps);
    const Tensor x1 = initial_noise(cfg.seed, base.data_dim()).reshaped({1, base.data_dim()});
    for (std::size_t it = 0; it < cfg.steps; ++it) {
        const AdapterStack stack{&rec};
        std::vector<ForwardTrace> traces;
        Tensor x = x1;
        for (std::size_t k = 0; k < cfg.num_steps; ++k) {
            const double t[] = {grid[k]};
            traces.push_back(forward_trace(base, stack, x, t));
            x = euler_step(x, traces.back().output, dt);
        }
        Tensor g;
        const double loss = mse(x, target, &g);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("reconstruction fit diverged at step " + std::to_string(it));
        }
        if (losses) losses->push_back(loss);

        // x_{k+1} = x_k - dt * f(x_k): dL/dx_k = g + J^T(-dt g), dL/dtheta += (df/dtheta)^T(-dt g).
        AdapterGrad total;
        BackwardRequest request{{0}, false, true};
        for (std::size_t k = cfg.num_steps; k-- > 0;) {
            BackwardResult r = backward(base, stack, traces[k], scale(g, -dt), request);
            if (total.empty()) {
                total = std::move(r.adapters[0]);
            } else {
                for (std::size_t l = 0; l < total.size(); ++l) {
                    axpy_inplace(total[l].down, 1.0, r.adapters[0][l].down);
                    axpy_inplace(total[l].up, 1.0, r.adapters[0][l].up);
                }
            }
            axpy_inplace(g, 1.0, r.input);
        }
        opt.step(parameter_spans(rec), parameter_spans(total));
    }
    return rec;
}

}  // namespace pairedit
