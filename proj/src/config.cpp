// SPDX-License-Identifier: Apache-2.0
#include "pairedit/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace pairedit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void apply(const KeyValues& keys, const std::map<std::string, Setter>& setters, const char* what) {
    for (const auto& [k, v] : keys) {
        const auto it = setters.find(k);
        if (it == setters.end()) throw std::invalid_argument(std::string("unknown ") + what + " key: " + k);
        it->second(k, v);
    }
}

Setter set_double(double& field) {
    return [&field](const std::string& k, const std::string& v) { field = parse_double_value(k, v); };
}

Setter set_size(std::size_t& field) {
    return [&field](const std::string& k, const std::string& v) { field = parse_size_value(k, v); };
}

Setter set_u64(std::uint64_t& field) {
    return [&field](const std::string& k, const std::string& v) { field = parse_u64_value(k, v); };
}

ScheduleKind parse_kind(const std::string& key, const std::string& value) {
    if (value == "standard") return ScheduleKind::Standard;
    if (value == "cp" || value == "content_preserving") return ScheduleKind::ContentPreserving;
    throw std::invalid_argument(key + ": expected standard or cp, got " + value);
}

void add_adam(std::map<std::string, Setter>& s, AdamConfig& adam) {
    s["adam_beta1"] = set_double(adam.beta1);
    s["adam_beta2"] = set_double(adam.beta2);
    s["adam_eps"] = set_double(adam.epsilon);
}

}  // namespace

double parse_double_value(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": not a number: " + value);
    return v;
}

std::uint64_t parse_u64_value(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
        if (!value.empty() && value[0] != '-') v = std::stoull(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": not a non-negative integer: " + value);
    return v;
}

std::size_t parse_size_value(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64_value(key, value));
}

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        if (!out.emplace(key, value).second) throw std::invalid_argument("config: repeated key " + key);
    }
    return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_key_values(ss.str());
}

void apply_pretrain_keys(PretrainConfig& cfg, const KeyValues& keys) {
    std::map<std::string, Setter> s{
        {"steps", set_size(cfg.steps)},
        {"lr", set_double(cfg.lr)},
        {"batch_size", set_size(cfg.batch_size)},
        {"seed", set_u64(cfg.seed)},
        {"hidden_width", set_size(cfg.hidden_width)},
        {"hidden_layers", set_size(cfg.hidden_layers)},
        {"fourier_k", set_size(cfg.fourier_k)},
    };
    add_adam(s, cfg.adam);
    apply(keys, s, "pretrain");
}

void apply_train_keys(TrainConfig& cfg, const KeyValues& keys) {
    std::map<std::string, Setter> s{
        {"steps", set_size(cfg.steps)},
        {"lr", set_double(cfg.lr)},
        {"batch_size", set_size(cfg.batch_size)},
        {"rank", set_size(cfg.rank)},
        {"init_scale", set_double(cfg.init_scale)},
        {"seed", set_u64(cfg.seed)},
        {"t_min", set_double(cfg.t_min)},
        {"method", [&cfg](const std::string&, const std::string& v) { cfg.method = parse_method(v); }},
        {"eta", set_double(cfg.loss.eta)},
        {"lambda_sem", set_double(cfg.loss.lambda_sem)},
        {"beta", set_double(cfg.loss.beta)},
        {"content_schedule",
         [&cfg](const std::string& k, const std::string& v) { cfg.loss.content_schedule = parse_kind(k, v); }},
        {"semantic_schedule",
         [&cfg](const std::string& k, const std::string& v) { cfg.loss.semantic_schedule = parse_kind(k, v); }},
        {"content_target",
         [&cfg](const std::string&, const std::string& v) { cfg.loss.content_target = parse_content_target(v); }},
        {"delta_t", set_double(cfg.loss.delta_t)},
    };
    add_adam(s, cfg.adam);
    apply(keys, s, "train");
}

void apply_sample_keys(SampleConfig& cfg, const KeyValues& keys) {
    std::map<std::string, Setter> s{
        {"num_steps", set_size(cfg.num_steps)},
        {"off_steps", set_size(cfg.off_steps)},
        {"scale", set_double(cfg.scale)},
        {"gamma_real", set_double(cfg.gamma_real)},
        {"seed", set_u64(cfg.seed)},
    };
    apply(keys, s, "sample");
}

void apply_recon_keys(ReconConfig& cfg, const KeyValues& keys) {
    std::map<std::string, Setter> s{
        {"steps", set_size(cfg.steps)},
        {"lr", set_double(cfg.lr)},
        {"rank", set_size(cfg.rank)},
        {"init_scale", set_double(cfg.init_scale)},
        {"seed", set_u64(cfg.seed)},
        {"num_steps", set_size(cfg.num_steps)},
    };
    add_adam(s, cfg.adam);
    apply(keys, s, "recon");
}

}  // namespace pairedit
