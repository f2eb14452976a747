// SPDX-License-Identifier: Apache-2.0
#include "pairedit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "pairedit/tensor_io.hpp"

namespace pairedit {

namespace {

constexpr const char* kReportHeader = "semantic,method,scale,seed,identity_drift,alignment,projection";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("bad number in report: " + s);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Tensor edit_delta(const Tensor& original, const Tensor& edited) {
    require_same_shape(original, edited, "edit");
    return sub(edited, original);
}

ReportRow make_row(const std::string& semantic, const std::string& method, double scale, std::uint64_t seed,
                   const Tensor& original, const Tensor& edited, const Tensor& g) {
    return {semantic, method, scale, seed, identity_drift(original, edited, g), alignment(original, edited, g).cosine,
            projection(original, edited, g)};
}

}  // namespace

double identity_drift(const Tensor& original, const Tensor& edited, const Tensor& g) {
    const Tensor d = edit_delta(original, edited);
    require_same_shape(d, g, "identity_drift");
    const double denom = norm(original);
    if (denom == 0.0) throw std::invalid_argument("identity_drift: original has zero norm");
    const Tensor orth = axpy(d, -dot(d, g), g);
    return norm(orth) / denom;
}

Alignment alignment(const Tensor& original, const Tensor& edited, const Tensor& g) {
    const Tensor d = edit_delta(original, edited);
    require_same_shape(d, g, "alignment");
    const double nd = norm(d);
    const double ng = norm(g);
    if (ng == 0.0) throw std::invalid_argument("alignment: zero direction");
    if (nd == 0.0) return {0.0, true};
    return {dot(d, g) / (nd * ng), false};
}

double projection(const Tensor& original, const Tensor& edited, const Tensor& g) {
    const Tensor d = edit_delta(original, edited);
    require_same_shape(d, g, "projection");
    return dot(d, g);
}

std::string EditReport::to_csv() const {
    std::string out = kReportHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += r.semantic + ',' + r.method + ',' + format_double(r.scale) + ',' + std::to_string(r.seed) + ',' +
               format_double(r.identity_drift) + ',' + format_double(r.alignment) + ',' +
               format_double(r.projection) + '\n';
    }
    return out;
}

EditReport EditReport::parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kReportHeader) throw std::runtime_error("report: missing header");
    EditReport report;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 7) throw std::runtime_error("report: expected 7 columns in: " + line);
        ReportRow r;
        r.semantic = cells[0];
        r.method = cells[1];
        r.scale = parse_double(cells[2]);
        r.seed = std::stoull(cells[3]);
        r.identity_drift = parse_double(cells[4]);
        r.alignment = parse_double(cells[5]);
        r.projection = parse_double(cells[6]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

void EditReport::save(const std::filesystem::path& path) const {
    const std::string text = to_csv();
    write_atomically(path, [&](std::ostream& os) { os << text; });
}

void EditReport::append(const EditReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

ReportSummary summarize(const EditReport& report, const std::string& method, std::optional<double> scale) {
    ReportSummary s;
    for (const auto& r : report.rows) {
        if (r.method != method || (scale && r.scale != *scale)) continue;
        s.identity_drift += r.identity_drift;
        s.alignment += r.alignment;
        s.projection += r.projection;
        ++s.count;
    }
    if (s.count > 0) {
        const double n = static_cast<double>(s.count);
        s.identity_drift /= n;
        s.alignment /= n;
        s.projection /= n;
    }
    return s;
}

double monotone_fraction(const EditReport& report, const std::string& method, std::span<const double> scales) {
    if (scales.size() < 2) throw std::invalid_argument("monotone_fraction: need at least two scales");
    std::map<std::uint64_t, std::map<double, double>> by_seed;
    for (const auto& r : report.rows) {
        if (r.method == method) by_seed[r.seed][r.scale] = r.projection;
    }
    if (by_seed.empty()) throw std::invalid_argument("monotone_fraction: no rows for method " + method);
    std::size_t good = 0;
    for (const auto& [seed, proj] : by_seed) {
        bool ok = true;
        for (std::size_t i = 0; i < scales.size() && ok; ++i) {
            const auto it = proj.find(scales[i]);
            if (it == proj.end()) throw std::invalid_argument("monotone_fraction: missing scale for a seed");
            if (i > 0 && !(it->second > proj.at(scales[i - 1]))) ok = false;
        }
        good += ok ? 1 : 0;
    }
    return static_cast<double>(good) / static_cast<double>(by_seed.size());
}

DirectionFn fixed_direction(Tensor g) {
    const double n = norm(g);
    if (n == 0.0) throw std::invalid_argument("fixed_direction: zero vector");
    Tensor unit = scale(g, 1.0 / n);
    return [unit](const Tensor&) { return unit; };
}

DirectionFn semantic_direction(Semantic semantic, Tensor fallback) {
    const double fn = norm(fallback);
    if (fn == 0.0) throw std::invalid_argument("semantic_direction: zero fallback");
    Tensor unit_fallback = scale(fallback, 1.0 / fn);
    return [semantic = std::move(semantic), unit_fallback](const Tensor& x) {
        const Tensor d = semantic.delta(x);
        const double n = norm(d);
        return n == 0.0 ? unit_fallback : scale(d, 1.0 / n);
    };
}

std::vector<std::uint64_t> eval_seeds(std::size_t count, std::uint64_t first) {
    std::vector<std::uint64_t> seeds(count);
    for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
    return seeds;
}

EditReport scale_sweep(const DenoiserParams& base, const EditAdapters& adapters, std::span<const double> scales,
                       std::span<const std::uint64_t> seeds, const SampleConfig& cfg, const DirectionFn& direction,
                       const std::string& semantic_name, const std::string& method) {
    if (!adapters.semantic) throw std::invalid_argument("scale_sweep: semantic adapter required");
    if (seeds.empty() || scales.empty()) throw std::invalid_argument("scale_sweep: empty seeds or scales");
    cfg.validate();

    AdapterStack plain;
    if (adapters.content) plain.push(*adapters.content);
    const Tensor originals = generate_batch(base, plain, cfg, seeds);

    std::vector<Tensor> dirs;
    dirs.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) dirs.push_back(direction(originals.row_copy(i)));

    AdapterStack edit = plain;
    edit.push_delayed(*adapters.semantic);

    EditReport report;
    for (double s : scales) {
        SampleConfig c = cfg;
        c.scale = s;
        const Tensor edited = generate_batch(base, edit, c, seeds);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            report.rows.push_back(
                make_row(semantic_name, method, s, seeds[i], originals.row_copy(i), edited.row_copy(i), dirs[i]));
        }
    }
    return report;
}

AblationResult ablation_table(const DenoiserParams& base, const PairSet& pairs, const TrainConfig& cfg,
                              const AblationOptions& options, const DirectionFn& direction) {
    AblationResult result;
    const std::string name = pairs.spec.name;
    double target = 0.0;

    for (Method m : {Method::Full, Method::VariantA, Method::VariantB, Method::VariantC}) {
        TrainConfig tc = cfg;
        tc.method = m;
        const PairTrainResult trained = train_pairedit(base, pairs.x0a, pairs.x0b, tc);
        const EditAdapters adapters{nullptr, &trained.semantic};
        const std::string label = to_string(m);

        auto evaluate = [&](double s) {
            const double one[] = {s};
            return scale_sweep(base, adapters, one, options.seeds, options.sample, direction, name, label);
        };

        double s = 1.0;
        EditReport rep = evaluate(s);
        ReportSummary sum = summarize(rep, label);
        if (m == Method::Full) {
            target = sum.projection;
        } else {
            // Secant through the origin (scale 0 is an exact no-op).
            for (std::size_t round = 0; round < options.calibration_rounds; ++round) {
                if (!(sum.projection > 0.0) || std::abs(sum.projection / target - 1.0) <= options.calibration_tol) break;
                const double next = std::clamp(s * target / sum.projection, options.min_scale, options.max_scale);
                if (next == s) break;
                s = next;
                rep = evaluate(s);
                sum = summarize(rep, label);
            }
        }
        result.report.rows.push_back(
            {name, label, s, cfg.seed, sum.identity_drift, sum.alignment, sum.projection});
        result.entries.push_back({m, s, sum});
    }
    return result;
}

EditReport fusion_compare(const DenoiserParams& base, std::span<const RealInput> inputs, const LoraAdapter& sem,
                          std::span<const double> gammas, const SampleConfig& cfg, const DirectionFn& direction,
                          const std::string& semantic_name) {
    cfg.validate();
    EditReport report;
    for (const auto& in : inputs) {
        SampleConfig c = cfg;
        c.seed = in.seed;
        AdapterStack rec_only{&in.rec};
        const Tensor original = generate(base, rec_only, c);
        const Tensor g = direction(original);
        for (double gamma : gammas) {
            c.gamma_real = gamma;
            const Tensor fused = fused_edit(base, &in.rec, sem, c);
            const Tensor linear = linear_edit(base, &in.rec, sem, gamma, c);
            report.rows.push_back(make_row(semantic_name, "fused", gamma, in.seed, original, fused, g));
            report.rows.push_back(make_row(semantic_name, "linear", gamma, in.seed, original, linear, g));
        }
    }
    return report;
}

}  // namespace pairedit
