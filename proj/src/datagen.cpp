// SPDX-License-Identifier: Apache-2.0
#include "pairedit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pairedit/rng.hpp"
#include "pairedit/tensor_io.hpp"

namespace pairedit {

namespace {

constexpr std::uint64_t kTagStructure = 10;
constexpr std::uint64_t kTagPairs = 11;
constexpr std::uint64_t kTagPretrain = 12;
constexpr std::uint32_t kPfdsVersion = 1;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(std::span<const double> values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fmt_double(values[i]);
    }
    return out;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::string semantic_name(SemanticKind k) {
    switch (k) {
        case SemanticKind::Offset: return "offset";
        case SemanticKind::LinearMap: return "linear";
        case SemanticKind::RegionBrighten: return "region";
    }
    return "offset";
}

SemanticKind parse_semantic(const std::string& s) {
    if (s == "offset") return SemanticKind::Offset;
    if (s == "linear") return SemanticKind::LinearMap;
    if (s == "region") return SemanticKind::RegionBrighten;
    throw std::invalid_argument("unknown semantic '" + s + "'");
}

struct MixtureModel {
    std::vector<Tensor> means;
};

MixtureModel mixture_for(const PairSpec& spec) {
    RngState rng(derive_seed(spec.seed, kTagStructure));
    MixtureModel m;
    for (std::size_t k = 0; k < spec.mixture_components; ++k) {
        Tensor mu = gauss(rng, {spec.dim});
        for (double& v : mu.data()) v = spec.mixture_center + spec.mixture_spread * v;
        m.means.push_back(std::move(mu));
    }
    return m;
}

Tensor draw_disc(RngState& rng, const PairSpec& spec) {
    const double h = static_cast<double>(spec.height), w = static_cast<double>(spec.width);
    const double cy = rng.next_uniform_in(0.25 * h, 0.75 * h);
    const double cx = rng.next_uniform_in(0.25 * w, 0.75 * w);
    const double r = rng.next_uniform_in(spec.radius_min, spec.radius_max);
    Tensor img({spec.height * spec.width});
    for (std::size_t i = 0; i < spec.height; ++i) {
        for (std::size_t j = 0; j < spec.width; ++j) {
            const double dy = static_cast<double>(i) + 0.5 - cy;
            const double dx = static_cast<double>(j) + 0.5 - cx;
            const double v = r - std::sqrt(dy * dy + dx * dx) + 0.5;
            img[i * spec.width + j] = std::clamp(v, 0.0, 1.0);
        }
    }
    return img;
}

Tensor draw_sources(RngState& rng, const PairSpec& spec, std::size_t n) {
    if (n == 0) throw std::invalid_argument("number of samples must be at least 1");
    const std::size_t d = spec.data_dim();
    Tensor out({n, d});
    if (spec.mode == DataMode::Vector) {
        const MixtureModel mix = mixture_for(spec);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = rng.next_index(mix.means.size());
            const Tensor z = gauss(rng, {d});
            auto row = out.row(i);
            for (std::size_t j = 0; j < d; ++j) row[j] = mix.means[k][j] + spec.component_std * z[j];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const Tensor img = draw_disc(rng, spec);
            std::copy(img.data().begin(), img.data().end(), out.row(i).begin());
        }
    }
    return out;
}

}  // namespace

void PairSpec::validate() const {
    if (n_pairs == 0) throw std::invalid_argument("n_pairs must be at least 1");
    if (mode == DataMode::Vector) {
        if (dim == 0) throw std::invalid_argument("dim must be positive");
        if (mixture_components == 0) throw std::invalid_argument("mixture needs at least one component");
        if (!(component_std >= 0.0)) throw std::invalid_argument("component_std must be non-negative");
    } else {
        if (height == 0 || width == 0) throw std::invalid_argument("image size must be positive");
        if (!(radius_min > 0.0 && radius_max >= radius_min)) throw std::invalid_argument("bad disc radius range");
    }
    if (semantic == SemanticKind::RegionBrighten) {
        if (mode != DataMode::Image) throw std::invalid_argument("region semantic requires image mode");
        if (region_r0 >= region_r1 || region_c0 >= region_c1 || region_r1 > height || region_c1 > width) {
            throw std::invalid_argument("region mask is empty or outside the image");
        }
    }
    if (semantic == SemanticKind::Offset && offset && offset->size() != data_dim()) {
        throw std::invalid_argument("offset length does not match data dim");
    }
}

PairSpec benchmark_spec(const std::string& name) {
    PairSpec spec;
    spec.name = name;
    if (name == "V1") return spec;
    if (name == "V2") {
        spec.semantic = SemanticKind::LinearMap;
        return spec;
    }
    if (name == "I1" || name == "I2") {
        spec.mode = DataMode::Image;
        if (name == "I1") {
            spec.semantic = SemanticKind::RegionBrighten;
        } else {
            spec.semantic = SemanticKind::Offset;
            spec.offset = Tensor::full({spec.height * spec.width}, 0.3);
        }
        return spec;
    }
    throw std::invalid_argument("unknown benchmark '" + name + "' (expected V1, V2, I1 or I2)");
}

PairSpec spec_from_keys(const std::map<std::string, std::string>& keys) {
    auto get = [&](const char* k) -> const std::string* {
        auto it = keys.find(k);
        return it == keys.end() ? nullptr : &it->second;
    };
    PairSpec spec = benchmark_spec(get("benchmark") ? *get("benchmark") : "V1");
    static const char* known[] = {"benchmark", "name", "mode", "dim", "height", "width", "components", "center",
                                  "spread", "component_std", "radius_min", "radius_max", "semantic",
                                  "offset_magnitude", "offset", "linear_strength", "region", "region_amount",
                                  "n_pairs", "seed"};
    for (const auto& [k, v] : keys) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
            throw std::invalid_argument("unknown spec key '" + k + "'");
        }
    }
    if (auto v = get("name")) spec.name = *v;
    if (auto v = get("mode")) {
        if (*v == "vector") spec.mode = DataMode::Vector;
        else if (*v == "image") spec.mode = DataMode::Image;
        else throw std::invalid_argument("mode must be vector or image");
    }
    if (auto v = get("dim")) spec.dim = std::stoul(*v);
    if (auto v = get("height")) spec.height = std::stoul(*v);
    if (auto v = get("width")) spec.width = std::stoul(*v);
    if (auto v = get("components")) spec.mixture_components = std::stoul(*v);
    if (auto v = get("center")) spec.mixture_center = std::stod(*v);
    if (auto v = get("spread")) spec.mixture_spread = std::stod(*v);
    if (auto v = get("component_std")) spec.component_std = std::stod(*v);
    if (auto v = get("radius_min")) spec.radius_min = std::stod(*v);
    if (auto v = get("radius_max")) spec.radius_max = std::stod(*v);
    if (auto v = get("semantic")) spec.semantic = parse_semantic(*v);
    if (auto v = get("offset_magnitude")) {
        spec.offset_magnitude = std::stod(*v);
        spec.offset.reset();
    }
    if (auto v = get("offset")) {
        auto values = parse_list(*v);
        const std::size_t n = values.size();
        spec.offset = Tensor({n}, std::move(values));
    }
    if (auto v = get("linear_strength")) spec.linear_strength = std::stod(*v);
    if (auto v = get("region")) {
        const auto r = parse_list(*v);
        if (r.size() != 4) throw std::invalid_argument("region expects r0,c0,r1,c1");
        spec.region_r0 = static_cast<std::size_t>(r[0]);
        spec.region_c0 = static_cast<std::size_t>(r[1]);
        spec.region_r1 = static_cast<std::size_t>(r[2]);
        spec.region_c1 = static_cast<std::size_t>(r[3]);
    }
    if (auto v = get("region_amount")) spec.region_amount = std::stod(*v);
    if (auto v = get("n_pairs")) spec.n_pairs = std::stoul(*v);
    if (auto v = get("seed")) spec.seed = std::stoull(*v);
    if (spec.mode == DataMode::Image && spec.offset && spec.offset->size() != spec.data_dim()) {
        // Preset offsets follow the image size.
        if (spec.semantic == SemanticKind::Offset && !get("offset")) {
            spec.offset = Tensor::full({spec.data_dim()}, (*spec.offset)[0]);
        }
    }
    spec.validate();
    return spec;
}

std::map<std::string, std::string> spec_to_keys(const PairSpec& spec) {
    std::map<std::string, std::string> k;
    k["name"] = spec.name;
    k["mode"] = spec.mode == DataMode::Vector ? "vector" : "image";
    k["dim"] = std::to_string(spec.dim);
    k["height"] = std::to_string(spec.height);
    k["width"] = std::to_string(spec.width);
    k["components"] = std::to_string(spec.mixture_components);
    k["center"] = fmt_double(spec.mixture_center);
    k["spread"] = fmt_double(spec.mixture_spread);
    k["component_std"] = fmt_double(spec.component_std);
    k["radius_min"] = fmt_double(spec.radius_min);
    k["radius_max"] = fmt_double(spec.radius_max);
    k["semantic"] = semantic_name(spec.semantic);
    k["offset_magnitude"] = fmt_double(spec.offset_magnitude);
    if (spec.offset) k["offset"] = fmt_list(spec.offset->data());
    k["linear_strength"] = fmt_double(spec.linear_strength);
    k["region"] = std::to_string(spec.region_r0) + "," + std::to_string(spec.region_c0) + "," +
                  std::to_string(spec.region_r1) + "," + std::to_string(spec.region_c1);
    k["region_amount"] = fmt_double(spec.region_amount);
    k["n_pairs"] = std::to_string(spec.n_pairs);
    k["seed"] = std::to_string(spec.seed);
    return k;
}

Semantic::Semantic(const PairSpec& spec) : kind_(spec.semantic), dim_(spec.data_dim()) {
    spec.validate();
    RngState rng(derive_seed(spec.seed, kTagStructure));
    // Skip the mixture means so the semantic draw does not alias them.
    if (spec.mode == DataMode::Vector) {
        for (std::size_t k = 0; k < spec.mixture_components; ++k) (void)gauss(rng, {spec.dim});
    }
    switch (kind_) {
        case SemanticKind::Offset: {
            if (spec.offset) {
                offset_ = *spec.offset;
            } else {
                Tensor dir = gauss(rng, {dim_});
                const double n = norm(dir);
                offset_ = scale(dir, spec.offset_magnitude / n);
            }
            break;
        }
        case SemanticKind::LinearMap: {
            const Tensor q = gauss(rng, {dim_, dim_});
            matrix_ = scale(q, spec.linear_strength / std::sqrt(static_cast<double>(dim_)));
            for (std::size_t i = 0; i < dim_; ++i) matrix_(i, i) += 1.0;
            break;
        }
        case SemanticKind::RegionBrighten: {
            offset_ = Tensor({dim_});
            for (std::size_t r = spec.region_r0; r < spec.region_r1; ++r)
                for (std::size_t c = spec.region_c0; c < spec.region_c1; ++c)
                    offset_[r * spec.width + c] = spec.region_amount;
            break;
        }
    }
}

Tensor Semantic::apply(const Tensor& x) const {
    const Tensor batch = x.rank() == 1 ? x.reshaped({1, x.size()}) : x;
    if (batch.dim(1) != dim_) throw std::invalid_argument("semantic: input dim mismatch");
    Tensor out(batch.shape());
    for (std::size_t i = 0; i < batch.dim(0); ++i) {
        auto src = batch.row(i);
        auto dst = out.row(i);
        if (kind_ == SemanticKind::LinearMap) {
            for (std::size_t r = 0; r < dim_; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < dim_; ++c) acc += matrix_(r, c) * src[c];
                dst[r] = acc;
            }
        } else {
            for (std::size_t j = 0; j < dim_; ++j) dst[j] = src[j] + offset_[j];
        }
    }
    ensure_finite(out, "semantic");
    return x.rank() == 1 ? out.reshaped(x.shape()) : out;
}

Tensor Semantic::delta(const Tensor& x) const {
    return sub(apply(x), x);
}

std::optional<Tensor> ground_truth_direction(const Tensor& x0a, const Tensor& x0b) {
    const Tensor mean_delta = column_mean(sub(x0b, x0a));
    const double n = norm(mean_delta);
    if (n == 0.0) return std::nullopt;
    return scale(mean_delta, 1.0 / n);
}

PairSet make_pairs(const PairSpec& spec) {
    spec.validate();
    RngState rng(derive_seed(spec.seed, kTagPairs));
    PairSet out;
    out.spec = spec;
    out.x0a = draw_sources(rng, spec, spec.n_pairs);
    out.x0b = Semantic(spec).apply(out.x0a);
    if (auto g = ground_truth_direction(out.x0a, out.x0b)) {
        out.g = *g;
        out.g_defined = true;
    } else {
        out.g = Tensor({spec.data_dim()});
    }
    return out;
}

Tensor make_pretrain_set(const PairSpec& spec, std::size_t n) {
    spec.validate();
    RngState rng(derive_seed(spec.seed, kTagPretrain));
    return draw_sources(rng, spec, n);
}

Tensor content_mean(const PairSpec& spec) {
    if (spec.mode == DataMode::Vector) {
        const MixtureModel mix = mixture_for(spec);
        Tensor mu({spec.dim});
        for (const auto& m : mix.means) axpy_inplace(mu, 1.0 / static_cast<double>(mix.means.size()), m);
        return mu;
    }
    RngState rng(derive_seed(spec.seed, kTagStructure));
    return column_mean(draw_sources(rng, spec, 4096));
}

void save_pairs(const std::filesystem::path& path, const PairSet& pairs) {
    nlohmann::json manifest;
    manifest["format"] = "PFDS";
    manifest["generator"] = "pairedit make_pairs";
    manifest["spec"] = spec_to_keys(pairs.spec);
    manifest["g_defined"] = pairs.g_defined;
    manifest["tensors"] = {"x0a", "x0b", "g"};
    const std::string text = manifest.dump();
    write_atomically(path, [&](std::ostream& os) {
        write_magic(os, "PFDS");
        write_u32(os, kPfdsVersion);
        write_u32(os, static_cast<std::uint32_t>(text.size()));
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        write_tensor(os, pairs.x0a);
        write_tensor(os, pairs.x0b);
        write_tensor(os, pairs.g);
    });
}

PairSet load_pairs(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    expect_magic(is, "PFDS");
    const std::uint32_t version = read_u32(is);
    if (version != kPfdsVersion) throw std::runtime_error("unsupported PFDS version " + std::to_string(version));
    const std::uint32_t len = read_u32(is);
    std::string text(len, '\0');
    is.read(text.data(), len);
    if (!is) throw std::runtime_error("truncated PFDS manifest");
    const auto manifest = nlohmann::json::parse(text);
    PairSet out;
    out.spec = spec_from_keys(manifest.at("spec").get<std::map<std::string, std::string>>());
    out.g_defined = manifest.at("g_defined").get<bool>();
    out.x0a = read_tensor(is);
    out.x0b = read_tensor(is);
    out.g = read_tensor(is);
    return out;
}

}  // namespace pairedit
