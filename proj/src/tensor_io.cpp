// SPDX-License-Identifier: Apache-2.0
#include "pairedit/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pairedit {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::array<unsigned char, sizeof(T)> b{};
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
    }
    return v;
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    bits = to_little(bits);
    os.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
}

double read_f64(std::istream& is) {
    std::uint64_t bits = 0;
    is.read(reinterpret_cast<char*>(&bits), sizeof(bits));
    if (!is) throw std::runtime_error("truncated tensor payload");
    return std::bit_cast<double>(to_little(bits));
}

constexpr std::uint32_t kMaxRank = 8;

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw std::runtime_error("unexpected end of stream");
    return to_little(v);
}

void write_magic(std::ostream& os, const char (&magic)[5]) {
    os.write(magic, 4);
}

void expect_magic(std::istream& is, const char (&magic)[5]) {
    char buf[4] = {};
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0) {
        throw std::runtime_error(std::string("bad magic, expected ") + magic);
    }
}

void write_tensor(std::ostream& os, const Tensor& t) {
    if (t.empty()) throw std::invalid_argument("cannot serialize an empty tensor");
    write_magic(os, "PFT1");
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    for (double v : t.data()) write_f64(os, v);
}

Tensor read_tensor(std::istream& is) {
    expect_magic(is, "PFT1");
    const std::uint32_t rank = read_u32(is);
    if (rank == 0 || rank > kMaxRank) throw std::runtime_error("PFT1: bad rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = read_u32(is);
    Tensor t(shape);
    for (double& v : t.data()) v = read_f64(is);
    ensure_finite(t, "PFT1 payload");
    return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    write_atomically(path, [&](std::ostream& os) { write_tensor(os, t); });
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_tensor(is);
}

void save_pgm(const std::filesystem::path& path, const Tensor& image, std::size_t height, std::size_t width) {
    if (image.size() != height * width) {
        throw std::invalid_argument("save_pgm: image has " + std::to_string(image.size()) + " values, expected " +
                                    std::to_string(height * width));
    }
    write_atomically(path, [&](std::ostream& os) {
        os << "P5\n" << width << ' ' << height << "\n255\n";
        for (double v : image.data()) {
            const double c = std::clamp(v, 0.0, 1.0);
            os.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
        }
    });
}

}  // namespace pairedit
