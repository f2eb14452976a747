// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "pairedit/tensor.hpp"

namespace pairedit {

// PFT1 layout: "PFT1", u32 rank, u32 dims[rank], f64 payload (row-major).
// All integers and floats are little-endian.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

void write_u32(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32(std::istream& is);
void write_magic(std::ostream& os, const char (&magic)[5]);
void expect_magic(std::istream& is, const char (&magic)[5]);

/// Writes to `<path>.tmp` through `writer`, then renames over `path`.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer);

/// Binary PGM (P5, maxval 255). Values are clamped to [0, 1] then scaled.
void save_pgm(const std::filesystem::path& path, const Tensor& image, std::size_t height, std::size_t width);

}  // namespace pairedit

#include <fstream>
#include <stdexcept>

namespace pairedit {

template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        writer(os);
        os.flush();
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace pairedit
