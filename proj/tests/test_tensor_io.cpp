// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "pairedit/tensor_io.hpp"

using namespace pairedit;

namespace {

std::string bytes_of(const Tensor& t) {
    std::ostringstream os(std::ios::binary);
    write_tensor(os, t);
    return os.str();
}

}  // namespace

TEST(TensorIo, LayoutIsMagicRankDimsPayload) {
    const std::string b = bytes_of(Tensor::matrix(1, 2, {1.5, -2.0}));
    ASSERT_EQ(b.size(), 4u + 4u + 8u + 16u);
    EXPECT_EQ(b.substr(0, 4), "PFT1");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(b.data());
    EXPECT_EQ(p[4], 2);
    EXPECT_EQ(p[8], 1);
    EXPECT_EQ(p[12], 2);
    double v = 0.0;
    std::memcpy(&v, b.data() + 16, 8);  // host is little-endian in every supported build
    EXPECT_EQ(v, 1.5);
}

TEST(TensorIo, RoundTripIsExact) {
    RngState rng(2);
    const Tensor t = gauss(rng, {3, 4});
    std::istringstream is(bytes_of(t));
    EXPECT_EQ(read_tensor(is), t);

    const auto dir = pairedit::testing::scratch_dir("io");
    save_tensor(dir / "t.pft", t);
    EXPECT_EQ(load_tensor(dir / "t.pft"), t);
}

TEST(TensorIo, RejectsBadMagicAndTruncation) {
    std::string b = bytes_of(Tensor::vector({1, 2}));
    std::string bad = b;
    bad[0] = 'X';
    std::istringstream is1(bad);
    EXPECT_THROW(read_tensor(is1), std::runtime_error);
    std::istringstream is2(b.substr(0, b.size() - 3));
    EXPECT_THROW(read_tensor(is2), std::runtime_error);
}

TEST(TensorIo, PgmHeaderAndClamping) {
    const auto dir = pairedit::testing::scratch_dir("pgm");
    save_pgm(dir / "img.pgm", Tensor::vector({-1.0, 0.0, 0.5, 2.0}), 2, 2);
    std::ifstream is(dir / "img.pgm", std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string s = ss.str();
    EXPECT_EQ(s.substr(0, 11), "P5\n2 2\n255\n");
    ASSERT_EQ(s.size(), 15u);
    EXPECT_EQ(static_cast<unsigned char>(s[11]), 0);
    EXPECT_EQ(static_cast<unsigned char>(s[12]), 0);
    EXPECT_EQ(static_cast<unsigned char>(s[14]), 255);
    EXPECT_THROW(save_pgm(dir / "x.pgm", Tensor::vector({1, 2, 3}), 2, 2), std::invalid_argument);
}

TEST(TensorIo, AtomicWriteLeavesNoTempFile) {
    const auto dir = pairedit::testing::scratch_dir("atomic");
    save_tensor(dir / "a.pft", Tensor::vector({1}));
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        (void)e;
        ++n;
    }
    EXPECT_EQ(n, 1u);
}
