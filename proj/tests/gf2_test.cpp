// Copyright 2026 The bb84lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bb84lab/gf2.hpp"

#include <gtest/gtest.h>

#include <set>

#include "bb84lab/codes.hpp"

namespace bb84lab::gf2 {
namespace {

// Plain integer reference: bit j of x is coordinate j.
int ref_dot(std::uint64_t a, std::uint64_t b) { return std::popcount(a & b) & 1; }

std::uint64_t ref_apply(const BitMatrix& m, std::uint64_t x) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    int acc = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m.get(i, j) * static_cast<int>((x >> j) & 1u);
    if (acc % 2) out |= std::uint64_t{1} << i;
  }
  return out;
}

TEST(BitVecTest, ConstructionAndAccess) {
  auto v = BitVec::from_string("1011");
  EXPECT_EQ(v.size(), 4u);
  EXPECT_TRUE(v[0]);
  EXPECT_FALSE(v[1]);
  EXPECT_EQ(v.weight(), 3u);
  EXPECT_EQ(v.to_uint(), 0b1101u);
  EXPECT_EQ(v.to_string(), "1011");
  EXPECT_THROW(v.get(4), std::out_of_range);
  EXPECT_THROW(BitVec::from_string("10x"), std::invalid_argument);
}

TEST(BitVecTest, HexBitOrderIsLsbFirstPerByte) {
  auto v = BitVec::from_string("100000001");
  EXPECT_EQ(v.to_hex(), "0101");
  EXPECT_EQ(BitVec::from_string("0000111100000001").to_hex(), "f080");
  EXPECT_EQ(BitVec::from_hex("0101", 9), v);
  EXPECT_THROW(BitVec::from_hex("0103", 9), std::invalid_argument);  // padding bit set
  EXPECT_THROW(BitVec::from_hex("01", 9), std::invalid_argument);
}

TEST(BitVecTest, HexAndBytesRoundTripProperty) {
  Rng rng(7);
  for (std::size_t len : {1u, 7u, 8u, 63u, 64u, 65u, 200u}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto v = BitVec::random(len, rng);
      EXPECT_EQ(BitVec::from_hex(v.to_hex(), len), v);
      EXPECT_EQ(BitVec::from_bytes(v.to_bytes(), len), v);
    }
  }
}

TEST(BitVecTest, AdditionIsAbelianAndSelfInverse) {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t len = 1 + rng.below(150);
    auto a = BitVec::random(len, rng), b = BitVec::random(len, rng), c = BitVec::random(len, rng);
    EXPECT_EQ(a + b, b + a);
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_TRUE((a + a).is_zero());
    EXPECT_EQ(a + BitVec(len), a);
  }
  EXPECT_THROW(BitVec(3) + BitVec(4), std::invalid_argument);
}

TEST(BitMatrixTest, ApplyExamples) {
  auto id = BitMatrix::identity(3);
  EXPECT_EQ(id.apply(BitVec::from_string("101")), BitVec::from_string("101"));
  auto m = BitMatrix::from_rows({"110", "011"});
  EXPECT_EQ(m.apply(BitVec::from_string("110")), BitVec::from_string("01"));
  EXPECT_EQ(m.apply(BitVec(3)), BitVec(2));
  EXPECT_THROW(m.apply(BitVec(2)), std::invalid_argument);
}

TEST(BitMatrixTest, ApplyMatchesIntegerReference) {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto m = BitMatrix::random(1 + rng.below(9), 1 + rng.below(9), rng);
    for (std::uint64_t x = 0; x < (1u << m.cols()); ++x) {
      EXPECT_EQ(m.apply(BitVec::from_uint(x, m.cols())).to_uint(), ref_apply(m, x));
    }
  }
}

TEST(BitMatrixTest, TransposeExamples) {
  EXPECT_EQ(BitMatrix::identity(4).transpose(), BitMatrix::identity(4));
  auto row = BitMatrix::from_rows({"101"});
  EXPECT_EQ(row.transpose(), BitMatrix::from_rows({"1", "0", "1"}));
}

TEST(BitMatrixTest, AdjointIdentityExhaustiveUpToDimensionEight) {
  Rng rng(5);
  for (std::size_t rows = 1; rows <= 8; ++rows) {
    for (std::size_t cols = 1; cols <= 8; ++cols) {
      auto m = BitMatrix::random(rows, cols, rng);
      auto mt = m.transpose();
      EXPECT_EQ(mt.transpose(), m);
      for (std::uint64_t x = 0; x < (1u << rows); ++x) {
        const auto mtx = ref_apply(mt, x);
        for (std::uint64_t y = 0; y < (1u << cols); ++y) {
          ASSERT_EQ(ref_dot(mtx, y), ref_dot(x, ref_apply(m, y))) << rows << "x" << cols;
        }
      }
    }
  }
}

TEST(BitMatrixTest, AdjointIdentityRandomFourBySeven) {
  Rng rng(99);
  auto m = BitMatrix::random(4, 7, rng);
  auto mt = m.transpose();
  for (std::uint64_t x = 0; x < 16; ++x) {
    for (std::uint64_t y = 0; y < 128; ++y) {
      auto xv = BitVec::from_uint(x, 4), yv = BitVec::from_uint(y, 7);
      EXPECT_EQ(dot(mt.apply(xv), yv), dot(xv, m.apply(yv)));
    }
  }
}

TEST(BitMatrixTest, KernelBasisExamples) {
  EXPECT_TRUE(BitMatrix::identity(5).kernel_basis().empty());
  auto k = BitMatrix(2, 3).kernel_basis();
  ASSERT_EQ(k.size(), 3u);
  EXPECT_EQ(BitMatrix::from_columns(k, 3).rank(), 3u);
}

TEST(BitMatrixTest, KernelOfHammingTransposeIsDualCode) {
  auto code = codes::LinearCode::hamming(3);
  const auto& gt = code.generator_transpose();
  auto basis = gt.kernel_basis();
  ASSERT_EQ(basis.size(), 3u);

  // Brute-force dual: all v orthogonal to every codeword.
  std::set<std::uint64_t> dual;
  for (std::uint64_t v = 0; v < 128; ++v) {
    bool orth = true;
    for (std::uint64_t y = 0; y < 16; ++y) {
      if (ref_dot(v, code.encode(BitVec::from_uint(y, 4)).to_uint())) orth = false;
    }
    if (orth) dual.insert(v);
  }
  std::set<std::uint64_t> span;
  for (std::uint64_t c = 0; c < 8; ++c) {
    BitVec acc(7);
    for (std::size_t j = 0; j < 3; ++j) {
      if ((c >> j) & 1u) acc += basis[j];
    }
    span.insert(acc.to_uint());
  }
  EXPECT_EQ(span, dual);
}

TEST(BitMatrixTest, RankNullityProperty) {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t rows = 1 + rng.below(20), cols = 1 + rng.below(20);
    auto m = BitMatrix::random(rows, cols, rng);
    if (rep % 3 == 0 && rows > 1) {
      // Force a dependent row.
      for (std::size_t j = 0; j < cols; ++j) m.set(rows - 1, j, m.get(0, j));
    }
    const auto kernel = m.kernel_basis();
    EXPECT_EQ(m.rank(), m.transpose().rank());
    EXPECT_EQ(kernel.size() + m.rank(), cols);
    for (const auto& v : kernel) EXPECT_TRUE(m.apply(v).is_zero());
    if (!kernel.empty()) EXPECT_EQ(BitMatrix::from_columns(kernel, cols).rank(), kernel.size());
  }
}

TEST(BitMatrixTest, KernelBasisIsDeterministic) {
  Rng rng(23);
  auto m = BitMatrix::random(6, 12, rng);
  EXPECT_EQ(m.kernel_basis(), m.kernel_basis());
}

}  // namespace
}  // namespace bb84lab::gf2
