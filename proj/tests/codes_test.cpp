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

#include "bb84lab/codes.hpp"

#include <gtest/gtest.h>

#include <set>

namespace bb84lab::codes {
namespace {

std::vector<LinearCode> shipped_codes() {
  return {LinearCode::repetition(3), LinearCode::hamming(3), LinearCode::hamming(4)};
}

// Calls f(x) for every x in F_2^n with weight <= t.
template <typename F>
void for_each_low_weight(std::size_t n, std::size_t t, F&& f) {
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    if (static_cast<std::size_t>(std::popcount(x)) <= t) f(BitVec::from_uint(x, n));
  }
}

TEST(LinearCodeTest, EncodeExamples) {
  auto rep = LinearCode::repetition(3);
  EXPECT_EQ(rep.encode(BitVec::from_string("1")), BitVec::from_string("111"));
  EXPECT_EQ(rep.encode(BitVec(1)), BitVec(3));
  EXPECT_THROW(rep.encode(BitVec(2)), std::invalid_argument);
}

TEST(LinearCodeTest, HammingSevenFourCodewordsAreDistinctWithDistanceThree) {
  auto code = LinearCode::hamming(3);
  ASSERT_EQ(code.n(), 7u);
  ASSERT_EQ(code.k(), 4u);
  std::vector<std::uint64_t> words;
  for (std::uint64_t y = 0; y < 16; ++y) words.push_back(code.encode(BitVec::from_uint(y, 4)).to_uint());
  EXPECT_EQ(std::set<std::uint64_t>(words.begin(), words.end()).size(), 16u);
  int dmin = 8;
  for (std::size_t a = 0; a < words.size(); ++a) {
    for (std::size_t b = a + 1; b < words.size(); ++b) dmin = std::min(dmin, std::popcount(words[a] ^ words[b]));
  }
  EXPECT_EQ(dmin, 3);
  EXPECT_EQ(code.minimum_distance(), 3u);
}

TEST(LinearCodeTest, DecodeExamples) {
  auto ham = LinearCode::hamming(3);
  for (std::uint64_t y = 0; y < 16; ++y) {
    auto msg = BitVec::from_uint(y, 4);
    auto cw = ham.encode(msg);
    EXPECT_EQ(ham.decode(cw), msg);
    for (std::size_t i = 0; i < 7; ++i) {
      auto bad = cw;
      bad.flip(i);
      EXPECT_EQ(ham.decode(bad), msg);
    }
  }
  auto rep = LinearCode::repetition(3);
  EXPECT_EQ(rep.decode(BitVec::from_string("110")), BitVec::from_string("1"));
  EXPECT_EQ(rep.decode(BitVec::from_string("100")), BitVec::from_string("0"));
}

TEST(LinearCodeTest, DecodeTieBreaksToLexicographicallySmallestMessage) {
  auto rep = LinearCode::repetition(2);  // 10 is equidistant from 00 and 11
  EXPECT_EQ(rep.decode(BitVec::from_string("10")), BitVec::from_string("0"));
  EXPECT_EQ(rep.decode(BitVec::from_string("01")), BitVec::from_string("0"));
  auto ham = LinearCode::hamming(3);
  Rng rng(1);
  for (int rep_i = 0; rep_i < 50; ++rep_i) {
    auto v = BitVec::random(7, rng);
    EXPECT_EQ(ham.decode(v), ham.decode(v));
  }
}

TEST(LinearCodeTest, CorrectableErrorsDecodeExhaustively) {
  for (const auto& code : shipped_codes()) {
    std::size_t checked = 0;
    for (std::uint64_t y = 0; y < (std::uint64_t{1} << code.k()); ++y) {
      auto msg = BitVec::from_uint(y, code.k());
      auto cw = code.encode(msg);
      for_each_low_weight(code.n(), code.decoder_radius(), [&](const BitVec& x) {
        ASSERT_EQ(code.decode(cw + x), msg) << code.descriptor().to_string();
        ++checked;
      });
    }
    EXPECT_GT(checked, 0u);
  }
}

TEST(LinearCodeTest, CosetKeyExamples) {
  auto ham = LinearCode::hamming(3);
  EXPECT_TRUE(ham.coset_key(BitVec(7)).is_zero());
  for (const auto& d : ham.dual_basis()) EXPECT_TRUE(ham.coset_key(d).is_zero());

  // Direct mod-2 evaluation of G^T kappa from the generator entries.
  auto kappa = BitVec::from_string("1010101");
  BitVec expected(4);
  for (std::size_t j = 0; j < 4; ++j) {
    int acc = 0;
    for (std::size_t i = 0; i < 7; ++i) acc += kappa[i] && ham.generator().get(i, j);
    expected.set(j, acc % 2);
  }
  EXPECT_EQ(ham.coset_key(kappa), expected);
  EXPECT_THROW(ham.coset_key(BitVec(6)), std::invalid_argument);
}

TEST(LinearCodeTest, CosetKeyIsConstantOnDualCosets) {
  Rng rng(4);
  for (const auto& code : shipped_codes()) {
    const auto dual = code.dual_basis();
    EXPECT_EQ(dual.size(), code.n() - code.k());
    for (int rep = 0; rep < 20; ++rep) {
      auto kappa = BitVec::random(code.n(), rng);
      for (const auto& d : dual) EXPECT_EQ(code.coset_key(kappa + d), code.coset_key(kappa));
    }
  }
}

TEST(LinearCodeTest, DualBasisIsOrthogonalToCode) {
  for (const auto& code : shipped_codes()) {
    for (const auto& d : code.dual_basis()) {
      for (std::size_t j = 0; j < code.k(); ++j) EXPECT_FALSE(dot(d, code.generator().column(j)));
    }
  }
}

TEST(LinearCodeTest, DescriptorRoundTripRebuildsIdenticalCode) {
  for (const auto& code : {LinearCode::hamming(4), LinearCode::repetition(5), LinearCode::random(12, 5, 77),
                           LinearCode::identity(4)}) {
    auto d = CodeDescriptor::parse(code.descriptor().to_string());
    EXPECT_EQ(d, code.descriptor());
    EXPECT_EQ(LinearCode::from_descriptor(d).generator(), code.generator());
  }
  EXPECT_THROW(CodeDescriptor::parse("golay/23/12/0"), std::invalid_argument);
  EXPECT_THROW(CodeDescriptor::parse("random/10/x/0"), std::invalid_argument);
}

TEST(LinearCodeTest, RandomCodeHasFullRankAndVerifiedRadius) {
  auto code = LinearCode::random(14, 6, 2024);
  EXPECT_EQ(code.generator().rank(), 6u);
  const auto d = code.minimum_distance();
  EXPECT_EQ(code.decoder_radius(), (d - 1) / 2);
  auto big = LinearCode::random(512, 300, 1);
  EXPECT_EQ(big.generator().rank(), 300u);
  EXPECT_THROW(big.decode(BitVec(512)), std::length_error);
}

TEST(CorrectableSetTest, Membership) {
  auto e = CorrectableSet::bounded_weight(3, 1);
  EXPECT_TRUE(e.contains(BitVec(3)));
  EXPECT_TRUE(e.contains(BitVec::from_string("010")));
  EXPECT_FALSE(e.contains(BitVec::from_string("011")));
  EXPECT_EQ(e.enumerate().size(), 4u);
  auto ex = CorrectableSet::explicit_set(3, {BitVec::from_string("011")});
  EXPECT_TRUE(ex.contains(BitVec(3)));
  EXPECT_TRUE(ex.contains(BitVec::from_string("011")));
  EXPECT_FALSE(ex.contains(BitVec::from_string("010")));
  EXPECT_EQ(ex.enumerate(), (std::vector<std::uint32_t>{0, 6}));
}

TEST(RandomCodeForRateTest, SmallCases) {
  auto c7 = random_code_for_rate(7, 1.0 / 7.0 - 0.05, 0.05, 1);
  EXPECT_EQ(c7.k(), 4u);
  EXPECT_GE(c7.decoder_radius(), 1u);

  auto c3 = random_code_for_rate(3, 0.3, 1.0 / 30.0, 1);
  EXPECT_EQ(c3.descriptor().family, Family::repetition);
  EXPECT_EQ(c3.k(), 1u);

  auto c15 = random_code_for_rate(15, 0.05, 0.017, 1);
  EXPECT_GE(c15.k(), 9u);
  for (std::uint64_t y = 0; y < (std::uint64_t{1} << c15.k()); y += 37) {
    auto msg = BitVec::from_uint(y, c15.k());
    auto cw = c15.encode(msg);
    for (std::size_t i = 0; i < 15; ++i) {
      auto bad = cw;
      bad.flip(i);
      ASSERT_EQ(c15.decode(bad), msg);
    }
  }
}

TEST(RandomCodeForRateTest, RandomSearchMeetsRadius) {
  auto code = random_code_for_rate(16, 0.1, 0.05, 9);
  EXPECT_GE(code.decoder_radius(), 2u);
  EXPECT_GE(code.k(), 2u);
  EXPECT_EQ(code.descriptor().family, Family::random);
  EXPECT_EQ(LinearCode::from_descriptor(code.descriptor()).generator(), code.generator());
}

TEST(RandomCodeForRateTest, InfeasibleParametersFail) {
  EXPECT_THROW(random_code_for_rate(10, 0.3, 0.2, 1), std::invalid_argument);
  EXPECT_THROW(random_code_for_rate(100, 0.15, 0.05, 1), InfeasibleCode);
  auto trivial = random_code_for_rate(5, 0.0, 0.1, 1);  // t = 0
  EXPECT_EQ(trivial.k(), 5u);
}

}  // namespace
}  // namespace bb84lab::codes
