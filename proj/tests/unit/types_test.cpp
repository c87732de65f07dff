/* Copyright 2026 The Diver Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>

#include <gtest/gtest.h>

#include "diver/types.hpp"

namespace diver {
namespace {

TEST(Vocab, LooksUpTokensBothWays) {
  const Vocab v = Vocab::from_strings({"<s>", "</s>", "a", "b"}, "</s>", "<s>");
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.eos(), 1);
  EXPECT_EQ(v.bos(), 0);
  EXPECT_EQ(v.id("b"), 3);
  EXPECT_EQ(v.token(2), "a");
  EXPECT_FALSE(v.find("zz").has_value());
  EXPECT_THROW(v.id("zz"), Error);
}

TEST(Vocab, RejectsDuplicatesAndBosEqualToEos) {
  EXPECT_THROW(Vocab({"a", "a", "</s>"}, 2), Error);
  EXPECT_THROW(Vocab({"a", "</s>"}, 1, 1), Error);
  EXPECT_THROW(Vocab({"a", "</s>"}, 5), Error);
}

TEST(Vocab, ValidatesSequences) {
  const Vocab v({"a", "</s>"}, 1);
  EXPECT_NO_THROW(v.validate(TokenSeq{0, 0, 1}));
  EXPECT_THROW(v.validate(TokenSeq{1, 0}), Error);
  EXPECT_THROW(v.validate(TokenSeq{0, 7}), Error);
}

TEST(NormalizeDist, SymmetricPair) {
  const auto d = normalize_dist(std::vector<double>{1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(d[0], std::log(0.5));
  EXPECT_DOUBLE_EQ(d[1], std::log(0.5));
  EXPECT_EQ(d[2], kNegInf);
  EXPECT_EQ(d[3], kNegInf);
}

TEST(NormalizeDist, SingleSupport) {
  const auto d = normalize_dist(std::vector<double>{2, 0, 0, 0});
  EXPECT_EQ(d[0], 0.0);
  EXPECT_EQ(d.support(), std::vector<TokenId>{0});
}

TEST(NormalizeDist, AlreadyNormalized) {
  const auto d = normalize_dist(std::vector<double>{0.2, 0.3, 0.5});
  EXPECT_NEAR(d[0], std::log(0.2), 1e-12);
  EXPECT_NEAR(d[1], std::log(0.3), 1e-12);
  EXPECT_NEAR(d[2], std::log(0.5), 1e-12);
}

TEST(NormalizeDist, Errors) {
  try {
    normalize_dist(std::vector<double>{0, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAllZero);
  }
  EXPECT_THROW(normalize_dist(std::vector<double>{1, -1}), Error);
  EXPECT_THROW(normalize_dist(std::vector<double>{}), Error);
}

TEST(LogProbDist, RejectsUnnormalizedInput) {
  EXPECT_THROW(LogProbDist(std::vector<double>{std::log(0.5), std::log(0.6)}), Error);
  EXPECT_THROW(LogProbDist(std::vector<double>{0.1}), Error);
}

TEST(LogProbDist, ArgmaxPrefersLowestId) {
  const auto d = normalize_dist(std::vector<double>{1, 3, 3});
  EXPECT_EQ(d.argmax(), 1);
  EXPECT_DOUBLE_EQ(d.max_logp(), std::log(3.0 / 7.0));
}

TEST(Logsumexp, Examples) {
  EXPECT_NEAR(logsumexp(std::vector<double>{std::log(0.5), std::log(0.5)}), 0.0, 1e-15);
  EXPECT_EQ(logsumexp(std::vector<double>{0.0}), 0.0);
  EXPECT_NEAR(logsumexp(std::vector<double>{std::log(0.1), std::log(0.2), std::log(0.3)}),
              std::log(0.6), 1e-15);
  EXPECT_EQ(logsumexp(std::vector<double>{kNegInf, kNegInf}), kNegInf);
}

TEST(Strategy, NamesRoundTrip) {
  for (const char* name :
       {"greedy", "nucleus", "beam", "cd", "cad", "diver-left", "diver-right", "diver-token"}) {
    EXPECT_EQ(to_string(parse_strategy(name)), name);
  }
  EXPECT_THROW(parse_strategy("diver"), Error);
  EXPECT_TRUE(is_diver(Strategy::kDiverToken));
  EXPECT_FALSE(is_diver(Strategy::kCd));
  EXPECT_EQ(span_mode_for(Strategy::kDiverLeft), SpanMode::kLeft);
}

TEST(DecoderConfig, DefaultsAndValidation) {
  DecoderConfig c;
  EXPECT_DOUBLE_EQ(c.gamma, 0.3);
  EXPECT_DOUBLE_EQ(c.top_p, 0.9);
  EXPECT_DOUBLE_EQ(c.alpha, 0.5);
  EXPECT_NO_THROW(c.validate());
  c.gamma = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c.gamma = 1.0;
  c.top_p = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c.top_p = 1.0;
  c.max_span_len = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Rng, SeededStreamsRepeat) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace diver
