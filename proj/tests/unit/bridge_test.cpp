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
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "diver/bridge.hpp"
#include "diver/engine.hpp"
#include "fixtures.hpp"

namespace diver::bridge {
namespace {

TEST(Codec, GoldenFileRoundTrip) {
  std::ifstream in(std::string(DIVER_TEST_DATA) + "/bridge_golden.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++n;
    if (line.find("\"op\"") != std::string::npos) {
      EXPECT_EQ(encode(decode_request(line)), line);
    } else {
      EXPECT_EQ(encode(decode_response(line)), line);
    }
  }
  EXPECT_GE(n, 15);
}

TEST(Codec, RequestVariants) {
  const Request ids{"next_logprobs", 4, TokenSeq{1, 2}, std::nullopt};
  const Request text{"tokenize", 5, std::string("a b"), std::nullopt};
  const Request scored{"score_sequence", 6, TokenSeq{}, TokenSeq{3}};
  const Request bare{"hello", 7, {}, std::nullopt};
  for (const auto& r : {ids, text, scored, bare}) EXPECT_EQ(decode_request(encode(r)), r);
}

TEST(Codec, ManifestRoundTrip) {
  Manifest m;
  m.vocab_size = 3;
  m.eos_id = 1;
  m.bos_id = 0;
  m.context_limit = 128;
  m.vocab = {"<s>", "</s>", "a"};
  m.model_id = "toy";
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
  EXPECT_EQ(manifest_to_json(m).at("v"), 1);
  Manifest bare;
  bare.vocab_size = 10;
  bare.model_id = "x";
  EXPECT_EQ(manifest_from_json(manifest_to_json(bare)), bare);
}

TEST(Codec, NegativeInfinityTravelsAsNull) {
  const std::vector<double> v{kNegInf, -0.5, 0.0};
  const auto doc = logprobs_to_json(v);
  EXPECT_TRUE(doc[0].is_null());
  EXPECT_EQ(logprobs_from_json(doc), v);
}

TEST(Codec, MalformedLinesRaiseParse) {
  for (const char* bad : {"not json", "{\"op\":\"hello\"}", "[1,2]", "{\"request_id\":1}"}) {
    try {
      decode_request(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kParse);
    }
  }
  EXPECT_THROW(decode_response("{\"ok\":true}"), Error);
}

TEST(Transport, RejectsUnknownAddresses) {
  EXPECT_THROW(open_transport("udp:1.2.3.4:5"), Error);
  EXPECT_THROW(open_transport("tcp:nohost"), Error);
}

class FakeBridge : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 gen(12);
    doc_ = testing::random_table(gen, {3, 2});
    path_ = std::filesystem::temp_directory_path() /
            ("diver_bridge_model_" + std::to_string(::getpid()) + ".json");
    std::ofstream(path_) << doc_.dump();
  }
  void TearDown() override { std::filesystem::remove(path_); }

  std::string command(const std::string& extra = "") const {
    return std::string(DIVER_FAKE_BRIDGE) + " " + path_.string() + extra;
  }

  nlohmann::json doc_;
  std::filesystem::path path_;
};

TEST_F(FakeBridge, HelloAndScoringConsistency) {
  const BridgeLM lm(spawn_process(command()));
  const TabularLM local = TabularLM::from_json(doc_);
  EXPECT_EQ(lm.manifest().vocab_size, local.vocab().size());
  EXPECT_EQ(lm.vocab(), local.vocab());
  EXPECT_EQ(lm.manifest().version, kProtocolVersion);

  const auto next = lm.next_dist(TokenSeq{});
  for (TokenId t = 1; t < static_cast<TokenId>(lm.vocab().size()); ++t) {
    const auto scored = lm.score_sequence(TokenSeq{}, TokenSeq{t});
    ASSERT_EQ(scored.size(), 1u);
    EXPECT_NEAR(scored[0], next[t], 1e-6);
  }
  const auto again = lm.next_dist(TokenSeq{});
  const auto ref = local.next_dist(TokenSeq{});
  for (std::size_t v = 0; v < next.size(); ++v) {
    if (ref.values()[v] == kNegInf) {
      EXPECT_EQ(next.values()[v], kNegInf);
      EXPECT_EQ(again.values()[v], kNegInf);
      continue;
    }
    EXPECT_NEAR(next.values()[v], again.values()[v], 1e-6);
    EXPECT_NEAR(next.values()[v], ref.values()[v], 1e-12);
  }
}

TEST_F(FakeBridge, TokenizerRoundTripAndMismatch) {
  const BridgeLM lm(spawn_process(command()));
  const TokenSeq ids = lm.tokenize("a b | c");
  EXPECT_EQ(lm.detokenize(ids), "a b | c");
  EXPECT_TRUE(lm.tokenize("").empty());
  try {
    lm.tokenize("a\tb");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTokenizationMismatch);
    EXPECT_NE(std::string(e.what()).find("offset 1"), std::string::npos);
  }
}

TEST_F(FakeBridge, ProtocolViolationsKeepTheProcessAlive) {
  auto t = spawn_process(command());
  t->send_line("garbage");
  const Response bad = decode_response(t->read_line());
  EXPECT_FALSE(bad.ok);
  t->send_line(encode(Request{"bogus", 3, {}, std::nullopt}));
  const Response unknown = decode_response(t->read_line());
  EXPECT_FALSE(unknown.ok);
  EXPECT_EQ(unknown.request_id, 3u);
  t->send_line(encode(Request{"hello", 4, {}, std::nullopt}));
  const Response hello = decode_response(t->read_line());
  EXPECT_TRUE(hello.ok);
  EXPECT_EQ(hello.request_id, 4u);
}

TEST_F(FakeBridge, DecodesLikeTheLocalModel) {
  const BridgeLM lm(spawn_process(command()));
  const TabularLM local = TabularLM::from_json(doc_);
  const auto tpl = testing::toy_template();
  DecoderConfig cfg;
  cfg.strategy = Strategy::kDiverRight;
  cfg.max_new_tokens = 8;
  for (const char* input : {"a", "b c", "c a b"}) {
    EXPECT_EQ(decode(lm, lm, tpl, input, cfg).output, decode(local, local, tpl, input, cfg).output);
  }
}

TEST_F(FakeBridge, ContextLimitIsAdvertised) {
  const BridgeLM lm(spawn_process(command(" --context-limit 3")));
  EXPECT_EQ(lm.context_limit(), 3u);
  try {
    lm.next_dist(TokenSeq{2, 2, 2, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kContextTooLong);
  }
}

TEST_F(FakeBridge, TcpTransport) {
  auto server = spawn_process(command(" --tcp 0"));
  const std::string banner = server->read_line();
  ASSERT_EQ(banner.rfind("PORT ", 0), 0u) << banner;
  const BridgeLM lm(open_transport("tcp:127.0.0.1:" + banner.substr(5)));
  const TabularLM local = TabularLM::from_json(doc_);
  EXPECT_EQ(lm.vocab(), local.vocab());
  const auto d = lm.next_dist(TokenSeq{3});
  EXPECT_NEAR(d[2], local.next_dist(TokenSeq{3})[2], 1e-12);
}

TEST(BridgeLM, FailsCleanlyWhenTheProcessIsMissing) {
  EXPECT_THROW(BridgeLM(spawn_process("/nonexistent/bridge-binary")), Error);
}

}  // namespace
}  // namespace diver::bridge
