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

#pragma once

// Shared value types for the decoding engine. All scores are natural-log
// probabilities held in doubles; "minus infinity" marks tokens outside the
// support and is never mixed into arithmetic.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace diver {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class ErrorCode {
  kAllZero,
  kBadValue,
  kEmpty,
  kInvalidArgument,
  kUnknownToken,
  kMissingContext,
  kContextTooLong,
  kModelUnavailable,
  kZeroProbToken,
  kMissingPlaceholder,
  kTokenizationMismatch,
  kEmptyRiskSet,
  kEmptySpanList,
  kVocabMismatch,
  kExplosionGuard,
  kCorruptTrace,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Dense token inventory. Ids are 0..size-1 and surface strings are unique.
class Vocab {
 public:
  Vocab() = default;
  Vocab(std::vector<std::string> tokens, TokenId eos,
        std::optional<TokenId> bos = std::nullopt);

  // Builds a vocab from surface strings, resolving the special tokens by name.
  static Vocab from_strings(std::vector<std::string> tokens,
                            std::string_view eos,
                            std::optional<std::string_view> bos = std::nullopt);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view surface) const;
  // Throws kUnknownToken when the surface string is not in the vocab.
  TokenId id(std::string_view surface) const;

  TokenId eos() const noexcept { return eos_; }
  std::optional<TokenId> bos() const noexcept { return bos_; }

  bool contains(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  // TokenSeq invariants: ids in range, at most one eos and only at the end.
  void validate(std::span<const TokenId> seq) const;

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.eos_ == b.eos_ && a.bos_ == b.bos_;
  }

 private:
  std::vector<std::string> tokens_;
  TokenId eos_ = 0;
  std::optional<TokenId> bos_;
};

// Per-token natural-log probabilities over a whole vocabulary.
class LogProbDist {
 public:
  static constexpr double kNormTolerance = 1e-9;

  LogProbDist() = default;
  // Validates that exp-sum over the finite entries is 1 within kNormTolerance.
  explicit LogProbDist(std::vector<double> logp);

  // Shifts arbitrary finite log-weights so that they normalize exactly.
  static LogProbDist renormalized(std::vector<double> log_weights);

  std::size_t size() const noexcept { return logp_.size(); }
  double operator[](TokenId id) const { return logp_.at(static_cast<std::size_t>(id)); }
  double prob(TokenId id) const;
  std::span<const double> values() const noexcept { return logp_; }

  // Highest-probability token; ties go to the lowest id.
  TokenId argmax() const;
  double max_logp() const;
  std::vector<TokenId> support() const;

  friend bool operator==(const LogProbDist&, const LogProbDist&) = default;

 private:
  std::vector<double> logp_;
};

// Natural log of weights divided by their sum; zeros map to kNegInf.
LogProbDist normalize_dist(std::span<const double> weights);

// Numerically stable log(sum(exp(values))). kNegInf entries contribute nothing.
double logsumexp(std::span<const double> values);

enum class Strategy {
  kGreedy,
  kNucleus,
  kBeam,
  kCd,
  kCad,
  kDiverLeft,
  kDiverRight,
  kDiverToken,
};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
bool is_diver(Strategy s) noexcept;

enum class SpanMode { kLeft, kRight, kToken };

std::string_view to_string(SpanMode m);
SpanMode span_mode_for(Strategy s);

// Knobs for every strategy. Fields that a strategy does not use are ignored.
struct DecoderConfig {
  Strategy strategy = Strategy::kGreedy;
  double gamma = 0.3;
  double top_p = 0.9;
  double alpha = 0.5;
  std::size_t beam_width = 4;
  std::size_t max_new_tokens = 64;
  std::size_t max_span_len = 64;
  std::uint64_t rng_seed = 0;
  // Model spec of a separate verification model; empty means "same model".
  std::optional<std::string> verifier;
  bool sample_spans = false;
  // Optional cap on |C(i)| for speed experiments. Unlimited by default.
  std::optional<std::size_t> max_candidates;

  void validate() const;
};

// One seedable generator per decode session. uniform() consumes exactly one
// mt19937_64 draw (whose output sequence is fixed by the standard), so runs
// are reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace diver
