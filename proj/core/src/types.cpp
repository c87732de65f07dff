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

#include "diver/types.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace diver {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kBadValue: return "BadValue";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kMissingContext: return "MissingContext";
    case ErrorCode::kContextTooLong: return "ContextTooLong";
    case ErrorCode::kModelUnavailable: return "ModelUnavailable";
    case ErrorCode::kZeroProbToken: return "ZeroProbToken";
    case ErrorCode::kMissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::kTokenizationMismatch: return "TokenizationMismatch";
    case ErrorCode::kEmptyRiskSet: return "EmptyRiskSet";
    case ErrorCode::kEmptySpanList: return "EmptySpanList";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kExplosionGuard: return "ExplosionGuard";
    case ErrorCode::kCorruptTrace: return "CorruptTrace";
    case ErrorCode::kParse: return "Parse";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code) {}

Vocab::Vocab(std::vector<std::string> tokens, TokenId eos,
             std::optional<TokenId> bos)
    : tokens_(std::move(tokens)), eos_(eos), bos_(bos) {
  if (tokens_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "vocab is empty");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& t : tokens_) {
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocab entry '" + t + "'");
    }
  }
  if (!contains(eos_)) {
    throw Error(ErrorCode::kInvalidArgument, "eos id out of range");
  }
  if (bos_ && (!contains(*bos_) || *bos_ == eos_)) {
    throw Error(ErrorCode::kInvalidArgument, "bos must be in range and distinct from eos");
  }
}

Vocab Vocab::from_strings(std::vector<std::string> tokens, std::string_view eos,
                          std::optional<std::string_view> bos) {
  auto index_of = [&](std::string_view s) -> TokenId {
    auto it = std::find(tokens.begin(), tokens.end(), s);
    if (it == tokens.end()) {
      throw Error(ErrorCode::kUnknownToken, "special token '" + std::string(s) + "' not in vocab");
    }
    return static_cast<TokenId>(it - tokens.begin());
  };
  TokenId eos_id = index_of(eos);
  std::optional<TokenId> bos_id;
  if (bos) bos_id = index_of(*bos);
  return Vocab(std::move(tokens), eos_id, bos_id);
}

const std::string& Vocab::token(TokenId id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::kBadValue, "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view surface) const {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] == surface) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

TokenId Vocab::id(std::string_view surface) const {
  if (auto found = find(surface)) return *found;
  throw Error(ErrorCode::kUnknownToken, "'" + std::string(surface) + "' is not in the vocab");
}

void Vocab::validate(std::span<const TokenId> seq) const {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!contains(seq[i])) {
      throw Error(ErrorCode::kBadValue,
                  "token id " + std::to_string(seq[i]) + " out of range at position " +
                      std::to_string(i));
    }
    if (seq[i] == eos_ && i + 1 != seq.size()) {
      throw Error(ErrorCode::kBadValue, "eos before the end of a sequence");
    }
  }
}

LogProbDist::LogProbDist(std::vector<double> logp) : logp_(std::move(logp)) {
  if (logp_.empty()) throw Error(ErrorCode::kEmpty, "distribution over an empty vocab");
  for (double v : logp_) {
    if (std::isnan(v) || v > 0.0) {
      throw Error(ErrorCode::kBadValue, "log-probability must be finite and <= 0 or -inf");
    }
  }
  double mass = std::exp(logsumexp(logp_));
  if (std::abs(mass - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::kBadValue, "distribution mass " + std::to_string(mass) + " != 1");
  }
}

LogProbDist LogProbDist::renormalized(std::vector<double> log_weights) {
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::kBadValue, "log-weight must not be NaN or +inf");
    }
  }
  const double z = logsumexp(log_weights);
  if (z == kNegInf) throw Error(ErrorCode::kAllZero, "all log-weights are -inf");
  for (double& v : log_weights) {
    if (v != kNegInf) v = std::min(0.0, v - z);
  }
  return LogProbDist(std::move(log_weights));
}

double LogProbDist::prob(TokenId id) const {
  const double v = (*this)[id];
  return v == kNegInf ? 0.0 : std::exp(v);
}

TokenId LogProbDist::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logp_.size(); ++i) {
    if (logp_[i] > logp_[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

double LogProbDist::max_logp() const { return logp_.at(static_cast<std::size_t>(argmax())); }

std::vector<TokenId> LogProbDist::support() const {
  std::vector<TokenId> out;
  for (std::size_t i = 0; i < logp_.size(); ++i) {
    if (logp_[i] != kNegInf) out.push_back(static_cast<TokenId>(i));
  }
  return out;
}

LogProbDist normalize_dist(std::span<const double> weights) {
  if (weights.empty()) throw Error(ErrorCode::kEmpty, "no weights");
  double total = 0.0;
  for (double w : weights) {
    if (std::isnan(w) || w < 0.0 || std::isinf(w)) {
      throw Error(ErrorCode::kBadValue, "weights must be finite and non-negative");
    }
    total += w;
  }
  if (total == 0.0) throw Error(ErrorCode::kAllZero, "every weight is zero");
  std::vector<double> logp(weights.size());
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    logp[i] = weights[i] == 0.0 ? kNegInf : std::min(0.0, std::log(weights[i]) - log_total);
  }
  return LogProbDist(std::move(logp));
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmpty, "logsumexp of an empty list");
  const double m = *std::max_element(values.begin(), values.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double acc = 0.0;
  for (double v : values) {
    if (v != kNegInf) acc += std::exp(v - m);
  }
  return m + std::log(acc);
}

namespace {

struct StrategyName {
  Strategy strategy;
  std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::kGreedy, "greedy"},         {Strategy::kNucleus, "nucleus"},
    {Strategy::kBeam, "beam"},             {Strategy::kCd, "cd"},
    {Strategy::kCad, "cad"},               {Strategy::kDiverLeft, "diver-left"},
    {Strategy::kDiverRight, "diver-right"}, {Strategy::kDiverToken, "diver-token"},
};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.strategy == s) return e.name;
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (const auto& e : kStrategyNames) {
    if (e.name == name) return e.strategy;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

bool is_diver(Strategy s) noexcept {
  return s == Strategy::kDiverLeft || s == Strategy::kDiverRight || s == Strategy::kDiverToken;
}

std::string_view to_string(SpanMode m) {
  switch (m) {
    case SpanMode::kLeft: return "left";
    case SpanMode::kRight: return "right";
    case SpanMode::kToken: return "token";
  }
  return "unknown";
}

SpanMode span_mode_for(Strategy s) {
  switch (s) {
    case Strategy::kDiverLeft: return SpanMode::kLeft;
    case Strategy::kDiverRight: return SpanMode::kRight;
    case Strategy::kDiverToken: return SpanMode::kToken;
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  "strategy '" + std::string(to_string(s)) + "' has no span mode");
  }
}

void DecoderConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be in (0, 1]");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  if (!(alpha >= 0.0) || std::isinf(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must be finite and >= 0");
  }
  if (beam_width == 0) throw Error(ErrorCode::kInvalidArgument, "beam_width must be positive");
  if (max_new_tokens == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_new_tokens must be positive");
  }
  if (max_span_len == 0) throw Error(ErrorCode::kInvalidArgument, "max_span_len must be >= 1");
  if (max_candidates && *max_candidates == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_candidates must be positive when set");
  }
}

}  // namespace diver
