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

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "diver/divergence.hpp"
#include "diver/lm.hpp"
#include "diver/types.hpp"

namespace diver {

// Greedy continuation of one candidate seed from a divergence point at step i.
struct Rollout {
  Candidate seed;
  // Begins with seed.token. Position j of the output holds tokens[j - step].
  TokenSeq tokens;
  std::size_t step = 0;
  // First position after the seed whose candidate set has more than one member.
  // When the rollout stops at eos or at the cap first, this is
  // step + tokens.size(), i.e. one past the last token.
  std::size_t first_risk = 0;
  bool ended = false;
  bool hit_eos = false;
  bool hit_cap = false;
};

// Candidate token -> first-emerged risk position.
struct RiskSet {
  std::map<TokenId, std::size_t> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::size_t min() const;
  std::size_t max() const;
};

struct CandidateSpan {
  TokenSeq tokens;
  double seed_base_logp = kNegInf;
  double pmi = 0.0;
  double q = kNegInf;
  // Ends with eos.
  bool terminal = false;
  std::size_t first_risk = 0;

  TokenId seed() const { return tokens.front(); }
};

// Extends context ++ [seed] greedily. Before each further token the candidate
// set of that position is computed; the rollout pauses without emitting at the
// first position with |C(j)| > 1, and also stops at eos or after `cap` tokens.
Rollout rollout_candidate(const LanguageModel& model, std::span<const TokenId> context,
                          std::size_t step, Candidate seed, double gamma, std::size_t cap);

// Continues a paused rollout greedily (argmax, ties to the lowest id) past its
// risk step until it holds target_len tokens or emits eos. first_risk is kept.
void extend_rollout(const LanguageModel& model, std::span<const TokenId> context,
                    Rollout& rollout, std::size_t target_len);

RiskSet risk_set(std::span<const Rollout> rollouts);

// Left: k = min(R) - i - 1. Right: k = max(R) - i - 1.
std::size_t dynamic_k(const RiskSet& risks, std::size_t step, SpanMode mode);

// First k + 1 tokens of each rollout. Rollouts that ended at eos earlier give
// shorter, terminal spans.
std::vector<CandidateSpan> build_spans(std::span<const Rollout> rollouts, std::size_t k,
                                       TokenId eos);

}  // namespace diver
