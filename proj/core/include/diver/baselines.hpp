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
#include <span>

#include "diver/engine.hpp"
#include "diver/lm.hpp"
#include "diver/types.hpp"

namespace diver {

// Per-step selection rules, exposed for direct testing.

// Smallest prefix of tokens sorted by descending probability (ties by
// ascending id) whose mass reaches top_p, renormalized and sampled with one
// uniform draw.
TokenId nucleus_sample(const LogProbDist& dist, double top_p, Rng& rng);
std::vector<TokenId> nucleus_set(const LogProbDist& dist, double top_p);

// Contrastive decoding: among C(i) of the expert, the largest
// p_expert - p_amateur (probability space). Ties go to the lowest id.
TokenId cd_select(const LogProbDist& expert, const LogProbDist& amateur, double gamma);

// Context-aware decoding: argmax over the vocab of
// (1 + alpha) p_with - alpha p_without. Ties go to the lowest id.
TokenId cad_select(const LogProbDist& with_input, const LogProbDist& without_input, double alpha);

struct BeamHypothesis {
  TokenSeq tokens;
  double cum_logp = 0.0;
  bool finished = false;
};

DecodeResult greedy_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                           std::size_t max_new_tokens);

DecodeResult nucleus_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                            double top_p, Rng& rng, std::size_t max_new_tokens);

// Length-unnormalized beam search. Each step keeps the beam_width best
// expansions of the live hypotheses; those ending in eos (or reaching the
// length cap) leave the beam as finished. Returns the finished hypothesis with
// the highest cum_logp, ties to the lexicographically smaller sequence.
// beam_width = 1 reproduces greedy decoding.
DecodeResult beam_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                         std::size_t beam_width, std::size_t max_new_tokens);

// Both models must share the vocab.
DecodeResult cd_decode(const LanguageModel& expert, const LanguageModel& amateur,
                       std::span<const TokenId> prompt, double gamma,
                       std::size_t max_new_tokens);

// Generated tokens are appended to both contexts.
DecodeResult cad_decode(const LanguageModel& model, std::span<const TokenId> prompt_with_input,
                        std::span<const TokenId> prompt_without_input, double alpha,
                        std::size_t max_new_tokens);

}  // namespace diver
