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

#include <span>
#include <string_view>
#include <vector>

#include "diver/lm.hpp"
#include "diver/pmi.hpp"
#include "diver/span.hpp"
#include "diver/trace.hpp"
#include "diver/types.hpp"

namespace diver {

struct DecodeResult {
  // Ends with eos or holds max_new_tokens tokens.
  TokenSeq output;
  DecodeTrace trace;
  DecodeStats stats;
};

// Raised when a decode fails part-way; carries what was produced so far.
class DecodeAbort : public Error {
 public:
  DecodeAbort(const Error& cause, TokenSeq partial_output, DecodeTrace partial_trace)
      : Error(cause.code(), cause.what()),
        partial_output_(std::move(partial_output)),
        partial_trace_(std::move(partial_trace)) {}

  const TokenSeq& partial_output() const noexcept { return partial_output_; }
  const DecodeTrace& partial_trace() const noexcept { return partial_trace_; }

 private:
  TokenSeq partial_output_;
  DecodeTrace partial_trace_;
};

// Assigns q = seed_base_logp + pmi to every span and sorts by q descending;
// equal q goes to the lower seed token id.
std::vector<CandidateSpan> rerank(std::vector<CandidateSpan> spans);

// Greedy: the first ranked span. Sampled: one draw from softmax(q) over the
// ranked list (temperature 1), walking it in ranked order. Spans with q = -inf
// are never selected.
const CandidateSpan& select_span(std::span<const CandidateSpan> ranked, bool sample, Rng& rng);

// Span-level PMI-verified decoding for the diver-left, diver-right and
// diver-token strategies. `verifier` may be the same object as `model`.
//
// Per step: compute C(i) from the forward distribution. A singleton set emits
// its token. Otherwise every candidate is rolled out greedily to its first
// risk step, k follows from the Left/Right boundary (k = 0 for diver-token),
// spans are cut (Right-mode rollouts are first extended to k + 1 tokens), each
// span is scored by PMI against the input, and the chosen span is committed.
// Decoding resumes at i + k + 1 with a fresh forward call.
DecodeResult decode(const LanguageModel& model, const LanguageModel& verifier,
                    const PromptTemplatePair& tpl, std::string_view input,
                    const DecoderConfig& cfg);

}  // namespace diver
