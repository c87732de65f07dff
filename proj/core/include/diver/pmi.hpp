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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "diver/lm.hpp"
#include "diver/span.hpp"
#include "diver/types.hpp"

namespace diver {

inline constexpr std::string_view kInputMarker = "[INPUT]";
inline constexpr std::string_view kOutputMarker = "[INCOMPLETE_OUTPUT]";

// Forward/backward instruction pair for one task.
//
// The forward template holds [INPUT] once. The backward template holds
// [INCOMPLETE_OUTPUT] once, followed later by [INPUT] once: the partial output
// conditions and the input is scored. JSON form: {"name", "forward", "backward"}.
class PromptTemplatePair {
 public:
  PromptTemplatePair(std::string name, std::string forward, std::string backward);

  static PromptTemplatePair from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  const std::string& name() const noexcept { return name_; }
  const std::string& forward() const noexcept { return forward_; }
  const std::string& backward() const noexcept { return backward_; }

  // Literal scaffolding around the placeholders.
  const std::string& forward_before_input() const noexcept { return fwd_before_; }
  const std::string& forward_after_input() const noexcept { return fwd_after_; }
  const std::string& backward_before_output() const noexcept { return bwd_before_; }
  const std::string& backward_between() const noexcept { return bwd_between_; }
  const std::string& backward_after_input() const noexcept { return bwd_after_; }

 private:
  std::string name_, forward_, backward_;
  std::string fwd_before_, fwd_after_;
  std::string bwd_before_, bwd_between_, bwd_after_;
};

// Reads either a single template object or an array of them.
std::vector<PromptTemplatePair> load_templates(const std::filesystem::path& path);
const PromptTemplatePair& find_template(std::span<const PromptTemplatePair> templates,
                                        std::string_view name);

// Literal text substitution.
std::string render_forward_text(const PromptTemplatePair& tpl, std::string_view input);
std::string render_backward_text(const PromptTemplatePair& tpl, std::string_view input,
                                 std::string_view incomplete_output);

// Scaffolding segments are tokenized on their own and the placeholder token
// sequences are spliced in, so partial outputs never re-tokenize.
TokenSeq render_forward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                               std::span<const TokenId> input);
// The forward prompt with the [INPUT] block removed.
TokenSeq render_forward_prompt_without_input(const PromptTemplatePair& tpl,
                                             const LanguageModel& model);

struct BackwardPrompt {
  // Scaffolding and incomplete output up to, not including, the input.
  TokenSeq prefix;
  // The input tokens: the only tokens that are scored.
  TokenSeq target;
};

BackwardPrompt render_backward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                                      std::span<const TokenId> input,
                                      std::span<const TokenId> incomplete_output);

// Text form. Raises kTokenizationMismatch when the whole rendered prompt
// tokenizes, but not into the spliced segments.
BackwardPrompt render_backward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                                      std::string_view input,
                                      std::string_view incomplete_output);

// Per-token log-ratio deltas are clamped to this many nats. Zero probabilities
// on either side land on the clamp.
inline constexpr double kDeltaClamp = 50.0;

struct PmiScore {
  double value = 0.0;
  // Over the input tokens x_t: log p(x_t | with span) - log p(x_t | without).
  std::vector<double> per_token_deltas;
  std::size_t clamped = 0;
  // A backward prefix was cut from the left to fit the context limit.
  bool truncated = false;
};

// Span-level PMI of one divergence point. The span-independent baseline
// log p(x | y_<i) is computed once and shared by every span scored here.
class PmiVerifier {
 public:
  // All token ids are in the verifier's vocab.
  PmiVerifier(const LanguageModel& verifier, const PromptTemplatePair& tpl, TokenSeq input,
              TokenSeq y_prefix);

  PmiScore score(std::span<const TokenId> span_tokens) const;

  const std::vector<double>& baseline() const;

 private:
  std::vector<double> score_input(std::span<const TokenId> output, bool& truncated) const;

  const LanguageModel& verifier_;
  const PromptTemplatePair& tpl_;
  TokenSeq input_;
  TokenSeq y_prefix_;
  mutable std::optional<std::vector<double>> baseline_;
  mutable bool baseline_truncated_ = false;
};

PmiScore pmi_score(const LanguageModel& verifier, const PromptTemplatePair& tpl,
                   std::span<const TokenId> input, std::span<const TokenId> y_prefix,
                   std::span<const TokenId> span_tokens);

std::vector<PmiScore> pmi_score_batch(const LanguageModel& verifier,
                                      const PromptTemplatePair& tpl,
                                      std::span<const TokenId> input,
                                      std::span<const TokenId> y_prefix,
                                      std::span<const CandidateSpan> spans);

}  // namespace diver
