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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diver/types.hpp"

namespace diver {

struct Capabilities {
  bool supports_batch_scoring = false;
  // Safe to call from several threads at once.
  bool reentrant = true;
};

enum class ZeroProb {
  kThrow,  // raise kZeroProbToken
  kKeep,   // return kNegInf entries and let the caller decide
};

// The scoring contract the engine decodes against. Both scoring methods are
// pure functions of their arguments for a fixed model.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocab& vocab() const = 0;
  virtual const std::string& id() const = 0;
  virtual Capabilities capabilities() const { return {}; }
  // Maximum context length in tokens, if the model has one.
  virtual std::optional<std::size_t> context_limit() const { return std::nullopt; }

  // log p(. | context) over the whole vocab.
  virtual LogProbDist next_dist(std::span<const TokenId> context) const = 0;

  // Teacher-forced scoring: element t is log p(target[t] | prefix ++ target[:t]).
  // The default walks next_dist along the target.
  virtual std::vector<double> score_sequence(std::span<const TokenId> prefix,
                                             std::span<const TokenId> target,
                                             ZeroProb zero = ZeroProb::kThrow) const;

  // Default tokenizer: whitespace-separated surface strings, each of which must
  // be a vocab entry.
  virtual TokenSeq tokenize(std::string_view text) const;
  virtual std::string detokenize(std::span<const TokenId> ids) const;

 protected:
  void check_context(std::span<const TokenId> context) const;
};

// Re-expresses ids from one model's vocab in another's. Identical vocabs map
// through unchanged; otherwise the text round-trips through the tokenizers.
TokenSeq translate_tokens(const LanguageModel& from, const LanguageModel& to,
                          std::span<const TokenId> ids);

TokenSeq concat(std::span<const TokenId> a, std::span<const TokenId> b);

std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace diver
