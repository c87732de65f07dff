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

#include "diver/lm.hpp"

#include <cctype>

namespace diver {

std::vector<double> LanguageModel::score_sequence(std::span<const TokenId> prefix,
                                                  std::span<const TokenId> target,
                                                  ZeroProb zero) const {
  if (target.empty()) throw Error(ErrorCode::kInvalidArgument, "score_sequence: empty target");
  TokenSeq context(prefix.begin(), prefix.end());
  context.reserve(prefix.size() + target.size());
  std::vector<double> out;
  out.reserve(target.size());
  for (TokenId t : target) {
    const double lp = next_dist(context)[t];
    if (lp == kNegInf && zero == ZeroProb::kThrow) {
      throw Error(ErrorCode::kZeroProbToken,
                  "target token '" + vocab().token(t) + "' has zero probability");
    }
    out.push_back(lp);
    context.push_back(t);
  }
  return out;
}

TokenSeq LanguageModel::tokenize(std::string_view text) const {
  TokenSeq ids;
  for (const auto& word : split_whitespace(text)) ids.push_back(vocab().id(word));
  return ids;
}

std::string LanguageModel::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += vocab().token(id);
  }
  return out;
}

void LanguageModel::check_context(std::span<const TokenId> context) const {
  const auto& v = vocab();
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (!v.contains(context[i])) {
      throw Error(ErrorCode::kBadValue, "context token id out of range");
    }
    if (context[i] == v.eos() && i + 1 != context.size()) {
      throw Error(ErrorCode::kBadValue, "eos inside a context");
    }
  }
  if (auto limit = context_limit(); limit && context.size() > *limit) {
    throw Error(ErrorCode::kContextTooLong, "context of " + std::to_string(context.size()) +
                                                " tokens exceeds limit " + std::to_string(*limit));
  }
}

TokenSeq translate_tokens(const LanguageModel& from, const LanguageModel& to,
                          std::span<const TokenId> ids) {
  if (&from == &to || from.vocab() == to.vocab()) return TokenSeq(ids.begin(), ids.end());
  if (ids.empty()) return {};
  return to.tokenize(from.detokenize(ids));
}

TokenSeq concat(std::span<const TokenId> a, std::span<const TokenId> b) {
  TokenSeq out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

}  // namespace diver
