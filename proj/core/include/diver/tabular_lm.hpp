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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diver/lm.hpp"

namespace diver {

// Deterministic n-gram model with explicit conditional weight tables.
//
// The context window is the last (order - 1) tokens of the context, padded on
// the left with bos. Rows are stored as raw non-negative weights and normalized
// once at insertion. Contexts without a row either fall back to the uniform
// distribution or raise kMissingContext.
//
// Persistence format (JSON):
//   {"order": 2, "vocab": ["<s>", "</s>", "a"], "eos": "</s>", "bos": "<s>",
//    "rows": [{"context": ["<s>"], "weights": {"a": 0.7, "</s>": 0.3}}],
//    "fallback": "uniform" | "error", "id": "toy"}
// "eos" defaults to "</s>" and "bos" to "<s>" when those entries exist.
class TabularLM final : public LanguageModel {
 public:
  enum class Fallback { kUniform, kError };

  TabularLM(Vocab vocab, int order, Fallback fallback = Fallback::kUniform,
            std::string id = "toy");

  // Installs the weight row for a context window of exactly order - 1 ids.
  // Intended for construction; the model is treated as immutable afterwards.
  void set_row(std::span<const TokenId> window, std::span<const double> weights);
  void set_row(std::span<const std::string> window, const std::map<std::string, double>& weights);

  static TabularLM from_json(const nlohmann::json& doc);
  static TabularLM load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  int order() const noexcept { return order_; }
  Fallback fallback() const noexcept { return fallback_; }

  // The (order - 1)-token window that conditions the next token.
  TokenSeq window(std::span<const TokenId> context) const;

  // Raw weights stored for a window, or nullopt when the row is missing.
  const std::vector<double>* raw_row(std::span<const TokenId> window) const;
  std::size_t row_count() const noexcept { return rows_.size(); }

  const Vocab& vocab() const override { return vocab_; }
  const std::string& id() const override { return id_; }
  LogProbDist next_dist(std::span<const TokenId> context) const override;

 private:
  struct Row {
    std::vector<double> weights;
    LogProbDist dist;
  };

  Vocab vocab_;
  int order_;
  Fallback fallback_;
  std::string id_;
  std::map<TokenSeq, Row> rows_;
  LogProbDist uniform_;
};

}  // namespace diver
