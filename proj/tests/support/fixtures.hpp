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

// Randomized toy models and helpers shared by the unit and acceptance tests.

#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "diver/engine.hpp"
#include "diver/lm.hpp"
#include "diver/pmi.hpp"
#include "diver/tabular_lm.hpp"
#include "diver/types.hpp"

namespace diver::testing {

inline const char* kForward = "[INPUT] |";
inline const char* kBackward = "[INCOMPLETE_OUTPUT] | [INPUT]";

PromptTemplatePair toy_template(const std::string& name = "toy");

struct TableShape {
  int letters = 3;  // content tokens a, b, ...; vocab is <s> </s> | + letters
  int order = 2;
};

// Tabular model JSON with a row for every window. Every token except bos
// gets a positive weight. Rows are a mix of peaked and flat.
nlohmann::json random_table(std::mt19937_64& gen, const TableShape& shape,
                            const std::string& id = "toy");

struct Fixture {
  nlohmann::json model_doc;
  nlohmann::json verifier_doc;
  std::string input;
  DecoderConfig cfg;
};

// One randomized decode fixture. `separate_verifier` draws a second table
// over the same vocab.
Fixture random_fixture(std::uint64_t seed, bool separate_verifier = false);

// A uniformly random word string over the content letters of a table.
std::string random_input(std::mt19937_64& gen, int letters, int max_words = 3);

// Forwards to another model, counting next_dist calls and optionally imposing
// a context limit.
class WrappedLM final : public LanguageModel {
 public:
  explicit WrappedLM(const LanguageModel& inner, std::optional<std::size_t> limit = std::nullopt)
      : inner_(inner), limit_(limit) {}

  const Vocab& vocab() const override { return inner_.vocab(); }
  const std::string& id() const override { return inner_.id(); }
  Capabilities capabilities() const override { return inner_.capabilities(); }
  std::optional<std::size_t> context_limit() const override { return limit_; }
  LogProbDist next_dist(std::span<const TokenId> context) const override {
    ++calls_;
    check_context(context);
    return inner_.next_dist(context);
  }

  std::size_t calls() const { return calls_; }

 private:
  const LanguageModel& inner_;
  std::optional<std::size_t> limit_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace diver::testing
