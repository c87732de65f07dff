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

#include "fixtures.hpp"

#include <functional>
#include <vector>

namespace diver::testing {

PromptTemplatePair toy_template(const std::string& name) {
  return PromptTemplatePair(name, kForward, kBackward);
}

namespace {

std::vector<std::string> table_vocab(int letters) {
  std::vector<std::string> v{"<s>", "</s>", "|"};
  for (int i = 0; i < letters; ++i) v.push_back(std::string(1, static_cast<char>('a' + i)));
  return v;
}

}  // namespace

nlohmann::json random_table(std::mt19937_64& gen, const TableShape& shape, const std::string& id) {
  const auto vocab = table_vocab(shape.letters);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(1, vocab.size() - 1);

  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::string> window(static_cast<std::size_t>(shape.order - 1));
  std::function<void(std::size_t)> fill = [&](std::size_t pos) {
    if (pos < window.size()) {
      for (const auto& w : vocab) {
        if (w == "</s>") continue;
        window[pos] = w;
        fill(pos + 1);
      }
      return;
    }
    nlohmann::json weights = nlohmann::json::object();
    const bool peaked = unit(gen) < 0.5;
    const std::size_t top = pick(gen);
    for (std::size_t v = 1; v < vocab.size(); ++v) {
      double w = peaked ? 0.01 + 0.15 * unit(gen) : 0.05 + unit(gen);
      if (peaked && v == top) w = 1.0;
      if (vocab[v] == "</s>" && !(peaked && v == top)) w *= 0.6;
      weights[vocab[v]] = w;
    }
    weights["<s>"] = 0.0;
    rows.push_back({{"context", window}, {"weights", weights}});
  };
  fill(0);
  return {{"order", shape.order}, {"vocab", vocab},  {"eos", "</s>"},  {"bos", "<s>"},
          {"rows", rows},         {"fallback", "error"}, {"id", id}};
}

std::string random_input(std::mt19937_64& gen, int letters, int max_words) {
  std::uniform_int_distribution<int> count(1, max_words);
  std::uniform_int_distribution<int> letter(0, letters - 1);
  std::string out;
  for (int n = count(gen); n > 0; --n) {
    if (!out.empty()) out += ' ';
    out += static_cast<char>('a' + letter(gen));
  }
  return out;
}

Fixture random_fixture(std::uint64_t seed, bool separate_verifier) {
  std::mt19937_64 gen(seed);
  TableShape shape;
  shape.letters = std::uniform_int_distribution<int>(2, 5)(gen);
  shape.order = std::uniform_int_distribution<int>(1, 3)(gen);

  Fixture f;
  f.model_doc = random_table(gen, shape, "toy");
  if (separate_verifier) {
    TableShape vshape = shape;
    vshape.order = std::uniform_int_distribution<int>(2, 3)(gen);
    f.verifier_doc = random_table(gen, vshape, "toy-verifier");
  } else {
    f.verifier_doc = f.model_doc;
  }
  f.input = random_input(gen, shape.letters);

  static constexpr Strategy kModes[] = {Strategy::kDiverLeft, Strategy::kDiverRight,
                                        Strategy::kDiverToken};
  f.cfg.strategy = kModes[std::uniform_int_distribution<int>(0, 2)(gen)];
  f.cfg.gamma = 0.1 + 0.2 * std::uniform_int_distribution<int>(0, 4)(gen);
  f.cfg.max_new_tokens = std::uniform_int_distribution<std::size_t>(3, 8)(gen);
  f.cfg.max_span_len =
      std::uniform_int_distribution<int>(0, 2)(gen) == 0 ? 64
                                                         : std::uniform_int_distribution<std::size_t>(1, 5)(gen);
  return f;
}

}  // namespace diver::testing
