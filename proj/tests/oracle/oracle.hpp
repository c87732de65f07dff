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

// Brute-force references for tests and fixture authoring. Nothing here calls
// into the engine library: fixtures are read straight from the tabular model
// JSON format and every probability is a direct table lookup.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace diver::oracle {

struct ZeroProbability : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExplosionGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Ids = std::vector<int>;
using Words = std::vector<std::string>;

// A tabular model as written on disk.
struct Table {
  Words vocab;
  int order = 1;
  int eos = -1;
  int bos = -1;
  bool uniform_fallback = true;
  std::map<Ids, std::vector<double>> rows;

  static Table from_json(const nlohmann::json& doc);

  int id(const std::string& word) const;
  Ids ids(const Words& words) const;
  Words words(const Ids& ids) const;
  // p(. | context) from the row for the last order-1 tokens.
  std::vector<double> probs(const Ids& context) const;
};

struct Templates {
  std::string forward;   // contains [INPUT]
  std::string backward;  // contains [INCOMPLETE_OUTPUT] then [INPUT]
};

Words split(const std::string& text);

// Forward prompt ids for an input, by plain text substitution.
Ids forward_prompt(const Table& model, const Templates& tpl, const std::string& input);

// Both conditional input likelihoods as products of table entries, and
// their log ratio. A trailing eos on the output is dropped. Zero on either
// side throws ZeroProbability.
struct PmiTerms {
  double p_with = 0.0;
  double p_without = 0.0;
  double value = 0.0;
};
PmiTerms oracle_pmi_terms(const Table& verifier, const Templates& tpl, const std::string& input,
                          const Words& y_prefix, const Words& span);
double oracle_pmi(const Table& verifier, const Templates& tpl, const std::string& input,
                  const Words& y_prefix, const Words& span);

// p(input | output) under the backward template, as a product.
double input_likelihood(const Table& verifier, const Templates& tpl, const std::string& input,
                        const Words& output);

struct DecodeSettings {
  enum class Mode { kLeft, kRight, kToken } mode = Mode::kLeft;
  double gamma = 0.3;
  std::size_t max_new_tokens = 8;
  std::size_t max_span_len = 64;
};

// Full replay of divergence detection, rollouts, risk steps, span scoring and
// greedy span selection. Returns ids in the model's vocab.
Ids oracle_decode(const Table& model, const Table& verifier, const Templates& tpl,
                  const std::string& input, const DecodeSettings& settings);

struct EnumeratedOutcome {
  Ids sequence;
  double logp_forward = 0.0;
  // Only filled when a scoring context is passed to enumerate_sequences.
  double logp_input_given_output = 0.0;
};

struct Enumeration {
  std::vector<EnumeratedOutcome> outcomes;
  // Probability of every length-max_len prefix without eos.
  double truncated_mass = 0.0;
};

struct ScoringContext {
  const Table* verifier = nullptr;
  Templates tpl;
  std::string input;
};

// Every eos-terminated continuation of `prompt` up to max_len tokens.
Enumeration enumerate_sequences(const Table& model, const Ids& prompt, std::size_t max_len,
                                const ScoringContext* scoring = nullptr,
                                double bound = 1e6);

}  // namespace diver::oracle
