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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "diver/baselines.hpp"
#include "diver/divergence.hpp"
#include "diver/engine.hpp"
#include "diver/harness.hpp"
#include "diver/pmi.hpp"
#include "diver/tabular_lm.hpp"

namespace {

using namespace diver;

struct Toy {
  TabularLM model = TabularLM::load(DIVER_TOY_DATA "/model.json");
  TabularLM verifier = TabularLM::load(DIVER_TOY_DATA "/verifier.json");
  std::vector<PromptTemplatePair> templates = load_templates(DIVER_TOY_DATA "/templates.json");
  std::vector<harness::DatasetRecord> records = harness::load_dataset(DIVER_TOY_DATA "/dataset.jsonl");
};

const Toy& toy() {
  static const Toy t;
  return t;
}

void BM_Greedy(benchmark::State& state) {
  const Toy& t = toy();
  std::vector<TokenSeq> prompts;
  for (const auto& r : t.records) {
    prompts.push_back(render_forward_prompt(t.templates[0], t.model, t.model.tokenize(r.input)));
  }
  std::size_t tokens = 0;
  for (auto _ : state) {
    for (const auto& p : prompts) {
      auto res = greedy_decode(t.model, p, 32);
      tokens += res.output.size();
      benchmark::DoNotOptimize(res);
    }
  }
  state.counters["tokens/s"] = benchmark::Counter(double(tokens), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Greedy);

void BM_Diver(benchmark::State& state, Strategy strategy, bool separate) {
  const Toy& t = toy();
  DecoderConfig cfg;
  cfg.strategy = strategy;
  cfg.gamma = 0.3;
  cfg.max_new_tokens = 32;
  const LanguageModel& verifier = separate ? static_cast<const LanguageModel&>(t.verifier) : t.model;
  std::size_t tokens = 0;
  for (auto _ : state) {
    for (const auto& r : t.records) {
      auto res = decode(t.model, verifier, t.templates[0], r.input, cfg);
      tokens += res.output.size();
      benchmark::DoNotOptimize(res);
    }
  }
  state.counters["tokens/s"] = benchmark::Counter(double(tokens), benchmark::Counter::kIsRate);
}
BENCHMARK_CAPTURE(BM_Diver, left, Strategy::kDiverLeft, true);
BENCHMARK_CAPTURE(BM_Diver, right, Strategy::kDiverRight, true);
BENCHMARK_CAPTURE(BM_Diver, token, Strategy::kDiverToken, true);
BENCHMARK_CAPTURE(BM_Diver, right_self, Strategy::kDiverRight, false);

void BM_PmiScore(benchmark::State& state) {
  const Toy& t = toy();
  const TokenSeq input = t.verifier.tokenize("cat mat");
  const TokenSeq prefix = t.verifier.tokenize("the");
  const TokenSeq span = t.verifier.tokenize("cat sat on the mat");
  for (auto _ : state) {
    benchmark::DoNotOptimize(pmi_score(t.verifier, t.templates[0], input, prefix, span));
  }
}
BENCHMARK(BM_PmiScore);

void BM_CandidateSet(benchmark::State& state) {
  std::mt19937_64 gen(7);
  std::gamma_distribution<double> w(0.2);
  std::vector<double> weights(static_cast<std::size_t>(state.range(0)));
  for (auto& x : weights) x = w(gen) + 1e-300;
  const LogProbDist dist = normalize_dist(weights);
  for (auto _ : state) benchmark::DoNotOptimize(candidate_set(dist, 0.3));
}
BENCHMARK(BM_CandidateSet)->Arg(1 << 8)->Arg(1 << 12)->Arg(1 << 15);

}  // namespace

BENCHMARK_MAIN();
