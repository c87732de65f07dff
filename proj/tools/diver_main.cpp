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

// diver: run decoding strategies over a dataset, sweep gamma, summarize traces.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diver/harness.hpp"
#include "diver/tabular_lm.hpp"
#include "oracle.hpp"

namespace {

using namespace diver;

struct Flags {
  std::string method = "diver-right";
  double gamma = 0.3;
  double alpha = 0.5;
  double top_p = 0.9;
  std::size_t beam_width = 4;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 64;
  std::size_t max_span = 64;
  bool sample_spans = false;
  std::string model;
  std::string verify_model;
  std::string amateur_model;
  std::string templates;
  std::string dataset;
  std::string out;
  std::string report;
  std::size_t jobs = 1;
};

void add_decode_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--method", f.method,
                  "greedy|nucleus|beam|cd|cad|diver-left|diver-right|diver-token")
      ->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "candidate threshold")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "CAD weight")->capture_default_str();
  cmd->add_option("--top-p", f.top_p, "nucleus mass")->capture_default_str();
  cmd->add_option("--beam-width", f.beam_width)->capture_default_str();
  cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--max-tokens", f.max_tokens)->capture_default_str();
  cmd->add_option("--max-span", f.max_span)->capture_default_str();
  cmd->add_flag("--sample-spans", f.sample_spans, "sample spans from softmax(q)");
  cmd->add_option("--model", f.model, "toy:PATH | bridge:stdio:CMD | bridge:tcp:HOST:PORT")
      ->required();
  cmd->add_option("--verify-model", f.verify_model, "separate PMI verifier");
  cmd->add_option("--amateur-model", f.amateur_model, "amateur model for cd");
  cmd->add_option("--templates", f.templates, "prompt template JSON")->required();
  cmd->add_option("--dataset", f.dataset, "JSON-lines dataset")->required();
  cmd->add_option("--out", f.out, "trace output (JSON-lines)");
  cmd->add_option("--report", f.report, "report output (JSON); stdout when absent");
  cmd->add_option("--jobs", f.jobs, "worker threads")->capture_default_str();
}

harness::RunOptions options_from(const Flags& f) {
  harness::RunOptions o;
  o.dataset = f.dataset;
  o.model_spec = f.model;
  if (!f.verify_model.empty()) o.verifier_spec = f.verify_model;
  if (!f.amateur_model.empty()) o.amateur_spec = f.amateur_model;
  o.templates = f.templates;
  o.config.strategy = parse_strategy(f.method);
  o.config.gamma = f.gamma;
  o.config.alpha = f.alpha;
  o.config.top_p = f.top_p;
  o.config.beam_width = f.beam_width;
  o.config.rng_seed = f.seed;
  o.config.max_new_tokens = f.max_tokens;
  o.config.max_span_len = f.max_span;
  o.config.sample_spans = f.sample_spans;
  if (!f.out.empty()) o.trace_out = f.out;
  o.jobs = f.jobs;
  return o;
}

void emit(const nlohmann::json& doc, const std::string& path) {
  if (path.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

std::string toy_path(const std::string& spec) {
  if (spec.rfind("toy:", 0) != 0) {
    throw Error(ErrorCode::kInvalidArgument, "verify only supports toy: models");
  }
  return spec.substr(4);
}

// Replays every record through the brute-force oracle and the engine.
int verify(const Flags& f) {
  const harness::RunOptions o = options_from(f);
  if (!is_diver(o.config.strategy)) {
    throw Error(ErrorCode::kInvalidArgument, "verify compares DIVER strategies only");
  }
  nlohmann::json model_doc;
  std::ifstream(toy_path(f.model)) >> model_doc;
  nlohmann::json verifier_doc = model_doc;
  if (!f.verify_model.empty()) std::ifstream(toy_path(f.verify_model)) >> verifier_doc;
  const auto model = oracle::Table::from_json(model_doc);
  const auto verifier = oracle::Table::from_json(verifier_doc);
  const TabularLM lm = TabularLM::from_json(model_doc);
  const TabularLM vlm = TabularLM::from_json(verifier_doc);

  oracle::DecodeSettings s;
  s.mode = o.config.strategy == Strategy::kDiverLeft    ? oracle::DecodeSettings::Mode::kLeft
           : o.config.strategy == Strategy::kDiverRight ? oracle::DecodeSettings::Mode::kRight
                                                        : oracle::DecodeSettings::Mode::kToken;
  s.gamma = o.config.gamma;
  s.max_new_tokens = o.config.max_new_tokens;
  s.max_span_len = o.config.max_span_len;

  const auto templates = load_templates(o.templates);
  int mismatches = 0;
  for (const auto& rec : harness::load_dataset(o.dataset)) {
    const auto& tpl = find_template(templates, rec.task);
    const oracle::Ids expected = oracle::oracle_decode(
        model, verifier, {tpl.forward(), tpl.backward()}, rec.input, s);
    const TokenSeq got = decode(lm, vlm, tpl, rec.input, o.config).output;
    const bool same = TokenSeq(expected.begin(), expected.end()) == got;
    if (!same) ++mismatches;
    nlohmann::json line{{"id", rec.id},
                        {"match", same},
                        {"oracle", nlohmann::json(expected)},
                        {"engine", got}};
    std::cout << line.dump() << '\n';
  }
  return mismatches == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DIVER span-level PMI-verified decoding"};
  app.require_subcommand(1);

  Flags run_flags;
  auto* run = app.add_subcommand("run", "decode every dataset record");
  add_decode_flags(run, run_flags);

  Flags sweep_flags;
  std::vector<double> gammas(std::begin(harness::kDefaultGammaGrid),
                             std::end(harness::kDefaultGammaGrid));
  auto* sweep = app.add_subcommand("sweep", "run DIVER once per gamma");
  add_decode_flags(sweep, sweep_flags);
  sweep->add_option("--gammas", gammas, "gamma grid")->delimiter(',')->capture_default_str();

  std::string trace_path;
  std::string stats_report;
  auto* stats = app.add_subcommand("stats", "recompute aggregates from a trace");
  stats->add_option("trace", trace_path, "trace JSON-lines file")->required();
  stats->add_option("--report", stats_report, "output JSON; stdout when absent");

  Flags verify_flags;
  auto* verify_cmd = app.add_subcommand("verify", "compare the engine to the oracle");
  add_decode_flags(verify_cmd, verify_flags);
  verify_cmd->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto report = harness::run_dataset(options_from(run_flags));
      emit(report.to_json(), run_flags.report);
      return report.exit_code();
    }
    if (*sweep) {
      const auto rows = harness::sweep_gamma(options_from(sweep_flags), gammas);
      emit(harness::sweep_to_json(rows), sweep_flags.report);
      return 0;
    }
    if (*stats) {
      const auto summary = harness::stats(std::filesystem::path(trace_path));
      nlohmann::json per = nlohmann::json::array();
      for (const auto& [id, s] : summary.per_record) {
        nlohmann::json hist = nlohmann::json::object();
        for (const auto& [len, n] : s.span_lengths) hist[std::to_string(len)] = n;
        per.push_back({{"id", id},
                       {"tokens_emitted", s.tokens_emitted},
                       {"divergence_count", s.divergence_count},
                       {"span_lengths", hist},
                       {"wall_ns", s.wall_ns}});
      }
      emit({{"records", per}, {"aggregate", summary.aggregate.to_json()}}, stats_report);
      return 0;
    }
    if (*verify_cmd) return verify(verify_flags);
  } catch (const std::exception& e) {
    std::cerr << "diver: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
