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

// Batch runner behind the `diver` tool: datasets in, JSON-lines traces and run
// reports out.
//
// Dataset line: {"id", "input", "reference"?, "task"}
// Trace line:   {"record_id", "step", "kind", "payload", "t_ns"}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "diver/engine.hpp"
#include "diver/lm.hpp"
#include "diver/pmi.hpp"
#include "diver/trace.hpp"

namespace diver::harness {

struct DatasetRecord {
  std::string id;
  std::string input;
  std::optional<std::string> reference;
  std::string task;
};

std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

// "toy:PATH" loads a tabular model; "bridge:stdio:CMD" and "bridge:tcp:HOST:PORT"
// connect to a bridge process.
std::unique_ptr<LanguageModel> resolve_model(std::string_view spec);

struct Models {
  const LanguageModel& model;
  // Verification model for DIVER; nullptr means `model` verifies itself.
  const LanguageModel* verifier = nullptr;
  // Amateur model for CD.
  const LanguageModel* amateur = nullptr;
};

// Runs any strategy on one input rendered through the forward template.
DecodeResult run_strategy(const Models& models, const PromptTemplatePair& tpl,
                          std::string_view input, const DecoderConfig& cfg);

struct RecordReport {
  std::string id;
  bool ok = true;
  std::string output;
  std::optional<std::string> error;
  DecodeStats stats;
  std::optional<bool> exact_match;
};

// Aggregates over records that produced at least one trace event.
struct Aggregate {
  std::size_t records = 0;
  std::size_t divergence_total = 0;
  double mean_divergence_points = 0.0;
  std::map<std::size_t, std::size_t> span_length_histogram;
  std::size_t total_tokens = 0;
  std::int64_t total_wall_ns = 0;
  double tokens_per_second = 0.0;
  // Only known at run time.
  std::optional<std::size_t> failed;
  std::optional<double> exact_match_rate;

  nlohmann::json to_json() const;
  static Aggregate from_json(const nlohmann::json& doc);
};

// Compares everything a trace can reproduce (not `failed` / `exact_match_rate`).
bool same_trace_aggregates(const Aggregate& a, const Aggregate& b);

Aggregate aggregate(std::span<const DecodeStats> per_record);

struct RunReport {
  DecoderConfig config;
  std::vector<RecordReport> records;
  Aggregate aggregate;

  nlohmann::json to_json() const;
  // 0 when every record succeeded, 1 otherwise.
  int exit_code() const;
};

// Serializes whole records to a JSON-lines trace file, one flushed line per
// event. Safe to share between worker threads.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path);
  void write_record(std::string_view record_id, std::span<const TraceEvent> events);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

// Decodes every record. Failed records keep their partial trace and the run
// continues. jobs > 1 uses a worker pool when every model is reentrant.
RunReport run_records(std::span<const DatasetRecord> records, const Models& models,
                      std::span<const PromptTemplatePair> templates, const DecoderConfig& cfg,
                      TraceWriter* trace, std::size_t jobs = 1);

struct RunOptions {
  std::filesystem::path dataset;
  std::string model_spec;
  std::optional<std::string> verifier_spec;
  std::optional<std::string> amateur_spec;
  std::filesystem::path templates;
  DecoderConfig config;
  std::optional<std::filesystem::path> trace_out;
  std::size_t jobs = 1;
};

RunReport run_dataset(const RunOptions& options);

inline constexpr double kDefaultGammaGrid[] = {0.1, 0.3, 0.5, 0.7, 0.9};

struct SweepRow {
  double gamma = 0.0;
  Aggregate aggregate;
  // Exact-match rate minus greedy's on the same records, when references exist.
  std::optional<double> exact_match_delta_vs_greedy;
};

// One run per gamma. With a trace path P, each run writes P.gamma-<g>.jsonl.
std::vector<SweepRow> sweep_gamma(const RunOptions& options, std::span<const double> gammas);
nlohmann::json sweep_to_json(std::span<const SweepRow> rows);

struct TraceSummary {
  // Record id -> stats, in order of first appearance.
  std::vector<std::pair<std::string, DecodeStats>> per_record;
  Aggregate aggregate;
};

// Recomputes aggregates from a trace file. Malformed lines raise kCorruptTrace
// naming the line number.
TraceSummary stats(const std::filesystem::path& trace_path);
TraceSummary stats(std::istream& in);

}  // namespace diver::harness
