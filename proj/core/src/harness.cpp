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

#include "diver/harness.hpp"

#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include "diver/baselines.hpp"
#include "diver/bridge.hpp"
#include "diver/tabular_lm.hpp"

namespace diver::harness {

namespace {

std::string normalize_space(std::string_view text) {
  std::string out;
  for (const auto& w : split_whitespace(text)) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

nlohmann::json histogram_json(const std::map<std::size_t, std::size_t>& h) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [len, count] : h) doc[std::to_string(len)] = count;
  return doc;
}

std::map<std::size_t, std::size_t> histogram_from_json(const nlohmann::json& doc) {
  std::map<std::size_t, std::size_t> h;
  for (const auto& [key, value] : doc.items()) h[std::stoul(key)] = value.get<std::size_t>();
  return h;
}

nlohmann::json stats_json(const DecodeStats& s) {
  return {{"tokens_emitted", s.tokens_emitted},
          {"divergence_count", s.divergence_count},
          {"span_lengths", histogram_json(s.span_lengths)},
          {"wall_ns", s.wall_ns},
          {"tokens_per_second", s.tokens_per_second()}};
}

nlohmann::json config_json(const DecoderConfig& c) {
  nlohmann::json doc{{"strategy", to_string(c.strategy)},
                     {"gamma", c.gamma},
                     {"top_p", c.top_p},
                     {"alpha", c.alpha},
                     {"beam_width", c.beam_width},
                     {"max_new_tokens", c.max_new_tokens},
                     {"max_span_len", c.max_span_len},
                     {"seed", c.rng_seed},
                     {"sample_spans", c.sample_spans}};
  if (c.verifier) doc["verifier"] = *c.verifier;
  return doc;
}

std::string output_text(const LanguageModel& model, const TokenSeq& output) {
  std::span<const TokenId> body(output);
  if (!body.empty() && body.back() == model.vocab().eos()) body = body.first(body.size() - 1);
  return model.detokenize(body);
}

struct LoadedModels {
  std::unique_ptr<LanguageModel> model;
  std::unique_ptr<LanguageModel> verifier;
  std::unique_ptr<LanguageModel> amateur;

  Models view() const { return Models{*model, verifier.get(), amateur.get()}; }
};

LoadedModels load_models(const RunOptions& o) {
  LoadedModels m;
  m.model = resolve_model(o.model_spec);
  if (o.verifier_spec) m.verifier = resolve_model(*o.verifier_spec);
  if (o.amateur_spec) m.amateur = resolve_model(*o.amateur_spec);
  return m;
}

std::filesystem::path sweep_trace_path(const std::filesystem::path& base, double gamma) {
  std::ostringstream name;
  name << base.string() << ".gamma-" << gamma << ".jsonl";
  return name.str();
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      DatasetRecord r;
      r.id = doc.at("id").get<std::string>();
      r.input = doc.at("input").get<std::string>();
      if (doc.contains("reference") && !doc.at("reference").is_null()) {
        r.reference = doc.at("reference").get<std::string>();
      }
      r.task = doc.at("task").get<std::string>();
      if (!ids.insert(r.id).second) {
        throw Error(ErrorCode::kParse, "duplicate record id '" + r.id + "'");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, "dataset line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, "dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_dataset(in);
}

std::unique_ptr<LanguageModel> resolve_model(std::string_view spec) {
  if (spec.starts_with("toy:")) {
    return std::make_unique<TabularLM>(TabularLM::load(std::string(spec.substr(4))));
  }
  if (spec.starts_with("bridge:")) {
    return std::make_unique<bridge::BridgeLM>(bridge::open_transport(spec.substr(7)));
  }
  throw Error(ErrorCode::kInvalidArgument,
              "model spec must be toy:PATH or bridge:ADDRESS, got '" + std::string(spec) + "'");
}

DecodeResult run_strategy(const Models& models, const PromptTemplatePair& tpl,
                          std::string_view input, const DecoderConfig& cfg) {
  cfg.validate();
  const LanguageModel& model = models.model;
  if (is_diver(cfg.strategy)) {
    return decode(model, models.verifier ? *models.verifier : model, tpl, input, cfg);
  }
  const TokenSeq prompt = render_forward_prompt(tpl, model, model.tokenize(input));
  switch (cfg.strategy) {
    case Strategy::kGreedy:
      return greedy_decode(model, prompt, cfg.max_new_tokens);
    case Strategy::kNucleus: {
      Rng rng(cfg.rng_seed);
      return nucleus_decode(model, prompt, cfg.top_p, rng, cfg.max_new_tokens);
    }
    case Strategy::kBeam:
      return beam_decode(model, prompt, cfg.beam_width, cfg.max_new_tokens);
    case Strategy::kCd:
      if (models.amateur == nullptr) {
        throw Error(ErrorCode::kInvalidArgument, "cd needs an amateur model");
      }
      return cd_decode(model, *models.amateur, prompt, cfg.gamma, cfg.max_new_tokens);
    case Strategy::kCad:
      return cad_decode(model, prompt, render_forward_prompt_without_input(tpl, model), cfg.alpha,
                        cfg.max_new_tokens);
    default:
      break;
  }
  throw Error(ErrorCode::kInvalidArgument, "unhandled strategy");
}

nlohmann::json Aggregate::to_json() const {
  nlohmann::json doc{{"records", records},
                     {"divergence_total", divergence_total},
                     {"mean_divergence_points", mean_divergence_points},
                     {"span_length_histogram", histogram_json(span_length_histogram)},
                     {"total_tokens", total_tokens},
                     {"total_wall_ns", total_wall_ns},
                     {"tokens_per_second", tokens_per_second}};
  if (failed) doc["failed"] = *failed;
  if (exact_match_rate) doc["exact_match_rate"] = *exact_match_rate;
  return doc;
}

Aggregate Aggregate::from_json(const nlohmann::json& doc) {
  Aggregate a;
  a.records = doc.at("records").get<std::size_t>();
  a.divergence_total = doc.at("divergence_total").get<std::size_t>();
  a.mean_divergence_points = doc.at("mean_divergence_points").get<double>();
  a.span_length_histogram = histogram_from_json(doc.at("span_length_histogram"));
  a.total_tokens = doc.at("total_tokens").get<std::size_t>();
  a.total_wall_ns = doc.at("total_wall_ns").get<std::int64_t>();
  a.tokens_per_second = doc.at("tokens_per_second").get<double>();
  if (doc.contains("failed")) a.failed = doc.at("failed").get<std::size_t>();
  if (doc.contains("exact_match_rate")) a.exact_match_rate = doc.at("exact_match_rate").get<double>();
  return a;
}

bool same_trace_aggregates(const Aggregate& a, const Aggregate& b) {
  return a.records == b.records && a.divergence_total == b.divergence_total &&
         a.mean_divergence_points == b.mean_divergence_points &&
         a.span_length_histogram == b.span_length_histogram && a.total_tokens == b.total_tokens &&
         a.total_wall_ns == b.total_wall_ns && a.tokens_per_second == b.tokens_per_second;
}

Aggregate aggregate(std::span<const DecodeStats> per_record) {
  Aggregate a;
  for (const auto& s : per_record) {
    if (s.tokens_emitted == 0 && s.divergence_count == 0 && s.wall_ns == 0) continue;
    ++a.records;
    a.divergence_total += s.divergence_count;
    for (const auto& [len, count] : s.span_lengths) a.span_length_histogram[len] += count;
    a.total_tokens += s.tokens_emitted;
    a.total_wall_ns += s.wall_ns;
  }
  if (a.records > 0) {
    a.mean_divergence_points =
        static_cast<double>(a.divergence_total) / static_cast<double>(a.records);
  }
  if (a.total_wall_ns > 0) {
    a.tokens_per_second =
        static_cast<double>(a.total_tokens) * 1e9 / static_cast<double>(a.total_wall_ns);
  }
  return a;
}

nlohmann::json RunReport::to_json() const {
  auto recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json doc{{"id", r.id}, {"ok", r.ok}, {"output", r.output}, {"stats", stats_json(r.stats)}};
    doc["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
    doc["exact_match"] = r.exact_match ? nlohmann::json(*r.exact_match) : nlohmann::json(nullptr);
    recs.push_back(std::move(doc));
  }
  return {{"config", config_json(config)}, {"records", recs}, {"aggregate", aggregate.to_json()}};
}

int RunReport::exit_code() const {
  for (const auto& r : records) {
    if (!r.ok) return 1;
  }
  return 0;
}

TraceWriter::TraceWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void TraceWriter::write_record(std::string_view record_id, std::span<const TraceEvent> events) {
  std::lock_guard lock(mu_);
  for (const auto& e : events) {
    nlohmann::json line{{"record_id", record_id},
                        {"step", e.step},
                        {"kind", to_string(e.kind)},
                        {"payload", e.payload},
                        {"t_ns", e.t_ns}};
    out_ << line.dump() << '\n';
    out_.flush();
  }
  if (!out_) throw Error(ErrorCode::kIo, "trace write failed");
}

RunReport run_records(std::span<const DatasetRecord> records, const Models& models,
                      std::span<const PromptTemplatePair> templates, const DecoderConfig& cfg,
                      TraceWriter* trace, std::size_t jobs) {
  cfg.validate();
  RunReport report;
  report.config = cfg;
  report.records.resize(records.size());

  auto run_one = [&](std::size_t idx) {
    const auto& rec = records[idx];
    RecordReport& out = report.records[idx];
    out.id = rec.id;
    std::span<const TraceEvent> events;
    DecodeResult result;
    try {
      const auto& tpl = find_template(templates, rec.task);
      result = run_strategy(models, tpl, rec.input, cfg);
      events = result.trace.events();
      out.output = output_text(models.model, result.output);
      out.stats = result.stats;
      if (rec.reference) out.exact_match = normalize_space(out.output) == normalize_space(*rec.reference);
    } catch (const DecodeAbort& e) {
      out.ok = false;
      out.error = e.what();
      result.trace = e.partial_trace();
      events = result.trace.events();
      out.stats = result.trace.stats();
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
    if (trace != nullptr) trace->write_record(rec.id, events);
  };

  const bool reentrant = models.model.capabilities().reentrant &&
                         (!models.verifier || models.verifier->capabilities().reentrant) &&
                         (!models.amateur || models.amateur->capabilities().reentrant);
  if (jobs <= 1 || !reentrant || records.size() < 2) {
    for (std::size_t i = 0; i < records.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const std::size_t n = std::min(jobs, records.size());
    for (std::size_t w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < records.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : workers) t.join();
  }

  std::vector<DecodeStats> per_record;
  std::size_t failed = 0;
  std::size_t with_reference = 0;
  std::size_t matches = 0;
  for (const auto& r : report.records) {
    per_record.push_back(r.stats);
    if (!r.ok) ++failed;
    if (r.exact_match) {
      ++with_reference;
      if (*r.exact_match) ++matches;
    }
  }
  report.aggregate = aggregate(per_record);
  report.aggregate.failed = failed;
  if (with_reference > 0) {
    report.aggregate.exact_match_rate =
        static_cast<double>(matches) / static_cast<double>(with_reference);
  }
  return report;
}

RunReport run_dataset(const RunOptions& options) {
  const auto records = load_dataset(options.dataset);
  const auto templates = load_templates(options.templates);
  const LoadedModels loaded = load_models(options);
  DecoderConfig cfg = options.config;
  if (options.verifier_spec) cfg.verifier = options.verifier_spec;
  std::optional<TraceWriter> writer;
  if (options.trace_out) writer.emplace(*options.trace_out);
  return run_records(records, loaded.view(), templates, cfg, writer ? &*writer : nullptr,
                     options.jobs);
}

std::vector<SweepRow> sweep_gamma(const RunOptions& options, std::span<const double> gammas) {
  if (gammas.empty()) throw Error(ErrorCode::kInvalidArgument, "no gamma values to sweep");
  for (double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "gamma must be in (0, 1]");
  }
  const auto records = load_dataset(options.dataset);
  const auto templates = load_templates(options.templates);
  const LoadedModels loaded = load_models(options);

  std::optional<double> greedy_rate;
  {
    DecoderConfig greedy = options.config;
    greedy.strategy = Strategy::kGreedy;
    greedy_rate = run_records(records, loaded.view(), templates, greedy, nullptr, options.jobs)
                      .aggregate.exact_match_rate;
  }

  std::vector<SweepRow> rows;
  for (double g : gammas) {
    DecoderConfig cfg = options.config;
    cfg.gamma = g;
    if (options.verifier_spec) cfg.verifier = options.verifier_spec;
    std::optional<TraceWriter> writer;
    if (options.trace_out) writer.emplace(sweep_trace_path(*options.trace_out, g));
    const RunReport report = run_records(records, loaded.view(), templates, cfg,
                                         writer ? &*writer : nullptr, options.jobs);
    SweepRow row{g, report.aggregate, std::nullopt};
    if (greedy_rate && report.aggregate.exact_match_rate) {
      row.exact_match_delta_vs_greedy = *report.aggregate.exact_match_rate - *greedy_rate;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json sweep_to_json(std::span<const SweepRow> rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json doc{{"gamma", r.gamma}, {"aggregate", r.aggregate.to_json()}};
    doc["exact_match_delta_vs_greedy"] = r.exact_match_delta_vs_greedy
                                             ? nlohmann::json(*r.exact_match_delta_vs_greedy)
                                             : nlohmann::json(nullptr);
    arr.push_back(std::move(doc));
  }
  return arr;
}

TraceSummary stats(std::istream& in) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<TraceEvent>> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      const auto id = doc.at("record_id").get<std::string>();
      TraceEvent e;
      e.step = doc.at("step").get<std::size_t>();
      e.kind = parse_event_kind(doc.at("kind").get<std::string>());
      e.payload = doc.at("payload");
      e.t_ns = doc.at("t_ns").get<std::int64_t>();
      if (e.kind == EventKind::kSelection && !e.payload.contains("span_len")) {
        throw Error(ErrorCode::kParse, "selection event without span_len");
      }
      auto [it, inserted] = events.try_emplace(id);
      if (inserted) order.push_back(id);
      it->second.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptTrace, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptTrace, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  TraceSummary summary;
  std::vector<DecodeStats> per_record;
  for (const auto& id : order) {
    summary.per_record.emplace_back(id, summarize(events[id]));
    per_record.push_back(summary.per_record.back().second);
  }
  summary.aggregate = aggregate(per_record);
  return summary;
}

TraceSummary stats(const std::filesystem::path& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + trace_path.string());
  return stats(in);
}

}  // namespace diver::harness
