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

#include "diver/trace.hpp"

#include <set>

#include "diver/types.hpp"

namespace diver {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kEmit: return "emit";
    case EventKind::kDivergence: return "divergence";
    case EventKind::kSpanEval: return "span-eval";
    case EventKind::kSelection: return "selection";
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view name) {
  if (name == "emit") return EventKind::kEmit;
  if (name == "divergence") return EventKind::kDivergence;
  if (name == "span-eval") return EventKind::kSpanEval;
  if (name == "selection") return EventKind::kSelection;
  throw Error(ErrorCode::kParse, "unknown event kind '" + std::string(name) + "'");
}

double DecodeStats::tokens_per_second() const {
  if (wall_ns <= 0) return 0.0;
  return static_cast<double>(tokens_emitted) * 1e9 / static_cast<double>(wall_ns);
}

DecodeStats summarize(std::span<const TraceEvent> events) {
  DecodeStats s;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::kEmit:
        ++s.tokens_emitted;
        break;
      case EventKind::kDivergence:
        ++s.divergence_count;
        break;
      case EventKind::kSelection:
        ++s.span_lengths[e.payload.at("span_len").get<std::size_t>()];
        break;
      case EventKind::kSpanEval:
        break;
    }
  }
  if (!events.empty()) s.wall_ns = events.back().t_ns;
  return s;
}

std::optional<std::string> check_trace(std::span<const TraceEvent> events) {
  std::size_t divergences = 0;
  std::size_t selections = 0;
  std::set<std::size_t> span_eval_steps;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && events[i].step < events[i - 1].step) {
      return "step indices decrease at event " + std::to_string(i);
    }
    switch (events[i].kind) {
      case EventKind::kDivergence: ++divergences; break;
      case EventKind::kSelection: ++selections; break;
      case EventKind::kSpanEval: span_eval_steps.insert(events[i].step); break;
      case EventKind::kEmit: break;
    }
  }
  if (divergences != span_eval_steps.size()) {
    return "divergence count " + std::to_string(divergences) + " != span-eval groups " +
           std::to_string(span_eval_steps.size());
  }
  if (selections != divergences) {
    return "selection count " + std::to_string(selections) + " != divergence count " +
           std::to_string(divergences);
  }
  return std::nullopt;
}

void DecodeTrace::record(std::size_t step, EventKind kind, nlohmann::json payload) {
  if (!events_.empty() && step < events_.back().step) {
    throw Error(ErrorCode::kInvalidArgument, "trace steps must be non-decreasing");
  }
  const auto elapsed = std::chrono::steady_clock::now() - start_;
  events_.push_back(TraceEvent{
      step, kind, std::move(payload),
      std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count()});
}

}  // namespace diver
