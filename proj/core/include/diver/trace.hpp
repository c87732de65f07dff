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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace diver {

enum class EventKind { kEmit, kDivergence, kSpanEval, kSelection };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view name);

// Payload keys by kind:
//   emit        {"token", "source"}
//   divergence  {"candidates", "base_logp"}
//   span-eval   {"seed", "tokens", "base_logp", "pmi", "q", "risk", "terminal",
//                "clamped", "truncated"}
//   selection   {"seed", "tokens", "k", "span_len", "q", "mode"}
struct TraceEvent {
  std::size_t step = 0;
  EventKind kind = EventKind::kEmit;
  nlohmann::json payload;
  // Nanoseconds since the decode session started.
  std::int64_t t_ns = 0;

  // Equality ignores timing.
  friend bool operator==(const TraceEvent& a, const TraceEvent& b) {
    return a.step == b.step && a.kind == b.kind && a.payload == b.payload;
  }
};

struct DecodeStats {
  std::size_t tokens_emitted = 0;
  std::size_t divergence_count = 0;
  // Committed span length (k + 1) -> number of divergence points.
  std::map<std::size_t, std::size_t> span_lengths;
  // Time of the last event; the decode ends when its last token is emitted.
  std::int64_t wall_ns = 0;

  double tokens_per_second() const;

  friend bool operator==(const DecodeStats&, const DecodeStats&) = default;
};

// Recomputes aggregates from raw events. This is the only place aggregates are
// derived, so run-time reports and offline `stats` agree by construction.
DecodeStats summarize(std::span<const TraceEvent> events);

// Returns a description of the first violated trace invariant, if any.
std::optional<std::string> check_trace(std::span<const TraceEvent> events);

class DecodeTrace {
 public:
  DecodeTrace() : start_(std::chrono::steady_clock::now()) {}

  // Appends an event stamped with the elapsed session time. Step indices must
  // be non-decreasing.
  void record(std::size_t step, EventKind kind, nlohmann::json payload);

  const std::vector<TraceEvent>& events() const noexcept { return events_; }
  DecodeStats stats() const { return summarize(events_); }

  friend bool operator==(const DecodeTrace& a, const DecodeTrace& b) {
    return a.events_ == b.events_;
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::vector<TraceEvent> events_;
};

}  // namespace diver
