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

#include "diver/span.hpp"

#include <algorithm>

namespace diver {

std::size_t RiskSet::min() const {
  if (entries.empty()) throw Error(ErrorCode::kEmptyRiskSet, "risk set is empty");
  return std::min_element(entries.begin(), entries.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->second;
}

std::size_t RiskSet::max() const {
  if (entries.empty()) throw Error(ErrorCode::kEmptyRiskSet, "risk set is empty");
  return std::max_element(entries.begin(), entries.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->second;
}

Rollout rollout_candidate(const LanguageModel& model, std::span<const TokenId> context,
                          std::size_t step, Candidate seed, double gamma, std::size_t cap) {
  if (cap == 0) throw Error(ErrorCode::kInvalidArgument, "rollout cap must be >= 1");
  const TokenId eos = model.vocab().eos();
  Rollout r;
  r.seed = seed;
  r.step = step;
  r.tokens.push_back(seed.token);

  TokenSeq ctx(context.begin(), context.end());
  ctx.push_back(seed.token);
  while (true) {
    if (r.tokens.back() == eos) {
      r.ended = r.hit_eos = true;
      break;
    }
    if (r.tokens.size() >= cap) {
      r.ended = r.hit_cap = true;
      break;
    }
    const auto cs = candidate_set(model.next_dist(ctx), gamma, step + r.tokens.size());
    if (is_divergence(cs)) break;
    r.tokens.push_back(cs.members.front().token);
    ctx.push_back(cs.members.front().token);
  }
  r.first_risk = step + r.tokens.size();
  return r;
}

void extend_rollout(const LanguageModel& model, std::span<const TokenId> context,
                    Rollout& rollout, std::size_t target_len) {
  const TokenId eos = model.vocab().eos();
  TokenSeq ctx = concat(context, rollout.tokens);
  while (rollout.tokens.size() < target_len && rollout.tokens.back() != eos) {
    const TokenId next = model.next_dist(ctx).argmax();
    rollout.tokens.push_back(next);
    ctx.push_back(next);
  }
  if (rollout.tokens.back() == eos) rollout.hit_eos = true;
}

RiskSet risk_set(std::span<const Rollout> rollouts) {
  RiskSet risks;
  for (const auto& r : rollouts) risks.entries[r.seed.token] = r.first_risk;
  return risks;
}

std::size_t dynamic_k(const RiskSet& risks, std::size_t step, SpanMode mode) {
  std::size_t r = 0;
  switch (mode) {
    case SpanMode::kLeft: r = risks.min(); break;
    case SpanMode::kRight: r = risks.max(); break;
    case SpanMode::kToken:
      throw Error(ErrorCode::kInvalidArgument, "dynamic_k needs the Left or Right boundary");
  }
  if (r <= step) {
    throw Error(ErrorCode::kBadValue, "risk position must lie after the divergence step");
  }
  return r - step - 1;
}

std::vector<CandidateSpan> build_spans(std::span<const Rollout> rollouts, std::size_t k,
                                       TokenId eos) {
  std::vector<CandidateSpan> spans;
  spans.reserve(rollouts.size());
  for (const auto& r : rollouts) {
    if (r.tokens.empty() || r.tokens.front() != r.seed.token) {
      throw Error(ErrorCode::kInvalidArgument, "rollout must begin with its seed");
    }
    if (r.tokens.size() < k + 1 && r.tokens.back() != eos) {
      throw Error(ErrorCode::kInvalidArgument, "rollout shorter than the span and not at eos");
    }
    CandidateSpan s;
    const std::size_t len = std::min(k + 1, r.tokens.size());
    s.tokens.assign(r.tokens.begin(), r.tokens.begin() + static_cast<std::ptrdiff_t>(len));
    s.seed_base_logp = r.seed.base_logp;
    s.terminal = s.tokens.back() == eos;
    s.first_risk = r.first_risk;
    spans.push_back(std::move(s));
  }
  return spans;
}

}  // namespace diver
