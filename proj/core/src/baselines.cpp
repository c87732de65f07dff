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

#include "diver/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diver/divergence.hpp"

namespace diver {

namespace {

void check_budget(std::size_t max_new_tokens) {
  if (max_new_tokens == 0) throw Error(ErrorCode::kInvalidArgument, "max_new_tokens must be positive");
}

// Appends t to y and the trace; returns true when decoding should stop.
bool emit(TokenSeq& y, DecodeTrace& trace, TokenId t, TokenId eos, const char* source) {
  trace.record(y.size(), EventKind::kEmit, {{"token", t}, {"source", source}});
  y.push_back(t);
  return t == eos;
}

DecodeResult finish(DecodeResult r) {
  r.stats = r.trace.stats();
  return r;
}

// Highest score, ties to the lowest id. Scores of -inf are never picked when
// any finite score exists.
TokenId argmax_lowest_id(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

}  // namespace

std::vector<TokenId> nucleus_set(const LogProbDist& dist, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0, 1]");
  }
  std::vector<TokenId> order = dist.support();
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return dist[a] > dist[b]; });
  std::vector<TokenId> kept;
  double mass = 0.0;
  for (TokenId t : order) {
    kept.push_back(t);
    mass += dist.prob(t);
    if (mass >= top_p) break;
  }
  return kept;
}

TokenId nucleus_sample(const LogProbDist& dist, double top_p, Rng& rng) {
  const auto kept = nucleus_set(dist, top_p);
  double mass = 0.0;
  for (TokenId t : kept) mass += dist.prob(t);
  const double u = rng.uniform() * mass;
  double cumulative = 0.0;
  for (TokenId t : kept) {
    cumulative += dist.prob(t);
    if (u < cumulative) return t;
  }
  return kept.back();
}

TokenId cd_select(const LogProbDist& expert, const LogProbDist& amateur, double gamma) {
  if (expert.size() != amateur.size()) {
    throw Error(ErrorCode::kVocabMismatch, "expert and amateur vocab sizes differ");
  }
  const CandidateSet cs = candidate_set(expert, gamma);
  std::vector<TokenId> members = cs.tokens();
  std::sort(members.begin(), members.end());
  TokenId best = members.front();
  double best_score = expert.prob(best) - amateur.prob(best);
  for (TokenId t : members) {
    const double score = expert.prob(t) - amateur.prob(t);
    if (score > best_score) {
      best = t;
      best_score = score;
    }
  }
  return best;
}

TokenId cad_select(const LogProbDist& with_input, const LogProbDist& without_input, double alpha) {
  if (with_input.size() != without_input.size()) {
    throw Error(ErrorCode::kVocabMismatch, "distributions differ in size");
  }
  std::vector<double> scores(with_input.size());
  for (std::size_t v = 0; v < scores.size(); ++v) {
    const auto t = static_cast<TokenId>(v);
    scores[v] = (1.0 + alpha) * with_input.prob(t) - alpha * without_input.prob(t);
  }
  return argmax_lowest_id(scores);
}

DecodeResult greedy_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                           std::size_t max_new_tokens) {
  check_budget(max_new_tokens);
  const TokenId eos = model.vocab().eos();
  DecodeResult r;
  TokenSeq context(prompt.begin(), prompt.end());
  while (r.output.size() < max_new_tokens) {
    const TokenId t = model.next_dist(context).argmax();
    context.push_back(t);
    if (emit(r.output, r.trace, t, eos, "greedy")) break;
  }
  return finish(std::move(r));
}

DecodeResult nucleus_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                            double top_p, Rng& rng, std::size_t max_new_tokens) {
  check_budget(max_new_tokens);
  const TokenId eos = model.vocab().eos();
  DecodeResult r;
  TokenSeq context(prompt.begin(), prompt.end());
  while (r.output.size() < max_new_tokens) {
    const TokenId t = nucleus_sample(model.next_dist(context), top_p, rng);
    context.push_back(t);
    if (emit(r.output, r.trace, t, eos, "nucleus")) break;
  }
  return finish(std::move(r));
}

DecodeResult beam_decode(const LanguageModel& model, std::span<const TokenId> prompt,
                         std::size_t beam_width, std::size_t max_new_tokens) {
  check_budget(max_new_tokens);
  if (beam_width == 0) throw Error(ErrorCode::kInvalidArgument, "beam_width must be positive");
  const TokenId eos = model.vocab().eos();

  auto better = [](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.cum_logp != b.cum_logp) return a.cum_logp > b.cum_logp;
    return a.tokens < b.tokens;
  };

  std::vector<BeamHypothesis> beam{BeamHypothesis{}};
  std::vector<BeamHypothesis> finished;
  while (!beam.empty()) {
    std::vector<BeamHypothesis> expansions;
    for (const auto& h : beam) {
      const LogProbDist dist = model.next_dist(concat(prompt, h.tokens));
      for (TokenId t : dist.support()) {
        BeamHypothesis e{h.tokens, h.cum_logp + dist[t], false};
        e.tokens.push_back(t);
        e.finished = t == eos || e.tokens.size() >= max_new_tokens;
        expansions.push_back(std::move(e));
      }
    }
    std::sort(expansions.begin(), expansions.end(), better);
    if (expansions.size() > beam_width) expansions.resize(beam_width);

    beam.clear();
    for (auto& e : expansions) (e.finished ? finished : beam).push_back(std::move(e));

    // Scores only decrease, so no live hypothesis can overtake a finished one
    // that is already strictly better.
    if (!finished.empty() && !beam.empty()) {
      const auto& best_done = *std::min_element(finished.begin(), finished.end(), better);
      if (best_done.cum_logp > beam.front().cum_logp) break;
    }
  }

  const auto& best = *std::min_element(finished.begin(), finished.end(), better);
  DecodeResult r;
  for (TokenId t : best.tokens) {
    if (emit(r.output, r.trace, t, eos, "beam")) break;
  }
  return finish(std::move(r));
}

DecodeResult cd_decode(const LanguageModel& expert, const LanguageModel& amateur,
                       std::span<const TokenId> prompt, double gamma,
                       std::size_t max_new_tokens) {
  check_budget(max_new_tokens);
  if (!(expert.vocab() == amateur.vocab())) {
    throw Error(ErrorCode::kVocabMismatch, "CD needs the expert and amateur to share a vocab");
  }
  const TokenId eos = expert.vocab().eos();
  DecodeResult r;
  TokenSeq context(prompt.begin(), prompt.end());
  while (r.output.size() < max_new_tokens) {
    const TokenId t = cd_select(expert.next_dist(context), amateur.next_dist(context), gamma);
    context.push_back(t);
    if (emit(r.output, r.trace, t, eos, "cd")) break;
  }
  return finish(std::move(r));
}

DecodeResult cad_decode(const LanguageModel& model, std::span<const TokenId> prompt_with_input,
                        std::span<const TokenId> prompt_without_input, double alpha,
                        std::size_t max_new_tokens) {
  check_budget(max_new_tokens);
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  const TokenId eos = model.vocab().eos();
  DecodeResult r;
  TokenSeq with(prompt_with_input.begin(), prompt_with_input.end());
  TokenSeq without(prompt_without_input.begin(), prompt_without_input.end());
  while (r.output.size() < max_new_tokens) {
    const TokenId t = cad_select(model.next_dist(with), model.next_dist(without), alpha);
    with.push_back(t);
    without.push_back(t);
    if (emit(r.output, r.trace, t, eos, "cad")) break;
  }
  return finish(std::move(r));
}

}  // namespace diver
