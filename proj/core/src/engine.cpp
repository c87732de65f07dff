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

#include "diver/engine.hpp"

#include <algorithm>
#include <cmath>

#include "diver/divergence.hpp"

namespace diver {

namespace {

nlohmann::json ids_json(std::span<const TokenId> ids) { return nlohmann::json(TokenSeq(ids.begin(), ids.end())); }

// Rollouts for every candidate of a divergence point, cut to the span length.
std::vector<CandidateSpan> candidate_spans(const LanguageModel& model, const TokenSeq& context,
                                           const CandidateSet& cs, SpanMode mode,
                                           const DecoderConfig& cfg, std::size_t& k) {
  const std::size_t step = cs.step;
  const std::size_t cap = std::min(cfg.max_span_len, cfg.max_new_tokens - step);
  const TokenId eos = model.vocab().eos();

  std::vector<Rollout> rollouts;
  rollouts.reserve(cs.members.size());
  if (mode == SpanMode::kToken) {
    for (const auto& c : cs.members) {
      Rollout r;
      r.seed = c;
      r.step = step;
      r.tokens = {c.token};
      r.first_risk = step + 1;
      rollouts.push_back(std::move(r));
    }
    k = 0;
    return build_spans(rollouts, k, eos);
  }

  for (const auto& c : cs.members) {
    rollouts.push_back(rollout_candidate(model, context, step, c, cfg.gamma, cap));
  }
  k = dynamic_k(risk_set(rollouts), step, mode);
  if (mode == SpanMode::kRight) {
    for (auto& r : rollouts) extend_rollout(model, context, r, k + 1);
  }
  return build_spans(rollouts, k, eos);
}

}  // namespace

std::vector<CandidateSpan> rerank(std::vector<CandidateSpan> spans) {
  for (auto& s : spans) s.q = s.seed_base_logp + s.pmi;
  std::stable_sort(spans.begin(), spans.end(), [](const CandidateSpan& a, const CandidateSpan& b) {
    if (a.q != b.q) return a.q > b.q;
    return a.seed() < b.seed();
  });
  return spans;
}

const CandidateSpan& select_span(std::span<const CandidateSpan> ranked, bool sample, Rng& rng) {
  if (ranked.empty()) throw Error(ErrorCode::kEmptySpanList, "no spans to select from");
  if (ranked.front().q == kNegInf) {
    throw Error(ErrorCode::kEmptySpanList, "every span has q = -inf");
  }
  if (!sample) return ranked.front();

  std::vector<double> q;
  q.reserve(ranked.size());
  for (const auto& s : ranked) q.push_back(s.q);
  const double z = logsumexp(q);
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_finite = 0;
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    if (ranked[j].q == kNegInf) continue;
    last_finite = j;
    cumulative += std::exp(ranked[j].q - z);
    if (u < cumulative) return ranked[j];
  }
  return ranked[last_finite];
}

DecodeResult decode(const LanguageModel& model, const LanguageModel& verifier,
                    const PromptTemplatePair& tpl, std::string_view input,
                    const DecoderConfig& cfg) {
  cfg.validate();
  const SpanMode mode = span_mode_for(cfg.strategy);
  const TokenId eos = model.vocab().eos();

  const TokenSeq input_fwd = model.tokenize(input);
  const TokenSeq input_ver = &verifier == &model ? input_fwd : verifier.tokenize(input);
  const TokenSeq prompt = render_forward_prompt(tpl, model, input_fwd);

  Rng rng(cfg.rng_seed);
  DecodeResult result;
  TokenSeq& y = result.output;
  DecodeTrace& trace = result.trace;

  try {
    while (y.size() < cfg.max_new_tokens) {
      const std::size_t i = y.size();
      const TokenSeq context = concat(prompt, y);
      const CandidateSet cs =
          candidate_set(model.next_dist(context), cfg.gamma, i, cfg.max_candidates);

      if (!is_divergence(cs)) {
        const TokenId t = cs.members.front().token;
        y.push_back(t);
        trace.record(i, EventKind::kEmit, {{"token", t}, {"source", "greedy"}});
        if (t == eos) break;
        continue;
      }

      nlohmann::json base = nlohmann::json::array();
      for (const auto& c : cs.members) base.push_back(c.base_logp);
      trace.record(i, EventKind::kDivergence, {{"candidates", cs.tokens()}, {"base_logp", base}});

      std::size_t k = 0;
      std::vector<CandidateSpan> spans = candidate_spans(model, context, cs, mode, cfg, k);

      PmiVerifier pv(verifier, tpl, input_ver, translate_tokens(model, verifier, y));
      std::vector<PmiScore> scores;
      scores.reserve(spans.size());
      for (auto& s : spans) {
        scores.push_back(pv.score(translate_tokens(model, verifier, s.tokens)));
        s.pmi = scores.back().value;
      }
      for (std::size_t j = 0; j < spans.size(); ++j) {
        const auto& s = spans[j];
        trace.record(i, EventKind::kSpanEval,
                     {{"seed", s.seed()},
                      {"tokens", ids_json(s.tokens)},
                      {"base_logp", s.seed_base_logp},
                      {"pmi", s.pmi},
                      {"q", s.seed_base_logp + s.pmi},
                      {"risk", s.first_risk},
                      {"terminal", s.terminal},
                      {"clamped", scores[j].clamped},
                      {"truncated", scores[j].truncated}});
      }

      const std::vector<CandidateSpan> ranked = rerank(std::move(spans));
      const CandidateSpan& chosen = select_span(ranked, cfg.sample_spans, rng);
      trace.record(i, EventKind::kSelection,
                   {{"seed", chosen.seed()},
                    {"tokens", ids_json(chosen.tokens)},
                    {"k", k},
                    {"span_len", k + 1},
                    {"q", chosen.q},
                    {"mode", to_string(mode)}});
      for (TokenId t : chosen.tokens) {
        trace.record(y.size(), EventKind::kEmit, {{"token", t}, {"source", "span"}});
        y.push_back(t);
      }
      if (chosen.terminal) break;
    }
  } catch (const DecodeAbort&) {
    throw;
  } catch (const Error& e) {
    throw DecodeAbort(e, y, trace);
  }

  result.stats = trace.stats();
  return result;
}

}  // namespace diver
