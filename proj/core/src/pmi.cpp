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

#include "diver/pmi.hpp"

#include <algorithm>
#include <fstream>

namespace diver {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view marker) {
  std::size_t n = 0;
  for (auto pos = text.find(marker); pos != std::string_view::npos;
       pos = text.find(marker, pos + marker.size())) {
    ++n;
  }
  return n;
}

void require_once(std::string_view text, std::string_view marker, std::string_view which) {
  const auto n = count_occurrences(text, marker);
  if (n == 0) {
    throw Error(ErrorCode::kMissingPlaceholder,
                std::string(which) + " template lacks " + std::string(marker));
  }
  if (n > 1) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(which) + " template repeats " + std::string(marker));
  }
}

TokenSeq tokenize_segment(const LanguageModel& model, std::string_view text) {
  return model.tokenize(text);
}

void append(TokenSeq& out, std::span<const TokenId> tail) {
  out.insert(out.end(), tail.begin(), tail.end());
}

}  // namespace

PromptTemplatePair::PromptTemplatePair(std::string name, std::string forward, std::string backward)
    : name_(std::move(name)), forward_(std::move(forward)), backward_(std::move(backward)) {
  require_once(forward_, kInputMarker, "forward");
  require_once(backward_, kOutputMarker, "backward");
  require_once(backward_, kInputMarker, "backward");

  const auto fi = forward_.find(kInputMarker);
  fwd_before_ = forward_.substr(0, fi);
  fwd_after_ = forward_.substr(fi + kInputMarker.size());

  const auto bo = backward_.find(kOutputMarker);
  const auto bi = backward_.find(kInputMarker);
  if (bi < bo) {
    throw Error(ErrorCode::kInvalidArgument,
                "backward template must place [INCOMPLETE_OUTPUT] before [INPUT]");
  }
  bwd_before_ = backward_.substr(0, bo);
  bwd_between_ = backward_.substr(bo + kOutputMarker.size(), bi - bo - kOutputMarker.size());
  bwd_after_ = backward_.substr(bi + kInputMarker.size());
}

PromptTemplatePair PromptTemplatePair::from_json(const nlohmann::json& doc) {
  try {
    return PromptTemplatePair(doc.at("name").get<std::string>(),
                              doc.at("forward").get<std::string>(),
                              doc.at("backward").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("template: ") + e.what());
  }
}

nlohmann::json PromptTemplatePair::to_json() const {
  return {{"name", name_}, {"forward", forward_}, {"backward", backward_}};
}

std::vector<PromptTemplatePair> load_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  std::vector<PromptTemplatePair> out;
  if (doc.is_array()) {
    for (const auto& item : doc) out.push_back(PromptTemplatePair::from_json(item));
  } else {
    out.push_back(PromptTemplatePair::from_json(doc));
  }
  return out;
}

const PromptTemplatePair& find_template(std::span<const PromptTemplatePair> templates,
                                        std::string_view name) {
  for (const auto& t : templates) {
    if (t.name() == name) return t;
  }
  throw Error(ErrorCode::kInvalidArgument, "no template named '" + std::string(name) + "'");
}

std::string render_forward_text(const PromptTemplatePair& tpl, std::string_view input) {
  std::string out = tpl.forward_before_input();
  out += input;
  out += tpl.forward_after_input();
  return out;
}

std::string render_backward_text(const PromptTemplatePair& tpl, std::string_view input,
                                 std::string_view incomplete_output) {
  std::string out = tpl.backward_before_output();
  out += incomplete_output;
  out += tpl.backward_between();
  out += input;
  out += tpl.backward_after_input();
  return out;
}

TokenSeq render_forward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                               std::span<const TokenId> input) {
  TokenSeq out = tokenize_segment(model, tpl.forward_before_input());
  append(out, input);
  append(out, tokenize_segment(model, tpl.forward_after_input()));
  return out;
}

TokenSeq render_forward_prompt_without_input(const PromptTemplatePair& tpl,
                                             const LanguageModel& model) {
  TokenSeq out = tokenize_segment(model, tpl.forward_before_input());
  append(out, tokenize_segment(model, tpl.forward_after_input()));
  return out;
}

BackwardPrompt render_backward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                                      std::span<const TokenId> input,
                                      std::span<const TokenId> incomplete_output) {
  BackwardPrompt p;
  p.prefix = tokenize_segment(model, tpl.backward_before_output());
  append(p.prefix, incomplete_output);
  append(p.prefix, tokenize_segment(model, tpl.backward_between()));
  p.target.assign(input.begin(), input.end());
  return p;
}

BackwardPrompt render_backward_prompt(const PromptTemplatePair& tpl, const LanguageModel& model,
                                      std::string_view input,
                                      std::string_view incomplete_output) {
  const TokenSeq input_ids = model.tokenize(input);
  const TokenSeq output_ids = model.tokenize(incomplete_output);
  BackwardPrompt p = render_backward_prompt(tpl, model, input_ids, output_ids);

  std::optional<TokenSeq> whole;
  try {
    whole = model.tokenize(render_backward_text(tpl, input, incomplete_output));
  } catch (const Error& e) {
    // Scaffolding glued to a placeholder (e.g. "O:[INCOMPLETE_OUTPUT]") has no
    // whole-text tokenization; the segment splice is authoritative then.
    if (e.code() != ErrorCode::kUnknownToken) throw;
  }
  if (whole) {
    const TokenSeq spliced = concat(p.prefix, p.target);
    if (whole->size() < spliced.size() ||
        !std::equal(spliced.begin(), spliced.end(), whole->begin())) {
      throw Error(ErrorCode::kTokenizationMismatch,
                  "input does not tokenize the same standalone and inside the backward prompt");
    }
  }
  return p;
}

PmiVerifier::PmiVerifier(const LanguageModel& verifier, const PromptTemplatePair& tpl,
                         TokenSeq input, TokenSeq y_prefix)
    : verifier_(verifier), tpl_(tpl), input_(std::move(input)), y_prefix_(std::move(y_prefix)) {
  if (input_.empty()) throw Error(ErrorCode::kInvalidArgument, "PMI needs a non-empty input");
}

std::vector<double> PmiVerifier::score_input(std::span<const TokenId> output,
                                             bool& truncated) const {
  BackwardPrompt p = render_backward_prompt(tpl_, verifier_, input_, output);
  truncated = false;
  if (auto limit = verifier_.context_limit()) {
    // The longest scoring context is prefix ++ target[:-1].
    const std::size_t needed = p.prefix.size() + p.target.size() - 1;
    if (needed > *limit) {
      const std::size_t excess = needed - *limit;
      if (excess > p.prefix.size()) {
        throw Error(ErrorCode::kContextTooLong, "input alone exceeds the verifier context");
      }
      p.prefix.erase(p.prefix.begin(), p.prefix.begin() + static_cast<std::ptrdiff_t>(excess));
      truncated = true;
    }
  }
  return verifier_.score_sequence(p.prefix, p.target, ZeroProb::kKeep);
}

const std::vector<double>& PmiVerifier::baseline() const {
  if (!baseline_) baseline_ = score_input(y_prefix_, baseline_truncated_);
  return *baseline_;
}

PmiScore PmiVerifier::score(std::span<const TokenId> span_tokens) const {
  if (span_tokens.empty()) throw Error(ErrorCode::kInvalidArgument, "PMI of an empty span");
  const auto& base = baseline();
  PmiScore s;
  bool truncated = false;
  // eos closes the output; it is not content the backward prompt conditions on.
  TokenSeq output = concat(y_prefix_, span_tokens);
  if (output.back() == verifier_.vocab().eos()) output.pop_back();
  const auto with = score_input(output, truncated);
  s.truncated = truncated || baseline_truncated_;
  s.per_token_deltas.reserve(with.size());
  for (std::size_t t = 0; t < with.size(); ++t) {
    double d;
    if (with[t] == kNegInf && base[t] == kNegInf) {
      d = 0.0;
      ++s.clamped;
    } else if (with[t] == kNegInf) {
      d = -kDeltaClamp;
      ++s.clamped;
    } else if (base[t] == kNegInf) {
      d = kDeltaClamp;
      ++s.clamped;
    } else {
      d = with[t] - base[t];
      if (d > kDeltaClamp || d < -kDeltaClamp) {
        d = std::clamp(d, -kDeltaClamp, kDeltaClamp);
        ++s.clamped;
      }
    }
    s.per_token_deltas.push_back(d);
    s.value += d;
  }
  return s;
}

PmiScore pmi_score(const LanguageModel& verifier, const PromptTemplatePair& tpl,
                   std::span<const TokenId> input, std::span<const TokenId> y_prefix,
                   std::span<const TokenId> span_tokens) {
  PmiVerifier v(verifier, tpl, TokenSeq(input.begin(), input.end()),
                TokenSeq(y_prefix.begin(), y_prefix.end()));
  return v.score(span_tokens);
}

std::vector<PmiScore> pmi_score_batch(const LanguageModel& verifier,
                                      const PromptTemplatePair& tpl,
                                      std::span<const TokenId> input,
                                      std::span<const TokenId> y_prefix,
                                      std::span<const CandidateSpan> spans) {
  std::vector<PmiScore> out;
  if (spans.empty()) return out;
  PmiVerifier v(verifier, tpl, TokenSeq(input.begin(), input.end()),
                TokenSeq(y_prefix.begin(), y_prefix.end()));
  out.reserve(spans.size());
  for (const auto& s : spans) out.push_back(v.score(s.tokens));
  return out;
}

}  // namespace diver
