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

#include "diver/tabular_lm.hpp"

#include <algorithm>
#include <fstream>

namespace diver {

TabularLM::TabularLM(Vocab vocab, int order, Fallback fallback, std::string id)
    : vocab_(std::move(vocab)), order_(order), fallback_(fallback), id_(std::move(id)) {
  if (order_ < 1) throw Error(ErrorCode::kInvalidArgument, "n-gram order must be >= 1");
  if (order_ > 1 && !vocab_.bos()) {
    throw Error(ErrorCode::kInvalidArgument, "order > 1 needs a bos token for padding");
  }
  uniform_ = normalize_dist(std::vector<double>(vocab_.size(), 1.0));
}

void TabularLM::set_row(std::span<const TokenId> window, std::span<const double> weights) {
  if (window.size() != static_cast<std::size_t>(order_ - 1)) {
    throw Error(ErrorCode::kInvalidArgument, "row context must hold order - 1 tokens");
  }
  for (TokenId t : window) {
    if (!vocab_.contains(t)) throw Error(ErrorCode::kBadValue, "row context id out of range");
  }
  if (weights.size() != vocab_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "row weights must cover the whole vocab");
  }
  Row row{std::vector<double>(weights.begin(), weights.end()), normalize_dist(weights)};
  rows_.insert_or_assign(TokenSeq(window.begin(), window.end()), std::move(row));
}

void TabularLM::set_row(std::span<const std::string> window,
                        const std::map<std::string, double>& weights) {
  TokenSeq ids;
  for (const auto& s : window) ids.push_back(vocab_.id(s));
  std::vector<double> w(vocab_.size(), 0.0);
  for (const auto& [token, weight] : weights) w[static_cast<std::size_t>(vocab_.id(token))] = weight;
  set_row(ids, w);
}

TokenSeq TabularLM::window(std::span<const TokenId> context) const {
  const auto n = static_cast<std::size_t>(order_ - 1);
  TokenSeq out(n, vocab_.bos().value_or(0));
  const std::size_t take = std::min(n, context.size());
  std::copy(context.end() - static_cast<std::ptrdiff_t>(take), context.end(),
            out.end() - static_cast<std::ptrdiff_t>(take));
  return out;
}

const std::vector<double>* TabularLM::raw_row(std::span<const TokenId> window) const {
  auto it = rows_.find(TokenSeq(window.begin(), window.end()));
  return it == rows_.end() ? nullptr : &it->second.weights;
}

LogProbDist TabularLM::next_dist(std::span<const TokenId> context) const {
  check_context(context);
  auto it = rows_.find(window(context));
  if (it != rows_.end()) return it->second.dist;
  if (fallback_ == Fallback::kUniform) return uniform_;
  std::string ctx;
  for (TokenId t : window(context)) ctx += (ctx.empty() ? "" : " ") + vocab_.token(t);
  throw Error(ErrorCode::kMissingContext, "no row for context [" + ctx + "]");
}

TabularLM TabularLM::from_json(const nlohmann::json& doc) {
  try {
    auto tokens = doc.at("vocab").get<std::vector<std::string>>();
    auto has = [&](const std::string& s) {
      return std::find(tokens.begin(), tokens.end(), s) != tokens.end();
    };
    std::string eos = doc.value("eos", std::string("</s>"));
    std::optional<std::string> bos;
    if (doc.contains("bos") && !doc.at("bos").is_null()) {
      bos = doc.at("bos").get<std::string>();
    } else if (has("<s>")) {
      bos = "<s>";
    }
    Vocab vocab = Vocab::from_strings(std::move(tokens), eos,
                                      bos ? std::optional<std::string_view>(*bos) : std::nullopt);
    const std::string fb = doc.value("fallback", std::string("uniform"));
    if (fb != "uniform" && fb != "error") {
      throw Error(ErrorCode::kParse, "fallback must be \"uniform\" or \"error\"");
    }
    TabularLM lm(std::move(vocab), doc.at("order").get<int>(),
                 fb == "uniform" ? Fallback::kUniform : Fallback::kError,
                 doc.value("id", std::string("toy")));
    for (const auto& row : doc.value("rows", nlohmann::json::array())) {
      auto ctx = row.at("context").get<std::vector<std::string>>();
      auto weights = row.at("weights").get<std::map<std::string, double>>();
      lm.set_row(ctx, weights);
    }
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("tabular model: ") + e.what());
  }
}

TabularLM TabularLM::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json TabularLM::to_json() const {
  nlohmann::json doc;
  doc["order"] = order_;
  doc["vocab"] = vocab_.tokens();
  doc["eos"] = vocab_.token(vocab_.eos());
  if (vocab_.bos()) doc["bos"] = vocab_.token(*vocab_.bos());
  doc["fallback"] = fallback_ == Fallback::kUniform ? "uniform" : "error";
  doc["id"] = id_;
  auto rows = nlohmann::json::array();
  for (const auto& [window, row] : rows_) {
    nlohmann::json ctx = nlohmann::json::array();
    for (TokenId t : window) ctx.push_back(vocab_.token(t));
    nlohmann::json weights = nlohmann::json::object();
    for (std::size_t i = 0; i < row.weights.size(); ++i) {
      if (row.weights[i] != 0.0) weights[vocab_.token(static_cast<TokenId>(i))] = row.weights[i];
    }
    rows.push_back({{"context", ctx}, {"weights", weights}});
  }
  doc["rows"] = rows;
  return doc;
}

void TabularLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace diver
