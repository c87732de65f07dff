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

#include "diver/divergence.hpp"

#include <algorithm>
#include <cmath>

namespace diver {

bool CandidateSet::contains(TokenId t) const {
  return std::any_of(members.begin(), members.end(),
                     [t](const Candidate& c) { return c.token == t; });
}

std::vector<TokenId> CandidateSet::tokens() const {
  std::vector<TokenId> out;
  out.reserve(members.size());
  for (const auto& c : members) out.push_back(c.token);
  return out;
}

CandidateSet candidate_set(const LogProbDist& dist, double gamma, std::size_t step,
                           std::optional<std::size_t> max_candidates) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be in (0, 1]");
  }
  const double threshold = std::log(gamma) + dist.max_logp() - kThresholdSlack;
  CandidateSet cs;
  cs.step = step;
  const auto values = dist.values();
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] != kNegInf && values[v] >= threshold) {
      cs.members.push_back({static_cast<TokenId>(v), values[v]});
    }
  }
  std::stable_sort(cs.members.begin(), cs.members.end(),
                   [](const Candidate& a, const Candidate& b) { return a.base_logp > b.base_logp; });
  if (max_candidates && cs.members.size() > *max_candidates) cs.members.resize(*max_candidates);
  return cs;
}

}  // namespace diver
