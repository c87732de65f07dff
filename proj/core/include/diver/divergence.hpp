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

#include <cstddef>
#include <optional>
#include <vector>

#include "diver/types.hpp"

namespace diver {

struct Candidate {
  TokenId token = 0;
  // log p(token | prefix, input) at the triggering step.
  double base_logp = kNegInf;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Tokens whose probability is at least gamma times the step maximum, ordered
// by descending base_logp with ties broken by ascending token id. The argmax
// is always the first member.
struct CandidateSet {
  std::size_t step = 0;
  std::vector<Candidate> members;

  bool contains(TokenId t) const;
  std::vector<TokenId> tokens() const;
};

// Relative slack (in nats) on the gamma threshold so that values sitting exactly
// on the boundary stay included despite log/exp rounding.
inline constexpr double kThresholdSlack = 1e-12;

CandidateSet candidate_set(const LogProbDist& dist, double gamma, std::size_t step = 0,
                           std::optional<std::size_t> max_candidates = std::nullopt);

inline bool is_divergence(const CandidateSet& cs) { return cs.members.size() > 1; }

}  // namespace diver
