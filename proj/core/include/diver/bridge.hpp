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

// Engine side of the model-bridge wire protocol: JSON-lines, one request in
// flight per connection, versioned through the hello exchange.
//
//   request  {"op", "request_id", "context"?, "target"?}
//   response {"request_id", "ok", "payload", "error"?}
//
// ops: hello -> manifest; next_logprobs(context ids) -> vocab-size array;
// score_sequence(context ids, target ids) -> per-target-token array;
// tokenize(context text) -> ids; detokenize(context ids) -> text.
// Log-probabilities of zero-probability tokens travel as null.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "diver/lm.hpp"

namespace diver::bridge {

inline constexpr int kProtocolVersion = 1;

struct Request {
  std::string op;
  std::uint64_t request_id = 0;
  std::variant<std::monostate, TokenSeq, std::string> context;
  std::optional<TokenSeq> target;

  friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
  std::uint64_t request_id = 0;
  bool ok = true;
  nlohmann::json payload;
  std::optional<std::string> error;

  friend bool operator==(const Response&, const Response&) = default;
};

struct Manifest {
  int version = kProtocolVersion;
  std::size_t vocab_size = 0;
  TokenId eos_id = 0;
  std::optional<TokenId> bos_id;
  std::optional<std::size_t> context_limit;
  // Surface strings, when the bridge chooses to publish them.
  std::vector<std::string> vocab;
  std::string model_id;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

// Canonical single-line encodings (keys sorted, no trailing newline).
std::string encode(const Request& r);
std::string encode(const Response& r);
Request decode_request(std::string_view line);
Response decode_response(std::string_view line);

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& doc);

nlohmann::json logprobs_to_json(std::span<const double> values);
std::vector<double> logprobs_from_json(const nlohmann::json& doc);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_line(const std::string& line) = 0;
  // Throws kModelUnavailable when the peer has gone away.
  virtual std::string read_line() = 0;
};

// Spawns `/bin/sh -c command` and talks over its stdin/stdout.
std::unique_ptr<Transport> spawn_process(const std::string& command);
std::unique_ptr<Transport> connect_tcp(const std::string& host, std::uint16_t port);

// "stdio:COMMAND" or "tcp:HOST:PORT".
std::unique_ptr<Transport> open_transport(std::string_view address);

// A language model served by a bridge process. Requests are serialized per
// connection; open several connections for parallel scoring.
class BridgeLM final : public LanguageModel {
 public:
  explicit BridgeLM(std::unique_ptr<Transport> transport);

  const Manifest& manifest() const noexcept { return manifest_; }

  const Vocab& vocab() const override { return vocab_; }
  const std::string& id() const override { return manifest_.model_id; }
  Capabilities capabilities() const override { return {false, false}; }
  std::optional<std::size_t> context_limit() const override { return manifest_.context_limit; }

  LogProbDist next_dist(std::span<const TokenId> context) const override;
  std::vector<double> score_sequence(std::span<const TokenId> prefix,
                                     std::span<const TokenId> target,
                                     ZeroProb zero = ZeroProb::kThrow) const override;
  TokenSeq tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> ids) const override;

 private:
  nlohmann::json call(Request request) const;

  std::unique_ptr<Transport> transport_;
  Manifest manifest_;
  Vocab vocab_;
  mutable std::mutex mu_;
  mutable std::uint64_t next_id_ = 1;
};

}  // namespace diver::bridge
