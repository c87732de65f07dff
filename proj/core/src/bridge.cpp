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

#include "diver/bridge.hpp"

#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace diver::bridge {

namespace {

nlohmann::json parse_line(std::string_view line) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bridge message: ") + e.what());
  }
}

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

// Line-oriented I/O over a pair of file descriptors (possibly the same one).
class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd) : write_fd_(write_fd) {
    in_ = ::fdopen(read_fd, "r");
    if (in_ == nullptr) throw Error(ErrorCode::kModelUnavailable, "fdopen failed");
  }

  ~FdTransport() override {
    if (write_fd_ >= 0 && (in_ == nullptr || write_fd_ != ::fileno(in_))) ::close(write_fd_);
    if (in_ != nullptr) std::fclose(in_);
  }

  FdTransport(const FdTransport&) = delete;
  FdTransport& operator=(const FdTransport&) = delete;

  void send_line(const std::string& line) override {
    std::string buf = line + '\n';
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(write_fd_, buf.data() + off, buf.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw Error(ErrorCode::kModelUnavailable, "bridge write failed");
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() override {
    std::string line;
    int c;
    while ((c = std::fgetc(in_)) != EOF) {
      if (c == '\n') return line;
      line.push_back(static_cast<char>(c));
    }
    throw Error(ErrorCode::kModelUnavailable, "bridge closed the connection");
  }

 protected:
  void close_write() {
    if (write_fd_ >= 0) ::close(write_fd_);
    write_fd_ = -1;
  }

 private:
  std::FILE* in_ = nullptr;
  int write_fd_ = -1;
};

class ProcessTransport final : public FdTransport {
 public:
  ProcessTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd), pid_(pid) {}

  ~ProcessTransport() override {
    close_write();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

}  // namespace

std::string encode(const Request& r) {
  nlohmann::json doc{{"op", r.op}, {"request_id", r.request_id}};
  if (const auto* ids = std::get_if<TokenSeq>(&r.context)) doc["context"] = *ids;
  if (const auto* text = std::get_if<std::string>(&r.context)) doc["context"] = *text;
  if (r.target) doc["target"] = *r.target;
  return doc.dump();
}

std::string encode(const Response& r) {
  nlohmann::json doc{{"request_id", r.request_id}, {"ok", r.ok}, {"payload", r.payload}};
  if (r.error) doc["error"] = *r.error;
  return doc.dump();
}

Request decode_request(std::string_view line) {
  const auto doc = parse_line(line);
  try {
    Request r;
    r.op = doc.at("op").get<std::string>();
    r.request_id = doc.at("request_id").get<std::uint64_t>();
    if (doc.contains("context")) {
      const auto& ctx = doc.at("context");
      if (ctx.is_string()) {
        r.context = ctx.get<std::string>();
      } else {
        r.context = ctx.get<TokenSeq>();
      }
    }
    if (doc.contains("target")) r.target = doc.at("target").get<TokenSeq>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bridge request: ") + e.what());
  }
}

Response decode_response(std::string_view line) {
  const auto doc = parse_line(line);
  try {
    Response r;
    r.request_id = doc.at("request_id").get<std::uint64_t>();
    r.ok = doc.at("ok").get<bool>();
    r.payload = doc.value("payload", nlohmann::json());
    if (doc.contains("error") && !doc.at("error").is_null()) {
      r.error = doc.at("error").get<std::string>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bridge response: ") + e.what());
  }
}

nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::json doc{{"v", m.version},
                     {"vocab_size", m.vocab_size},
                     {"eos_id", m.eos_id},
                     {"model_id", m.model_id}};
  if (m.bos_id) doc["bos_id"] = *m.bos_id;
  if (m.context_limit) doc["context_limit"] = *m.context_limit;
  if (!m.vocab.empty()) doc["vocab"] = m.vocab;
  return doc;
}

Manifest manifest_from_json(const nlohmann::json& doc) {
  try {
    Manifest m;
    m.version = doc.at("v").get<int>();
    m.vocab_size = doc.at("vocab_size").get<std::size_t>();
    m.eos_id = doc.at("eos_id").get<TokenId>();
    if (doc.contains("bos_id") && !doc.at("bos_id").is_null()) m.bos_id = doc.at("bos_id").get<TokenId>();
    if (doc.contains("context_limit") && !doc.at("context_limit").is_null()) {
      m.context_limit = doc.at("context_limit").get<std::size_t>();
    }
    m.vocab = doc.value("vocab", std::vector<std::string>{});
    m.model_id = doc.value("model_id", std::string("bridge"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bridge manifest: ") + e.what());
  }
}

nlohmann::json logprobs_to_json(std::span<const double> values) {
  auto arr = nlohmann::json::array();
  for (double v : values) {
    if (v == kNegInf) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(v);
    }
  }
  return arr;
}

std::vector<double> logprobs_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorCode::kParse, "log-probabilities must be an array");
  std::vector<double> out;
  out.reserve(doc.size());
  for (const auto& v : doc) {
    if (v.is_null()) {
      out.push_back(kNegInf);
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw Error(ErrorCode::kParse, "log-probability must be a number or null");
    }
  }
  return out;
}

std::unique_ptr<Transport> spawn_process(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw Error(ErrorCode::kModelUnavailable, "pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::kModelUnavailable, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kModelUnavailable, "fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ProcessTransport>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, std::uint16_t port) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0) {
    throw Error(ErrorCode::kModelUnavailable, "cannot resolve " + host);
  }
  int fd = -1;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw Error(ErrorCode::kModelUnavailable,
                "cannot connect to " + host + ":" + std::to_string(port));
  }
  return std::make_unique<FdTransport>(fd, fd);
}

std::unique_ptr<Transport> open_transport(std::string_view address) {
  if (address.starts_with("stdio:")) return spawn_process(std::string(address.substr(6)));
  if (address.starts_with("tcp:")) {
    const auto rest = address.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidArgument, "tcp address must be tcp:HOST:PORT");
    }
    int port = 0;
    try {
      port = std::stoi(std::string(rest.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad port in " + std::string(address));
    }
    if (port <= 0 || port > 65535) throw Error(ErrorCode::kInvalidArgument, "port out of range");
    return connect_tcp(std::string(rest.substr(0, colon)), static_cast<std::uint16_t>(port));
  }
  throw Error(ErrorCode::kInvalidArgument,
              "bridge address must start with stdio: or tcp:, got '" + std::string(address) + "'");
}

BridgeLM::BridgeLM(std::unique_ptr<Transport> transport) : transport_(std::move(transport)) {
  manifest_ = manifest_from_json(call(Request{"hello", 0, {}, {}}));
  if (manifest_.version != kProtocolVersion) {
    throw Error(ErrorCode::kModelUnavailable,
                "bridge speaks protocol v" + std::to_string(manifest_.version));
  }
  std::vector<std::string> tokens = manifest_.vocab;
  if (tokens.empty()) {
    for (std::size_t i = 0; i < manifest_.vocab_size; ++i) tokens.push_back("<" + std::to_string(i) + ">");
  }
  if (tokens.size() != manifest_.vocab_size) {
    throw Error(ErrorCode::kModelUnavailable, "manifest vocab does not match vocab_size");
  }
  vocab_ = Vocab(std::move(tokens), manifest_.eos_id, manifest_.bos_id);
}

nlohmann::json BridgeLM::call(Request request) const {
  std::lock_guard lock(mu_);
  request.request_id = next_id_++;
  transport_->send_line(encode(request));
  const Response response = decode_response(transport_->read_line());
  if (response.request_id != request.request_id) {
    throw Error(ErrorCode::kModelUnavailable, "bridge answered request " +
                                                  std::to_string(response.request_id) +
                                                  ", expected " + std::to_string(request.request_id));
  }
  if (!response.ok) {
    const std::string msg = response.error.value_or("unspecified bridge error");
    if (msg.starts_with("TokenizationMismatch")) throw Error(ErrorCode::kTokenizationMismatch, msg);
    throw Error(ErrorCode::kModelUnavailable, msg);
  }
  return response.payload;
}

LogProbDist BridgeLM::next_dist(std::span<const TokenId> context) const {
  check_context(context);
  auto values = logprobs_from_json(
      call(Request{"next_logprobs", 0, TokenSeq(context.begin(), context.end()), {}}));
  if (values.size() != vocab_.size()) {
    throw Error(ErrorCode::kModelUnavailable, "bridge returned a vector of the wrong size");
  }
  // Bridges compute in lower precision; renormalize in double.
  return LogProbDist::renormalized(std::move(values));
}

std::vector<double> BridgeLM::score_sequence(std::span<const TokenId> prefix,
                                             std::span<const TokenId> target,
                                             ZeroProb zero) const {
  if (target.empty()) throw Error(ErrorCode::kInvalidArgument, "score_sequence: empty target");
  check_context(prefix);
  vocab_.validate(target);
  auto values = logprobs_from_json(call(Request{"score_sequence", 0,
                                                TokenSeq(prefix.begin(), prefix.end()),
                                                TokenSeq(target.begin(), target.end())}));
  if (values.size() != target.size()) {
    throw Error(ErrorCode::kModelUnavailable, "bridge scored the wrong number of tokens");
  }
  if (zero == ZeroProb::kThrow) {
    for (double v : values) {
      if (v == kNegInf) throw Error(ErrorCode::kZeroProbToken, "target token has zero probability");
    }
  }
  return values;
}

TokenSeq BridgeLM::tokenize(std::string_view text) const {
  const auto result = call(Request{"tokenize", 0, std::string(text), {}});
  TokenSeq ids;
  try {
    ids = result.get<TokenSeq>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kParse, "tokenize result must be an array of token ids");
  }
  for (TokenId t : ids) {
    if (!vocab_.contains(t)) throw Error(ErrorCode::kModelUnavailable, "bridge token id out of range");
  }
  return ids;
}

std::string BridgeLM::detokenize(std::span<const TokenId> ids) const {
  const auto result = call(Request{"detokenize", 0, TokenSeq(ids.begin(), ids.end()), {}});
  if (!result.is_string()) throw Error(ErrorCode::kParse, "detokenize result must be a string");
  return result.get<std::string>();
}

}  // namespace diver::bridge
