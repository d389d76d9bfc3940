#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grabnel/victim.hpp"

namespace grabnel {

/// Newline-delimited byte stream over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel() = default;
  /// Takes ownership of both descriptors (they may be the same socket).
  LineChannel(int read_fd, int write_fd);
  ~LineChannel();
  LineChannel(LineChannel&& other) noexcept;
  LineChannel& operator=(LineChannel&& other) noexcept;
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;

  /// Writes `line` plus '\n'. Throws ProtocolError if the peer has gone.
  void write_line(const std::string& line);

  /// Next line without its '\n'; nullopt at end of stream. A negative
  /// timeout waits forever; otherwise Timeout is thrown when it elapses.
  std::optional<std::string> read_line(int timeout_ms = -1);

  void close_write();
  void close();

 private:
  int read_fd_ = -1;
  int write_fd_ = -1;
  std::string buffer_;
};

/// Maps a graph to class scores (or logits). May throw; the message is sent back as an error reply.
using Scorer = std::function<std::vector<double>(const Graph&)>;

/// Reply line (without '\n') for one request line.
std::string handle_request_line(const std::string& line, const Scorer& scorer);

/// Request line (without '\n') for graph `g` under request id `id`.
std::string encode_request(std::int64_t id, const Graph& g);

/// Answers requests from `channel` until end of stream.
void serve_channel(LineChannel& channel, const Scorer& scorer);

/// Serves stdin/stdout.
void serve_stdio(const Scorer& scorer);

/// Listens on `port` (0 picks a free one, reported through on_listen) and
/// serves accepted connections one at a time; stops after max_connections when positive.
void serve_tcp(const Scorer& scorer, std::uint16_t port, const std::function<void(std::uint16_t)>& on_listen = {},
               int max_connections = 0);

struct ExternalVictimOptions {
  int timeout_ms = 30000;
  /// Replies carry logits, turned into probabilities locally.
  bool logits = false;
  double simplex_tolerance = 1e-3;
};

/// Victim reached over the wire protocol: a spawned process's stdio or a TCP peer.
class ExternalSession : public VictimSession {
 public:
  /// Runs `command` under /bin/sh -c with its stdin/stdout piped to the session.
  static std::unique_ptr<ExternalSession> spawn(const std::string& command, ExternalVictimOptions options = {});
  static std::unique_ptr<ExternalSession> connect(const std::string& host, std::uint16_t port,
                                                  ExternalVictimOptions options = {});

  ~ExternalSession() override;

 protected:
  VictimResponse do_query(const Graph& g) override;

 private:
  ExternalSession(LineChannel channel, int pid, ExternalVictimOptions options);

  LineChannel channel_;
  int pid_ = -1;
  ExternalVictimOptions options_;
  std::int64_t next_id_ = 0;
};

/// One conformance case: the exact request bytes and the reply bytes a
/// server wrapping the reference toy model must produce.
struct ProtocolFixture {
  std::string name;
  std::vector<std::string> requests;
  std::vector<std::string> responses;
};

/// Toy model used by the fixtures: scores [0.25, 0.75] for every graph.
std::vector<double> toy_model_scores(const Graph& g);

/// Deterministic conformance suite (including a 1000-request soak).
std::vector<ProtocolFixture> protocol_fixtures();

/// Writes <name>.requests.ndjson / <name>.responses.ndjson per fixture into `dir`.
void write_protocol_fixtures(const std::string& dir);

}  // namespace grabnel
