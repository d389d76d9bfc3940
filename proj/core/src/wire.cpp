#include "grabnel/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <random>
#include <thread>

#include "grabnel/errors.hpp"
#include "json_internal.hpp"

namespace grabnel {

using detail::ordered_json;

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

LineChannel::LineChannel(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}

LineChannel::~LineChannel() { close(); }

LineChannel::LineChannel(LineChannel&& other) noexcept
    : read_fd_(other.read_fd_), write_fd_(other.write_fd_), buffer_(std::move(other.buffer_)) {
  other.read_fd_ = other.write_fd_ = -1;
}

LineChannel& LineChannel::operator=(LineChannel&& other) noexcept {
  if (this != &other) {
    close();
    read_fd_ = other.read_fd_;
    write_fd_ = other.write_fd_;
    buffer_ = std::move(other.buffer_);
    other.read_fd_ = other.write_fd_ = -1;
  }
  return *this;
}

void LineChannel::write_line(const std::string& line) {
  if (write_fd_ < 0) throw ProtocolError("channel is closed for writing");
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t k = ::write(write_fd_, data.data() + sent, data.size() - sent);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(errno_text("write to victim failed"));
    }
    sent += static_cast<std::size_t>(k);
  }
}

std::optional<std::string> LineChannel::read_line(int timeout_ms) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::milliseconds(std::max(timeout_ms, 0));
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (read_fd_ < 0) return std::nullopt;
    int wait = -1;
    if (timeout_ms >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (left <= 0) throw Timeout("no reply within " + std::to_string(timeout_ms) + " ms");
      wait = static_cast<int>(left);
    }
    pollfd pfd{read_fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, wait);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(errno_text("poll failed"));
    }
    if (ready == 0) throw Timeout("no reply within " + std::to_string(timeout_ms) + " ms");
    char chunk[4096];
    const ssize_t k = ::read(read_fd_, chunk, sizeof chunk);
    if (k < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(errno_text("read failed"));
    }
    if (k == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(k));
  }
}

void LineChannel::close_write() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (write_fd_ >= 0 && write_fd_ == read_fd_) ::shutdown(write_fd_, SHUT_WR);
  write_fd_ = -1;
}

void LineChannel::close() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
  read_fd_ = write_fd_ = -1;
}

std::string encode_request(std::int64_t id, const Graph& g) {
  ordered_json req;
  req["id"] = id;
  req["graph"] = detail::graph_to_value(g);
  return req.dump();
}

std::string handle_request_line(const std::string& line, const Scorer& scorer) {
  ordered_json reply;
  ordered_json req;
  try {
    req = detail::parse_json(line);
  } catch (const DecodeError&) {
    // Fixed text: parser diagnostics differ between implementations of the protocol.
    reply["id"] = nullptr;
    reply["error"] = "malformed JSON";
    return reply.dump();
  }
  if (!req.is_object() || !req.contains("id") || !req["id"].is_number_integer()) {
    reply["id"] = nullptr;
    reply["error"] = "request needs an integer id";
    return reply.dump();
  }
  reply["id"] = req["id"];
  try {
    const Graph g = detail::value_to_graph(detail::member(req, "graph", ""), "/graph");
    reply["scores"] = scorer(g);
  } catch (const std::exception& e) {
    reply.erase("scores");
    reply["error"] = e.what();
  }
  return reply.dump();
}

void serve_channel(LineChannel& channel, const Scorer& scorer) {
  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    channel.write_line(handle_request_line(*line, scorer));
  }
}

void serve_stdio(const Scorer& scorer) {
  ignore_sigpipe();
  LineChannel channel(::dup(STDIN_FILENO), ::dup(STDOUT_FILENO));
  serve_channel(channel, scorer);
}

void serve_tcp(const Scorer& scorer, std::uint16_t port, const std::function<void(std::uint16_t)>& on_listen,
               int max_connections) {
  ignore_sigpipe();
  const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) throw ProtocolError(errno_text("socket"));
  const int yes = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listener, 4) < 0) {
    const std::string msg = errno_text("bind/listen");
    ::close(listener);
    throw ProtocolError(msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));
  for (int served = 0; max_connections <= 0 || served < max_connections; ++served) {
    const int fd = ::accept(listener, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      ::close(listener);
      throw ProtocolError(errno_text("accept"));
    }
    LineChannel channel(fd, fd);
    try {
      serve_channel(channel, scorer);
    } catch (const ProtocolError&) {
      // Peer vanished mid-reply; keep serving others.
    }
  }
  ::close(listener);
}

ExternalSession::ExternalSession(LineChannel channel, int pid, ExternalVictimOptions options)
    : channel_(std::move(channel)), pid_(pid), options_(options) {}

ExternalSession::~ExternalSession() {
  channel_.close();
  if (pid_ <= 0) return;
  for (int i = 0; i < 200; ++i) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGKILL);
  ::waitpid(pid_, nullptr, 0);
}

std::unique_ptr<ExternalSession> ExternalSession::spawn(const std::string& command, ExternalVictimOptions options) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) < 0) throw ProtocolError(errno_text("pipe"));
  if (::pipe2(from_child, O_CLOEXEC) < 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ProtocolError(errno_text("pipe"));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw ProtocolError(errno_text("fork"));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::unique_ptr<ExternalSession>(
      new ExternalSession(LineChannel(from_child[0], to_child[1]), pid, options));
}

std::unique_ptr<ExternalSession> ExternalSession::connect(const std::string& host, std::uint16_t port,
                                                          ExternalVictimOptions options) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw ProtocolError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) throw ProtocolError("cannot connect to " + host + ":" + service);
  return std::unique_ptr<ExternalSession>(new ExternalSession(LineChannel(fd, fd), -1, options));
}

VictimResponse ExternalSession::do_query(const Graph& g) {
  const std::int64_t id = next_id_++;
  channel_.write_line(encode_request(id, g));
  const auto line = channel_.read_line(options_.timeout_ms);
  if (!line) throw ProtocolError("victim closed the stream before replying to request " + std::to_string(id));
  ordered_json reply;
  try {
    reply = detail::parse_json(*line);
  } catch (const DecodeError& e) {
    throw ProtocolError(std::string("malformed reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_integer()) {
    throw ProtocolError("reply lacks an integer id");
  }
  if (reply["id"].get<std::int64_t>() != id) {
    throw ProtocolError("reply id " + reply["id"].dump() + " does not match request id " + std::to_string(id));
  }
  if (reply.contains("error")) {
    throw RemoteError("victim error: " + (reply["error"].is_string() ? reply["error"].get<std::string>()
                                                                     : reply["error"].dump()));
  }
  if (!reply.contains("scores") || !reply["scores"].is_array()) throw ProtocolError("reply lacks a scores array");
  std::vector<double> scores;
  for (const auto& s : reply["scores"]) {
    if (!s.is_number()) throw ProtocolError("non-numeric score in reply");
    scores.push_back(s.get<double>());
  }
  if (options_.logits) scores = softmax(scores);
  return validate_scores(std::move(scores), options_.simplex_tolerance);
}

std::vector<double> toy_model_scores(const Graph&) { return {0.25, 0.75}; }

namespace {

Graph fixture_graph(std::uint64_t state) {
  // splitmix64: identical on every platform, unlike std distributions.
  auto next = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::size_t n = 1 + next() % 8;
  std::vector<Edge> edges;
  for (NodeId u = 0; u < static_cast<NodeId>(n); ++u) {
    for (NodeId v = u + 1; v < static_cast<NodeId>(n); ++v) {
      if (next() % 3 == 0) edges.push_back({u, v});
    }
  }
  DiscreteLabels labels(n);
  for (auto& l : labels) l = static_cast<std::int64_t>(next() % 3);
  return Graph(n, edges, labels);
}

ProtocolFixture make_fixture(std::string name, std::vector<std::string> requests) {
  ProtocolFixture f{std::move(name), std::move(requests), {}};
  for (const auto& r : f.requests) f.responses.push_back(handle_request_line(r, toy_model_scores));
  return f;
}

}  // namespace

std::vector<ProtocolFixture> protocol_fixtures() {
  std::vector<ProtocolFixture> out;

  const Graph triangle(3, {{0, 1}, {1, 2}, {0, 2}}, DiscreteLabels{0, 1, 0});
  const Graph weighted = Graph::weighted(3, {{0, 1}, {1, 2}}, {0.5, 2.0}, DiscreteLabels{0, 0, 1});
  const Graph continuous(2, {{0, 1}}, ContinuousFeatures{2, {0.1, -1.5, 3.0, 0.0}});
  const Graph isolated = Graph::unlabeled(4, {});
  out.push_back(make_fixture("basic", {encode_request(0, triangle), encode_request(1, weighted),
                                       encode_request(2, continuous), encode_request(3, isolated)}));

  out.push_back(make_fixture(
      "errors", {"{not json", R"({"id":"seven","graph":{}})", R"({"id":5})",
                 R"({"id":6,"graph":{"num_nodes":2,"edges":[[0,0]],"node_labels":[0,0]}})",
                 R"({"id":7,"graph":{"num_nodes":2,"edges":[[0,1]],"node_labels":[0]}})", encode_request(8, triangle)}));

  std::vector<std::string> soak;
  for (std::int64_t id = 0; id < 1000; ++id) soak.push_back(encode_request(id, fixture_graph(static_cast<std::uint64_t>(id))));
  out.push_back(make_fixture("soak", std::move(soak)));
  return out;
}

void write_protocol_fixtures(const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : protocol_fixtures()) {
    std::string req;
    std::string resp;
    for (const auto& r : f.requests) req += r + "\n";
    for (const auto& r : f.responses) resp += r + "\n";
    detail::write_file((std::filesystem::path(dir) / (f.name + ".requests.ndjson")).string(), req);
    detail::write_file((std::filesystem::path(dir) / (f.name + ".responses.ndjson")).string(), resp);
  }
}

}  // namespace grabnel
