#include "adr/store.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

#include "adr/errors.hpp"

namespace adr {

PhiSnapshot phi_snapshot(const AdrDistribution& dist, std::uint64_t version) {
  return {version, {dist.low().begin(), dist.low().end()}, {dist.high().begin(), dist.high().end()}};
}

AdrDistribution distribution_from_snapshot(const AdrDistribution& like, const PhiSnapshot& s) {
  return AdrDistribution(like.dims(), s.low, s.high);
}

// ---------------------------------------------------------------------------

InProcessStore::InProcessStore(PhiSnapshot initial) : phi_(std::move(initial)) {
  history_.push_back(phi_);
}

PhiSnapshot InProcessStore::get_phi() {
  std::lock_guard lock(mu_);
  return phi_;
}

bool InProcessStore::put_phi(const PhiSnapshot& phi) {
  std::lock_guard lock(mu_);
  if (phi.version != phi_.version + 1 || phi.low.size() != phi_.low.size() ||
      phi.high.size() != phi_.high.size()) {
    ++counters_.phi_rejected;
    return false;
  }
  phi_ = phi;
  history_.push_back(phi);
  ++counters_.phi_accepted;
  return true;
}

void InProcessStore::push_perf(const PerfRecord& r) {
  std::lock_guard lock(mu_);
  perf_.push_back(r);
  ++counters_.perf_pushed;
}

std::vector<PerfRecord> InProcessStore::drain_perf() {
  std::vector<PerfRecord> out;
  std::lock_guard lock(mu_);
  out.swap(perf_);
  counters_.perf_drained += out.size();
  return out;
}

void InProcessStore::push_rollout(const Rollout& r) {
  std::lock_guard lock(mu_);
  rollouts_.push_back(r);
  ++counters_.rollouts_pushed;
}

std::vector<Rollout> InProcessStore::drain_rollouts() {
  std::vector<Rollout> out;
  std::lock_guard lock(mu_);
  out.swap(rollouts_);
  counters_.rollouts_drained += out.size();
  return out;
}

std::optional<LearnerSnapshot> InProcessStore::get_theta() {
  std::lock_guard lock(mu_);
  return theta_;
}

bool InProcessStore::put_theta(const LearnerSnapshot& theta) {
  std::lock_guard lock(mu_);
  if (theta_ && theta.version != theta_->version + 1) return false;
  theta_ = theta;
  ++counters_.theta_accepted;
  return true;
}

StoreCounters InProcessStore::counters() {
  std::lock_guard lock(mu_);
  return counters_;
}

std::vector<PhiSnapshot> InProcessStore::phi_history() {
  std::lock_guard lock(mu_);
  return history_;
}

// ---------------------------------------------------------------------------

std::string encode_frame(const nlohmann::json& message) {
  const std::string body = message.dump();
  if (body.size() > kMaxFrameBytes) throw ContractError("message exceeds the frame limit");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out(4, '\0');
  out[0] = static_cast<char>((n >> 24) & 0xff);
  out[1] = static_cast<char>((n >> 16) & 0xff);
  out[2] = static_cast<char>((n >> 8) & 0xff);
  out[3] = static_cast<char>(n & 0xff);
  return out + body;
}

nlohmann::json decode_body(const std::string& body) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed frame body", e.byte);
  }
}

nlohmann::json to_json(const PerfRecord& r) {
  return {{"dim", r.dim}, {"side", side_tag(r.side)}, {"p", r.p}};
}

PerfRecord perf_record_from_json(const nlohmann::json& j) {
  try {
    return {j.at("dim").get<std::size_t>(), parse_side(j.at("side").get<std::string>()),
            j.at("p").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed perf record: ") + e.what());
  }
}

namespace {

nlohmann::json phi_json(const PhiSnapshot& s) {
  return {{"version", s.version}, {"phi_low", s.low}, {"phi_high", s.high}};
}

PhiSnapshot phi_from_json(const nlohmann::json& j) {
  return {j.at("version").get<std::uint64_t>(), j.at("phi_low").get<std::vector<double>>(),
          j.at("phi_high").get<std::vector<double>>()};
}

nlohmann::json counters_json(const StoreCounters& c) {
  return {{"perf_pushed", c.perf_pushed},         {"perf_drained", c.perf_drained},
          {"rollouts_pushed", c.rollouts_pushed}, {"rollouts_drained", c.rollouts_drained},
          {"phi_accepted", c.phi_accepted},       {"phi_rejected", c.phi_rejected},
          {"theta_accepted", c.theta_accepted}};
}

StoreCounters counters_from_json(const nlohmann::json& j) {
  StoreCounters c;
  c.perf_pushed = j.at("perf_pushed").get<std::uint64_t>();
  c.perf_drained = j.at("perf_drained").get<std::uint64_t>();
  c.rollouts_pushed = j.at("rollouts_pushed").get<std::uint64_t>();
  c.rollouts_drained = j.at("rollouts_drained").get<std::uint64_t>();
  c.phi_accepted = j.at("phi_accepted").get<std::uint64_t>();
  c.phi_rejected = j.at("phi_rejected").get<std::uint64_t>();
  c.theta_accepted = j.at("theta_accepted").get<std::uint64_t>();
  return c;
}

}  // namespace

nlohmann::json handle_request(Store& store, const nlohmann::json& request) {
  using nlohmann::json;
  try {
    if (!request.is_object() || !request.contains("op")) throw DataError("request needs an op");
    const auto op = request.at("op").get<std::string>();
    json reply{{"ok", true}};
    if (op == "get_phi") {
      reply.update(phi_json(store.get_phi()));
    } else if (op == "put_phi") {
      reply["accepted"] = store.put_phi(phi_from_json(request));
    } else if (op == "push_perf") {
      store.push_perf(perf_record_from_json(request));
    } else if (op == "drain_perf") {
      json recs = json::array();
      for (const auto& r : store.drain_perf()) recs.push_back(to_json(r));
      reply["records"] = std::move(recs);
    } else if (op == "push_rollout") {
      store.push_rollout(rollout_from_json(request.at("rollout")));
    } else if (op == "drain_rollouts") {
      json recs = json::array();
      for (const auto& r : store.drain_rollouts()) recs.push_back(to_json(r));
      reply["records"] = std::move(recs);
    } else if (op == "get_theta") {
      const auto t = store.get_theta();
      reply["theta"] = t ? to_json(*t) : json(nullptr);
    } else if (op == "put_theta") {
      reply["accepted"] = store.put_theta(learner_snapshot_from_json(request.at("theta")));
    } else if (op == "stats") {
      reply.update(counters_json(store.counters()));
    } else {
      throw DataError("unknown op '" + op + "'");
    }
    return reply;
  } catch (const std::exception& e) {
    return {{"ok", false}, {"error", e.what()}};
  }
}

// ---------------------------------------------------------------------------

namespace {

bool write_all(int fd, const char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) return false;
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

bool read_all(int fd, char* data, std::size_t n) {
  while (n > 0) {
    const ssize_t r = ::recv(fd, data, n, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    data += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

// Empty optional on a clean or broken close.
std::optional<std::string> read_frame(int fd) {
  unsigned char h[4];
  if (!read_all(fd, reinterpret_cast<char*>(h), 4)) return std::nullopt;
  const std::uint32_t n = (std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) |
                          (std::uint32_t{h[2]} << 8) | std::uint32_t{h[3]};
  if (n > kMaxFrameBytes) return std::nullopt;
  std::string body(n, '\0');
  if (n > 0 && !read_all(fd, body.data(), n)) return std::nullopt;
  return body;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

StoreServer::StoreServer(Store& backend, std::uint16_t port, std::string bind_address)
    : backend_(backend), port_(port), bind_address_(std::move(bind_address)) {}

StoreServer::~StoreServer() { stop(); }

void StoreServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw StoreUnavailable(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigError("bad bind address '" + bind_address_ + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    throw StoreUnavailable("cannot listen on port " + std::to_string(port_) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void StoreServer::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    set_nodelay(fd);
    std::lock_guard lock(clients_mu_);
    client_fds_.push_back(fd);
    clients_.emplace_back([this, fd] { serve(fd); });
  }
}

void StoreServer::serve(int fd) {
  while (running_) {
    const auto body = read_frame(fd);
    if (!body) break;
    nlohmann::json reply;
    try {
      reply = handle_request(backend_, decode_body(*body));
    } catch (const ParseError& e) {
      reply = {{"ok", false}, {"error", e.what()}};
    }
    const auto frame = encode_frame(reply);
    if (!write_all(fd, frame.data(), frame.size())) break;
  }
  ::shutdown(fd, SHUT_RDWR);
}

void StoreServer::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(clients_mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(clients_);
  }
  for (auto& t : threads) t.join();
  std::lock_guard lock(clients_mu_);
  for (int fd : client_fds_) ::close(fd);
  client_fds_.clear();
}

// ---------------------------------------------------------------------------

SocketStore::SocketStore(std::string host, std::uint16_t port, int timeout_ms)
    : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {}

SocketStore::~SocketStore() {
  std::lock_guard lock(mu_);
  close_locked();
}

void SocketStore::close_locked() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void SocketStore::connect_locked() {
  if (fd_ >= 0) return;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), service.c_str(), &hints, &res) != 0 || !res) {
    throw StoreUnavailable("cannot resolve " + host_);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw StoreUnavailable("socket failed");
  }
  timeval tv{timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
  const int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) {
    ::close(fd);
    throw StoreUnavailable("cannot connect to " + host_ + ":" + service);
  }
  set_nodelay(fd);
  fd_ = fd;
}

nlohmann::json SocketStore::call(const nlohmann::json& request) {
  std::lock_guard lock(mu_);
  connect_locked();
  const auto frame = encode_frame(request);
  if (!write_all(fd_, frame.data(), frame.size())) {
    close_locked();
    throw StoreUnavailable("store connection lost while sending");
  }
  const auto body = read_frame(fd_);
  if (!body) {
    close_locked();
    throw StoreUnavailable("store connection lost while receiving");
  }
  auto reply = decode_body(*body);
  if (!reply.value("ok", false)) {
    throw DataError("store rejected request: " + reply.value("error", std::string("unknown")));
  }
  return reply;
}

PhiSnapshot SocketStore::get_phi() { return phi_from_json(call({{"op", "get_phi"}})); }

bool SocketStore::put_phi(const PhiSnapshot& phi) {
  auto req = phi_json(phi);
  req["op"] = "put_phi";
  return call(req).at("accepted").get<bool>();
}

void SocketStore::push_perf(const PerfRecord& r) {
  auto req = to_json(r);
  req["op"] = "push_perf";
  call(req);
}

std::vector<PerfRecord> SocketStore::drain_perf() {
  std::vector<PerfRecord> out;
  const auto reply = call({{"op", "drain_perf"}});
  for (const auto& r : reply.at("records")) {
    out.push_back(perf_record_from_json(r));
  }
  return out;
}

void SocketStore::push_rollout(const Rollout& r) {
  call({{"op", "push_rollout"}, {"rollout", to_json(r)}});
}

std::vector<Rollout> SocketStore::drain_rollouts() {
  std::vector<Rollout> out;
  const auto reply = call({{"op", "drain_rollouts"}});
  for (const auto& r : reply.at("records")) {
    out.push_back(rollout_from_json(r));
  }
  return out;
}

std::optional<LearnerSnapshot> SocketStore::get_theta() {
  const auto reply = call({{"op", "get_theta"}});
  if (reply.at("theta").is_null()) return std::nullopt;
  return learner_snapshot_from_json(reply.at("theta"));
}

bool SocketStore::put_theta(const LearnerSnapshot& theta) {
  return call({{"op", "put_theta"}, {"theta", to_json(theta)}}).at("accepted").get<bool>();
}

StoreCounters SocketStore::counters() { return counters_from_json(call({{"op", "stats"}})); }

}  // namespace adr
