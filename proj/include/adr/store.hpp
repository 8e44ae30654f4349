#pragma once

// Central store for the ADR boundaries (phi), the learner snapshot (theta),
// the training queue and the performance buffers, plus the socket server and
// client speaking the length-prefixed JSON wire protocol.
//
// Wire framing: a 4-byte big-endian unsigned length followed by that many
// bytes of UTF-8 JSON. Every request is an object with an "op" field; every
// reply carries "ok" and, on failure, "error".
//
//   {"op":"get_phi"}                       -> {"ok":true,"version":n,"phi_low":[..],"phi_high":[..]}
//   {"op":"put_phi","version":n,...}       -> {"ok":true,"accepted":bool}
//   {"op":"push_perf","dim":i,"side":"L"|"H","p":x}
//   {"op":"drain_perf"}                    -> {"ok":true,"records":[{"dim","side","p"}..]}
//   {"op":"push_rollout","rollout":{..}}
//   {"op":"drain_rollouts"}                -> {"ok":true,"records":[rollout..]}
//   {"op":"get_theta"}                     -> {"ok":true,"theta":snapshot|null}
//   {"op":"put_theta","theta":{..}}        -> {"ok":true,"accepted":bool}
//   {"op":"stats"}                         -> {"ok":true,"perf_pushed",..}

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "adr/adr_core.hpp"
#include "adr/learner.hpp"

namespace adr {

struct PhiSnapshot {
  std::uint64_t version = 0;
  std::vector<double> low;
  std::vector<double> high;

  friend bool operator==(const PhiSnapshot&, const PhiSnapshot&) = default;
};

PhiSnapshot phi_snapshot(const AdrDistribution& dist, std::uint64_t version);
/// Rebuilds the distribution using `like` for names and calibration values.
AdrDistribution distribution_from_snapshot(const AdrDistribution& like, const PhiSnapshot& s);

struct PerfRecord {
  std::size_t dim = 0;
  Side side = Side::Low;
  double p = 0.0;
};

struct StoreCounters {
  std::uint64_t perf_pushed = 0;
  std::uint64_t perf_drained = 0;
  std::uint64_t rollouts_pushed = 0;
  std::uint64_t rollouts_drained = 0;
  std::uint64_t phi_accepted = 0;
  std::uint64_t phi_rejected = 0;
  std::uint64_t theta_accepted = 0;
};

/// All operations are linearizable. Puts are compare-and-set on the version:
/// phi is accepted only as current + 1; theta only as current + 1, or at any
/// version while the store holds none.
class Store {
 public:
  virtual ~Store() = default;
  virtual PhiSnapshot get_phi() = 0;
  virtual bool put_phi(const PhiSnapshot& phi) = 0;
  virtual void push_perf(const PerfRecord& r) = 0;
  /// Atomically takes every pending record, in append order.
  virtual std::vector<PerfRecord> drain_perf() = 0;
  virtual void push_rollout(const Rollout& r) = 0;
  virtual std::vector<Rollout> drain_rollouts() = 0;
  virtual std::optional<LearnerSnapshot> get_theta() = 0;
  virtual bool put_theta(const LearnerSnapshot& theta) = 0;
  virtual StoreCounters counters() = 0;
};

class InProcessStore final : public Store {
 public:
  explicit InProcessStore(PhiSnapshot initial);

  PhiSnapshot get_phi() override;
  bool put_phi(const PhiSnapshot& phi) override;
  void push_perf(const PerfRecord& r) override;
  std::vector<PerfRecord> drain_perf() override;
  void push_rollout(const Rollout& r) override;
  std::vector<Rollout> drain_rollouts() override;
  std::optional<LearnerSnapshot> get_theta() override;
  bool put_theta(const LearnerSnapshot& theta) override;
  StoreCounters counters() override;

  /// Every accepted phi, oldest first.
  std::vector<PhiSnapshot> phi_history();

 private:
  std::mutex mu_;
  PhiSnapshot phi_;
  std::vector<PhiSnapshot> history_;
  std::vector<PerfRecord> perf_;
  std::vector<Rollout> rollouts_;
  std::optional<LearnerSnapshot> theta_;
  StoreCounters counters_;
};

// Wire codec.

std::string encode_frame(const nlohmann::json& message);
/// Parses one complete frame body. Throws ParseError on malformed JSON.
nlohmann::json decode_body(const std::string& body);

inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

/// Executes one request against `store`; never throws, errors become
/// {"ok":false,"error":...}.
nlohmann::json handle_request(Store& store, const nlohmann::json& request);

nlohmann::json to_json(const PerfRecord& r);
PerfRecord perf_record_from_json(const nlohmann::json& j);

/// Serves `backend` on 127.0.0.1 (or `bind_address`) with one thread per
/// connection.
class StoreServer {
 public:
  StoreServer(Store& backend, std::uint16_t port = 0, std::string bind_address = "127.0.0.1");
  ~StoreServer();
  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const noexcept { return port_; }

 private:
  void accept_loop();
  void serve(int fd);

  Store& backend_;
  std::uint16_t port_;
  std::string bind_address_;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex clients_mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> clients_;
};

/// Client side of the wire protocol over one TCP connection. Any transport
/// failure closes the connection and throws StoreUnavailable; the next call
/// reconnects.
class SocketStore final : public Store {
 public:
  SocketStore(std::string host, std::uint16_t port, int timeout_ms = 5000);
  ~SocketStore() override;

  PhiSnapshot get_phi() override;
  bool put_phi(const PhiSnapshot& phi) override;
  void push_perf(const PerfRecord& r) override;
  std::vector<PerfRecord> drain_perf() override;
  void push_rollout(const Rollout& r) override;
  std::vector<Rollout> drain_rollouts() override;
  std::optional<LearnerSnapshot> get_theta() override;
  bool put_theta(const LearnerSnapshot& theta) override;
  StoreCounters counters() override;

  nlohmann::json call(const nlohmann::json& request);

 private:
  void connect_locked();
  void close_locked();

  std::string host_;
  std::uint16_t port_;
  int timeout_ms_;
  std::mutex mu_;
  int fd_ = -1;
};

}  // namespace adr
