#include "adr/adr_core.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "adr/errors.hpp"

namespace adr {

void AdrConfig::validate() const {
  if (!(threshold_low < threshold_high)) {
    throw ConfigError("threshold_low must be below threshold_high");
  }
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw ConfigError("step_size must be positive");
  }
  if (buffer_size < 1) throw ConfigError("buffer_size must be at least 1");
  if (!(phi_max > 0.0) || !std::isfinite(phi_max)) throw ConfigError("phi_max must be positive");
  if (!(boundary_prob >= 0.0 && boundary_prob <= 1.0)) {
    throw ConfigError("boundary_prob must lie in [0, 1]");
  }
}

std::string_view side_tag(Side side) { return side == Side::Low ? "L" : "H"; }

Side parse_side(std::string_view tag) {
  if (tag == "L") return Side::Low;
  if (tag == "H") return Side::High;
  throw DataError("side must be \"L\" or \"H\", got \"" + std::string(tag) + "\"");
}

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::Expand:
      return "expand";
    case Decision::Shrink:
      return "shrink";
    case Decision::NoChange:
      break;
  }
  return "none";
}

AdrDistribution::AdrDistribution(std::vector<RandomizationDimension> dims,
                                 std::vector<double> low, std::vector<double> high)
    : dims_(std::move(dims)), low_(std::move(low)), high_(std::move(high)) {
  if (low_.size() != dims_.size() || high_.size() != dims_.size()) {
    throw ContractError("boundary vectors must match the number of dimensions");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (!seen.insert(dims_[i].name).second) {
      throw ConfigError("duplicate randomization dimension '" + dims_[i].name + "'");
    }
    const double c = dims_[i].calib_value;
    if (!std::isfinite(c) || !std::isfinite(low_[i]) || !std::isfinite(high_[i])) {
      throw ConfigError("non-finite boundary for '" + dims_[i].name + "'");
    }
    if (!(low_[i] <= c && c <= high_[i])) {
      throw ContractError("calibration value of '" + dims_[i].name + "' lies outside its range");
    }
  }
}

std::vector<double> AdrDistribution::calibration() const {
  std::vector<double> out;
  out.reserve(dims_.size());
  for (const auto& d : dims_) out.push_back(d.calib_value);
  return out;
}

std::optional<std::size_t> AdrDistribution::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].name == name) return i;
  }
  return std::nullopt;
}

void AdrDistribution::set_bound(std::size_t i, Side side, double value) {
  const double c = calib(i);
  if (side == Side::Low) {
    if (!(value <= c)) throw ContractError("lower boundary may not exceed the calibration value");
    low_[i] = value;
  } else {
    if (!(value >= c)) throw ContractError("upper boundary may not fall below the calibration value");
    high_[i] = value;
  }
}

bool operator==(const AdrDistribution& a, const AdrDistribution& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.dims_[i].name != b.dims_[i].name || a.dims_[i].calib_value != b.dims_[i].calib_value) {
      return false;
    }
  }
  return a.low_ == b.low_ && a.high_ == b.high_;
}

AdrDistribution init_from_calibration(std::vector<RandomizationDimension> dims) {
  if (dims.empty()) throw ConfigError("at least one randomization dimension is required");
  std::vector<double> calib;
  calib.reserve(dims.size());
  for (const auto& d : dims) calib.push_back(d.calib_value);
  return AdrDistribution(std::move(dims), calib, calib);
}

AdrDistribution init_from_calibration(std::vector<RandomizationDimension> dims,
                                      const AdrConfig& config) {
  config.validate();
  for (const auto& d : dims) {
    if (std::abs(d.calib_value) > config.phi_max) {
      throw ConfigError("calibration value of '" + d.name + "' exceeds phi_max");
    }
  }
  return init_from_calibration(std::move(dims));
}

double entropy(const AdrDistribution& dist) {
  if (dist.size() == 0) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const double w = dist.width(i);
    if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
    sum += std::log(w);
  }
  return sum / static_cast<double>(dist.size());
}

std::vector<double> sample_lambda(const AdrDistribution& dist, RandomSource& rng) {
  std::vector<double> lambda(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    lambda[i] = rng.uniform(dist.low(i), dist.high(i));
  }
  return lambda;
}

BoundarySample boundary_sample(const AdrDistribution& dist, RandomSource& rng) {
  if (dist.size() == 0) throw ContractError("boundary sampling needs at least one dimension");
  BoundarySample s;
  s.lambda = sample_lambda(dist, rng);
  s.dim_index = rng.index(dist.size());
  const double x = rng.uniform01();
  s.side = x < 0.5 ? Side::Low : Side::High;
  s.lambda[s.dim_index] = dist.bound(s.dim_index, s.side);
  return s;
}

std::size_t PerformanceBuffers::total() const {
  std::size_t n = 0;
  for (const auto& q : queues_) n += q.size();
  return n;
}

std::optional<BoundaryUpdate> record_performance(PerformanceBuffers& buffers,
                                                 const AdrConfig& config, std::size_t dim_index,
                                                 Side side, double p, AdrDistribution& dist) {
  if (!std::isfinite(p)) throw DataError("performance must be finite");
  if (dim_index >= dist.size() || dim_index >= buffers.dims()) {
    throw ContractError("dimension index out of range");
  }
  auto& queue = buffers.values(dim_index, side);
  queue.push_back(p);
  if (queue.size() < config.buffer_size) return std::nullopt;

  const double mean =
      std::accumulate(queue.begin(), queue.end(), 0.0) / static_cast<double>(queue.size());
  queue.clear();

  BoundaryUpdate update;
  update.dim_index = dim_index;
  update.side = side;
  update.old_value = dist.bound(dim_index, side);
  update.new_value = update.old_value;
  update.mean_performance = mean;

  const double calib = dist.calib(dim_index);
  if (mean >= config.threshold_high) {
    update.decision = Decision::Expand;
    update.new_value = side == Side::Low
                           ? std::max(update.old_value - config.step_size, -config.phi_max)
                           : std::min(update.old_value + config.step_size, config.phi_max);
    // Never pull a boundary back toward calibration because of the cap.
    update.new_value = side == Side::Low ? std::min(update.new_value, update.old_value)
                                         : std::max(update.new_value, update.old_value);
  } else if (mean <= config.threshold_low) {
    update.decision = Decision::Shrink;
    update.new_value = side == Side::Low ? std::min(update.old_value + config.step_size, calib)
                                         : std::max(update.old_value - config.step_size, calib);
  } else {
    update.decision = Decision::NoChange;
  }
  dist.set_bound(dim_index, side, update.new_value);
  return update;
}

nlohmann::json entropy_to_json(double h) {
  if (std::isfinite(h)) return h;
  return nullptr;
}

double entropy_from_json(const nlohmann::json& j) {
  if (j.is_null()) return -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

nlohmann::json boundary_update_record(std::uint64_t step, const AdrDistribution& dist,
                                      const BoundaryUpdate& update) {
  nlohmann::json j;
  j["t"] = step;
  j["dim"] = dist.dims().at(update.dim_index).name;
  j["side"] = side_tag(update.side);
  j["old"] = update.old_value;
  j["new"] = update.new_value;
  j["mean_p"] = update.mean_performance;
  j["entropy_npd"] = entropy_to_json(entropy(dist));
  return j;
}

nlohmann::json distribution_record(std::uint64_t step, std::uint64_t version,
                                   const AdrDistribution& dist) {
  nlohmann::json names = nlohmann::json::array();
  for (const auto& d : dist.dims()) names.push_back(d.name);
  nlohmann::json j;
  j["type"] = "phi";
  j["t"] = step;
  j["version"] = version;
  j["dims"] = std::move(names);
  j["calib"] = dist.calibration();
  j["phi_low"] = std::vector<double>(dist.low().begin(), dist.low().end());
  j["phi_high"] = std::vector<double>(dist.high().begin(), dist.high().end());
  j["entropy_npd"] = entropy_to_json(entropy(dist));
  return j;
}

AdrDistribution distribution_from_record(const nlohmann::json& record) {
  try {
    const auto names = record.at("dims").get<std::vector<std::string>>();
    const auto calib = record.at("calib").get<std::vector<double>>();
    if (calib.size() != names.size()) throw DataError("calib length differs from dims");
    std::vector<RandomizationDimension> dims;
    for (std::size_t i = 0; i < names.size(); ++i) dims.push_back({names[i], calib[i], {}});
    return AdrDistribution(std::move(dims), record.at("phi_low").get<std::vector<double>>(),
                           record.at("phi_high").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed distribution record: ") + e.what());
  }
}

}  // namespace adr
