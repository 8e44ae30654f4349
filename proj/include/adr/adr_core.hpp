#pragma once

// Automatic domain randomization: the boundary distribution, its entropy,
// boundary sampling, and the threshold-driven range update.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adr/random.hpp"

namespace adr {

struct RandomizationDimension {
  std::string name;
  double calib_value = 0.0;
  std::string description;
};

struct AdrConfig {
  double step_size = 0.02;
  double threshold_low = 10.0;
  double threshold_high = 20.0;
  std::size_t buffer_size = 240;
  double boundary_prob = 0.5;
  double phi_max = 4.0;

  /// Throws ConfigError unless t_L < t_H, step_size > 0, buffer_size >= 1,
  /// phi_max > 0 and boundary_prob lies in [0, 1].
  void validate() const;
};

enum class Side : std::uint8_t { Low, High };

std::string_view side_tag(Side side);  // "L" or "H"
Side parse_side(std::string_view tag);

/// Factorized uniform distribution over environment parameters.
///
/// Dimension `i` is sampled from U(low[i], high[i]); both ends are included.
/// Every instance keeps low[i] <= calib[i] <= high[i].
class AdrDistribution {
 public:
  AdrDistribution() = default;
  AdrDistribution(std::vector<RandomizationDimension> dims, std::vector<double> low,
                  std::vector<double> high);

  std::size_t size() const noexcept { return dims_.size(); }
  const std::vector<RandomizationDimension>& dims() const noexcept { return dims_; }
  std::span<const double> low() const noexcept { return low_; }
  std::span<const double> high() const noexcept { return high_; }

  double low(std::size_t i) const { return low_.at(i); }
  double high(std::size_t i) const { return high_.at(i); }
  double bound(std::size_t i, Side side) const { return side == Side::Low ? low(i) : high(i); }
  double width(std::size_t i) const { return high(i) - low(i); }
  double calib(std::size_t i) const { return dims_.at(i).calib_value; }
  std::vector<double> calibration() const;

  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Moves one boundary. Throws ContractError if the result would leave the
  /// calibration point outside [low, high].
  void set_bound(std::size_t i, Side side, double value);

  friend bool operator==(const AdrDistribution&, const AdrDistribution&);

 private:
  std::vector<RandomizationDimension> dims_;
  std::vector<double> low_;
  std::vector<double> high_;
};

bool operator==(const AdrDistribution& a, const AdrDistribution& b);

/// Zero-width distribution centred on each dimension's calibration value.
AdrDistribution init_from_calibration(std::vector<RandomizationDimension> dims);

/// As above, additionally rejecting calibration values outside [-phi_max, phi_max].
AdrDistribution init_from_calibration(std::vector<RandomizationDimension> dims,
                                      const AdrConfig& config);

/// Mean log-width in nats per dimension. Any zero-width dimension yields -infinity.
double entropy(const AdrDistribution& dist);

std::vector<double> sample_lambda(const AdrDistribution& dist, RandomSource& rng);

struct BoundarySample {
  std::vector<double> lambda;
  std::size_t dim_index = 0;
  Side side = Side::Low;
};

/// Samples lambda from the distribution, then pins one uniformly chosen
/// dimension to its lower (x < 0.5) or upper boundary.
BoundarySample boundary_sample(const AdrDistribution& dist, RandomSource& rng);

enum class Decision : std::uint8_t { Expand, Shrink, NoChange };

std::string_view decision_name(Decision d);

struct BoundaryUpdate {
  std::size_t dim_index = 0;
  Side side = Side::Low;
  double old_value = 0.0;
  double new_value = 0.0;
  double mean_performance = 0.0;
  Decision decision = Decision::NoChange;
};

/// Per-(dimension, side) queues of episode performances.
class PerformanceBuffers {
 public:
  PerformanceBuffers() = default;
  explicit PerformanceBuffers(std::size_t dims) : queues_(2 * dims) {}

  std::size_t dims() const noexcept { return queues_.size() / 2; }
  const std::deque<double>& values(std::size_t dim, Side side) const {
    return queues_.at(slot(dim, side));
  }
  std::deque<double>& values(std::size_t dim, Side side) { return queues_.at(slot(dim, side)); }

  /// Number of performances currently held across all buffers.
  std::size_t total() const;

 private:
  static std::size_t slot(std::size_t dim, Side side) {
    return 2 * dim + (side == Side::High ? 1 : 0);
  }
  std::vector<std::deque<double>> queues_;
};

/// Appends `p` to the (dim, side) buffer. Once the buffer holds
/// `buffer_size` values its mean is compared against the thresholds, the
/// buffer is cleared, and the boundary moves outward (mean >= t_H) or inward
/// (mean <= t_L) by one step. Outward moves stop at +-phi_max, inward moves
/// at the calibration value.
///
/// Returns the update when a check fired. Throws DataError for non-finite p.
std::optional<BoundaryUpdate> record_performance(PerformanceBuffers& buffers,
                                                 const AdrConfig& config, std::size_t dim_index,
                                                 Side side, double p, AdrDistribution& dist);

// Line-oriented records. Entropy of -infinity is written as JSON null.

nlohmann::json entropy_to_json(double h);
double entropy_from_json(const nlohmann::json& j);

/// {"t", "dim", "side", "old", "new", "mean_p", "entropy_npd"}; entropy is
/// taken from `dist` after the update.
nlohmann::json boundary_update_record(std::uint64_t step, const AdrDistribution& dist,
                                      const BoundaryUpdate& update);

/// {"type": "phi", "t", "version", "dims", "calib", "phi_low", "phi_high", "entropy_npd"}
nlohmann::json distribution_record(std::uint64_t step, std::uint64_t version,
                                   const AdrDistribution& dist);

AdrDistribution distribution_from_record(const nlohmann::json& record);

}  // namespace adr
