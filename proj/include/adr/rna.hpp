#pragma once

// Random network adversary: a feed-forward network with freshly drawn
// weights each episode, used to perturb actions and object wrenches.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adr/random.hpp"

namespace adr {

struct RnaSpec {
  std::size_t hidden_layers = 3;
  std::size_t hidden_units = 265;
  std::size_t action_bins = 31;
  std::size_t alpha_dim = 0;  // lambda index controlling the action blend
  std::size_t beta_dim = 0;   // lambda index controlling the wrench scale
};

/// Blend weight from its lambda value, clamped to [0, 1].
double rna_alpha(double lambda);
/// Wrench scale from its lambda value, floored at 0.
double rna_beta(double lambda);

/// Value of bin k on the normalized [-1, 1] axis: -1 + 2k / (bins - 1).
double decode_bin(std::size_t k, std::size_t bins);

/// Immutable after construction. Weights ~ Normal(0, 1/fan_in), biases zero,
/// ReLU after every hidden layer, `out_dim * bins` output logits.
class RnaNetwork {
 public:
  static RnaNetwork build(const RnaSpec& spec, std::size_t obs_dim, std::size_t out_dim,
                          RandomSource& rng);

  std::size_t obs_dim() const noexcept { return obs_dim_; }
  std::size_t out_dim() const noexcept { return out_dim_; }
  std::size_t bins() const noexcept { return bins_; }

  Eigen::VectorXd logits(std::span<const double> obs) const;
  /// Argmax bin per output coordinate; ties go to the lowest bin.
  std::vector<std::size_t> argmax_bins(std::span<const double> obs) const;
  /// Decoded action per output coordinate, in [-1, 1].
  std::vector<double> act(std::span<const double> obs) const;

 private:
  RnaNetwork() = default;

  std::size_t obs_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::size_t bins_ = 0;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// (1 - alpha) a_robot + alpha a_adv. Throws ContractError on size mismatch
/// or alpha outside [0, 1].
std::vector<double> blend_actions(std::span<const double> a_robot, std::span<const double> a_adv,
                                  double alpha);

std::vector<double> rna_perturb_action(std::span<const double> a_robot, const RnaNetwork& net,
                                       std::span<const double> obs, double alpha);

struct BodyInertia {
  double mass = 1.0;
  std::array<double, 3> inertia{1.0, 1.0, 1.0};  // diagonal
};

/// Force (3) followed by torque (3).
using Wrench = std::array<double, 6>;

/// One wrench per body from a network with 6 outputs per body: forces scaled
/// by mass, torques by the matching inertia diagonal entry, all by beta.
std::vector<Wrench> rna_perturb_wrench(std::span<const BodyInertia> bodies, const RnaNetwork& net,
                                       std::span<const double> obs, double beta);

}  // namespace adr
