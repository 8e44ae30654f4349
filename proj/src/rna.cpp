#include "adr/rna.hpp"

#include <algorithm>
#include <cmath>

#include "adr/errors.hpp"

namespace adr {

double rna_alpha(double lambda) { return std::clamp(lambda, 0.0, 1.0); }
double rna_beta(double lambda) { return std::max(lambda, 0.0); }

double decode_bin(std::size_t k, std::size_t bins) {
  if (bins < 2) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(bins - 1);
}

RnaNetwork RnaNetwork::build(const RnaSpec& spec, std::size_t obs_dim, std::size_t out_dim,
                             RandomSource& rng) {
  if (obs_dim < 1 || out_dim < 1) throw ContractError("network dimensions must be positive");
  if (spec.hidden_units < 1 || spec.action_bins < 1) {
    throw ConfigError("network needs at least one hidden unit and one bin");
  }
  RnaNetwork net;
  net.obs_dim_ = obs_dim;
  net.out_dim_ = out_dim;
  net.bins_ = spec.action_bins;

  std::vector<std::size_t> widths{obs_dim};
  for (std::size_t l = 0; l < spec.hidden_layers; ++l) widths.push_back(spec.hidden_units);
  widths.push_back(out_dim * spec.action_bins);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto fan_in = widths[l];
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(static_cast<Eigen::Index>(widths[l + 1]), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.normal(0.0, stddev);
    }
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(widths[l + 1])));
  }
  return net;
}

Eigen::VectorXd RnaNetwork::logits(std::span<const double> obs) const {
  if (obs.size() != obs_dim_) throw ContractError("observation size does not match the network");
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(obs.data(), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = weights_[l] * h + biases_[l];
    if (l + 1 < weights_.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

std::vector<std::size_t> RnaNetwork::argmax_bins(std::span<const double> obs) const {
  const Eigen::VectorXd z = logits(obs);
  std::vector<std::size_t> out(out_dim_);
  for (std::size_t c = 0; c < out_dim_; ++c) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < bins_; ++k) {
      if (z(static_cast<Eigen::Index>(c * bins_ + k)) > z(static_cast<Eigen::Index>(c * bins_ + best))) best = k;
    }
    out[c] = best;
  }
  return out;
}

std::vector<double> RnaNetwork::act(std::span<const double> obs) const {
  const auto idx = argmax_bins(obs);
  std::vector<double> a(idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) a[c] = decode_bin(idx[c], bins_);
  return a;
}

std::vector<double> blend_actions(std::span<const double> a_robot, std::span<const double> a_adv,
                                  double alpha) {
  if (a_robot.size() != a_adv.size()) throw ContractError("action sizes differ");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("alpha must lie in [0, 1]");
  std::vector<double> out(a_robot.begin(), a_robot.end());
  if (alpha == 0.0) return out;
  if (alpha == 1.0) return {a_adv.begin(), a_adv.end()};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - alpha) * a_robot[i] + alpha * a_adv[i];
  return out;
}

std::vector<double> rna_perturb_action(std::span<const double> a_robot, const RnaNetwork& net,
                                       std::span<const double> obs, double alpha) {
  if (net.out_dim() != a_robot.size()) throw ContractError("adversary action size differs");
  if (alpha == 0.0) return {a_robot.begin(), a_robot.end()};
  return blend_actions(a_robot, net.act(obs), alpha);
}

std::vector<Wrench> rna_perturb_wrench(std::span<const BodyInertia> bodies, const RnaNetwork& net,
                                       std::span<const double> obs, double beta) {
  if (net.out_dim() != 6 * bodies.size()) throw ContractError("network must emit 6 values per body");
  if (!(beta >= 0.0)) throw ContractError("beta must be non-negative");
  std::vector<Wrench> out(bodies.size());
  if (beta == 0.0) return out;
  const auto raw = net.act(obs);
  for (std::size_t b = 0; b < bodies.size(); ++b) {
    const auto& body = bodies[b];
    if (!(body.mass > 0.0)) throw ContractError("body mass must be positive");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!(body.inertia[k] > 0.0)) throw ContractError("inertia entries must be positive");
      out[b][k] = beta * (body.mass * raw[6 * b + k]);
      out[b][3 + k] = beta * (body.inertia[k] * raw[6 * b + 3 + k]);
    }
  }
  return out;
}

}  // namespace adr
