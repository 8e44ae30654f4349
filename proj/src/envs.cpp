#include "adr/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adr/errors.hpp"

namespace adr {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pipeline_entry(const RandomizerEntry& e) {
  if (e.cls == RandomizerClass::ObservationNoise || e.cls == RandomizerClass::Rna) return true;
  if (e.cls != RandomizerClass::Custom) return false;
  switch (e.custom.kind) {
    case CustomKind::ActionLatency:
    case CustomKind::ActionDelay:
    case CustomKind::ActionNoise:
    case CustomKind::Backlash:
      return true;
    default:
      return false;
  }
}

const RandomizerEntry* find_custom(const Catalog& c, CustomKind kind) {
  for (const auto& e : c.entries()) {
    if (e.cls == RandomizerClass::Custom && e.custom.kind == kind) return &e;
  }
  return nullptr;
}

double clip1(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

std::string_view env_kind_name(EnvKind kind) {
  return kind == EnvKind::Reacher ? "reacher" : "cube_ops";
}

EnvKind parse_env_kind(std::string_view name) {
  if (name == "reacher") return EnvKind::Reacher;
  if (name == "cube_ops") return EnvKind::CubeOps;
  throw ConfigError("unknown environment kind '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
  if (max_consecutive_successes < 1) throw ConfigError("max_consecutive_successes must be positive");
  if (timeout_steps < 1) throw ConfigError("timeout_steps must be positive");
  if (!(reward_success > 0.0)) throw ConfigError("reward_success must be positive");
  if (!(reward_drop < 0.0)) throw ConfigError("reward_drop must be negative");
  if (!(success_tolerance > 0.0)) throw ConfigError("success_tolerance must be positive");
  if (!(step_seconds > 0.0)) throw ConfigError("step_seconds must be positive");
}

EpisodeConfig EpisodeConfig::defaults_for(EnvKind kind) {
  EpisodeConfig c;
  if (kind == EnvKind::CubeOps) {
    c.timeout_steps = 800;
    c.success_tolerance = cube::kOrientationTolerance;
  }
  return c;
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Completed50:
      return "Completed50";
    case Termination::Dropped:
      return "Dropped";
    case Termination::TimedOut:
      break;
  }
  return "TimedOut";
}

Termination parse_termination(std::string_view name) {
  if (name == "Completed50") return Termination::Completed50;
  if (name == "Dropped") return Termination::Dropped;
  if (name == "TimedOut") return Termination::TimedOut;
  throw DataError("unknown termination '" + std::string(name) + "'");
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json succ = nlohmann::json::array();
  for (const auto& s : r.successes) {
    nlohmann::json o{{"index", s.index}, {"time", s.time}};
    if (s.kind) o["kind"] = *s.kind == cube::SubgoalKind::Flip ? "flip" : "rotation";
    succ.push_back(std::move(o));
  }
  return {{"type", "trial"},       {"env", r.env},           {"lambda", r.lambda},
          {"seed", r.seed},        {"termination", termination_name(r.termination)},
          {"steps", r.steps},      {"performance", r.performance()},
          {"successes", succ}};
}

TrialRecord trial_record_from_json(const nlohmann::json& j) {
  try {
    TrialRecord r;
    r.env = j.at("env").get<std::string>();
    r.lambda = j.at("lambda").get<std::vector<double>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.termination = parse_termination(j.at("termination").get<std::string>());
    r.steps = j.value("steps", 0L);
    double last = -INFINITY;
    for (const auto& s : j.at("successes")) {
      SuccessEvent e;
      e.index = s.at("index").get<int>();
      e.time = s.at("time").get<double>();
      if (s.contains("kind")) {
        const auto k = s.at("kind").get<std::string>();
        if (k == "flip") {
          e.kind = cube::SubgoalKind::Flip;
        } else if (k == "rotation") {
          e.kind = cube::SubgoalKind::Rotation;
        } else {
          throw DataError("unknown subgoal kind '" + k + "'");
        }
      }
      if (e.index != static_cast<int>(r.successes.size()) + 1) {
        throw DataError("success indices must run 1, 2, ...");
      }
      if (!(e.time > last)) throw DataError("success times must be strictly increasing");
      last = e.time;
      r.successes.push_back(e);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed trial record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void ActionPipeline::configure(const Catalog& catalog, std::size_t action_size,
                               std::size_t obs_size, double noise_unit) {
  action_size_ = action_size;
  noise_unit_ = noise_unit;
  obs_size_ = obs_size;
  latency_entry_ = find_custom(catalog, CustomKind::ActionLatency);
  backlash_entry_ = find_custom(catalog, CustomKind::Backlash);
  noise_entry_ = find_custom(catalog, CustomKind::ActionNoise);
  rna_entry_ = catalog.find_class(RandomizerClass::Rna);
  backlash_log_defaults_ = {std::log(0.02), std::log(0.02)};
}

void ActionPipeline::begin_episode(std::span<const double> lambda, RandomSource& rng) {
  lambda_.assign(lambda.begin(), lambda.end());
  latency_ = latency_entry_ ? sample_latency(lambda[latency_entry_->custom.dims[0]], rng) : 0;
  queue_.clear();
  backlash_ = {0.0, 0.0};
  if (backlash_entry_) {
    backlash_ = backlash_value(backlash_log_defaults_, lambda[backlash_entry_->custom.dims[0]], rng);
  }
  play_.assign(action_size_, 0.0);
  if (noise_entry_) {
    const auto& d = noise_entry_->custom.dims;
    noise_.begin_episode(action_size_, lambda[d[0]], lambda[d[1]], rng);
  }
  alpha_ = 0.0;
  beta_ = 0.0;
  action_net_.reset();
  wrench_net_.reset();
  if (rna_entry_) {
    alpha_ = adr::rna_alpha(lambda[rna_entry_->rna.alpha_dim]);
    if (rna_entry_->rna_has_beta) beta_ = adr::rna_beta(lambda[rna_entry_->rna.beta_dim]);
    // Networks are only drawn when they can matter, from a dedicated stream.
    Rng net_rng(Rng::mix(static_cast<std::uint64_t>(rng.uniform01() * 9007199254740992.0)));
    if (alpha_ > 0.0) {
      action_net_ = RnaNetwork::build(rna_entry_->rna, obs_size_, action_size_, net_rng);
    }
    if (beta_ > 0.0) wrench_net_ = RnaNetwork::build(rna_entry_->rna, obs_size_, 6, net_rng);
  }
}

std::vector<double> ActionPipeline::apply(std::span<const double> action,
                                          std::span<const double> adversary_obs,
                                          RandomSource& step_rng) {
  std::vector<double> a(action.begin(), action.end());
  if (latency_ > 0) {
    queue_.push_back(a);
    if (queue_.size() > static_cast<std::size_t>(latency_)) {
      a = queue_.front();
      queue_.pop_front();
    } else {
      a.assign(action_size_, 0.0);
    }
  }
  if (backlash_entry_) {
    // Play operator: the output only follows once the input leaves the dead band.
    for (std::size_t c = 0; c < a.size(); ++c) {
      if (a[c] > play_[c] + backlash_[0]) {
        play_[c] = a[c] - backlash_[0];
      } else if (a[c] < play_[c] - backlash_[1]) {
        play_[c] = a[c] + backlash_[1];
      }
      a[c] = play_[c];
    }
  }
  if (noise_entry_) {
    const double lk = lambda_[noise_entry_->custom.dims[2]];
    for (std::size_t c = 0; c < a.size(); ++c) {
      a[c] = noise_.apply(c, a[c] * noise_unit_, lk, step_rng) / noise_unit_;
    }
  }
  for (auto& x : a) x = clip1(x);
  if (action_net_) a = rna_perturb_action(a, *action_net_, adversary_obs, alpha_);
  return a;
}

// ---------------------------------------------------------------------------

Environment::Environment(Catalog catalog, EpisodeConfig config)
    : catalog_(std::move(catalog)), config_(config) {
  config_.validate();
}

void Environment::check_targets() const {
  for (const auto& e : catalog_.entries()) {
    if (is_pipeline_entry(e)) continue;
    if (!accepts_target(e.target)) {
      throw ConfigError("environment " + std::string(env_kind_name(kind())) +
                        " has no parameter '" + e.target + "'");
    }
  }
}

double Environment::param(std::string_view target, double x0, std::span<const double> lambda,
                          RandomSource& rng) const {
  const auto* e = catalog_.find_target(target);
  if (!e) return x0;
  if (e->cls == RandomizerClass::Generic) return apply_generic(x0, e->generic, lambda, rng);
  if (e->cls == RandomizerClass::Custom && custom_kind_width(e->custom.kind) == 1) {
    const double v[1] = {x0};
    return apply_custom(v, e->custom, lambda, rng)[0];
  }
  throw ConfigError("randomizer for '" + std::string(target) + "' has the wrong shape");
}

std::vector<double> Environment::observe(Rng& step_rng) {
  auto o = true_observation();
  if (obs_noise_) obs_noise_->apply_in_place(o, lambda_, step_rng);
  return o;
}

std::vector<double> Environment::reset(std::span<const double> lambda, std::uint64_t seed) {
  if (lambda.size() != catalog_.size()) {
    throw ContractError("lambda has " + std::to_string(lambda.size()) + " entries, catalog has " +
                        std::to_string(catalog_.size()));
  }
  lambda_.assign(lambda.begin(), lambda.end());
  seed_ = seed;
  resamples_ = 0;
  episode_rng_ = Rng(Rng::derive(seed, 1));
  step_rng_ = Rng(Rng::derive(seed, 2));
  goal_rng_ = Rng(Rng::derive(seed, 3));
  broken_.clear();
  successes_ = 0;
  steps_since_goal_ = 0;
  steps_ = 0;
  done_ = false;

  sample_dynamics(lambda_, episode_rng_);
  pipeline_.begin_episode(lambda_, episode_rng_);
  obs_noise_.reset();
  if (const auto* e = catalog_.find_class(RandomizerClass::ObservationNoise)) {
    obs_noise_.emplace(e->observation);
    obs_noise_->begin_episode(lambda_, observation_size(), episode_rng_);
  }
  reset_state(goal_rng_);
  last_distance_ = goal_distance();
  return observe(step_rng_);
}

void Environment::resample_dynamics(std::span<const double> lambda) {
  if (lambda.size() != catalog_.size()) throw ContractError("lambda does not match the catalog");
  lambda_.assign(lambda.begin(), lambda.end());
  Rng rng(Rng::derive(seed_, 100 + ++resamples_));
  sample_dynamics(lambda_, rng);
  pipeline_.begin_episode(lambda_, rng);
  if (obs_noise_) obs_noise_->begin_episode(lambda_, observation_size(), rng);
}

void Environment::break_action(std::optional<std::size_t> coord) {
  if (!coord) {
    broken_.clear();
    return;
  }
  if (*coord >= action_size()) throw ContractError("action coordinate out of range");
  if (std::find(broken_.begin(), broken_.end(), *coord) == broken_.end()) broken_.push_back(*coord);
}

StepResult Environment::step(std::span<const double> action) {
  if (done_) throw ContractError("step called on a finished episode");
  if (action.size() != action_size()) throw ContractError("action has the wrong size");
  std::vector<double> a(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!std::isfinite(action[i])) throw ContractError("action must be finite");
    a[i] = clip1(action[i]);
  }
  const auto adv_obs = true_observation();
  a = pipeline_.apply(a, adv_obs, step_rng_);
  for (const auto c : broken_) a[c] = 0.0;

  integrate(a, step_rng_);
  ++steps_;
  ++steps_since_goal_;

  StepResult r;
  const double d = goal_distance();
  r.reward = last_distance_ - d;
  last_distance_ = d;
  if (dropped()) {
    r.events.dropped = true;
    r.events.episode_end = true;
    r.reward += config_.reward_drop;
  } else if (goal_achieved()) {
    r.events.goal_achieved = true;
    r.reward += config_.reward_success;
    ++successes_;
    steps_since_goal_ = 0;
    if (successes_ >= config_.max_consecutive_successes) {
      r.events.episode_end = true;
    } else {
      next_goal(goal_rng_);
      last_distance_ = goal_distance();
    }
  } else if (steps_since_goal_ >= config_.timeout_steps) {
    r.events.timed_out = true;
    r.events.episode_end = true;
  }
  done_ = r.events.episode_end;
  r.observation = observe(step_rng_);
  return r;
}

// ---------------------------------------------------------------------------

ReacherEnv::ReacherEnv(Catalog catalog, EpisodeConfig config)
    : Environment(std::move(catalog), config) {
  check_targets();
  pipeline_.configure(catalog_, action_size(), observation_size());
}

bool ReacherEnv::accepts_target(std::string_view target) const { return target == "gain"; }

void ReacherEnv::sample_dynamics(std::span<const double> lambda, Rng& rng) {
  for (auto& g : gain_) g = param("gain", 1.0, lambda, rng);
}

void ReacherEnv::reset_state(Rng& rng) {
  pos_ = {0.0, 0.0};
  next_goal(rng);
}

void ReacherEnv::next_goal(Rng& rng) {
  for (auto& t : target_) t = rng.uniform(-1.0, 1.0);
}

void ReacherEnv::integrate(std::span<const double> action, Rng&) {
  for (std::size_t i = 0; i < 2; ++i) pos_[i] += gain_[i] * action[i] * kStepLength;
}

double ReacherEnv::goal_distance() const {
  return std::hypot(target_[0] - pos_[0], target_[1] - pos_[1]);
}

bool ReacherEnv::goal_achieved() const { return goal_distance() < config_.success_tolerance; }

bool ReacherEnv::dropped() const {
  return std::max(std::abs(pos_[0]), std::abs(pos_[1])) > kDropBound;
}

std::vector<double> ReacherEnv::true_observation() const {
  return {target_[0] - pos_[0], target_[1] - pos_[1]};
}

// ---------------------------------------------------------------------------

CubeOpsEnv::CubeOpsEnv(Catalog catalog, EpisodeConfig config)
    : Environment(std::move(catalog), config) {
  check_targets();
  pipeline_.configure(catalog_, action_size(), observation_size(), kMaxAngularSpeed);
}

bool CubeOpsEnv::accepts_target(std::string_view target) const {
  return target == "cube_size" || target == "face_friction" || target == "gravity" ||
         target == "time_step";
}

void CubeOpsEnv::sample_dynamics(std::span<const double> lambda, Rng& rng) {
  size_ = param("cube_size", 1.0, lambda, rng);
  friction_ = param("face_friction", 1.0, lambda, rng);
  dt_ = param("time_step", 0.08, lambda, rng);
  gravity_ = {0.0, 0.0, -kGravity};
  if (const auto* e = catalog_.find_target("gravity")) {
    const std::vector<double> g0{gravity_[0], gravity_[1], gravity_[2]};
    const auto g = apply_custom(g0, e->custom, lambda, rng);
    gravity_ = {g[0], g[1], g[2]};
  }
}

void CubeOpsEnv::reset_state(Rng& rng) {
  state_ = cube::CubeState();
  grip_ = 1.0;
  active_face_ = cube::extract_top_face_id(state_.orientation());
  next_goal(rng);
}

void CubeOpsEnv::next_goal(Rng& rng) {
  goal_ = cube::generate_goal(state_, rng);
  goal_face_ = cube::extract_top_face_id(state_.orientation());
}

std::optional<cube::SubgoalKind> CubeOpsEnv::goal_kind() const {
  return goal_.is_rotation() ? cube::SubgoalKind::Rotation : cube::SubgoalKind::Flip;
}

Eigen::Vector3d CubeOpsEnv::orientation_error() const {
  const auto& q = state_.orientation();
  if (goal_.orientation) {
    Eigen::Quaterniond d = *goal_.orientation * q.conjugate();
    if (d.w() < 0.0) d.coeffs() *= -1.0;
    const Eigen::AngleAxisd aa(d);
    return aa.axis() * aa.angle();
  }
  // Rotation goals keep the current top face pointing up.
  const Eigen::Vector3d n =
      q * cube::face_normal(cube::face_from_index(cube::extract_top_face_id(q)));
  const Eigen::Vector3d axis = n.cross(Eigen::Vector3d::UnitZ());
  const double s = axis.norm();
  if (s < 1e-15) return Eigen::Vector3d::Zero();
  return axis / s * std::atan2(s, n.z());
}

double CubeOpsEnv::face_error() const {
  const std::size_t top = cube::extract_top_face_id(state_.orientation());
  const double angle = state_.face_angles()[top];
  if (goal_.is_rotation() && top == goal_face_) {
    return cube::wrap_angle((*goal_.face_angles)[goal_face_] - angle);
  }
  return cube::wrap_angle(cube::snap_to_straight(angle) - angle);
}

void CubeOpsEnv::integrate(std::span<const double> action, Rng&) {
  Eigen::Vector3d omega(action[0], action[1], action[2]);
  omega *= kMaxAngularSpeed / (size_ * size_ * size_);

  // Gravity tilt pushes the cube sideways; adversary torques add directly.
  const Eigen::Vector3d tilt(gravity_[0], gravity_[1], 0.0);
  Eigen::Vector3d drift = 0.2 * Eigen::Vector3d::UnitZ().cross(tilt);
  double force = 0.0;
  if (const auto* net = pipeline_.wrench_network()) {
    const double volume = size_ * size_ * size_;
    const BodyInertia body{volume, {volume * size_ * size_ / 6.0, volume * size_ * size_ / 6.0,
                                    volume * size_ * size_ / 6.0}};
    const auto w = rna_perturb_wrench(std::span(&body, 1), *net, true_observation(),
                                      pipeline_.rna_beta());
    drift += Eigen::Vector3d(w[0][3], w[0][4], w[0][5]) * (6.0 / (volume * size_ * size_));
    force = std::sqrt(w[0][0] * w[0][0] + w[0][1] * w[0][1] + w[0][2] * w[0][2]) / volume;
  }
  const Eigen::Vector3d total = omega + drift;
  const double angle = total.norm() * dt_;
  if (angle > 0.0) {
    const Eigen::Quaterniond dq(Eigen::AngleAxisd(angle, total.normalized()));
    const Eigen::Quaterniond next = dq * state_.orientation();
    const std::size_t next_top = cube::extract_top_face_id(next);
    if (next_top == active_face_) {
      state_.set_orientation(next);
    } else if (cube::straight_angle_error(state_.face_angles()[active_face_]) <=
               cube::kFaceTolerance) {
      // Forgiveness: a nearly aligned face snaps as the cube rolls over.
      state_.snap_face(active_face_);
      state_.set_orientation(next);
      active_face_ = next_top;
    }
    // Otherwise the misaligned layer binds and the roll is blocked.
  }
  const std::size_t top = active_face_;
  state_.rotate_face(top, action[3] * kMaxFaceSpeed / friction_ * dt_);

  const double tilt_mag = std::hypot(gravity_[0], gravity_[1]);
  const double overspeed = std::max(0.0, total.norm() - 0.9 * kMaxAngularSpeed);
  const double load = 0.6 * tilt_mag + 0.5 * force + 0.3 * overspeed;
  grip_ = std::min(1.0, grip_ + 0.05 - load * dt_);
}

double CubeOpsEnv::goal_distance() const {
  const double face = std::abs(face_error());
  if (goal_.orientation) return cube::orientation_distance(state_.orientation(), *goal_.orientation) + face;
  return face + cube::up_face_deviation(state_.orientation());
}

bool CubeOpsEnv::goal_achieved() const {
  if (goal_.orientation) {
    return cube::orientation_distance(state_.orientation(), *goal_.orientation) <=
               config_.success_tolerance &&
           cube::is_faces_aligned(state_.face_angles());
  }
  return cube::is_orientation_aligned(state_.orientation()) &&
         std::abs(cube::wrap_angle(state_.face_angles()[goal_face_] -
                                   (*goal_.face_angles)[goal_face_])) <= cube::kFaceTolerance;
}

bool CubeOpsEnv::dropped() const { return grip_ < 0.0; }

std::vector<double> CubeOpsEnv::true_observation() const {
  const auto e = orientation_error();
  return {e.x(),
          e.y(),
          e.z(),
          face_error(),
          grip_,
          goal_.is_rotation() ? 1.0 : 0.0,
          cube::up_face_deviation(state_.orientation())};
}

// ---------------------------------------------------------------------------

Catalog default_catalog(EnvKind kind) {
  using nlohmann::json;
  if (kind == EnvKind::Reacher) {
    return Catalog::from_json(json::parse(R"({
      "dims": [
        {"name": "gain_log_mean", "calib": 0.0},
        {"name": "gain_log_spread", "calib": 0.0},
        {"name": "latency", "calib": 0.0},
        {"name": "obs_noise_corr", "calib": 0.0},
        {"name": "obs_noise_uncorr", "calib": 0.0},
        {"name": "rna_alpha", "calib": 0.0}
      ],
      "randomizers": [
        {"name": "gain", "kind": "generic", "mode": "M", "alpha": 1.0, "target": "gain",
         "dims": ["gain_log_mean", "gain_log_spread"]},
        {"name": "latency", "kind": "action_latency", "target": "action_latency", "dims": ["latency"]},
        {"name": "observation", "kind": "observation_noise", "target": "observation",
         "dims": ["obs_noise_corr", "obs_noise_uncorr"]},
        {"name": "adversary", "kind": "rna", "target": "adversary", "dims": ["rna_alpha"],
         "hidden_units": 32}
      ]})"));
  }
  return Catalog::from_json(json::parse(R"({
    "dims": [
      {"name": "cube_size", "calib": 0.0},
      {"name": "face_friction", "calib": 0.0},
      {"name": "gravity", "calib": 0.0},
      {"name": "action_latency", "calib": 0.0},
      {"name": "action_noise", "calib": 0.0},
      {"name": "backlash", "calib": 0.0},
      {"name": "time_step", "calib": 0.0},
      {"name": "obs_noise_corr", "calib": 0.0},
      {"name": "obs_noise_uncorr", "calib": 0.0},
      {"name": "rna_alpha", "calib": 0.0},
      {"name": "rna_beta", "calib": 0.0}
    ],
    "randomizers": [
      {"name": "cube_size", "kind": "cube_size", "target": "cube_size", "dims": ["cube_size"]},
      {"name": "face_friction", "kind": "friction", "weight": 1.0, "target": "face_friction",
       "dims": ["face_friction"]},
      {"name": "gravity", "kind": "gravity", "target": "gravity", "dims": ["gravity"]},
      {"name": "action_latency", "kind": "action_latency", "target": "action_latency",
       "dims": ["action_latency"]},
      {"name": "action_noise", "kind": "action_noise", "target": "action_noise",
       "dims": ["action_noise", "action_noise", "action_noise"]},
      {"name": "backlash", "kind": "backlash", "target": "backlash", "dims": ["backlash"]},
      {"name": "time_step", "kind": "time_step", "target": "time_step",
       "dims": ["time_step", "time_step"]},
      {"name": "observation", "kind": "observation_noise", "target": "observation",
       "dims": ["obs_noise_corr", "obs_noise_uncorr"], "a0": 0.03, "b0": 0.03, "c0": 0.1},
      {"name": "adversary", "kind": "rna", "target": "adversary",
       "dims": ["rna_alpha", "rna_beta"]}
    ]})"));
}

Catalog noiseless_reacher_catalog() {
  auto j = default_catalog(EnvKind::Reacher).to_json();
  for (auto& r : j["randomizers"]) {
    if (r["kind"] == "observation_noise") {
      r["a0"] = 0.0;
      r["b0"] = 0.0;
      r["c0"] = 0.0;
    }
  }
  return Catalog::from_json(j);
}

std::unique_ptr<Environment> make_env(EnvKind kind, Catalog catalog, EpisodeConfig config) {
  if (kind == EnvKind::Reacher) return std::make_unique<ReacherEnv>(std::move(catalog), config);
  return std::make_unique<CubeOpsEnv>(std::move(catalog), config);
}

EpisodeOutcome run_episode(Environment& env, std::span<const double> lambda,
                           Controller& controller, std::uint64_t seed, const SuccessHook& hook) {
  EpisodeOutcome out;
  out.record.env = std::string(env_kind_name(env.kind()));
  out.record.lambda.assign(lambda.begin(), lambda.end());
  out.record.seed = seed;
  controller.reset();
  auto obs = env.reset(lambda, seed);
  if (hook) hook(0, env, controller);
  while (true) {
    const auto kind = env.goal_kind();
    const auto a = controller.act(obs);
    auto r = env.step(a);
    out.total_reward += r.reward;
    obs = std::move(r.observation);
    if (r.events.goal_achieved) {
      out.record.successes.push_back({env.successes(), env.sim_time(), kind});
    }
    if (r.events.episode_end) {
      out.record.termination = r.events.dropped     ? Termination::Dropped
                               : r.events.timed_out ? Termination::TimedOut
                                                    : Termination::Completed50;
      break;
    }
    if (r.events.goal_achieved && hook) hook(env.successes(), env, controller);
  }
  out.record.steps = env.steps();
  out.performance = out.record.performance();
  return out;
}

std::vector<double> ScriptedReacher::act(std::span<const double> o) {
  return {clip1(gain_ * o[0]), clip1(gain_ * o[1])};
}

std::vector<double> ScriptedCube::act(std::span<const double> o) {
  return {clip1(gain_ * o[0]), clip1(gain_ * o[1]), clip1(gain_ * o[2]), clip1(face_gain_ * o[3])};
}

}  // namespace adr
