#include "adr/cube.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "adr/errors.hpp"

namespace adr::cube {

namespace {

using IVec = std::array<int, 3>;

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kQuarterPi = std::numbers::pi / 4.0;

struct FaceFrame {
  IVec normal;
  IVec col;  // increases along the sticker column index
  IVec row;  // increases along the sticker row index
};

// U D L R F B
constexpr std::array<FaceFrame, kFaces> kFrames{{
    {{0, 0, 1}, {1, 0, 0}, {0, -1, 0}},
    {{0, 0, -1}, {1, 0, 0}, {0, 1, 0}},
    {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}},
    {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}},
    {{0, -1, 0}, {1, 0, 0}, {0, 0, -1}},
    {{0, 1, 0}, {-1, 0, 0}, {0, 0, -1}},
}};

constexpr std::string_view kLetters = "UDLRFB";

int dot(const IVec& a, const IVec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

IVec cross(const IVec& a, const IVec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

IVec add(const IVec& a, const IVec& b, int scale) {
  return {a[0] + scale * b[0], a[1] + scale * b[1], a[2] + scale * b[2]};
}

struct Facelet {
  IVec position;  // cubie coordinates in {-1, 0, 1}
  IVec normal;
};

Facelet facelet_geometry(std::size_t index) {
  const auto& fr = kFrames[index / 9];
  const int r = static_cast<int>((index % 9) / 3) - 1;
  const int c = static_cast<int>(index % 3) - 1;
  IVec p = add(add(fr.normal, fr.col, c), fr.row, r);
  return {p, fr.normal};
}

std::size_t facelet_index(const Facelet& f) {
  for (std::size_t face = 0; face < kFaces; ++face) {
    const auto& fr = kFrames[face];
    if (fr.normal != f.normal) continue;
    const IVec rel = add(f.position, fr.normal, -1);
    const int c = dot(rel, fr.col) + 1;
    const int r = dot(rel, fr.row) + 1;
    return face * 9 + static_cast<std::size_t>(3 * r + c);
  }
  throw std::logic_error("facelet normal is not a face normal");
}

// Clockwise quarter turn seen from outside: -90 degrees about the normal.
IVec rotate_cw(const IVec& v, const IVec& n) {
  const IVec nxv = cross(n, v);
  const int nv = dot(n, v);
  return {nv * n[0] - nxv[0], nv * n[1] - nxv[1], nv * n[2] - nxv[2]};
}

using Permutation = std::array<std::uint8_t, kFacelets>;

// kClockwise[f][dest] = source position.
const std::array<Permutation, kFaces>& clockwise_tables() {
  static const std::array<Permutation, kFaces> tables = [] {
    std::array<Permutation, kFaces> t{};
    for (std::size_t face = 0; face < kFaces; ++face) {
      const IVec& n = kFrames[face].normal;
      for (std::size_t s = 0; s < kFacelets; ++s) t[face][s] = static_cast<std::uint8_t>(s);
      for (std::size_t src = 0; src < kFacelets; ++src) {
        const Facelet g = facelet_geometry(src);
        if (dot(g.position, n) != 1) continue;
        const std::size_t dest = facelet_index({rotate_cw(g.position, n), rotate_cw(g.normal, n)});
        t[face][dest] = static_cast<std::uint8_t>(src);
      }
    }
    return t;
  }();
  return tables;
}

// Cubie slots: sticker positions in a rotation-invariant order.
struct Slots {
  std::vector<std::array<std::size_t, 3>> corners;
  std::vector<std::array<std::size_t, 2>> edges;
  std::array<int, kFacelets> corner_of{};  // slot holding a position, -1 if none
  std::array<int, kFacelets> edge_of{};
};

const Slots& slots() {
  static const Slots s = [] {
    Slots out;
    out.corner_of.fill(-1);
    out.edge_of.fill(-1);
    for (int x : {-1, 0, 1}) {
      for (int y : {-1, 0, 1}) {
        for (int z : {-1, 0, 1}) {
          const IVec p{x, y, z};
          const int zeros = (x == 0) + (y == 0) + (z == 0);
          if (zeros == 0) {
            const IVec nz{0, 0, z}, nx{x, 0, 0}, ny{0, y, 0};
            // Order [z, a, b] with positive handedness.
            IVec a = nx, b = ny;
            if (dot(cross(nz, a), b) < 0) std::swap(a, b);
            std::array<std::size_t, 3> idx{facelet_index({p, nz}), facelet_index({p, a}),
                                           facelet_index({p, b})};
            for (auto i : idx) out.corner_of[i] = static_cast<int>(out.corners.size());
            out.corners.push_back(idx);
          } else if (zeros == 1) {
            std::vector<IVec> normals;
            if (z != 0) normals.push_back({0, 0, z});
            if (y != 0) normals.push_back({0, y, 0});
            if (x != 0) normals.push_back({x, 0, 0});
            // Reference sticker: U/D if present, else F/B.
            std::array<std::size_t, 2> idx{facelet_index({p, normals[0]}),
                                           facelet_index({p, normals[1]})};
            for (auto i : idx) out.edge_of[i] = static_cast<int>(out.edges.size());
            out.edges.push_back(idx);
          }
        }
      }
    }
    return out;
  }();
  return s;
}

int permutation_parity(const std::vector<int>& perm) {
  std::vector<bool> seen(perm.size(), false);
  int transpositions = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    std::size_t j = i;
    int len = 0;
    while (!seen[j]) {
      seen[j] = true;
      j = static_cast<std::size_t>(perm[j]);
      ++len;
    }
    transpositions += len - 1;
  }
  return transpositions % 2;
}

double positive_mod(double x, double m) {
  double r = x - m * std::floor(x / m);
  if (r >= m) r -= m;
  if (r < 0.0) r += m;
  return r;
}

}  // namespace

char face_letter(Face f) { return kLetters[face_index(f)]; }
std::size_t face_index(Face f) { return static_cast<std::size_t>(f); }

Face face_from_index(std::size_t i) {
  if (i >= kFaces) throw ContractError("face index out of range");
  return static_cast<Face>(i);
}

Eigen::Vector3d face_normal(Face f) {
  const auto& n = kFrames[face_index(f)].normal;
  return {static_cast<double>(n[0]), static_cast<double>(n[1]), static_cast<double>(n[2])};
}

Move inverse(Move m) { return {m.face, m.quarter_turns == 2 ? 2 : -m.quarter_turns}; }

std::string to_string(Move m) {
  std::string s(1, face_letter(m.face));
  if (m.quarter_turns == -1) s += '\'';
  if (m.quarter_turns == 2) s += '2';
  return s;
}

std::vector<Move> parse_scramble(std::string_view text) {
  std::vector<Move> moves;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::string_view tok = text.substr(start, i - start);
    const auto face = kLetters.find(tok[0]);
    if (face == std::string_view::npos || tok.size() > 2) {
      throw ParseError("invalid scramble token '" + std::string(tok) + "'", start);
    }
    Move m{static_cast<Face>(face), 1};
    if (tok.size() == 2) {
      if (tok[1] == '\'') {
        m.quarter_turns = -1;
      } else if (tok[1] == '2') {
        m.quarter_turns = 2;
      } else {
        throw ParseError("invalid scramble token '" + std::string(tok) + "'", start);
      }
    }
    moves.push_back(m);
  }
  return moves;
}

std::string format_scramble(std::span<const Move> moves) {
  std::string out;
  for (const auto& m : moves) {
    if (!out.empty()) out += ' ';
    out += to_string(m);
  }
  return out;
}

std::vector<Move> invert_scramble(std::span<const Move> moves) {
  std::vector<Move> out;
  out.reserve(moves.size());
  for (auto it = moves.rbegin(); it != moves.rend(); ++it) out.push_back(inverse(*it));
  return out;
}

int quarter_turn_count(std::span<const Move> moves) {
  int n = 0;
  for (const auto& m : moves) n += std::abs(m.quarter_turns);
  return n;
}

LogicalCube::LogicalCube() {
  for (std::size_t i = 0; i < kFacelets; ++i) stickers_[i] = static_cast<std::uint8_t>(i);
}

LogicalCube LogicalCube::from_stickers(const std::array<std::uint8_t, kFacelets>& stickers) {
  if (!is_reachable(stickers)) throw DataError("sticker state is not reachable from solved");
  LogicalCube c;
  c.stickers_ = stickers;
  return c;
}

bool LogicalCube::is_solved() const { return *this == LogicalCube{}; }

std::size_t LogicalCube::facelet_difference(const LogicalCube& other) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kFacelets; ++i) n += stickers_[i] != other.stickers_[i];
  return n;
}

LogicalCube apply_move(const LogicalCube& cube, Move m) {
  const auto& table = clockwise_tables()[face_index(m.face)];
  const int turns = ((m.quarter_turns % 4) + 4) % 4;
  auto state = cube.stickers();
  for (int t = 0; t < turns; ++t) {
    std::array<std::uint8_t, kFacelets> next{};
    for (std::size_t dest = 0; dest < kFacelets; ++dest) next[dest] = state[table[dest]];
    state = next;
  }
  LogicalCube out;
  out.stickers_ = state;
  return out;
}

LogicalCube apply_moves(const LogicalCube& cube, std::span<const Move> moves) {
  LogicalCube c = cube;
  for (const auto& m : moves) c = apply_move(c, m);
  return c;
}

bool is_reachable(const std::array<std::uint8_t, kFacelets>& stickers) {
  std::array<bool, kFacelets> seen{};
  for (auto s : stickers) {
    if (s >= kFacelets || seen[s]) return false;
    seen[s] = true;
  }
  for (std::size_t f = 0; f < kFaces; ++f) {
    if (stickers[9 * f + 4] != 9 * f + 4) return false;
  }
  const Slots& sl = slots();

  std::vector<int> corner_perm(sl.corners.size());
  int twist = 0;
  for (std::size_t i = 0; i < sl.corners.size(); ++i) {
    const auto& pos = sl.corners[i];
    const int home = sl.corner_of[stickers[pos[0]]];
    if (home < 0) return false;
    const auto& hpos = sl.corners[static_cast<std::size_t>(home)];
    int t = -1;
    for (int k = 0; k < 3; ++k) {
      if (stickers[pos[static_cast<std::size_t>(k)]] == hpos[0]) t = k;
    }
    if (t < 0) return false;
    for (int k = 1; k < 3; ++k) {
      if (stickers[pos[static_cast<std::size_t>((t + k) % 3)]] != hpos[static_cast<std::size_t>(k)]) {
        return false;
      }
    }
    corner_perm[i] = home;
    twist += t;
  }

  std::vector<int> edge_perm(sl.edges.size());
  int flip = 0;
  for (std::size_t i = 0; i < sl.edges.size(); ++i) {
    const auto& pos = sl.edges[i];
    const int home = sl.edge_of[stickers[pos[0]]];
    if (home < 0) return false;
    const auto& hpos = sl.edges[static_cast<std::size_t>(home)];
    if (stickers[pos[0]] == hpos[0] && stickers[pos[1]] == hpos[1]) {
      // unflipped
    } else if (stickers[pos[0]] == hpos[1] && stickers[pos[1]] == hpos[0]) {
      ++flip;
    } else {
      return false;
    }
    edge_perm[i] = home;
  }

  return twist % 3 == 0 && flip % 2 == 0 &&
         permutation_parity(corner_perm) == permutation_parity(edge_perm);
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double straight_angle_error(double a) { return std::abs(std::remainder(a, kHalfPi)); }

double snap_to_straight(double a) { return wrap_angle(a - std::remainder(a, kHalfPi)); }

namespace {

// World up expressed in the body frame, dotted with each face normal.
std::array<double, kFaces> up_alignment(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d up = q.conjugate() * Eigen::Vector3d::UnitZ();
  return {up.z(), -up.z(), -up.x(), up.x(), -up.y(), up.y()};
}

}  // namespace

double up_face_deviation(const Eigen::Quaterniond& q) {
  const Eigen::Vector3d up = q.conjugate() * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d n = face_normal(face_from_index(extract_top_face_id(q)));
  return std::atan2(up.cross(n).norm(), up.dot(n));
}

bool is_orientation_aligned(const Eigen::Quaterniond& q) {
  return up_face_deviation(q) <= kOrientationTolerance;
}

bool is_faces_aligned(std::span<const double> face_angles) {
  return std::all_of(face_angles.begin(), face_angles.end(),
                     [](double a) { return straight_angle_error(a) <= kFaceTolerance; });
}

std::size_t extract_top_face_id(const Eigen::Quaterniond& q) {
  const auto d = up_alignment(q);
  std::size_t best = 0;
  for (std::size_t f = 1; f < kFaces; ++f) {
    if (d[f] > d[best] + 1e-12) best = f;
  }
  return best;
}

Eigen::Quaterniond face_up_rotation(std::size_t face) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  switch (face) {
    case 0:
      return Eigen::Quaterniond::Identity();
    case 1:
      return Eigen::Quaterniond(AngleAxisd(kPi, Vector3d::UnitX()));
    case 2:
      return Eigen::Quaterniond(AngleAxisd(kHalfPi, Vector3d::UnitY()));
    case 3:
      return Eigen::Quaterniond(AngleAxisd(-kHalfPi, Vector3d::UnitY()));
    case 4:
      return Eigen::Quaterniond(AngleAxisd(-kHalfPi, Vector3d::UnitX()));
    case 5:
      return Eigen::Quaterniond(AngleAxisd(kHalfPi, Vector3d::UnitX()));
    default:
      throw ContractError("face index out of range");
  }
}

Eigen::Quaterniond random_upward_orientation(RandomSource& rng) {
  const std::size_t face = rng.index(kFaces);
  const double yaw = rng.uniform(-kPi, kPi);
  Eigen::Quaterniond q =
      Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())) * face_up_rotation(face);
  return q.normalized();
}

double orientation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const Eigen::Quaterniond d = a.conjugate() * b;
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

CubeState::CubeState() : orientation_(Eigen::Quaterniond::Identity()) {}

CubeState::CubeState(LogicalCube logical, const Eigen::Quaterniond& orientation,
                     const std::array<double, kFaces>& face_angles)
    : logical_(std::move(logical)) {
  set_orientation(orientation);
  for (std::size_t f = 0; f < kFaces; ++f) {
    face_angles_[f] = wrap_angle(face_angles[f]);
    committed_[f] = snap_to_straight(face_angles_[f]);
  }
}

void CubeState::set_orientation(const Eigen::Quaterniond& q) {
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw ContractError("orientation must be a nonzero quaternion");
  orientation_ = q.normalized();
}

int CubeState::rotate_face(std::size_t face, double delta) {
  if (face >= kFaces) throw ContractError("face index out of range");
  if (!std::isfinite(delta)) throw ContractError("face rotation must be finite");
  constexpr double kEps = 1e-9;
  // The offset from the committed reference stays within a quarter turn, so
  // it can be accumulated without wrapping ambiguity.
  double offset = wrap_angle(face_angles_[face] - committed_[face]) + delta;
  face_angles_[face] = wrap_angle(face_angles_[face] + delta);
  int committed = 0;
  while (offset >= kHalfPi - kEps) {
    logical_ = apply_move(logical_, {face_from_index(face), 1});
    committed_[face] = snap_to_straight(committed_[face] + kHalfPi);
    offset -= kHalfPi;
    ++committed;
  }
  while (offset <= -kHalfPi + kEps) {
    logical_ = apply_move(logical_, {face_from_index(face), -1});
    committed_[face] = snap_to_straight(committed_[face] - kHalfPi);
    offset += kHalfPi;
    --committed;
  }
  return committed;
}

void CubeState::snap_face(std::size_t face) {
  if (face >= kFaces) throw ContractError("face index out of range");
  const double target = snap_to_straight(face_angles_[face]);
  rotate_face(face, wrap_angle(target - face_angles_[face]));
  face_angles_[face] = target;
}

nlohmann::json to_json(const CubeState& state) {
  const auto& q = state.orientation();
  std::vector<int> stickers(state.logical().stickers().begin(), state.logical().stickers().end());
  return {{"stickers", stickers},
          {"quat", {q.w(), q.x(), q.y(), q.z()}},
          {"face_angles", std::vector<double>(state.face_angles().begin(), state.face_angles().end())}};
}

CubeState cube_state_from_json(const nlohmann::json& j) {
  try {
    const auto raw = j.at("stickers").get<std::vector<int>>();
    const auto quat = j.at("quat").get<std::vector<double>>();
    const auto angles = j.at("face_angles").get<std::vector<double>>();
    if (raw.size() != kFacelets || quat.size() != 4 || angles.size() != kFaces) {
      throw DataError("cube state arrays have the wrong length");
    }
    std::array<std::uint8_t, kFacelets> stickers{};
    for (std::size_t i = 0; i < kFacelets; ++i) {
      if (raw[i] < 0 || raw[i] >= static_cast<int>(kFacelets)) throw DataError("sticker id out of range");
      stickers[i] = static_cast<std::uint8_t>(raw[i]);
    }
    const Eigen::Quaterniond q(quat[0], quat[1], quat[2], quat[3]);
    if (std::abs(q.norm() - 1.0) > 1e-6) throw DataError("orientation quaternion is not normalized");
    std::array<double, kFaces> a{};
    std::copy(angles.begin(), angles.end(), a.begin());
    return CubeState(LogicalCube::from_stickers(stickers), q, a);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed cube state: ") + e.what());
  }
}

Goal generate_block_goal(RandomSource& rng) {
  Goal g;
  g.orientation = random_upward_orientation(rng);
  return g;
}

Goal generate_goal(const CubeState& state, RandomSource& rng) {
  const bool aligned =
      is_orientation_aligned(state.orientation()) && is_faces_aligned(state.face_angles());
  const double u = rng.uniform01();
  Goal g;
  auto angles = state.face_angles();
  if (aligned && u < 0.5) {
    const double side = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    const std::size_t top = extract_top_face_id(state.orientation());
    angles[top] = wrap_angle(angles[top] + side * kHalfPi);
    g.face_angles = angles;
  } else {
    for (auto& a : angles) a = snap_to_straight(a);
    g.face_angles = angles;
    g.orientation = random_upward_orientation(rng);
  }
  return g;
}

Decomposition decompose_scramble(std::span<const Move> moves, std::optional<Face> initial_top) {
  Decomposition out;
  if (moves.empty()) return out;
  Face top = initial_top.value_or(moves.front().face);
  for (const auto& m : moves) {
    if (m.face != top) {
      out.subgoals.push_back({SubgoalKind::Flip, m.face, 0});
      ++out.flips;
      top = m.face;
    }
    const int n = std::abs(m.quarter_turns);
    const int dir = m.quarter_turns < 0 ? -1 : 1;
    for (int k = 0; k < n; ++k) {
      out.subgoals.push_back({SubgoalKind::Rotation, m.face, dir});
      ++out.rotations;
    }
  }
  return out;
}

double move_angle(double a, double b) {
  const double delta = positive_mod(b - a + kQuarterPi, kHalfPi) - kQuarterPi;
  return a + delta;
}

TrackedAngles track_face_angles(const TrackedAngles& current, const VisionPrediction& prediction) {
  if (prediction.active_axis < 0 || prediction.active_axis > 2) {
    throw ContractError("active axis must be 0, 1 or 2");
  }
  TrackedAngles out = current;
  const std::size_t top = extract_top_face_id(prediction.orientation);
  const bool aligned = is_orientation_aligned(prediction.orientation);
  for (std::size_t i = 0; i < kFaces; ++i) {
    if (i == top && aligned) {
      out.base[i] = prediction.top_angle;
      out.tracked[i] = prediction.top_angle;
      continue;
    }
    const auto axis = static_cast<int>(i / 2);
    const auto slot = i % 2;
    if (axis == prediction.active_axis) {
      out.tracked[i] = move_angle(out.base[i], prediction.active_angles[slot]);
    }
  }
  return out;
}

}  // namespace adr::cube
