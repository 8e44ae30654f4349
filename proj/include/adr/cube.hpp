#pragma once

// Logical Rubik's cube: facelet permutations, WCA scrambles, goal
// generation, subgoal decomposition and face-angle tracking.
//
// Faces are indexed U=0, D=1, L=2, R=3, F=4, B=5 so that faces 2a and 2a+1
// share rotation axis a. In the cube body frame U points along +z, R along
// +x and B along +y. A positive face angle, and a Move with quarter_turns
// +1, is a clockwise turn seen from outside the face.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "json.hpp"

#include "adr/random.hpp"

namespace adr::cube {

enum class Face : std::uint8_t { U = 0, D = 1, L = 2, R = 3, F = 4, B = 5 };

inline constexpr std::size_t kFaces = 6;
inline constexpr std::size_t kFacelets = 54;

char face_letter(Face f);
std::size_t face_index(Face f);
Face face_from_index(std::size_t i);
/// Outward normal of the face in the cube body frame.
Eigen::Vector3d face_normal(Face f);

struct Move {
  Face face = Face::U;
  int quarter_turns = 1;  // +1, -1 or 2

  friend bool operator==(const Move&, const Move&) = default;
};

Move inverse(Move m);
std::string to_string(Move m);

/// Parses whitespace-separated WCA tokens ("R", "U'", "F2"). Throws
/// ParseError carrying the byte offset of the first bad token.
std::vector<Move> parse_scramble(std::string_view text);

std::string format_scramble(std::span<const Move> moves);

/// Reversed sequence of inverted moves.
std::vector<Move> invert_scramble(std::span<const Move> moves);

int quarter_turn_count(std::span<const Move> moves);

/// Permutation state of the 54 facelets. Entry `i` holds the id of the
/// facelet currently at position `i`; the solved cube is the identity.
/// Facelet id / 9 is its color (home face). Position 9f + 4 is face f's center.
class LogicalCube;
LogicalCube apply_move(const LogicalCube& cube, Move m);

class LogicalCube {
 public:
  LogicalCube();  // solved

  /// Throws DataError unless `stickers` is reachable from the solved cube.
  static LogicalCube from_stickers(const std::array<std::uint8_t, kFacelets>& stickers);

  const std::array<std::uint8_t, kFacelets>& stickers() const noexcept { return stickers_; }
  int color_at(std::size_t position) const { return stickers_.at(position) / 9; }
  bool is_solved() const;

  /// Positions whose facelet differs from `other`.
  std::size_t facelet_difference(const LogicalCube& other) const;

  friend bool operator==(const LogicalCube&, const LogicalCube&) = default;
  friend LogicalCube apply_move(const LogicalCube& cube, Move m);

 private:
  std::array<std::uint8_t, kFacelets> stickers_{};
};

LogicalCube apply_moves(const LogicalCube& cube, std::span<const Move> moves);

/// Full reachability test: fixed centers, valid cubies, matching corner and
/// edge permutation parity, corner twist sum 0 mod 3, edge flip sum 0 mod 2.
bool is_reachable(const std::array<std::uint8_t, kFacelets>& stickers);

inline constexpr double kOrientationTolerance = 0.4;  // rad, some face up
inline constexpr double kFaceTolerance = 0.1;         // rad, from a straight angle

/// Wraps to (-pi, pi].
double wrap_angle(double a);
/// Distance from the nearest multiple of pi/2.
double straight_angle_error(double a);
double snap_to_straight(double a);

/// Angle between the most upward face normal and world +z.
double up_face_deviation(const Eigen::Quaterniond& q);
bool is_orientation_aligned(const Eigen::Quaterniond& q);
bool is_faces_aligned(std::span<const double> face_angles);

/// Face whose rotated normal has the largest world-z component. Normals
/// within 1e-12 of the best count as tied; the lowest face index wins.
std::size_t extract_top_face_id(const Eigen::Quaterniond& q);

/// Rotation taking face `face`'s normal onto world +z.
Eigen::Quaterniond face_up_rotation(std::size_t face);

/// Uniformly chosen face pointing exactly up, composed with a uniform yaw.
Eigen::Quaterniond random_upward_orientation(RandomSource& rng);

/// Geodesic angle between two orientations.
double orientation_distance(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

/// Logical snapshot plus continuous orientation and six face angles.
class CubeState {
 public:
  CubeState();  // solved, identity orientation, zero angles
  CubeState(LogicalCube logical, const Eigen::Quaterniond& orientation,
            const std::array<double, kFaces>& face_angles);

  const LogicalCube& logical() const noexcept { return logical_; }
  const Eigen::Quaterniond& orientation() const noexcept { return orientation_; }
  const std::array<double, kFaces>& face_angles() const noexcept { return face_angles_; }

  void set_orientation(const Eigen::Quaterniond& q);

  /// Turns one face by `delta` radians. Each time the face passes a quarter
  /// turn from its last committed alignment, the matching logical move is
  /// applied. Returns the number of quarter turns committed (signed).
  int rotate_face(std::size_t face, double delta);

  /// Sets a face angle directly; used by alignment snapping.
  void snap_face(std::size_t face);

  /// Reference angle of the last committed alignment for each face.
  const std::array<double, kFaces>& committed_angles() const noexcept { return committed_; }

 private:
  LogicalCube logical_;
  Eigen::Quaterniond orientation_;
  std::array<double, kFaces> face_angles_{};
  std::array<double, kFaces> committed_{};
};

nlohmann::json to_json(const CubeState& state);
CubeState cube_state_from_json(const nlohmann::json& j);

struct Goal {
  std::optional<Eigen::Quaterniond> orientation;
  std::optional<std::array<double, kFaces>> face_angles;

  bool is_rotation() const { return !orientation.has_value(); }
};

/// Block-task goal: orientation only.
Goal generate_block_goal(RandomSource& rng);

/// Draws u ~ U(0, 1). When the cube is fully aligned and u < 0.5, the goal
/// turns the top face a quarter turn either way and carries no orientation;
/// otherwise the goal snaps the faces to straight angles and asks for a
/// random upward orientation.
Goal generate_goal(const CubeState& state, RandomSource& rng);

enum class SubgoalKind : std::uint8_t { Flip, Rotation };

struct Subgoal {
  SubgoalKind kind = SubgoalKind::Rotation;
  Face face = Face::U;
  int direction = 1;  // rotation sense; 0 for flips
};

struct Decomposition {
  std::vector<Subgoal> subgoals;
  int rotations = 0;
  int flips = 0;
};

/// Splits a scramble into flips (bring the move's face on top) and top-face
/// quarter-turn rotations. `initial_top` defaults to the first move's face.
Decomposition decompose_scramble(std::span<const Move> moves,
                                 std::optional<Face> initial_top = std::nullopt);

/// base + delta, delta = mod(b - a + pi/4, pi/2) - pi/4 in [-pi/4, pi/4).
double move_angle(double a, double b);

struct VisionPrediction {
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  int active_axis = 0;                   // 0, 1 or 2
  std::array<double, 2> active_angles{};  // [-pi/4, pi/4]
  double top_angle = 0.0;                // [-pi, pi]
};

struct TrackedAngles {
  std::array<double, kFaces> base{};
  std::array<double, kFaces> tracked{};
};

/// One post-processing update of the tracked face angles from a predicted
/// orientation, active axis and angles.
TrackedAngles track_face_angles(const TrackedAngles& current, const VisionPrediction& prediction);

}  // namespace adr::cube
