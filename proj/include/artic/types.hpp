#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace artic {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct DegenerateConfiguration : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientStaticMatches : std::runtime_error {
  int frame;
  explicit InsufficientStaticMatches(int f)
      : std::runtime_error("insufficient static matches at frame " + std::to_string(f)), frame(f) {}
};
struct DegenerateMotion : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoValidPairs : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptySegment : std::runtime_error {
  int segment;
  explicit EmptySegment(int d)
      : std::runtime_error("segment " + std::to_string(d) + " has no pixels in any frame"), segment(d) {}
};
struct EmptyFrame : std::runtime_error {
  int frame;
  explicit EmptyFrame(int f)
      : std::runtime_error("frame " + std::to_string(f) + " observes no object points"), frame(f) {}
};
struct NonFiniteLoss : std::runtime_error {
  int iteration;
  explicit NonFiniteLoss(int it)
      : std::runtime_error("non-finite loss at iteration " + std::to_string(it)), iteration(it) {}
};

// ---------------------------------------------------------------------------
// Rigid transforms
// ---------------------------------------------------------------------------

/// Element of SE(3). Composition tracks chain length and re-projects the
/// rotation onto SO(3) once chains grow past kReorthonormalizeAfter, so long
/// pose chains stay orthonormal.
class RigidTransform {
 public:
  static constexpr int kReorthonormalizeAfter = 100;

  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static RigidTransform identity() { return RigidTransform(); }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  RigidTransform operator*(const RigidTransform& rhs) const {
    RigidTransform out(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
    out.chain_ = chain_ + rhs.chain_ + 1;
    if (out.chain_ > kReorthonormalizeAfter) out.reorthonormalize();
    return out;
  }

  RigidTransform inverse() const {
    RigidTransform out(rotation_.transpose(), -(rotation_.transpose() * translation_));
    out.chain_ = chain_;
    return out;
  }

  /// Polar projection of the rotation block onto SO(3).
  void reorthonormalize();

  bool is_valid(double tol = 1e-9) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
  int chain_ = 0;
};

// ---------------------------------------------------------------------------
// Joints
// ---------------------------------------------------------------------------

enum class JointType { Revolute, Prismatic };

inline const char* to_string(JointType t) {
  return t == JointType::Revolute ? "revolute" : "prismatic";
}

/// One-DoF joint. `pivot` is meaningful only for revolute joints and is kept
/// canonical: the point of the axis line closest to the origin.
struct JointModel {
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitZ();   // unit direction
  Vec3 pivot = Vec3::Zero();   // revolute only

  /// Projects `pivot` to the point on the axis line closest to the origin.
  void canonicalize() { pivot -= axis.dot(pivot) * axis; }
};

/// Per-frame scalar articulation values; states[0] == 0 by convention.
struct JointStateSequence {
  std::vector<double> states;
};

// ---------------------------------------------------------------------------
// Point clouds and observations
// ---------------------------------------------------------------------------

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<double> weights;  // optional; empty means all 1

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
};

/// One time step: the valid points of an organized (pixel-grid) cloud in the
/// frame's camera coordinates, with the source pixel of each point.
struct FrameObservation {
  int height = 0;
  int width = 0;
  Intrinsics intrinsics;
  std::vector<Vec3> points;   // compacted valid points
  std::vector<int> pixels;    // row-major pixel index per point

  /// H*W lookup table, -1 where no point. Built on demand by callers that
  /// need pixel-indexed access.
  std::vector<int> pixel_to_point() const {
    std::vector<int> lut(static_cast<std::size_t>(height) * width, -1);
    for (std::size_t i = 0; i < points.size(); ++i) lut[pixels[i]] = static_cast<int>(i);
    return lut;
  }
};

/// A part-segment's per-frame pixel masks.
struct SegmentTrack {
  int id = 0;
  std::vector<std::vector<std::uint8_t>> masks;  // per frame, H*W, 0/1
  bool present_in_frame0 = false;
};

/// Pixel-correspondence set between a pair of frames. Indices address the
/// compacted point lists of the two FrameObservations.
struct CorrespondenceSet {
  int frame_a = 0;
  int frame_b = 0;
  struct Match {
    int index_a;
    int index_b;
    double confidence;
  };
  std::vector<Match> matches;
};

using MovingMap = std::vector<float>;  // H*W, row-major, values in [0,1]

}  // namespace artic
