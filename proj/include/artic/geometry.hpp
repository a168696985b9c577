#pragma once

#include "artic/kdtree.hpp"
#include "artic/types.hpp"

#include <optional>
#include <span>

namespace artic {

/// Weighted least-squares rigid alignment (Kabsch/Umeyama) of matched point
/// sets: returns T minimizing sum w_i * |T src_i - dst_i|^2. Pass an empty
/// weight span for unit weights.
/// Throws DegenerateConfiguration when the weighted cross-covariance has
/// effective rank < 2 (collinear or fewer than 3 effective points).
RigidTransform fit_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst,
                                   std::span<const double> weights);

struct ScrewDecomposition {
  struct Revolute {
    Vec3 axis;    // unit
    Vec3 pivot;   // point of the axis line closest to the origin
    double angle;  // rad, in (0, pi]
  };
  struct Prismatic {
    Vec3 axis;       // unit
    double distance;  // m, > 0
  };
  std::optional<Revolute> revolute;    // nullopt when angle < 1e-6 rad
  std::optional<Prismatic> prismatic;  // nullopt when |translation| < 1e-9 m
};

/// Extracts both joint hypotheses from one rigid motion. Degeneracy is a
/// value, not an error.
ScrewDecomposition screw_decompose(const RigidTransform& T);

/// Rigid transform of the movable part for a given joint state: rotation
/// about the joint axis line for revolute joints, translation along the axis
/// for prismatic joints.
RigidTransform apply_joint(const JointModel& joint, double state);

/// Weighted mean distance from each query point to its exact nearest
/// neighbor in the indexed target cloud (Euclidean, non-squared). Returns 0
/// when the weights sum to 0. Pass an empty weight span for unit weights.
double chamfer_one_directional(std::span<const Vec3> query, const KdTree& target_index,
                               std::span<const double> weights = {});

/// Derivative of the Rodrigues rotation R(w) v with respect to the
/// axis-angle vector w, as a 3x3 matrix (column i = d(Rv)/dw_i).
Mat3 rotation_vector_jacobian(const Vec3& w, const Vec3& v);

/// Angle of the relative rotation between two rotation matrices, in [0, pi].
double rotation_geodesic_distance(const Mat3& a, const Mat3& b);

}  // namespace artic
