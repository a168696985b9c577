#pragma once

#include "artic/segment.hpp"
#include "artic/types.hpp"

#include <cstdint>
#include <vector>

namespace artic {

/// Joint-parameter errors. Axis error uses the undirected convention
/// (arccos |a_p . a_g|, in [0, pi/2]); position error is the minimum
/// distance between the two infinite axis lines (revolute ground truth
/// only); the state error sign follows the axis flip that minimized the
/// axis error. A failed run gets pi/2 for axis (and revolute state) and 1.0
/// for everything else.
struct JointMetrics {
  double axis_error = 0;      // rad
  double position_error = 0;  // m, revolute gt only
  bool type_error = false;
  double state_error = 0;  // rad or m, mean over frames
  bool failure = false;
};

JointMetrics joint_metrics(const JointModel& pred, const JointStateSequence& pred_states,
                           const JointModel& gt, const JointStateSequence& gt_states);
JointMetrics failure_metrics(const JointModel& gt);

/// Symmetric Chamfer distances for the whole cloud and the two partition
/// sides, each on `sample_count` seeded uniform samples per side
/// (sample_count <= 0 compares the full clouds). An empty side yields 1.0.
struct GeometryMetrics {
  double cd_whole = 0;
  double cd_movable = 0;
  double cd_static = 0;
};

double symmetric_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         std::uint64_t seed, int sample_count);

GeometryMetrics geometry_metrics(const PointCloud& surface, const SurfacePartition& pred,
                                 const std::vector<std::uint16_t>& gt_labels, int movable_part,
                                 std::uint64_t seed, int sample_count);

/// Mean over frames of the IoU of the binarized (>= 0.5) maps; a frame with
/// an empty union counts as 1.
double miou(const std::vector<MovingMap>& pred,
            const std::vector<std::vector<std::uint8_t>>& gt);

struct CameraMetrics {
  double rotation_error = 0;     // mean geodesic distance, rad
  double translation_error = 0;  // mean Euclidean distance, m
};

CameraMetrics camera_metrics(const std::vector<RigidTransform>& pred,
                             const std::vector<RigidTransform>& gt);

struct Aggregate {
  double mean = 0;
  double stddev = 0;  // population standard deviation
};
Aggregate aggregate(const std::vector<double>& values);

}  // namespace artic
