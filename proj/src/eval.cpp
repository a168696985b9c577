#include "artic/eval.hpp"

#include "artic/geometry.hpp"
#include "artic/kdtree.hpp"
#include "artic/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace artic {

namespace {

double line_to_line_distance(const Vec3& p1, const Vec3& a1, const Vec3& p2, const Vec3& a2) {
  const Vec3 cross = a1.cross(a2);
  const Vec3 d = p2 - p1;
  const double cn = cross.norm();
  if (cn < 1e-12) {
    // Parallel lines: point-to-line distance.
    return (d - a1.dot(d) * a1).norm();
  }
  return std::abs(d.dot(cross)) / cn;
}

double one_directional(const std::vector<Vec3>& query, const KdTree& target) {
  double sum = 0;
  for (const Vec3& q : query) sum += target.nearest(q).distance;
  return sum / static_cast<double>(query.size());
}

std::vector<Vec3> draw_sample(const std::vector<Vec3>& cloud, std::uint64_t seed,
                              int sample_count) {
  if (sample_count <= 0 || static_cast<int>(cloud.size()) <= sample_count) return cloud;
  auto rng = seeded_stream(seed, 7000);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(cloud.size()) - 1);
  std::vector<Vec3> out(sample_count);
  for (int i = 0; i < sample_count; ++i) out[i] = cloud[pick(rng)];
  return out;
}

}  // namespace

JointMetrics joint_metrics(const JointModel& pred, const JointStateSequence& pred_states,
                           const JointModel& gt, const JointStateSequence& gt_states) {
  JointMetrics m;
  const double dot = pred.axis.dot(gt.axis);
  m.axis_error = std::acos(std::clamp(std::abs(dot), 0.0, 1.0));
  m.type_error = pred.type != gt.type;
  if (gt.type == JointType::Revolute)
    m.position_error = line_to_line_distance(pred.pivot, pred.axis, gt.pivot, gt.axis);

  const double sign = dot < 0 ? -1.0 : 1.0;
  const std::size_t n = std::min(pred_states.states.size(), gt_states.states.size());
  double sum = 0;
  for (std::size_t t = 0; t < n; ++t)
    sum += std::abs(sign * pred_states.states[t] - gt_states.states[t]);
  m.state_error = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return m;
}

JointMetrics failure_metrics(const JointModel& gt) {
  JointMetrics m;
  m.failure = true;
  m.axis_error = std::numbers::pi / 2;
  m.state_error = gt.type == JointType::Revolute ? std::numbers::pi / 2 : 1.0;
  m.position_error = 1.0;
  m.type_error = true;
  return m;
}

double symmetric_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                         std::uint64_t seed, int sample_count) {
  if (a.empty() || b.empty()) return 1.0;
  const std::vector<Vec3> sa = draw_sample(a, seed, sample_count);
  const std::vector<Vec3> sb = draw_sample(b, seed + 1, sample_count);
  const KdTree ta(sa), tb(sb);
  return 0.5 * (one_directional(sa, tb) + one_directional(sb, ta));
}

GeometryMetrics geometry_metrics(const PointCloud& surface, const SurfacePartition& pred,
                                 const std::vector<std::uint16_t>& gt_labels, int movable_part,
                                 std::uint64_t seed, int sample_count) {
  std::vector<Vec3> pred_mov, pred_stat, gt_mov, gt_stat;
  for (int i : pred.movable) pred_mov.push_back(surface.points[i]);
  for (int i : pred.static_part) pred_stat.push_back(surface.points[i]);
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (static_cast<int>(gt_labels[i]) == movable_part)
      gt_mov.push_back(surface.points[i]);
    else
      gt_stat.push_back(surface.points[i]);
  }

  GeometryMetrics g;
  g.cd_whole = symmetric_chamfer(surface.points, surface.points, seed, sample_count);
  g.cd_movable = symmetric_chamfer(pred_mov, gt_mov, seed + 2, sample_count);
  g.cd_static = symmetric_chamfer(pred_stat, gt_stat, seed + 4, sample_count);
  return g;
}

double miou(const std::vector<MovingMap>& pred,
            const std::vector<std::vector<std::uint8_t>>& gt) {
  double sum = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred[t].size(); ++i) {
      const bool p = pred[t][i] >= 0.5f;
      const bool g = gt[t][i] != 0;
      inter += p && g;
      uni += p || g;
    }
    sum += uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
  }
  return pred.empty() ? 1.0 : sum / static_cast<double>(pred.size());
}

CameraMetrics camera_metrics(const std::vector<RigidTransform>& pred,
                             const std::vector<RigidTransform>& gt) {
  CameraMetrics m;
  const std::size_t n = std::min(pred.size(), gt.size());
  for (std::size_t k = 0; k < n; ++k) {
    m.rotation_error += rotation_geodesic_distance(pred[k].rotation(), gt[k].rotation());
    m.translation_error += (pred[k].translation() - gt[k].translation()).norm();
  }
  if (n > 0) {
    m.rotation_error /= static_cast<double>(n);
    m.translation_error /= static_cast<double>(n);
  }
  return m;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  double var = 0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return a;
}

}  // namespace artic
