#pragma once

#include "artic/coarse.hpp"
#include "artic/config.hpp"
#include "artic/kdtree.hpp"
#include "artic/synth.hpp"
#include "artic/types.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace artic {

/// Optimization state for one joint hypothesis. Camera poses are the coarse
/// initialization composed with per-frame 6-dof increments (axis-angle +
/// translation); the joint axis is stored unnormalized and normalized in the
/// forward pass; states[0] and the frame-0 camera are frozen.
struct RefineState {
  JointType hypothesis = JointType::Revolute;
  std::vector<RigidTransform> camera_base;                 // per selected frame
  std::vector<Eigen::Matrix<double, 6, 1>> camera_delta;   // [0] frozen at zero
  Vec3 axis_raw = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();       // revolute only
  std::vector<double> states;      // per selected frame, states[0] == 0
  Eigen::VectorXd logits;          // moving vector, one per frame-0 segment

  std::vector<std::array<double, 3>> history;  // {L_static, L_dynamic, L} per iteration
  double final_loss = 0;                       // full-sample loss after optimization

  RigidTransform camera_pose(int k) const;
  JointModel joint_model() const;
  Eigen::VectorXd moving_probabilities() const;
};

/// Precomputed, state-independent context for one refinement run.
struct RefineProblem {
  const Dataset* data = nullptr;
  std::vector<int> selected;
  KdTree surface_index;
  PipelineConfig config;
  std::uint64_t seed = 0;

  struct FramePoints {
    std::vector<int> point_index;         // into the frame's compacted points
    std::vector<std::vector<int>> slots;  // covering moving-vector slots per point
  };
  std::vector<FramePoints> frame_points;  // per selected frame
  std::vector<int> segment_slot;          // per dataset segment, -1 for newly observed
  int moving_dim = 0;

  int frame_dim() const { return static_cast<int>(selected.size()); }
  int dof(JointType hypothesis) const;
};

RefineProblem build_refine_problem(const Dataset& data, const std::vector<int>& selected,
                                   const PipelineConfig& config, std::uint64_t seed);

/// Per-segment moving probability from mask/moving-map overlap, clamped to
/// (clamp_lo, clamp_hi) and returned as logits. Throws EmptySegment for a
/// track with no pixels in any frame.
Eigen::VectorXd init_moving_vector(const std::vector<SegmentTrack>& tracks,
                                   const std::vector<MovingMap>& maps,
                                   const std::vector<int>& selected,
                                   const PipelineConfig& config);

/// Frozen nearest-neighbor assignments for one iteration: one static and one
/// dynamic target per sampled point.
struct FrameCorrespondences {
  std::vector<int> sample;          // positions into FramePoints arrays
  std::vector<Vec3> target_static;
  std::vector<Vec3> target_dynamic;
};
using Correspondences = std::vector<FrameCorrespondences>;

/// Re-associates nearest neighbors at the current state. When `subsample` is
/// set, each frame draws a fresh seeded 50% subset keyed by (iteration,
/// frame).
Correspondences associate(const RefineProblem& problem, const RefineState& state, int iteration,
                          bool subsample);

/// L = L_static + L_dynamic with the given frozen correspondences.
double forward_loss(const RefineProblem& problem, const RefineState& state,
                    const Correspondences& corr, double* l_static = nullptr,
                    double* l_dynamic = nullptr);

/// Loss plus analytic gradient with respect to the packed parameters.
double loss_and_grad(const RefineProblem& problem, const RefineState& state,
                     const Correspondences& corr, Eigen::VectorXd* grad,
                     double* l_static = nullptr, double* l_dynamic = nullptr);

/// Free-parameter packing: camera increments (frames 1..F-1), axis, pivot
/// (revolute only), states (1..F-1), logits.
Eigen::VectorXd pack_state(const RefineProblem& problem, const RefineState& state);
void unpack_state(const RefineProblem& problem, const Eigen::VectorXd& x, RefineState* state);

/// Initial state from the coarse estimate for one hypothesis.
RefineState make_initial_state(const RefineProblem& problem, const CoarseEstimate& coarse,
                               JointType hypothesis);

/// Adam for config.adam_iterations iterations; correspondences re-associated
/// (then frozen) every iteration. Throws NonFiniteLoss if the loss leaves
/// the reals. The returned state carries the loss history and a full-sample
/// final loss.
RefineState optimize(const RefineProblem& problem, const RefineState& initial);

/// Moving maps reconstructed from the segment masks and the moving vector,
/// one per selected frame.
std::vector<MovingMap> reconstruct_moving_maps(const RefineProblem& problem,
                                               const RefineState& state);

struct JointSelection {
  JointType type = JointType::Revolute;
  JointModel joint;
  JointStateSequence states;           // per selected frame
  std::vector<MovingMap> maps;         // per selected frame
  double axis_surface_distance = 0;    // min distance surface -> revolute axis line
  bool forced_prismatic = false;       // by the axis-distance rule
};

/// Final joint-type decision: prismatic when the optimized revolute axis
/// line is farther than config.prismatic_axis_distance from every surface
/// point, otherwise the hypothesis with the lower final loss.
JointSelection select_joint_type(const RefineState& revolute, const RefineState& prismatic,
                                 const RefineProblem& problem);

}  // namespace artic
