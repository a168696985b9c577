#pragma once

#include "artic/config.hpp"
#include "artic/synth.hpp"
#include "artic/types.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace artic {

struct PairFit {
  JointModel model;
  double delta = 0;     // state change between the two frames (rad or m)
  double residual = 0;  // mean inlier residual, m
  int inliers = 0;
  bool valid = false;
};

struct PairEstimate {
  int a = 0, b = 0;  // positions in the selected-frame list
  int matches_used = 0;
  PairFit revolute;
  PairFit prismatic;
  bool has_vote = false;
  JointType vote = JointType::Revolute;
};

struct CoarseEstimate {
  std::vector<int> selected;            // frame indices into the dataset
  std::vector<RigidTransform> cameras;  // per selected frame, frame-0 coordinates

  struct Hypothesis {
    bool valid = false;
    Vec3 axis = Vec3::UnitZ();
    Vec3 pivot = Vec3::Zero();
    int votes = 0;
    double mean_residual = std::numeric_limits<double>::infinity();
    std::vector<double> states;  // per selected frame, states[0] == 0
  };
  Hypothesis revolute;
  Hypothesis prismatic;
  JointType voted_type = JointType::Revolute;

  std::vector<PairEstimate> pairs;  // diagnostics

  const Hypothesis& hypothesis(JointType t) const {
    return t == JointType::Revolute ? revolute : prismatic;
  }
};

/// Uniform stride selection of about `target` frames, always including the
/// first and last; all frames when there are at most target + 2.
std::vector<int> subsample_frames(int total_frames, int target = 20);

/// Chains relative poses from static high-confidence matches between
/// consecutive selected frames; every pose is expressed in frame-0
/// coordinates. Throws InsufficientStaticMatches when a pair has fewer than
/// 3 usable matches.
std::vector<RigidTransform> estimate_camera_poses(const Dataset& data,
                                                  const std::vector<int>& selected,
                                                  const PipelineConfig& config);

/// RANSAC joint fit for one frame pair from world-aligned dynamic match
/// points. Sampling is index-based on a content-sorted copy of the matches,
/// so the result does not depend on input order. Throws DegenerateMotion
/// when no sample yields a non-degenerate model under the hypothesis.
PairFit estimate_joint_pair(std::span<const Vec3> points_a, std::span<const Vec3> points_b,
                            JointType hypothesis, const PipelineConfig& config,
                            std::uint64_t seed);

/// Majority vote on joint type and per-hypothesis averaging of axes, pivots,
/// and integrated states. Throws NoValidPairs when nothing contributed.
void vote_and_average(const std::vector<PairEstimate>& pairs, int selected_count,
                      CoarseEstimate* out);

/// Full coarse stage: frame subsampling, camera chaining, per-pair RANSAC
/// under both hypotheses, voting and averaging.
CoarseEstimate coarse_predict(const Dataset& data, const PipelineConfig& config,
                              std::uint64_t seed);

}  // namespace artic
