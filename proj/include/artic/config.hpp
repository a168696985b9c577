#pragma once

#include <string>

namespace artic {

/// Pipeline constants. Defaults follow the reference implementation values;
/// everything here can be overridden from a JSON config file.
struct PipelineConfig {
  // coarse
  int target_frames = 20;            // subsample the video to about this many frames
  double match_confidence = 0.95;    // minimum correspondence confidence
  int pair_max_step = 3;             // joint pairs within this many selected-frame steps
  int min_pair_matches = 80;         // skip pairs with fewer valid dynamic matches
  int ransac_iterations = 50;
  double ransac_inlier_radius = 0.02;  // m
  double dynamic_map_threshold = 0.5;  // soft-map value that marks a pixel dynamic

  // refine
  int adam_iterations = 400;
  double adam_lr = 5e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double point_subsample = 0.5;        // fraction of points sampled per frame per iteration
  double moving_vector_clamp_lo = 0.02;
  double moving_vector_clamp_hi = 0.98;
  double prismatic_axis_distance = 0.1;  // m; axis farther than this from the surface => prismatic

  // segment
  double moving_threshold = 0.7;  // moving-map value that marks a moving pixel
  double attach_radius = 0.03;    // m; surface points this close to moving pixels are movable

  // eval
  int chamfer_samples = 10000;

  int threads = 1;

  static PipelineConfig load(const std::string& path);
  void save(const std::string& path) const;
};

}  // namespace artic
