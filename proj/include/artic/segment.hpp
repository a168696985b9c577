#pragma once

#include "artic/config.hpp"
#include "artic/types.hpp"

#include <vector>

namespace artic {

/// Disjoint, exhaustive split of the surface cloud into movable and static
/// point indices.
struct SurfacePartition {
  std::vector<int> movable;
  std::vector<int> static_part;
  bool no_moving_pixels = false;  // frame-0 map had no pixel above threshold
};

/// Segment ids absent from frame 0.
std::vector<int> classify_newly_observed(const std::vector<SegmentTrack>& tracks);

/// Movable/static partition of the surface cloud from the frame-0 moving
/// map: pixels with map value above config.moving_threshold are unprojected
/// through the frame-0 observation (identity camera), and surface points
/// within config.attach_radius of any of them become movable. An all-static
/// map yields an empty movable set with the no_moving_pixels flag raised.
SurfacePartition extract_movable_part(const PointCloud& surface, const MovingMap& map0,
                                      const FrameObservation& frame0,
                                      const PipelineConfig& config);

}  // namespace artic
