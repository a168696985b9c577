#include "artic/segment.hpp"

#include "artic/kdtree.hpp"

namespace artic {

std::vector<int> classify_newly_observed(const std::vector<SegmentTrack>& tracks) {
  std::vector<int> out;
  for (const auto& track : tracks)
    if (!track.present_in_frame0) out.push_back(track.id);
  return out;
}

SurfacePartition extract_movable_part(const PointCloud& surface, const MovingMap& map0,
                                      const FrameObservation& frame0,
                                      const PipelineConfig& config) {
  SurfacePartition partition;

  std::vector<Vec3> moving;
  for (std::size_t i = 0; i < frame0.points.size(); ++i)
    if (map0[frame0.pixels[i]] > config.moving_threshold) moving.push_back(frame0.points[i]);

  if (moving.empty()) {
    partition.no_moving_pixels = true;
    partition.static_part.resize(surface.size());
    for (std::size_t i = 0; i < surface.size(); ++i)
      partition.static_part[i] = static_cast<int>(i);
    return partition;
  }

  const KdTree index(moving);
  for (std::size_t i = 0; i < surface.size(); ++i) {
    if (index.nearest(surface.points[i]).distance <= config.attach_radius)
      partition.movable.push_back(static_cast<int>(i));
    else
      partition.static_part.push_back(static_cast<int>(i));
  }
  return partition;
}

}  // namespace artic
