#pragma once

#include "artic/types.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace artic {

// ---------------------------------------------------------------------------
// Dataset: the in-memory interchange unit consumed by the pipeline. Produced
// either by the synthetic generator below or by reading a manifest (io).
// ---------------------------------------------------------------------------

struct GroundTruth {
  JointModel joint;
  JointStateSequence states;
  std::vector<RigidTransform> cameras;  // world-from-camera, cameras[0] = identity
  std::vector<std::vector<std::uint8_t>> moving_maps;  // per frame, H*W
  std::vector<std::uint16_t> surface_labels;           // per surface point, part id
  int movable_part = -1;
};

struct Dataset {
  int frame_count = 0;
  int height = 0;
  int width = 0;
  Intrinsics intrinsics;
  PointCloud surface;                        // P^O, frame-0 camera coordinates
  std::vector<std::uint16_t> surface_labels; // part id per surface point
  std::vector<FrameObservation> frames;
  std::vector<MovingMap> maps;               // per frame, possibly corrupted
  std::vector<SegmentTrack> segments;
  std::vector<CorrespondenceSet> correspondences;
  std::optional<GroundTruth> gt;
};

// ---------------------------------------------------------------------------
// Scene specification
// ---------------------------------------------------------------------------

struct CuboidPart {
  int id = 0;
  Vec3 center = Vec3::Zero();
  Vec3 extent = Vec3::Ones();  // full side lengths, m
  double density = 2500;       // surface points per m^2
};

struct SceneSpec {
  std::uint64_t seed = 0;
  std::vector<CuboidPart> parts;
  JointModel joint;
  int movable_part = 0;
  std::vector<double> states;  // one per frame, states[0] == 0, monotone

  int height = 64;
  int width = 64;
  Intrinsics intrinsics{55, 55, 31.5, 31.5};

  bool retarget_enabled = true;
  int retarget_min = 7;
  int retarget_max = 10;
  double camera_position_noise = 0.0;  // m
  double camera_rotation_noise = 0.0;  // rad

  double point_noise = 0.0;      // sigma_pts, m
  double mask_corruption = 0.0;  // rho, pixel flip probability
  double outlier_rate = 0.0;     // injected correspondence outliers per true match

  int fuse_views = 24;
  double fuse_radius = 0.0;    // 0 => derived from scene bounds
  double dedup_voxel = 0.005;  // m

  int frame_count() const { return static_cast<int>(states.size()); }
  void validate() const;  // throws std::invalid_argument
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Deterministic (given spec.seed) synthetic scene: surface cloud, camera
/// trajectory, per-frame z-buffered observations, moving maps, segment
/// tracks, and exact correspondences with injected outliers. Ground truth is
/// attached to the returned dataset. Throws EmptyFrame when a frame observes
/// no object points.
Dataset generate_scene(const SceneSpec& spec);

/// Viewpoints (world-from-camera) used for surface fusion: spec.fuse_views
/// poses on a sphere around the object, looking at its center.
std::vector<RigidTransform> fusion_viewpoints(const SceneSpec& spec);

/// Object surface cloud at state 0: union of z-buffered renders from the
/// given viewpoints, voxel-deduplicated at spec.dedup_voxel. `labels`, when
/// non-null, receives the part id of every kept point.
PointCloud fuse_surface_cloud(const SceneSpec& spec, const std::vector<RigidTransform>& views,
                              std::vector<std::uint16_t>* labels = nullptr);
PointCloud fuse_surface_cloud(const SceneSpec& spec, std::vector<std::uint16_t>* labels = nullptr);

/// Deterministic surface samples of one cuboid part: cell-centered grids on
/// all six faces with spacing ~ 1/sqrt(density), odd counts so every face
/// center is sampled exactly.
std::vector<Vec3> sample_cuboid_surface(const CuboidPart& part);

/// Gaussian random-walk camera trajectory: a new target pose every
/// [retarget_min, retarget_max] frames, linear/slerp interpolation between
/// targets. Identity everywhere when retargeting is disabled.
std::vector<RigidTransform> camera_trajectory(const SceneSpec& spec);

/// Seeded RNG stream, decorrelated across (seed, stream) pairs.
std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t stream);

/// A randomized single-joint panel scene suitable for pipeline tests: one
/// movable panel and one static slab, separated by a clear gap, with a
/// gently moving camera. `noisy` adds observation noise, correspondence
/// outliers, and mask corruption.
SceneSpec make_random_scene_spec(std::uint64_t scene_seed, JointType type, bool noisy);

}  // namespace artic
