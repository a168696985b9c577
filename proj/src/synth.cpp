#include "artic/synth.hpp"

#include "artic/geometry.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace artic {

namespace {

Vec3 normal3(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng), b = n(rng), c = n(rng);
  return Vec3(a, b, c);
}

int odd_count(double length, double spacing) {
  int n = std::max(1, static_cast<int>(std::lround(length / spacing)));
  if (n % 2 == 0) ++n;
  return n;
}

struct RenderPoint {
  Vec3 p;  // position at state 0, frame-0 camera coordinates
  std::uint16_t part;
};

std::vector<int> render_zbuffer(const std::vector<Vec3>& world, const RigidTransform& camera,
                                int height, int width, const Intrinsics& intr) {
  std::vector<int> winner(static_cast<std::size_t>(height) * width, -1);
  std::vector<double> depth(winner.size(), std::numeric_limits<double>::infinity());
  const RigidTransform cam_from_world = camera.inverse();
  for (std::size_t i = 0; i < world.size(); ++i) {
    const Vec3 q = cam_from_world * world[i];
    if (q.z() < 0.05) continue;
    const int u = static_cast<int>(std::floor(intr.fx * q.x() / q.z() + intr.cx + 0.5));
    const int v = static_cast<int>(std::floor(intr.fy * q.y() / q.z() + intr.cy + 0.5));
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    const std::size_t idx = static_cast<std::size_t>(v) * width + u;
    if (q.z() < depth[idx]) {
      depth[idx] = q.z();
      winner[idx] = static_cast<int>(i);
    }
  }
  return winner;
}

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};
struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
    h ^= static_cast<std::size_t>(k.y) * 19349663u;
    h ^= static_cast<std::size_t>(k.z) * 83492791u;
    return h;
  }
};

}  // namespace

std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  return rng;
}

void SceneSpec::validate() const {
  if (states.size() < 2) throw std::invalid_argument("scene needs at least 2 frames");
  if (states.front() != 0.0) throw std::invalid_argument("state schedule must start at 0");
  for (std::size_t i = 1; i < states.size(); ++i)
    if (states[i] < states[i - 1]) throw std::invalid_argument("state schedule must be monotone");
  if (parts.empty()) throw std::invalid_argument("scene needs at least one part");
  bool movable_found = false;
  for (const auto& part : parts) {
    if (part.density <= 0) throw std::invalid_argument("part density must be positive");
    if ((part.extent.array() <= 0).any()) throw std::invalid_argument("part extent must be positive");
    if (part.id == movable_part) movable_found = true;
  }
  if (!movable_found) throw std::invalid_argument("movable_part does not name a part");
  if (height <= 0 || width <= 0) throw std::invalid_argument("bad grid size");
  if (retarget_min < 1 || retarget_max < retarget_min)
    throw std::invalid_argument("bad retarget interval");
  if (std::abs(joint.axis.norm() - 1.0) > 1e-9) throw std::invalid_argument("joint axis must be unit");
}

std::vector<Vec3> sample_cuboid_surface(const CuboidPart& part) {
  std::vector<Vec3> out;
  const double spacing = 1.0 / std::sqrt(part.density);
  const Vec3 half = part.extent / 2.0;
  // axis = face normal direction; (u, v) = the other two axes
  for (int axis = 0; axis < 3; ++axis) {
    const int ua = (axis + 1) % 3, va = (axis + 2) % 3;
    const int nu = odd_count(part.extent[ua], spacing);
    const int nv = odd_count(part.extent[va], spacing);
    for (int side = -1; side <= 1; side += 2) {
      for (int iu = 0; iu < nu; ++iu) {
        for (int iv = 0; iv < nv; ++iv) {
          Vec3 p = part.center;
          p[axis] += side * half[axis];
          p[ua] += -half[ua] + (iu + 0.5) * part.extent[ua] / nu;
          p[va] += -half[va] + (iv + 0.5) * part.extent[va] / nv;
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

std::vector<RigidTransform> camera_trajectory(const SceneSpec& spec) {
  const int t_total = spec.frame_count();
  std::vector<RigidTransform> out(t_total);
  if (!spec.retarget_enabled) return out;

  auto rng = seeded_stream(spec.seed, 1);
  std::uniform_int_distribution<int> interval(spec.retarget_min, spec.retarget_max);

  std::vector<int> times{0};
  std::vector<RigidTransform> targets{RigidTransform::identity()};
  int t = 0;
  while (t < t_total - 1) {
    t += interval(rng);
    const Vec3 dp = spec.camera_position_noise * normal3(rng);
    const Vec3 dw = spec.camera_rotation_noise * normal3(rng);
    const RigidTransform& prev = targets.back();
    Mat3 r = prev.rotation();
    if (dw.norm() > 0) r = r * Eigen::AngleAxisd(dw.norm(), dw.normalized()).toRotationMatrix();
    targets.emplace_back(r, prev.translation() + dp);
    times.push_back(t);
  }

  std::size_t k = 0;
  for (int f = 0; f < t_total; ++f) {
    while (k + 1 < times.size() && times[k + 1] <= f) ++k;
    if (k + 1 >= times.size()) {
      out[f] = targets[k];
      continue;
    }
    const double alpha = static_cast<double>(f - times[k]) / (times[k + 1] - times[k]);
    const Eigen::Quaterniond qa(targets[k].rotation());
    const Eigen::Quaterniond qb(targets[k + 1].rotation());
    const Mat3 r = qa.slerp(alpha, qb).toRotationMatrix();
    const Vec3 p =
        (1 - alpha) * targets[k].translation() + alpha * targets[k + 1].translation();
    out[f] = RigidTransform(r, p);
  }
  return out;
}

std::vector<RigidTransform> fusion_viewpoints(const SceneSpec& spec) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& part : spec.parts) {
    lo = lo.cwiseMin(part.center - part.extent / 2);
    hi = hi.cwiseMax(part.center + part.extent / 2);
  }
  const Vec3 center = (lo + hi) / 2;
  double radius = spec.fuse_radius;
  if (radius <= 0) radius = std::max(0.6, 2.2 * (hi - lo).norm() / 2);

  std::vector<RigidTransform> views;
  const double elevations[3] = {-0.85, 0.0, 0.85};
  const int per_ring = (spec.fuse_views + 2) / 3;
  for (int k = 0; k < spec.fuse_views; ++k) {
    const double el = elevations[k % 3];
    const double az = 2.0 * M_PI * (k / 3) / per_ring + 0.2 * (k % 3);
    const Vec3 dir(std::cos(el) * std::cos(az), std::sin(el), std::cos(el) * std::sin(az));
    const Vec3 pos = center + radius * dir;
    Vec3 z = (center - pos).normalized();
    Vec3 up = Vec3::UnitY();
    if (std::abs(up.dot(z)) > 0.99) up = Vec3::UnitX();
    const Vec3 x = up.cross(z).normalized();
    const Vec3 y = z.cross(x);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    views.emplace_back(r, pos);
  }
  return views;
}

PointCloud fuse_surface_cloud(const SceneSpec& spec, const std::vector<RigidTransform>& views,
                              std::vector<std::uint16_t>* labels) {
  if (spec.parts.empty()) throw std::invalid_argument("fuse_surface_cloud: empty part list");

  std::vector<Vec3> canonical;
  std::vector<std::uint16_t> part_of;
  for (const auto& part : spec.parts) {
    for (const Vec3& p : sample_cuboid_surface(part)) {
      canonical.push_back(p);
      part_of.push_back(static_cast<std::uint16_t>(part.id));
    }
  }

  std::vector<char> seen(canonical.size(), 0);
  for (const auto& view : views)
    for (int id : render_zbuffer(canonical, view, spec.height, spec.width, spec.intrinsics))
      if (id >= 0) seen[id] = 1;

  PointCloud cloud;
  if (labels) labels->clear();
  std::unordered_map<VoxelKey, char, VoxelHash> voxels;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (!seen[i]) continue;
    const VoxelKey key{static_cast<std::int64_t>(std::floor(canonical[i].x() / spec.dedup_voxel)),
                       static_cast<std::int64_t>(std::floor(canonical[i].y() / spec.dedup_voxel)),
                       static_cast<std::int64_t>(std::floor(canonical[i].z() / spec.dedup_voxel))};
    if (!voxels.emplace(key, 1).second) continue;
    cloud.points.push_back(canonical[i]);
    if (labels) labels->push_back(part_of[i]);
  }
  return cloud;
}

PointCloud fuse_surface_cloud(const SceneSpec& spec, std::vector<std::uint16_t>* labels) {
  return fuse_surface_cloud(spec, fusion_viewpoints(spec), labels);
}

Dataset generate_scene(const SceneSpec& spec) {
  spec.validate();
  const int t_total = spec.frame_count();
  const std::size_t n_pix = static_cast<std::size_t>(spec.height) * spec.width;

  Dataset data;
  data.frame_count = t_total;
  data.height = spec.height;
  data.width = spec.width;
  data.intrinsics = spec.intrinsics;
  data.surface = fuse_surface_cloud(spec, &data.surface_labels);

  // Render set: the fused surface points themselves, plus the full canonical
  // sets of parts the fusion never saw (interior geometry). Frames therefore
  // observe exact surface points, and everything else is newly-observed.
  std::vector<RenderPoint> render;
  render.reserve(data.surface.size());
  std::vector<char> part_present(65536, 0);
  for (std::size_t i = 0; i < data.surface.size(); ++i) {
    render.push_back({data.surface.points[i], data.surface_labels[i]});
    part_present[data.surface_labels[i]] = 1;
  }
  for (const auto& part : spec.parts) {
    if (part_present[static_cast<std::uint16_t>(part.id)]) continue;
    for (const Vec3& p : sample_cuboid_surface(part))
      render.push_back({p, static_cast<std::uint16_t>(part.id)});
  }

  const auto cameras = camera_trajectory(spec);
  const std::uint16_t movable = static_cast<std::uint16_t>(spec.movable_part);

  auto world_at = [&](const RenderPoint& rp, double state) {
    return rp.part == movable ? apply_joint(spec.joint, state) * rp.p : rp.p;
  };

  GroundTruth gt;
  gt.joint = spec.joint;
  gt.states.states = spec.states;
  gt.cameras = cameras;
  gt.surface_labels = data.surface_labels;
  gt.movable_part = spec.movable_part;

  std::vector<std::vector<int>> frame_render_ids(t_total);  // per frame, render id per point
  std::vector<std::vector<int>> render_to_point(t_total);   // inverse map

  std::vector<int> part_pixel_count(spec.parts.size(), 0);

  for (int t = 0; t < t_total; ++t) {
    std::vector<Vec3> world(render.size());
    for (std::size_t i = 0; i < render.size(); ++i) world[i] = world_at(render[i], spec.states[t]);
    const auto winner = render_zbuffer(world, cameras[t], spec.height, spec.width, spec.intrinsics);

    FrameObservation frame;
    frame.height = spec.height;
    frame.width = spec.width;
    frame.intrinsics = spec.intrinsics;
    auto noise_rng = seeded_stream(spec.seed, 1000 + t);
    std::normal_distribution<double> noise(0.0, 1.0);
    const RigidTransform cam_from_world = cameras[t].inverse();

    std::vector<std::uint8_t> gt_map(n_pix, 0);
    render_to_point[t].assign(render.size(), -1);

    // Moving-map reference step: the previous frame, or the next one at t=0.
    const double s_now = spec.states[t];
    const double s_ref = t > 0 ? spec.states[t - 1] : spec.states[1];

    for (std::size_t pix = 0; pix < n_pix; ++pix) {
      const int id = winner[pix];
      if (id < 0) continue;
      Vec3 p = cam_from_world * world[id];
      if (spec.point_noise > 0)
        p += spec.point_noise * Vec3(noise(noise_rng), noise(noise_rng), noise(noise_rng));
      render_to_point[t][id] = static_cast<int>(frame.points.size());
      frame.points.push_back(p);
      frame.pixels.push_back(static_cast<int>(pix));
      frame_render_ids[t].push_back(id);
      if (render[id].part == movable) {
        const double moved = (world_at(render[id], s_now) - world_at(render[id], s_ref)).norm();
        if (moved > 1e-6) gt_map[pix] = 1;
      }
    }
    if (frame.points.empty()) throw EmptyFrame(t);

    MovingMap map(n_pix, 0.0f);
    auto corrupt_rng = seeded_stream(spec.seed, 2000 + t);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t pix = 0; pix < n_pix; ++pix) {
      bool moving = gt_map[pix] != 0;
      if (spec.mask_corruption > 0 && unit(corrupt_rng) < spec.mask_corruption) moving = !moving;
      map[pix] = moving ? 1.0f : 0.0f;
    }

    data.frames.push_back(std::move(frame));
    data.maps.push_back(std::move(map));
    gt.moving_maps.push_back(std::move(gt_map));
  }

  // Segment tracks: one per part that is ever visible.
  for (std::size_t pi = 0; pi < spec.parts.size(); ++pi) {
    SegmentTrack track;
    track.id = spec.parts[pi].id;
    bool any = false;
    for (int t = 0; t < t_total; ++t) {
      std::vector<std::uint8_t> mask(n_pix, 0);
      const auto& frame = data.frames[t];
      for (std::size_t i = 0; i < frame.points.size(); ++i) {
        if (render[frame_render_ids[t][i]].part == spec.parts[pi].id) {
          mask[frame.pixels[i]] = 1;
          any = true;
        }
      }
      track.masks.push_back(std::move(mask));
    }
    if (!any) continue;
    track.present_in_frame0 =
        std::any_of(track.masks[0].begin(), track.masks[0].end(), [](std::uint8_t m) { return m != 0; });
    data.segments.push_back(std::move(track));
  }

  // Exact correspondences for frame pairs within 3 steps, plus outliers.
  int pair_counter = 0;
  for (int a = 0; a < t_total; ++a) {
    for (int b = a + 1; b <= std::min(a + 3, t_total - 1); ++b) {
      CorrespondenceSet set;
      set.frame_a = a;
      set.frame_b = b;
      for (std::size_t i = 0; i < data.frames[a].points.size(); ++i) {
        const int id = frame_render_ids[a][i];
        const int j = render_to_point[b][id];
        if (j >= 0) set.matches.push_back({static_cast<int>(i), j, 1.0});
      }
      if (spec.outlier_rate > 0 && !set.matches.empty()) {
        auto rng = seeded_stream(spec.seed, 3000 + pair_counter);
        std::uniform_int_distribution<int> pick_a(0, static_cast<int>(data.frames[a].points.size()) - 1);
        std::uniform_int_distribution<int> pick_b(0, static_cast<int>(data.frames[b].points.size()) - 1);
        std::uniform_real_distribution<double> conf(0.9, 1.0);
        const int n_out = static_cast<int>(std::lround(spec.outlier_rate * set.matches.size()));
        for (int k = 0; k < n_out; ++k) set.matches.push_back({pick_a(rng), pick_b(rng), conf(rng)});
      }
      data.correspondences.push_back(std::move(set));
      ++pair_counter;
    }
  }

  data.gt = std::move(gt);
  return data;
}

SceneSpec make_random_scene_spec(std::uint64_t scene_seed, JointType type, bool noisy) {
  auto rng = seeded_stream(scene_seed, 7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SceneSpec spec;
  spec.seed = scene_seed;
  // Pixel pitch at the object (~2.2 cm) must stay well under the 3 cm
  // surface-attachment radius, or canonical points between observed pixels
  // drop out of the movable partition.
  spec.height = 64;
  spec.width = 64;
  spec.intrinsics = {56, 56, 31.5, 31.5};

  const double z0 = uniform(1.15, 1.35);
  const double scale = uniform(0.9, 1.1);

  CuboidPart panel;  // movable
  panel.id = 1;
  panel.extent = Vec3(0.50 * scale, 0.42 * scale, 0.02);
  panel.center = Vec3(uniform(-0.05, 0.05), -0.28 * scale, z0);
  panel.density = 2000;

  CuboidPart slab;  // static
  slab.id = 0;
  slab.extent = Vec3(0.55 * scale, 0.34 * scale, 0.05);
  slab.center = Vec3(0, 0.26 * scale, z0 + 0.04);
  slab.density = 2000;

  spec.parts = {slab, panel};
  spec.movable_part = 1;

  const int t_total = 10;
  double total, tilt_max;
  if (type == JointType::Revolute) {
    total = uniform(0.40, 0.60);
    tilt_max = 0.30;
    spec.joint.type = JointType::Revolute;
    // hinge along the panel's top edge, roughly horizontal
    Vec3 axis = Vec3::UnitX();
    const Vec3 tilt = tilt_max * Vec3(0, uniform(-1, 1), uniform(-1, 1));
    if (tilt.norm() > 0)
      axis = Eigen::AngleAxisd(tilt.norm(), tilt.normalized()).toRotationMatrix() * axis;
    spec.joint.axis = axis.normalized();
    spec.joint.pivot = panel.center + Vec3(0, -panel.extent.y() / 2 - 0.02, 0);
  } else {
    total = uniform(0.10, 0.16);
    spec.joint.type = JointType::Prismatic;
    // pull-out direction, roughly toward the camera
    Vec3 axis = -Vec3::UnitZ();
    const Vec3 tilt = 0.35 * Vec3(uniform(-1, 1), uniform(-1, 1), 0);
    if (tilt.norm() > 0)
      axis = Eigen::AngleAxisd(tilt.norm(), tilt.normalized()).toRotationMatrix() * axis;
    spec.joint.axis = axis.normalized();
    spec.joint.pivot = Vec3::Zero();
  }

  spec.states.assign(t_total, 0.0);
  double step = total / (t_total - 1);
  for (int t = 1; t < t_total; ++t)
    spec.states[t] = spec.states[t - 1] + step * uniform(0.8, 1.2);

  spec.retarget_enabled = true;
  spec.retarget_min = 7;
  spec.retarget_max = 10;
  spec.camera_position_noise = 0.03;
  spec.camera_rotation_noise = 0.02;

  if (noisy) {
    spec.point_noise = 0.005;
    spec.mask_corruption = 0.2;
    spec.outlier_rate = 0.2;
  }
  return spec;
}

}  // namespace artic
