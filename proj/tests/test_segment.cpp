#include "artic/segment.hpp"
#include "artic/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"

using namespace artic;

TEST_CASE("newly-observed classification") {
  SegmentTrack a, b;
  a.id = 0;
  a.present_in_frame0 = true;
  b.id = 7;
  b.present_in_frame0 = false;

  CHECK(classify_newly_observed({a}).empty());
  auto ids = classify_newly_observed({a, b});
  REQUIRE(ids.size() == 1);
  CHECK(ids[0] == 7);
}

TEST_CASE("movable-part extraction edge cases") {
  SceneSpec spec = make_random_scene_spec(71, JointType::Revolute, false);
  Dataset data = generate_scene(spec);
  PipelineConfig config;
  const auto& frame0 = data.frames[0];

  SUBCASE("all-zero map") {
    MovingMap zeros(data.height * data.width, 0.0f);
    SurfacePartition part = extract_movable_part(data.surface, zeros, frame0, config);
    CHECK(part.movable.empty());
    CHECK(part.static_part.size() == data.surface.size());
    CHECK(part.no_moving_pixels);
  }

  SUBCASE("saturated map marks everything near the frame-0 observation") {
    MovingMap ones(data.height * data.width, 1.0f);
    SurfacePartition part = extract_movable_part(data.surface, ones, frame0, config);
    CHECK(!part.no_moving_pixels);

    std::set<int> movable(part.movable.begin(), part.movable.end());
    for (std::size_t i = 0; i < data.surface.size(); ++i) {
      double best = 1e9;
      for (const auto& q : frame0.points)
        best = std::min(best, (data.surface.points[i] - q).norm());
      CHECK(movable.count(static_cast<int>(i)) == (best <= config.attach_radius ? 1u : 0u));
    }
  }
}

TEST_CASE("partition is exhaustive, disjoint, and exact on noiseless data") {
  for (JointType type : {JointType::Revolute, JointType::Prismatic}) {
    SceneSpec spec = make_random_scene_spec(72, type, false);
    Dataset data = generate_scene(spec);
    PipelineConfig config;

    // Ground-truth frame-0 moving map drives the extraction.
    MovingMap map0(data.gt->moving_maps[0].begin(), data.gt->moving_maps[0].end());
    SurfacePartition part = extract_movable_part(data.surface, map0, data.frames[0], config);

    CHECK(part.movable.size() + part.static_part.size() == data.surface.size());
    std::set<int> seen(part.movable.begin(), part.movable.end());
    for (int i : part.static_part) CHECK(seen.insert(i).second);

    // Perfect agreement with the part labels.
    for (int i : part.movable)
      CHECK(data.surface_labels[i] == data.gt->movable_part);
    for (int i : part.static_part)
      CHECK(data.surface_labels[i] != data.gt->movable_part);
  }
}

TEST_CASE("partition monotonicity in radius and threshold") {
  SceneSpec spec = make_random_scene_spec(73, JointType::Revolute, false);
  Dataset data = generate_scene(spec);
  MovingMap map0(data.gt->moving_maps[0].begin(), data.gt->moving_maps[0].end());
  // Soften a band of pixels so the threshold has something to cut.
  for (std::size_t pix = 0; pix < map0.size(); ++pix)
    if (map0[pix] > 0 && pix % 3 == 0) map0[pix] = 0.75f;

  PipelineConfig base;
  auto movable_set = [&](double radius, double threshold) {
    PipelineConfig c = base;
    c.attach_radius = radius;
    c.moving_threshold = threshold;
    SurfacePartition p = extract_movable_part(data.surface, map0, data.frames[0], c);
    return std::set<int>(p.movable.begin(), p.movable.end());
  };

  auto small = movable_set(0.01, 0.7);
  auto large = movable_set(0.05, 0.7);
  CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));

  auto low = movable_set(0.03, 0.5);
  auto high = movable_set(0.03, 0.8);
  CHECK(std::includes(low.begin(), low.end(), high.begin(), high.end()));
}
