#include "artic/coarse.hpp"

#include "artic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace artic {

namespace {

struct MatchPoints {
  Vec3 a, b;
  double confidence;
};

const CorrespondenceSet* find_pair(const Dataset& data, int a, int b) {
  for (const auto& set : data.correspondences)
    if (set.frame_a == a && set.frame_b == b) return &set;
  return nullptr;
}

bool pixel_dynamic(const MovingMap& map, int pixel, double threshold) {
  return map[pixel] >= threshold;
}

}  // namespace

std::vector<int> subsample_frames(int total_frames, int target) {
  std::vector<int> out;
  if (total_frames <= target + 2) {
    out.resize(total_frames);
    for (int i = 0; i < total_frames; ++i) out[i] = i;
    return out;
  }
  out.reserve(target);
  for (int i = 0; i < target; ++i) {
    const int idx = static_cast<int>(std::lround(
        static_cast<double>(i) * (total_frames - 1) / (target - 1)));
    if (out.empty() || idx != out.back()) out.push_back(idx);
  }
  return out;
}

std::vector<RigidTransform> estimate_camera_poses(const Dataset& data,
                                                  const std::vector<int>& selected,
                                                  const PipelineConfig& config) {
  std::vector<RigidTransform> poses(selected.size());
  for (std::size_t k = 1; k < selected.size(); ++k) {
    const int prev = selected[k - 1];
    const int cur = selected[k];
    const CorrespondenceSet* set = find_pair(data, prev, cur);
    if (!set) throw InsufficientStaticMatches(cur);

    std::vector<Vec3> src, dst;
    std::vector<double> weights;
    for (const auto& m : set->matches) {
      if (m.confidence <= config.match_confidence) continue;
      const auto& fa = data.frames[prev];
      const auto& fb = data.frames[cur];
      // Keep only matches both of whose endpoints look static: with
      // corrupted maps this loses some true static matches but keeps the
      // contamination rate quadratic in the corruption rate.
      if (pixel_dynamic(data.maps[prev], fa.pixels[m.index_a], config.dynamic_map_threshold) ||
          pixel_dynamic(data.maps[cur], fb.pixels[m.index_b], config.dynamic_map_threshold))
        continue;
      src.push_back(fb.points[m.index_b]);
      dst.push_back(fa.points[m.index_a]);
      weights.push_back(m.confidence);
    }
    if (src.size() < 3) throw InsufficientStaticMatches(cur);
    RigidTransform relative = fit_rigid_transform(src, dst, weights);

    // One trimmed refit: matches that survived the confidence filter can
    // still be grossly wrong, and a handful of them dominates the
    // least-squares pose. Drop residuals beyond 3x the median and refit.
    std::vector<double> residuals(src.size());
    for (std::size_t i = 0; i < src.size(); ++i)
      residuals[i] = (relative * src[i] - dst[i]).norm();
    std::vector<double> sorted = residuals;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double cut = 3.0 * std::max(sorted[sorted.size() / 2], 1e-12);
    std::vector<Vec3> src_in, dst_in;
    std::vector<double> w_in;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (residuals[i] > cut) continue;
      src_in.push_back(src[i]);
      dst_in.push_back(dst[i]);
      w_in.push_back(weights[i]);
    }
    if (src_in.size() >= 3 && src_in.size() < src.size()) {
      try {
        relative = fit_rigid_transform(src_in, dst_in, w_in);
      } catch (const DegenerateConfiguration&) {
        // keep the untrimmed pose
      }
    }
    poses[k] = poses[k - 1] * relative;
  }
  return poses;
}

PairFit estimate_joint_pair(std::span<const Vec3> points_a, std::span<const Vec3> points_b,
                            JointType hypothesis, const PipelineConfig& config,
                            std::uint64_t seed) {
  const std::size_t n = points_a.size();
  if (n < 3) throw DegenerateMotion("need at least 3 dynamic matches");

  // Content-sorted working copy so the estimate is independent of match order.
  std::vector<MatchPoints> matches(n);
  for (std::size_t i = 0; i < n; ++i) matches[i] = {points_a[i], points_b[i], 1.0};
  std::sort(matches.begin(), matches.end(), [](const MatchPoints& l, const MatchPoints& r) {
    for (int c = 0; c < 3; ++c) {
      if (l.a[c] != r.a[c]) return l.a[c] < r.a[c];
      if (l.b[c] != r.b[c]) return l.b[c] < r.b[c];
    }
    return false;
  });

  auto model_from_transform = [&](const RigidTransform& t) -> std::optional<std::pair<JointModel, double>> {
    const ScrewDecomposition screw = screw_decompose(t);
    if (!screw.revolute) return std::nullopt;
    JointModel model{JointType::Revolute, screw.revolute->axis, screw.revolute->pivot};
    return std::make_pair(model, screw.revolute->angle);
  };

  // The prismatic hypothesis is fit inside its model class: a pure
  // translation. Going through a full rigid fit instead lets the sample's
  // rotation noise leverage the distance to the origin, which dwarfs the
  // few-centimeter true motion.
  auto translation_model = [&](const std::vector<int>& ids)
      -> std::optional<std::pair<JointModel, double>> {
    Vec3 t = Vec3::Zero();
    for (int i : ids) t += matches[i].b - matches[i].a;
    t /= static_cast<double>(ids.size());
    const double d = t.norm();
    if (d < 1e-9) return std::nullopt;
    JointModel model{JointType::Prismatic, t / d, Vec3::Zero()};
    return std::make_pair(model, d);
  };

  auto score = [&](const JointModel& model, double delta, std::vector<int>* inliers,
                   double* mean_residual) {
    const RigidTransform motion = apply_joint(model, delta);
    int count = 0;
    double sum = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const double d = (motion * matches[i].a - matches[i].b).norm();
      if (d < config.ransac_inlier_radius) {
        ++count;
        sum += d;
        if (inliers) inliers->push_back(static_cast<int>(i));
      }
    }
    *mean_residual = count > 0 ? sum / count : std::numeric_limits<double>::infinity();
    return count;
  };

  auto rng = seeded_stream(seed, 0);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);

  PairFit best;
  int best_count = 0;
  std::vector<int> best_inliers;
  std::vector<Vec3> sample_a(3), sample_b(3);
  const std::vector<double> unit_w(3, 1.0);

  for (int iter = 0; iter < config.ransac_iterations; ++iter) {
    int idx[3];
    idx[0] = pick(rng);
    do idx[1] = pick(rng); while (idx[1] == idx[0]);
    do idx[2] = pick(rng); while (idx[2] == idx[0] || idx[2] == idx[1]);
    std::optional<std::pair<JointModel, double>> model;
    if (hypothesis == JointType::Prismatic) {
      model = translation_model({idx[0], idx[1], idx[2]});
    } else {
      for (int j = 0; j < 3; ++j) {
        sample_a[j] = matches[idx[j]].a;
        sample_b[j] = matches[idx[j]].b;
      }
      try {
        model = model_from_transform(fit_rigid_transform(sample_a, sample_b, unit_w));
      } catch (const DegenerateConfiguration&) {
        continue;
      }
    }
    if (!model) continue;
    std::vector<int> inliers;
    double residual;
    const int count = score(model->first, model->second, &inliers, &residual);
    if (count > best_count || (count == best_count && count > 0 && residual < best.residual)) {
      best_count = count;
      best.model = model->first;
      best.delta = model->second;
      best.residual = residual;
      best.inliers = count;
      best.valid = true;
      best_inliers = std::move(inliers);
    }
  }
  if (!best.valid) throw DegenerateMotion("no valid joint hypothesis sample");

  // Refit on the consensus set.
  if (best_inliers.size() >= 3) {
    std::optional<std::pair<JointModel, double>> model;
    if (hypothesis == JointType::Prismatic) {
      model = translation_model(best_inliers);
    } else {
      std::vector<Vec3> in_a, in_b;
      std::vector<double> in_w;
      for (int i : best_inliers) {
        in_a.push_back(matches[i].a);
        in_b.push_back(matches[i].b);
        in_w.push_back(1.0);
      }
      try {
        model = model_from_transform(fit_rigid_transform(in_a, in_b, in_w));
      } catch (const DegenerateConfiguration&) {
        // keep the minimal-sample model
      }
    }
    if (model) {
      double residual;
      const int count = score(model->first, model->second, nullptr, &residual);
      if (count > 0) {
        best.model = model->first;
        best.delta = model->second;
        best.residual = residual;
        best.inliers = count;
      }
    }
  }
  best.model.canonicalize();
  return best;
}

void vote_and_average(const std::vector<PairEstimate>& pairs, int selected_count,
                      CoarseEstimate* out) {
  auto average = [&](JointType type, CoarseEstimate::Hypothesis* hyp) {
    bool have_ref = false;
    Vec3 ref = Vec3::Zero(), axis_sum = Vec3::Zero(), pivot_sum = Vec3::Zero();
    double residual_sum = 0;
    int count = 0;
    std::vector<double> deltas(selected_count, 0.0);  // deltas[k]: step (k-1) -> k

    for (const auto& pair : pairs) {
      const PairFit& fit = type == JointType::Revolute ? pair.revolute : pair.prismatic;
      if (!fit.valid) continue;
      if (!have_ref) {
        ref = fit.model.axis;
        have_ref = true;
      }
      const bool flip = fit.model.axis.dot(ref) < 0;
      const Vec3 axis = flip ? Vec3(-fit.model.axis) : fit.model.axis;
      axis_sum += axis;
      pivot_sum += fit.model.pivot;  // canonical pivot is flip-invariant
      residual_sum += fit.residual;
      ++count;
      if (pair.b == pair.a + 1) deltas[pair.b] = flip ? -fit.delta : fit.delta;
    }
    if (count == 0 || axis_sum.norm() < 1e-12) return;
    hyp->valid = true;
    hyp->axis = axis_sum.normalized();
    hyp->pivot = pivot_sum / count;
    hyp->pivot -= hyp->axis.dot(hyp->pivot) * hyp->axis;
    hyp->mean_residual = residual_sum / count;
    hyp->states.assign(selected_count, 0.0);
    for (int k = 1; k < selected_count; ++k) hyp->states[k] = hyp->states[k - 1] + deltas[k];
  };

  average(JointType::Revolute, &out->revolute);
  average(JointType::Prismatic, &out->prismatic);
  if (!out->revolute.valid && !out->prismatic.valid) throw NoValidPairs("no usable frame pairs");

  int rev_votes = 0, pris_votes = 0;
  for (const auto& pair : pairs) {
    if (!pair.has_vote) continue;
    (pair.vote == JointType::Revolute ? rev_votes : pris_votes)++;
  }
  out->revolute.votes = rev_votes;
  out->prismatic.votes = pris_votes;
  if (rev_votes != pris_votes) {
    out->voted_type = rev_votes > pris_votes ? JointType::Revolute : JointType::Prismatic;
  } else {
    // Tie: lower mean residual wins.
    out->voted_type = out->revolute.mean_residual <= out->prismatic.mean_residual
                          ? JointType::Revolute
                          : JointType::Prismatic;
  }
  if (!out->revolute.valid) out->voted_type = JointType::Prismatic;
  if (!out->prismatic.valid) out->voted_type = JointType::Revolute;
}

CoarseEstimate coarse_predict(const Dataset& data, const PipelineConfig& config,
                              std::uint64_t seed) {
  CoarseEstimate out;
  out.selected = subsample_frames(data.frame_count, config.target_frames);
  out.cameras = estimate_camera_poses(data, out.selected, config);

  const int f = static_cast<int>(out.selected.size());
  int pair_counter = 0;
  for (int i = 0; i < f; ++i) {
    for (int j = i + 1; j <= std::min(i + config.pair_max_step, f - 1); ++j, ++pair_counter) {
      const CorrespondenceSet* set = find_pair(data, out.selected[i], out.selected[j]);
      if (!set) continue;

      const auto& fa = data.frames[out.selected[i]];
      const auto& fb = data.frames[out.selected[j]];
      std::vector<Vec3> world_a, world_b;
      for (const auto& m : set->matches) {
        if (m.confidence <= config.match_confidence) continue;
        if (!pixel_dynamic(data.maps[out.selected[i]], fa.pixels[m.index_a],
                           config.dynamic_map_threshold) ||
            !pixel_dynamic(data.maps[out.selected[j]], fb.pixels[m.index_b],
                           config.dynamic_map_threshold))
          continue;
        world_a.push_back(out.cameras[i] * fa.points[m.index_a]);
        world_b.push_back(out.cameras[j] * fb.points[m.index_b]);
      }
      if (static_cast<int>(world_a.size()) < config.min_pair_matches) continue;

      PairEstimate pair;
      pair.a = i;
      pair.b = j;
      pair.matches_used = static_cast<int>(world_a.size());
      try {
        pair.revolute = estimate_joint_pair(world_a, world_b, JointType::Revolute, config,
                                            seed * 1000003ULL + 4000 + 2 * pair_counter);
      } catch (const DegenerateMotion&) {
      }
      try {
        pair.prismatic = estimate_joint_pair(world_a, world_b, JointType::Prismatic, config,
                                             seed * 1000003ULL + 4001 + 2 * pair_counter);
      } catch (const DegenerateMotion&) {
      }
      if (pair.revolute.valid || pair.prismatic.valid) {
        pair.has_vote = true;
        if (!pair.prismatic.valid || (pair.revolute.valid &&
                                      pair.revolute.residual < pair.prismatic.residual))
          pair.vote = JointType::Revolute;
        else
          pair.vote = JointType::Prismatic;
        out.pairs.push_back(std::move(pair));
      }
    }
  }

  vote_and_average(out.pairs, f, &out);
  return out;
}

}  // namespace artic
