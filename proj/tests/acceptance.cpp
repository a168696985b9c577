// Acceptance gate: each criterion is a self-contained check invoked as
// `acceptance <1..9>`, printing exactly one PASS/FAIL line. Tolerances are
// pinned here, not in configuration.

#include "artic/geometry.hpp"
#include "artic/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace artic;
namespace fs = std::filesystem;

namespace {

struct Gate {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

// atan2 form: stays accurate for tiny angles, unlike acos of the dot product.
double axis_angle_error(const Vec3& a, const Vec3& b) {
  const Vec3 an = a.normalized(), bn = b.normalized();
  return std::atan2(an.cross(bn).norm(), std::abs(an.dot(bn)));
}

double line_distance(const Vec3& p, const Vec3& pivot, const Vec3& axis) {
  return ((p - pivot) - axis.dot(p - pivot) * axis).norm();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// --- criterion 1: exact recovery on 100 noiseless scenes ------------------

Gate exact_recovery() {
  Gate gate;
  PipelineConfig config;
  const auto start = std::chrono::steady_clock::now();

  for (int i = 0; i < 100; ++i) {
    const JointType type = i < 50 ? JointType::Revolute : JointType::Prismatic;
    Dataset data = generate_scene(make_random_scene_spec(4000 + i, type, false));
    PipelineResult r = run_pipeline(data, config, 77 + i);
    const std::string tag = "scene " + std::to_string(i) + ": ";

    gate.require(!r.failed, tag + "pipeline failed in " + r.failure_stage);
    if (r.failed) continue;
    gate.require(!r.metrics_refined.type_error, tag + "wrong joint type");
    gate.require(r.metrics_refined.axis_error < 1e-3, tag + "axis error too large");
    if (type == JointType::Revolute)
      gate.require(r.metrics_refined.position_error < 1e-3, tag + "pivot error too large");

    const GroundTruth& gt = *data.gt;
    const double sign = r.selection.joint.axis.dot(gt.joint.axis) < 0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < r.selected.size(); ++k) {
      const double err =
          std::abs(sign * r.selection.states.states[k] - gt.states.states[r.selected[k]]);
      gate.require(err < 1e-3, tag + "per-frame state error too large");
    }
    gate.require(r.camera.rotation_error < 1e-6, tag + "camera rotation error too large");
    gate.require(r.camera.translation_error < 1e-6, tag + "camera translation error too large");
  }

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("  100 noiseless scenes in %.1f s\n", seconds);
  gate.require(seconds <= 600.0, "runtime budget of 10 minutes exceeded");
  return gate;
}

// --- criterion 2: robustness on 100 noisy scenes --------------------------

Gate noisy_robustness() {
  Gate gate;
  PipelineConfig config;
  std::vector<double> refined, coarse;
  int better = 0;

  for (int i = 0; i < 100; ++i) {
    const JointType type = i < 50 ? JointType::Revolute : JointType::Prismatic;
    Dataset data = generate_scene(make_random_scene_spec(5000 + i, type, true));
    PipelineResult r = run_pipeline(data, config, 77 + i);
    refined.push_back(r.metrics_refined.axis_error);
    coarse.push_back(r.metrics_coarse.axis_error);
    if (r.metrics_refined.axis_error <= r.metrics_coarse.axis_error) ++better;
  }

  std::printf("  refined axis error: median %.4f, mean %.4f | coarse mean %.4f | refined<=coarse on %d/100\n",
              median(refined), mean(refined), mean(coarse), better);
  gate.require(median(refined) < 0.05, "median refined axis error >= 0.05 rad");
  gate.require(better >= 80, "refined beats coarse on fewer than 80% of scenes");
  gate.require(mean(refined) < mean(coarse), "mean refined error not strictly below coarse");
  return gate;
}

// --- criterion 3: analytic gradients vs central finite differences --------

Gate gradient_check() {
  Gate gate;
  PipelineConfig config;
  Dataset data = generate_scene(make_random_scene_spec(3, JointType::Revolute, true));
  CoarseEstimate coarse = coarse_predict(data, config, 3);
  RefineProblem problem = build_refine_problem(data, coarse.selected, config, 3);

  double worst = 0;
  auto rng = seeded_stream(9, 1);
  std::normal_distribution<double> nd;
  for (JointType h : {JointType::Revolute, JointType::Prismatic}) {
    for (int trial = 0; trial < 50; ++trial) {
      RefineState state = make_initial_state(problem, coarse, h);
      Eigen::VectorXd x = pack_state(problem, state);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += 0.03 * nd(rng);
      unpack_state(problem, x, &state);

      Correspondences corr = associate(problem, state, trial, true);
      Eigen::VectorXd grad;
      loss_and_grad(problem, state, corr, &grad);

      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(grad[i]) <= 1e-8) continue;
        // Central differences trade truncation (shrinks with h) against
        // roundoff (grows as h shrinks); scan a small window of step sizes
        // so the oracle itself is accurate for both large and tiny
        // gradient coordinates.
        double rel = 1e18;
        for (const double h_fd : {1e-4, 1e-5, 1e-6}) {
          Eigen::VectorXd xp = x, xm = x;
          xp[i] += h_fd;
          xm[i] -= h_fd;
          RefineState sp = state, sm = state;
          unpack_state(problem, xp, &sp);
          unpack_state(problem, xm, &sm);
          const double fd =
              (forward_loss(problem, sp, corr) - forward_loss(problem, sm, corr)) / (2 * h_fd);
          rel = std::min(rel,
                         std::abs(fd - grad[i]) / std::max(std::abs(grad[i]), std::abs(fd)));
        }
        worst = std::max(worst, rel);
      }
    }
  }
  std::printf("  worst relative gradient error: %.3e over 50 states per hypothesis\n", worst);
  gate.require(worst < 1e-4, "gradient mismatch above 1e-4");
  return gate;
}

// --- criterion 4: Chamfer equals brute force ------------------------------

Gate chamfer_oracle() {
  Gate gate;
  auto rng = seeded_stream(4, 0);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uw(0.0, 1.0);
  auto cloud = [&](int n) {
    std::vector<Vec3> out(n);
    for (auto& p : out) p = Vec3(nd(rng), nd(rng), nd(rng));
    return out;
  };
  auto brute_one = [](const std::vector<Vec3>& q, const std::vector<Vec3>& t,
                      const std::vector<double>& w) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      double best = 1e18;
      for (const auto& p : t) best = std::min(best, (q[i] - p).norm());
      const double wi = w.empty() ? 1.0 : w[i];
      num += wi * best;
      den += wi;
    }
    return den > 0 ? num / den : 0.0;
  };

  for (auto [na, nb] : {std::pair{1, 1}, {3, 7}, {100, 200}, {500, 500}, {1000, 1000}}) {
    auto a = cloud(na), b = cloud(nb);
    std::vector<double> w(na);
    for (auto& x : w) x = uw(rng);

    KdTree index(b);
    gate.require(std::abs(chamfer_one_directional(a, index) - brute_one(a, b, {})) < 1e-12,
                 "one-directional mismatch, unweighted");
    gate.require(std::abs(chamfer_one_directional(a, index, w) - brute_one(a, b, w)) < 1e-12,
                 "one-directional mismatch, weighted");
    const double sym = 0.5 * (brute_one(a, b, {}) + brute_one(b, a, {}));
    gate.require(std::abs(symmetric_chamfer(a, b, 0, 0) - sym) < 1e-12, "symmetric mismatch");
  }
  return gate;
}

// --- criterion 5: screw round trip over 1000 joints -----------------------

Gate screw_round_trip() {
  Gate gate;
  auto rng = seeded_stream(5, 0);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> angle(1e-4, std::numbers::pi - 1e-4);
  std::uniform_real_distribution<double> dist(1e-3, 1.0);
  auto unit = [&] { return Vec3(nd(rng), nd(rng), nd(rng)).normalized(); };

  for (int trial = 0; trial < 1000; ++trial) {
    JointModel rev{JointType::Revolute, unit(), Vec3(nd(rng), nd(rng), nd(rng))};
    const double a = angle(rng);
    ScrewDecomposition dr = screw_decompose(apply_joint(rev, a));
    gate.require(dr.revolute.has_value(), "revolute branch degenerate");
    if (dr.revolute) {
      gate.require(axis_angle_error(dr.revolute->axis, rev.axis) < 1e-9, "revolute axis drift");
      gate.require(line_distance(dr.revolute->pivot, rev.pivot, rev.axis) < 1e-9, "pivot drift");
      gate.require(std::abs(dr.revolute->angle - a) < 1e-9, "angle drift");
    }

    JointModel pris{JointType::Prismatic, unit(), Vec3::Zero()};
    const double d = dist(rng);
    ScrewDecomposition dp = screw_decompose(apply_joint(pris, d));
    gate.require(dp.prismatic.has_value(), "prismatic branch degenerate");
    if (dp.prismatic) {
      gate.require((dp.prismatic->axis - pris.axis).norm() < 1e-9, "prismatic axis drift");
      gate.require(std::abs(dp.prismatic->distance - d) < 1e-9, "distance drift");
    }
  }
  return gate;
}

// --- criterion 6: segmentation quality ------------------------------------

Gate segmentation_quality() {
  Gate gate;
  PipelineConfig config;

  // Noiseless: the predicted movable set must match the part labels exactly.
  // An exact partition needs the sensor footprint comfortably below the
  // 0.03 m attachment radius; the default 64x64 grid sits right at that
  // limit, so the partition check senses the same scenes at 96x96 (~1.5 cm
  // pixel pitch at the object).
  for (int i = 0; i < 20; ++i) {
    const JointType type = i < 10 ? JointType::Revolute : JointType::Prismatic;
    SceneSpec spec = make_random_scene_spec(4000 + i, type, false);
    spec.height = spec.width = 96;
    spec.intrinsics = {86, 86, 47.5, 47.5};
    Dataset data = generate_scene(spec);
    PipelineResult r = run_pipeline(data, config, 77 + i);
    gate.require(!r.failed, "noiseless scene failed");
    if (r.failed) continue;

    std::vector<char> pred(data.surface.size(), 0);
    for (int idx : r.partition.movable) pred[idx] = 1;
    std::size_t inter = 0, uni = 0;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const bool gt_mov = data.surface_labels[p] == data.gt->movable_part;
      inter += pred[p] && gt_mov;
      uni += pred[p] || gt_mov;
    }
    gate.require(uni > 0 && inter == uni, "noiseless partition IoU below 1.0");
  }

  // Noisy suite: moving-map mIOU.
  std::vector<double> mious;
  for (int i = 0; i < 100; ++i) {
    const JointType type = i < 50 ? JointType::Revolute : JointType::Prismatic;
    Dataset data = generate_scene(make_random_scene_spec(5000 + i, type, true));
    PipelineResult r = run_pipeline(data, config, 77 + i);
    mious.push_back(r.miou_value);
  }
  std::printf("  noisy-suite mIOU: mean %.4f, min %.4f\n", mean(mious),
              *std::min_element(mious.begin(), mious.end()));
  gate.require(mean(mious) >= 0.9, "noisy-suite mIOU below 0.9");
  return gate;
}

// --- criterion 7: failure assignments -------------------------------------

Gate failure_assignments() {
  Gate gate;
  PipelineConfig config;
  const double half_pi = std::numbers::pi / 2;

  auto check_failure = [&](const Dataset& data, const char* label) {
    PipelineResult r = run_pipeline(data, config, 7);
    const std::string tag = std::string(label) + ": ";
    gate.require(r.failed, tag + "pipeline did not fail");
    gate.require(r.metrics_refined.failure, tag + "failure flag not set");
    gate.require(r.metrics_refined.axis_error == half_pi, tag + "axis not pi/2");
    gate.require(r.metrics_refined.position_error == 1.0, tag + "position not 1.0");
    gate.require(r.metrics_refined.type_error, tag + "type error not set");
    gate.require(r.metrics_refined.state_error ==
                     (data.gt->joint.type == JointType::Revolute ? half_pi : 1.0),
                 tag + "state error wrong");
    gate.require(r.geometry.cd_whole == 1.0 && r.geometry.cd_movable == 1.0 &&
                     r.geometry.cd_static == 1.0,
                 tag + "geometry errors not 1.0");
    gate.require(r.camera.rotation_error == 1.0 && r.camera.translation_error == 1.0,
                 tag + "camera errors not 1.0");
    gate.require(r.miou_value == 0.0, tag + "mIOU not 0");
  };

  // No correspondences at all: camera chaining cannot start.
  Dataset rev = generate_scene(make_random_scene_spec(701, JointType::Revolute, false));
  rev.correspondences.clear();
  check_failure(rev, "no matches");

  // Static matches intact but every dynamic match stripped: no joint pairs.
  Dataset pris = generate_scene(make_random_scene_spec(702, JointType::Prismatic, false));
  for (auto& set : pris.correspondences) {
    std::vector<CorrespondenceSet::Match> kept;
    for (const auto& m : set.matches) {
      const bool dyn =
          pris.maps[set.frame_a][pris.frames[set.frame_a].pixels[m.index_a]] >= 0.5f &&
          pris.maps[set.frame_b][pris.frames[set.frame_b].pixels[m.index_b]] >= 0.5f;
      if (!dyn) kept.push_back(m);
    }
    set.matches = std::move(kept);
  }
  check_failure(pris, "no dynamic matches");
  return gate;
}

// --- criterion 8: cross-seed variance -------------------------------------

Gate variance_check() {
  Gate gate;
  PipelineConfig config;
  std::vector<SceneSpec> specs;
  for (int i = 0; i < 100; ++i)
    specs.push_back(make_random_scene_spec(
        5000 + i, i < 50 ? JointType::Revolute : JointType::Prismatic, true));
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);

  auto reports = variance_harness(specs, seeds, config);
  gate.require(reports.size() == seeds.size(), "missing per-seed reports");

  std::vector<double> refined, coarse;
  for (const auto& rep : reports) {
    gate.require(rep.axis_refined.size() == specs.size(), "incomplete seed run");
    refined.push_back(rep.mean_axis_refined);
    coarse.push_back(rep.mean_axis_coarse);
  }
  const double std_ref = aggregate(refined).stddev;
  const double std_coarse = aggregate(coarse).stddev;
  std::printf("  cross-seed std: refined %.5f vs coarse %.5f (means %.4f / %.4f)\n", std_ref,
              std_coarse, mean(refined), mean(coarse));
  gate.require(std_ref <= std_coarse, "refined variance exceeds coarse variance");
  return gate;
}

// --- criterion 9: determinism ---------------------------------------------

Gate determinism() {
  Gate gate;
  const fs::path root = fs::temp_directory_path() / "artic_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);

  Dataset generated = generate_scene(make_random_scene_spec(900, JointType::Revolute, true));
  write_dataset(generated, (root / "dataset").string());

  auto run_into = [&](const char* name, int threads) {
    Dataset data = read_dataset((root / "dataset").string());
    PipelineConfig config;
    config.threads = threads;
    PipelineResult r = run_pipeline(data, config, 42);
    const fs::path dir = root / name;
    write_pipeline_artifacts(r, data, dir.string());
    return dir;
  };

  const fs::path a = run_into("run_a", 1);
  const fs::path b = run_into("run_b", 1);
  const fs::path c = run_into("run_c", 2);

  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    gate.require(slurp(entry.path()) == slurp(b / name),
                 name + " differs between identical runs");
    gate.require(slurp(entry.path()) == slurp(c / name),
                 name + " differs across thread counts");
  }
  fs::remove_all(root);
  return gate;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <criterion 1-9>\n", argv[0]);
    return 2;
  }
  const int criterion = std::atoi(argv[1]);

  static const struct {
    const char* name;
    Gate (*run)();
  } table[] = {
      {"exact recovery on noiseless scenes", exact_recovery},
      {"robustness on noisy scenes", noisy_robustness},
      {"analytic gradient correctness", gradient_check},
      {"Chamfer brute-force equivalence", chamfer_oracle},
      {"screw compose/decompose round trip", screw_round_trip},
      {"segmentation quality", segmentation_quality},
      {"failure metric assignments", failure_assignments},
      {"cross-seed variance reduction", variance_check},
      {"determinism across runs and threads", determinism},
  };
  if (criterion < 1 || criterion > 9) {
    std::fprintf(stderr, "unknown criterion %d\n", criterion);
    return 2;
  }

  Gate gate = table[criterion - 1].run();
  std::printf("criterion %d (%s): %s%s%s\n", criterion, table[criterion - 1].name,
              gate.ok ? "PASS" : "FAIL", gate.ok ? "" : " - ", gate.detail.c_str());
  return gate.ok ? 0 : 1;
}
