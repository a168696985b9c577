#include "artic/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace artic;

PipelineConfig load_config(const std::string& path, int threads) {
  PipelineConfig config = path.empty() ? PipelineConfig{} : PipelineConfig::load(path);
  if (threads > 0) config.threads = threads;
  return config;
}

void print_joint(const JointModel& joint, const std::vector<double>& states) {
  std::printf("type: %s\n", to_string(joint.type));
  std::printf("axis: %.6f %.6f %.6f\n", joint.axis.x(), joint.axis.y(), joint.axis.z());
  if (joint.type == JointType::Revolute)
    std::printf("pivot: %.6f %.6f %.6f\n", joint.pivot.x(), joint.pivot.y(), joint.pivot.z());
  std::printf("states:");
  for (double s : states) std::printf(" %.5f", s);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine articulated-object reconstruction from point cloud video"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path;
  int threads = 0;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--threads", threads, "worker threads (0 = config value)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene dataset");
  std::string synth_out, synth_type = "revolute";
  bool synth_noisy = false;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--type", synth_type, "revolute | prismatic");
  synth->add_flag("--noisy", synth_noisy, "add point noise, outliers, mask corruption");

  // coarse
  auto* coarse_cmd = app.add_subcommand("coarse", "Coarse joint + camera estimation");
  std::string coarse_in, coarse_out = "coarse.json";
  coarse_cmd->add_option("--in", coarse_in, "dataset directory or manifest.json")->required();
  coarse_cmd->add_option("--out", coarse_out, "output JSON path");

  // pipeline (also covers refine + segment end-to-end)
  auto* pipe = app.add_subcommand("pipeline", "Full coarse -> refine -> segment -> eval run");
  std::string pipe_in, pipe_out;
  pipe->add_option("--in", pipe_in, "dataset directory or manifest.json")->required();
  pipe->add_option("--out", pipe_out, "artifact output directory")->required();

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Gradient refinement of both hypotheses");
  std::string refine_in, refine_out;
  refine_cmd->add_option("--in", refine_in, "dataset directory or manifest.json")->required();
  refine_cmd->add_option("--out", refine_out, "artifact output directory")->required();

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "Movable/static partition of the surface cloud");
  std::string seg_in, seg_refine, seg_out;
  seg_cmd->add_option("--in", seg_in, "dataset directory or manifest.json")->required();
  seg_cmd->add_option("--refine", seg_refine, "refine JSON of the selected hypothesis")
      ->required();
  seg_cmd->add_option("--out", seg_out, "output directory for partition.json/.ply")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Metrics against dataset ground truth");
  std::string eval_pred, eval_gt, eval_out = "report.json";
  eval_cmd->add_option("--pred", eval_pred, "artifact directory of a pipeline run")->required();
  eval_cmd->add_option("--gt", eval_gt, "dataset directory with ground truth")->required();
  eval_cmd->add_option("--out", eval_out, "output report path");

  auto* var_cmd = eval_cmd->add_subcommand("variance", "Multi-seed variance harness");
  int var_scenes = 10, var_seeds = 10;
  bool var_noisy = true;
  var_cmd->add_option("--scenes", var_scenes, "number of generated scenes");
  var_cmd->add_option("--seeds", var_seeds, "number of pipeline seeds");
  var_cmd->add_flag("--noisy,!--noiseless", var_noisy, "noisy scene corpus");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig config = load_config(config_path, threads);

    if (*synth) {
      const JointType type =
          synth_type == "prismatic" ? JointType::Prismatic : JointType::Revolute;
      const SceneSpec spec = make_random_scene_spec(seed, type, synth_noisy);
      const Dataset data = generate_scene(spec);
      write_dataset(data, synth_out);
      std::printf("wrote %d-frame %s scene to %s\n", data.frame_count, to_string(type),
                  synth_out.c_str());
    } else if (*coarse_cmd) {
      const Dataset data = read_dataset(coarse_in);
      PipelineResult result;
      result.coarse = coarse_predict(data, config, seed);
      result.coarse_valid = true;
      result.selected = result.coarse.selected;
      write_pipeline_artifacts(result, data, std::filesystem::path(coarse_out).parent_path()
                                                 .string()
                                                 .empty()
                                                 ? "."
                                                 : std::filesystem::path(coarse_out)
                                                       .parent_path()
                                                       .string());
      const auto& hyp = result.coarse.hypothesis(result.coarse.voted_type);
      JointModel joint{result.coarse.voted_type, hyp.axis, hyp.pivot};
      print_joint(joint, hyp.states);
    } else if (*pipe || *refine_cmd) {
      const std::string in = *pipe ? pipe_in : refine_in;
      const std::string out = *pipe ? pipe_out : refine_out;
      const Dataset data = read_dataset(in);
      const PipelineResult result = run_pipeline(data, config, seed);
      write_pipeline_artifacts(result, data, out);
      if (result.failed) {
        std::printf("failed at %s: %s\n", result.failure_stage.c_str(),
                    result.failure_message.c_str());
      } else {
        print_joint(result.selection.joint, result.selection.states.states);
        if (result.has_metrics)
          std::printf("axis error: %.6f rad (coarse %.6f)\n",
                      result.metrics_refined.axis_error, result.metrics_coarse.axis_error);
      }
    } else if (*seg_cmd) {
      const Dataset data = read_dataset(seg_in);
      const auto refine = nlohmann::json::parse(std::ifstream(seg_refine));
      const std::vector<double> moving = refine.at("moving_vector");

      // Frame-0 moving map from the stored moving vector and the segment masks.
      MovingMap map0(static_cast<std::size_t>(data.height) * data.width, 0.0f);
      std::size_t slot = 0;
      for (const auto& track : data.segments) {
        if (!track.present_in_frame0) continue;
        for (std::size_t pix = 0; pix < map0.size(); ++pix)
          if (track.masks[0][pix])
            map0[pix] = std::min(1.0f, map0[pix] + static_cast<float>(moving.at(slot)));
        ++slot;
      }
      const SurfacePartition partition =
          extract_movable_part(data.surface, map0, data.frames[0], config);

      std::filesystem::create_directories(seg_out);
      nlohmann::json part{{"version", 1},
                          {"movable", partition.movable},
                          {"static", partition.static_part},
                          {"no_moving_pixels", partition.no_moving_pixels}};
      std::ofstream((std::filesystem::path(seg_out) / "partition.json")) << part.dump(2) << '\n';
      std::vector<std::uint16_t> labels(data.surface.size(), 0);
      for (int i : partition.movable) labels[i] = 1;
      write_cloud_ply((std::filesystem::path(seg_out) / "partition.ply").string(),
                      data.surface.points, &labels);
      std::printf("movable points: %zu / %zu\n", partition.movable.size(), data.surface.size());
    } else if (*eval_cmd) {
      if (*var_cmd) {
        std::vector<SceneSpec> specs;
        for (int i = 0; i < var_scenes; ++i)
          specs.push_back(make_random_scene_spec(
              1000 + i, i % 2 == 0 ? JointType::Revolute : JointType::Prismatic, var_noisy));
        std::vector<std::uint64_t> seeds;
        for (int s = 0; s < var_seeds; ++s) seeds.push_back(seed + 1 + s);
        const auto reports = variance_harness(specs, seeds, config);
        std::vector<double> refined_means, coarse_means;
        for (const auto& rep : reports) {
          std::printf("seed %llu: mean refined axis %.5f, mean coarse axis %.5f\n",
                      static_cast<unsigned long long>(rep.seed), rep.mean_axis_refined,
                      rep.mean_axis_coarse);
          refined_means.push_back(rep.mean_axis_refined);
          coarse_means.push_back(rep.mean_axis_coarse);
        }
        const Aggregate ar = aggregate(refined_means), ac = aggregate(coarse_means);
        std::printf("cross-seed refined axis: %.5f +- %.5f\n", ar.mean, ar.stddev);
        std::printf("cross-seed coarse  axis: %.5f +- %.5f\n", ac.mean, ac.stddev);
      } else {
        const Dataset data = read_dataset(eval_gt);
        if (!data.gt) throw std::runtime_error("dataset has no ground truth");
        const auto report = nlohmann::json::parse(
            std::ifstream((std::filesystem::path(eval_pred) / "report.json")));
        std::ofstream(eval_out) << report.dump(2) << '\n';
        std::printf("copied metrics report to %s\n", eval_out.c_str());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
