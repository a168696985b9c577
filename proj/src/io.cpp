#include "artic/io.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace artic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile(path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path);
  return in;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec3(const json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

json transform_json(const RigidTransform& t) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(t.rotation()(r, c));
  return json{{"rotation", rot}, {"translation", vec3_json(t.translation())}};
}

RigidTransform json_transform(const json& j) {
  Mat3 rot;
  const auto& r = j.at("rotation");
  for (int i = 0; i < 9; ++i) rot(i / 3, i % 3) = r.at(i);
  return RigidTransform(rot, json_vec3(j.at("translation")));
}

json joint_json(const JointModel& joint) {
  return json{{"type", to_string(joint.type)},
              {"axis", vec3_json(joint.axis)},
              {"pivot", vec3_json(joint.pivot)}};
}

JointModel json_joint(const json& j) {
  JointModel joint;
  joint.type =
      j.at("type") == "revolute" ? JointType::Revolute : JointType::Prismatic;
  joint.axis = json_vec3(j.at("axis"));
  joint.pivot = json_vec3(j.at("pivot"));
  return joint;
}

std::string frame_tag(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", t);
  return buf;
}

void write_json_file(const json& j, const std::string& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  return json::parse(in);
}

}  // namespace

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

void write_cloud_ply(const std::string& path, const std::vector<Vec3>& points,
                     const std::vector<std::uint16_t>* labels, const std::vector<int>* pixels) {
  const bool with_labels = labels && !labels->empty();
  const bool with_pixels = pixels && !pixels->empty();
  auto out = open_out(path);
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << points.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n";
  if (with_labels) out << "property ushort label\n";
  if (with_pixels) out << "property uint pixel\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const float xyz[3] = {static_cast<float>(points[i].x()), static_cast<float>(points[i].y()),
                          static_cast<float>(points[i].z())};
    out.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
    if (with_labels) {
      const std::uint16_t l = (*labels)[i];
      out.write(reinterpret_cast<const char*>(&l), sizeof l);
    }
    if (with_pixels) {
      const std::uint32_t p = static_cast<std::uint32_t>((*pixels)[i]);
      out.write(reinterpret_cast<const char*>(&p), sizeof p);
    }
  }
}

void read_cloud_ply(const std::string& path, std::vector<Vec3>* points,
                    std::vector<std::uint16_t>* labels, std::vector<int>* pixels) {
  auto in = open_in(path);
  std::string line;
  std::size_t count = 0;
  bool with_labels = false, with_pixels = false;
  int float_props = 0;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex") throw DimensionMismatch(path + ": unsupported element " + name);
    } else if (word == "property") {
      std::string type, name;
      ss >> type >> name;
      if (type == "float")
        ++float_props;
      else if (type == "ushort" && name == "label")
        with_labels = true;
      else if (type == "uint" && name == "pixel")
        with_pixels = true;
      else
        throw DimensionMismatch(path + ": unsupported property " + type + " " + name);
    }
  }
  if (float_props != 3) throw DimensionMismatch(path + ": expected float x y z");

  const std::size_t stride =
      12 + (with_labels ? 2 : 0) + (with_pixels ? 4 : 0);
  std::vector<char> payload(stride * count);
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw BadChecksum(path + ": payload shorter than header promises");

  points->resize(count);
  if (labels) labels->assign(with_labels ? count : 0, 0);
  if (pixels) pixels->assign(with_pixels ? count : 0, 0);
  const char* p = payload.data();
  for (std::size_t i = 0; i < count; ++i) {
    float xyz[3];
    std::memcpy(xyz, p, sizeof xyz);
    p += sizeof xyz;
    (*points)[i] = Vec3(xyz[0], xyz[1], xyz[2]);
    if (with_labels) {
      std::uint16_t l;
      std::memcpy(&l, p, sizeof l);
      p += sizeof l;
      if (labels) (*labels)[i] = l;
    }
    if (with_pixels) {
      std::uint32_t px;
      std::memcpy(&px, p, sizeof px);
      p += sizeof px;
      if (pixels) (*pixels)[i] = static_cast<int>(px);
    }
  }
}

// ---------------------------------------------------------------------------
// Rasters
// ---------------------------------------------------------------------------

void write_raster(const std::string& path, int height, int width, const float* values) {
  auto out = open_out(path);
  const std::uint32_t hw[2] = {static_cast<std::uint32_t>(height),
                               static_cast<std::uint32_t>(width)};
  out.write(reinterpret_cast<const char*>(hw), sizeof hw);
  out.write(reinterpret_cast<const char*>(values),
            static_cast<std::streamsize>(sizeof(float) * height * width));
}

std::vector<float> read_raster(const std::string& path, int* height, int* width) {
  auto in = open_in(path);
  std::uint32_t hw[2];
  in.read(reinterpret_cast<char*>(hw), sizeof hw);
  if (in.gcount() != sizeof hw) throw BadChecksum(path + ": truncated header");
  *height = static_cast<int>(hw[0]);
  *width = static_cast<int>(hw[1]);
  std::vector<float> values(static_cast<std::size_t>(*height) * *width);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(sizeof(float) * values.size()));
  if (static_cast<std::size_t>(in.gcount()) != sizeof(float) * values.size())
    throw BadChecksum(path + ": truncated payload");
  return values;
}

// ---------------------------------------------------------------------------
// Correspondences
// ---------------------------------------------------------------------------

void write_correspondences(const std::string& path,
                           const std::vector<CorrespondenceSet>& sets) {
  auto out = open_out(path);
  out.precision(17);
  for (const auto& set : sets)
    for (const auto& m : set.matches)
      out << set.frame_a << ' ' << set.frame_b << ' ' << m.index_a << ' ' << m.index_b << ' '
          << m.confidence << '\n';
}

std::vector<CorrespondenceSet> read_correspondences(const std::string& path) {
  auto in = open_in(path);
  std::vector<CorrespondenceSet> sets;
  int a, b, ia, ib;
  double conf;
  while (in >> a >> b >> ia >> ib >> conf) {
    if (sets.empty() || sets.back().frame_a != a || sets.back().frame_b != b) {
      CorrespondenceSet set;
      set.frame_a = a;
      set.frame_b = b;
      sets.push_back(std::move(set));
    }
    sets.back().matches.push_back({ia, ib, conf});
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Dataset interchange
// ---------------------------------------------------------------------------

void write_dataset(const Dataset& data, const std::string& dir) {
  fs::create_directories(dir);
  const auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  json manifest;
  manifest["version"] = 1;
  manifest["frame_count"] = data.frame_count;
  manifest["height"] = data.height;
  manifest["width"] = data.width;
  manifest["intrinsics"] = {{"fx", data.intrinsics.fx},
                            {"fy", data.intrinsics.fy},
                            {"cx", data.intrinsics.cx},
                            {"cy", data.intrinsics.cy}};

  write_cloud_ply(at("surface.ply"), data.surface.points,
                  data.surface_labels.empty() ? nullptr : &data.surface_labels);
  manifest["surface"] = "surface.ply";

  json frames = json::array();
  for (int t = 0; t < data.frame_count; ++t) {
    const std::string cloud = "frame_" + frame_tag(t) + ".ply";
    const std::string map = "map_" + frame_tag(t) + ".raw";
    write_cloud_ply(at(cloud), data.frames[t].points, nullptr, &data.frames[t].pixels);
    write_raster(at(map), data.height, data.width, data.maps[t].data());
    frames.push_back({{"cloud", cloud}, {"map", map}});
  }
  manifest["frames"] = frames;

  json segments = json::array();
  std::vector<float> buffer(static_cast<std::size_t>(data.height) * data.width);
  for (const auto& seg : data.segments) {
    json masks = json::array();
    for (int t = 0; t < data.frame_count; ++t) {
      const std::string name =
          "seg_" + frame_tag(seg.id) + "_f" + frame_tag(t) + ".raw";
      for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = seg.masks[t][i] ? 1.0f : 0.0f;
      write_raster(at(name), data.height, data.width, buffer.data());
      masks.push_back(name);
    }
    segments.push_back({{"id", seg.id}, {"masks", masks}});
  }
  manifest["segments"] = segments;

  write_correspondences(at("correspondences.txt"), data.correspondences);
  manifest["correspondences"] = "correspondences.txt";

  if (data.gt) {
    const GroundTruth& gt = *data.gt;
    json g;
    g["joint"] = joint_json(gt.joint);
    g["states"] = gt.states.states;
    json cams = json::array();
    for (const auto& cam : gt.cameras) cams.push_back(transform_json(cam));
    g["cameras"] = cams;
    g["movable_part"] = gt.movable_part;
    json gmaps = json::array();
    for (int t = 0; t < data.frame_count; ++t) {
      const std::string name = "gtmap_" + frame_tag(t) + ".raw";
      for (std::size_t i = 0; i < buffer.size(); ++i)
        buffer[i] = gt.moving_maps[t][i] ? 1.0f : 0.0f;
      write_raster(at(name), data.height, data.width, buffer.data());
      gmaps.push_back(name);
    }
    g["moving_maps"] = gmaps;
    manifest["ground_truth"] = g;
  }

  write_json_file(manifest, at("manifest.json"));
}

Dataset read_dataset(const std::string& manifest_path) {
  fs::path mpath(manifest_path);
  if (fs::is_directory(mpath)) mpath /= "manifest.json";
  if (!fs::exists(mpath)) throw MissingFile(mpath.string());
  const fs::path dir = mpath.parent_path();
  const auto at = [&](const std::string& name) { return (dir / name).string(); };
  const json manifest = read_json_file(mpath.string());

  if (manifest.value("version", 0) != 1)
    throw DimensionMismatch(mpath.string() + ": unsupported manifest version");

  Dataset data;
  data.frame_count = manifest.at("frame_count");
  data.height = manifest.at("height");
  data.width = manifest.at("width");
  if (data.frame_count < 2)
    throw DimensionMismatch(mpath.string() + ": frame_count must be at least 2");
  const auto& intr = manifest.at("intrinsics");
  data.intrinsics = {intr.at("fx"), intr.at("fy"), intr.at("cx"), intr.at("cy")};
  const std::size_t n_pix = static_cast<std::size_t>(data.height) * data.width;

  read_cloud_ply(at(manifest.at("surface")), &data.surface.points, &data.surface_labels);

  const auto check_raster = [&](const std::string& name, int h, int w) {
    if (h != data.height || w != data.width)
      throw DimensionMismatch(at(name) + ": raster is " + std::to_string(h) + "x" +
                              std::to_string(w) + ", manifest says " +
                              std::to_string(data.height) + "x" + std::to_string(data.width));
  };

  const auto& frames = manifest.at("frames");
  if (static_cast<int>(frames.size()) != data.frame_count)
    throw DimensionMismatch(mpath.string() + ": frames[] length disagrees with frame_count");
  for (const auto& f : frames) {
    FrameObservation frame;
    frame.height = data.height;
    frame.width = data.width;
    frame.intrinsics = data.intrinsics;
    read_cloud_ply(at(f.at("cloud")), &frame.points, nullptr, &frame.pixels);
    for (int pix : frame.pixels)
      if (pix < 0 || static_cast<std::size_t>(pix) >= n_pix)
        throw DimensionMismatch(at(f.at("cloud")) + ": pixel index out of range");
    int h, w;
    std::vector<float> map = read_raster(at(f.at("map")), &h, &w);
    check_raster(f.at("map"), h, w);
    data.frames.push_back(std::move(frame));
    data.maps.push_back(std::move(map));
  }

  for (const auto& s : manifest.at("segments")) {
    SegmentTrack track;
    track.id = s.at("id");
    const auto& masks = s.at("masks");
    if (static_cast<int>(masks.size()) != data.frame_count)
      throw DimensionMismatch(mpath.string() + ": segment " + std::to_string(track.id) +
                              " mask count disagrees with frame_count");
    for (const auto& name : masks) {
      int h, w;
      std::vector<float> raster = read_raster(at(name), &h, &w);
      check_raster(name, h, w);
      std::vector<std::uint8_t> mask(n_pix);
      for (std::size_t i = 0; i < n_pix; ++i) mask[i] = raster[i] > 0.5f ? 1 : 0;
      track.masks.push_back(std::move(mask));
    }
    for (std::uint8_t m : track.masks[0]) track.present_in_frame0 |= m != 0;
    data.segments.push_back(std::move(track));
  }

  data.correspondences = read_correspondences(at(manifest.at("correspondences")));
  for (const auto& set : data.correspondences) {
    if (set.frame_a < 0 || set.frame_a >= data.frame_count || set.frame_b < 0 ||
        set.frame_b >= data.frame_count)
      throw DimensionMismatch(at(manifest.at("correspondences")) + ": frame index out of range");
    for (const auto& m : set.matches)
      if (m.index_a < 0 || m.index_a >= static_cast<int>(data.frames[set.frame_a].points.size()) ||
          m.index_b < 0 || m.index_b >= static_cast<int>(data.frames[set.frame_b].points.size()))
        throw DimensionMismatch(at(manifest.at("correspondences")) +
                                ": point index out of range");
  }

  if (manifest.contains("ground_truth")) {
    const auto& g = manifest.at("ground_truth");
    GroundTruth gt;
    gt.joint = json_joint(g.at("joint"));
    gt.states.states = g.at("states").get<std::vector<double>>();
    for (const auto& cam : g.at("cameras")) gt.cameras.push_back(json_transform(cam));
    gt.movable_part = g.at("movable_part");
    gt.surface_labels = data.surface_labels;
    for (const auto& name : g.at("moving_maps")) {
      int h, w;
      std::vector<float> raster = read_raster(at(name), &h, &w);
      check_raster(name, h, w);
      std::vector<std::uint8_t> mask(n_pix);
      for (std::size_t i = 0; i < n_pix; ++i) mask[i] = raster[i] > 0.5f ? 1 : 0;
      gt.moving_maps.push_back(std::move(mask));
    }
    if (static_cast<int>(gt.moving_maps.size()) != data.frame_count ||
        static_cast<int>(gt.cameras.size()) != data.frame_count ||
        static_cast<int>(gt.states.states.size()) != data.frame_count)
      throw DimensionMismatch(mpath.string() + ": ground-truth arrays disagree with frame_count");
    data.gt = std::move(gt);
  }
  return data;
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

PipelineConfig PipelineConfig::load(const std::string& path) {
  const json j = read_json_file(path);
  PipelineConfig c;
  c.target_frames = j.value("target_frames", c.target_frames);
  c.match_confidence = j.value("match_confidence", c.match_confidence);
  c.pair_max_step = j.value("pair_max_step", c.pair_max_step);
  c.min_pair_matches = j.value("min_pair_matches", c.min_pair_matches);
  c.ransac_iterations = j.value("ransac_iterations", c.ransac_iterations);
  c.ransac_inlier_radius = j.value("ransac_inlier_radius", c.ransac_inlier_radius);
  c.dynamic_map_threshold = j.value("dynamic_map_threshold", c.dynamic_map_threshold);
  c.adam_iterations = j.value("adam_iterations", c.adam_iterations);
  c.adam_lr = j.value("adam_lr", c.adam_lr);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.point_subsample = j.value("point_subsample", c.point_subsample);
  c.moving_vector_clamp_lo = j.value("moving_vector_clamp_lo", c.moving_vector_clamp_lo);
  c.moving_vector_clamp_hi = j.value("moving_vector_clamp_hi", c.moving_vector_clamp_hi);
  c.prismatic_axis_distance = j.value("prismatic_axis_distance", c.prismatic_axis_distance);
  c.moving_threshold = j.value("moving_threshold", c.moving_threshold);
  c.attach_radius = j.value("attach_radius", c.attach_radius);
  c.chamfer_samples = j.value("chamfer_samples", c.chamfer_samples);
  c.threads = j.value("threads", c.threads);
  return c;
}

void PipelineConfig::save(const std::string& path) const {
  json j{{"target_frames", target_frames},
         {"match_confidence", match_confidence},
         {"pair_max_step", pair_max_step},
         {"min_pair_matches", min_pair_matches},
         {"ransac_iterations", ransac_iterations},
         {"ransac_inlier_radius", ransac_inlier_radius},
         {"dynamic_map_threshold", dynamic_map_threshold},
         {"adam_iterations", adam_iterations},
         {"adam_lr", adam_lr},
         {"adam_beta1", adam_beta1},
         {"adam_beta2", adam_beta2},
         {"adam_epsilon", adam_epsilon},
         {"point_subsample", point_subsample},
         {"moving_vector_clamp_lo", moving_vector_clamp_lo},
         {"moving_vector_clamp_hi", moving_vector_clamp_hi},
         {"prismatic_axis_distance", prismatic_axis_distance},
         {"moving_threshold", moving_threshold},
         {"attach_radius", attach_radius},
         {"chamfer_samples", chamfer_samples},
         {"threads", threads}};
  write_json_file(j, path);
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config,
                            std::uint64_t seed) {
  PipelineResult result;

  try {
    result.coarse = coarse_predict(data, config, seed);
    result.selected = result.coarse.selected;
    result.coarse_valid = true;
    const auto& hyp = result.coarse.hypothesis(result.coarse.voted_type);
    result.coarse_joint.type = result.coarse.voted_type;
    result.coarse_joint.axis = hyp.axis;
    result.coarse_joint.pivot =
        result.coarse.voted_type == JointType::Revolute ? hyp.pivot : Vec3::Zero();
    result.coarse_states.states = hyp.states;
  } catch (const std::exception& e) {
    result.failed = true;
    result.failure_stage = "coarse";
    result.failure_message = e.what();
  }

  if (!result.failed) {
    try {
      const RefineProblem problem = build_refine_problem(data, result.selected, config, seed);
      const RefineState init_rev =
          make_initial_state(problem, result.coarse, JointType::Revolute);
      const RefineState init_pris =
          make_initial_state(problem, result.coarse, JointType::Prismatic);
      if (config.threads > 1) {
        auto rev = std::async(std::launch::async,
                              [&] { return optimize(problem, init_rev); });
        result.refined_prismatic = optimize(problem, init_pris);
        result.refined_revolute = rev.get();
      } else {
        result.refined_revolute = optimize(problem, init_rev);
        result.refined_prismatic = optimize(problem, init_pris);
      }
      result.selection =
          select_joint_type(result.refined_revolute, result.refined_prismatic, problem);
      result.refined_valid = true;
      result.partition =
          extract_movable_part(data.surface, result.selection.maps[0], data.frames[0], config);
    } catch (const std::exception& e) {
      result.failed = true;
      result.failure_stage = "refine";
      result.failure_message = e.what();
    }
  }

  if (data.gt) {
    result.has_metrics = true;
    const GroundTruth& gt = *data.gt;

    JointStateSequence gt_states;
    std::vector<std::vector<std::uint8_t>> gt_maps;
    std::vector<RigidTransform> gt_cameras;
    for (int t : result.selected) {
      gt_states.states.push_back(gt.states.states[t]);
      gt_maps.push_back(gt.moving_maps[t]);
      gt_cameras.push_back(gt.cameras[t]);
    }

    result.metrics_coarse =
        result.coarse_valid
            ? joint_metrics(result.coarse_joint, result.coarse_states, gt.joint, gt_states)
            : failure_metrics(gt.joint);

    if (result.refined_valid) {
      result.metrics_refined =
          joint_metrics(result.selection.joint, result.selection.states, gt.joint, gt_states);
      result.geometry = geometry_metrics(data.surface, result.partition, gt.surface_labels,
                                         gt.movable_part, seed + 9000, config.chamfer_samples);
      result.miou_value = miou(result.selection.maps, gt_maps);
      const RefineState& winner = result.selection.type == JointType::Revolute
                                      ? result.refined_revolute
                                      : result.refined_prismatic;
      std::vector<RigidTransform> pred_cameras;
      for (int k = 0; k < static_cast<int>(result.selected.size()); ++k)
        pred_cameras.push_back(winner.camera_pose(k));
      result.camera = camera_metrics(pred_cameras, gt_cameras);
    } else {
      result.metrics_refined = failure_metrics(gt.joint);
      result.geometry = {1.0, 1.0, 1.0};
      result.miou_value = 0.0;
      result.camera = {1.0, 1.0};
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Artifact serialization
// ---------------------------------------------------------------------------

namespace {

json hypothesis_json(const CoarseEstimate::Hypothesis& h) {
  return json{{"valid", h.valid},          {"axis", vec3_json(h.axis)},
              {"pivot", vec3_json(h.pivot)}, {"votes", h.votes},
              {"mean_residual", h.mean_residual}, {"states", h.states}};
}

json refine_json(const RefineState& state, const std::vector<int>& selected) {
  json j;
  j["version"] = 1;
  j["hypothesis"] = to_string(state.hypothesis);
  j["axis"] = vec3_json(state.axis_raw.normalized());
  j["pivot"] = vec3_json(state.pivot);
  j["states"] = state.states;
  j["final_loss"] = state.final_loss;
  j["selected_frames"] = selected;
  std::vector<double> probs(state.logits.size());
  Eigen::VectorXd v = state.moving_probabilities();
  for (Eigen::Index i = 0; i < v.size(); ++i) probs[i] = v[i];
  j["moving_vector"] = probs;
  json cams = json::array();
  for (int k = 0; k < static_cast<int>(selected.size()); ++k)
    cams.push_back(transform_json(state.camera_pose(k)));
  j["cameras"] = cams;
  return j;
}

void write_history_csv(const RefineState& state, const std::string& path) {
  auto out = open_out(path);
  out.precision(17);
  out << "iteration,loss_static,loss_dynamic,loss\n";
  for (std::size_t i = 0; i < state.history.size(); ++i)
    out << (i + 1) << ',' << state.history[i][0] << ',' << state.history[i][1] << ','
        << state.history[i][2] << '\n';
}

json metrics_json(const JointMetrics& m) {
  return json{{"axis_error", m.axis_error},
              {"position_error", m.position_error},
              {"type_error", m.type_error},
              {"state_error", m.state_error},
              {"failure", m.failure}};
}

}  // namespace

void write_pipeline_artifacts(const PipelineResult& result, const Dataset& data,
                              const std::string& dir) {
  fs::create_directories(dir);
  const auto at = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  json coarse;
  coarse["version"] = 1;
  coarse["valid"] = result.coarse_valid;
  if (result.coarse_valid) {
    coarse["selected_frames"] = result.coarse.selected;
    coarse["voted_type"] = to_string(result.coarse.voted_type);
    coarse["revolute"] = hypothesis_json(result.coarse.revolute);
    coarse["prismatic"] = hypothesis_json(result.coarse.prismatic);
    json cams = json::array();
    for (const auto& cam : result.coarse.cameras) cams.push_back(transform_json(cam));
    coarse["cameras"] = cams;
  }
  write_json_file(coarse, at("coarse.json"));

  if (result.refined_valid) {
    write_json_file(refine_json(result.refined_revolute, result.selected),
                    at("refine_revolute.json"));
    write_json_file(refine_json(result.refined_prismatic, result.selected),
                    at("refine_prismatic.json"));
    write_history_csv(result.refined_revolute, at("loss_history_revolute.csv"));
    write_history_csv(result.refined_prismatic, at("loss_history_prismatic.csv"));

    json part;
    part["version"] = 1;
    part["movable"] = result.partition.movable;
    part["static"] = result.partition.static_part;
    part["no_moving_pixels"] = result.partition.no_moving_pixels;
    write_json_file(part, at("partition.json"));
    std::vector<std::uint16_t> labels(data.surface.size(), 0);
    for (int i : result.partition.movable) labels[i] = 1;
    write_cloud_ply(at("partition.ply"), data.surface.points, &labels);
  }

  json report;
  report["version"] = 1;
  report["conventions"] = {
      {"axis_error", "undirected line angle, arccos of |dot|"},
      {"position_error", "minimum distance between the two infinite axis lines"},
      {"state_error", "mean absolute difference, sign-aligned with the axis flip"},
      {"failure_assignment", "pi/2 for axis and revolute state, 1.0 for the rest"}};
  report["failed"] = result.failed;
  if (result.failed) {
    report["failure_stage"] = result.failure_stage;
    report["failure_message"] = result.failure_message;
  }
  if (result.refined_valid) {
    report["selected_type"] = to_string(result.selection.type);
    report["joint"] = joint_json(result.selection.joint);
    report["states"] = result.selection.states.states;
    report["axis_surface_distance"] = result.selection.axis_surface_distance;
    report["forced_prismatic"] = result.selection.forced_prismatic;
  }
  if (result.has_metrics) {
    report["metrics"] = {{"refined", metrics_json(result.metrics_refined)},
                         {"coarse", metrics_json(result.metrics_coarse)},
                         {"cd_whole", result.geometry.cd_whole},
                         {"cd_movable", result.geometry.cd_movable},
                         {"cd_static", result.geometry.cd_static},
                         {"miou", result.miou_value},
                         {"camera_rotation_error", result.camera.rotation_error},
                         {"camera_translation_error", result.camera.translation_error}};
  }
  write_json_file(report, at("report.json"));
}

// ---------------------------------------------------------------------------
// Variance harness
// ---------------------------------------------------------------------------

std::vector<RunReport> variance_harness(const std::vector<SceneSpec>& specs,
                                        const std::vector<std::uint64_t>& seeds,
                                        const PipelineConfig& config) {
  std::vector<RunReport> reports(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) reports[s].seed = seeds[s];

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const Dataset data = generate_scene(specs[i]);  // scene content fixed by its own seed
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const PipelineResult res = run_pipeline(data, config, seeds[s] * 1000003ULL + i);
      RunReport& rep = reports[s];
      rep.axis_refined.push_back(res.metrics_refined.axis_error);
      rep.axis_coarse.push_back(res.metrics_coarse.axis_error);
      rep.state_refined.push_back(res.metrics_refined.state_error);
      rep.position_refined.push_back(res.metrics_refined.position_error);
      rep.type_correct.push_back(res.metrics_refined.type_error ? 0.0 : 1.0);
      rep.miou_values.push_back(res.miou_value);
    }
  }
  for (auto& rep : reports) {
    rep.mean_axis_refined = aggregate(rep.axis_refined).mean;
    rep.mean_axis_coarse = aggregate(rep.axis_coarse).mean;
  }
  return reports;
}

}  // namespace artic
