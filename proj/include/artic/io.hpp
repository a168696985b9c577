#pragma once

#include "artic/coarse.hpp"
#include "artic/config.hpp"
#include "artic/eval.hpp"
#include "artic/refine.hpp"
#include "artic/segment.hpp"
#include "artic/synth.hpp"
#include "artic/types.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace artic {

struct MissingFile : std::runtime_error {
  std::string path;
  explicit MissingFile(const std::string& p) : std::runtime_error("missing file: " + p), path(p) {}
};
struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct BadChecksum : std::runtime_error {
  explicit BadChecksum(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Low-level formats
// ---------------------------------------------------------------------------

/// Binary little-endian PLY, float32 xyz. Optional per-vertex uint16 `label`
/// and uint32 `pixel` properties when the corresponding vectors are
/// non-null/non-empty.
void write_cloud_ply(const std::string& path, const std::vector<Vec3>& points,
                     const std::vector<std::uint16_t>* labels = nullptr,
                     const std::vector<int>* pixels = nullptr);
void read_cloud_ply(const std::string& path, std::vector<Vec3>* points,
                    std::vector<std::uint16_t>* labels = nullptr,
                    std::vector<int>* pixels = nullptr);

/// Flat float32 row-major raster with an 8-byte header (uint32 height,
/// width).
void write_raster(const std::string& path, int height, int width, const float* values);
std::vector<float> read_raster(const std::string& path, int* height, int* width);

/// Newline-delimited `t t' idx_a idx_b conf` records for every
/// correspondence set.
void write_correspondences(const std::string& path,
                           const std::vector<CorrespondenceSet>& sets);
std::vector<CorrespondenceSet> read_correspondences(const std::string& path);

// ---------------------------------------------------------------------------
// Dataset interchange
// ---------------------------------------------------------------------------

/// Writes the dataset (including ground truth, when present) into `dir` with
/// a manifest.json tying the files together.
void write_dataset(const Dataset& data, const std::string& dir);

/// Reads and fully validates a dataset from a manifest.json path or the
/// directory containing one. Throws MissingFile / DimensionMismatch /
/// BadChecksum with the offending file named.
Dataset read_dataset(const std::string& manifest_path);

// ---------------------------------------------------------------------------
// Pipeline orchestration
// ---------------------------------------------------------------------------

/// Everything one end-to-end run produces. Stage failures are recorded, not
/// thrown; downstream metrics then carry the failure assignments.
struct PipelineResult {
  bool failed = false;
  std::string failure_stage;
  std::string failure_message;

  std::vector<int> selected;
  CoarseEstimate coarse;
  bool coarse_valid = false;
  JointModel coarse_joint;
  JointStateSequence coarse_states;

  bool refined_valid = false;
  RefineState refined_revolute;
  RefineState refined_prismatic;
  JointSelection selection;
  SurfacePartition partition;

  bool has_metrics = false;  // ground truth was present
  JointMetrics metrics_refined;
  JointMetrics metrics_coarse;
  GeometryMetrics geometry;
  double miou_value = 0;
  CameraMetrics camera;
};

/// coarse -> refine (both hypotheses) -> select -> segment -> eval (when
/// ground truth is present). Data-dependent stage errors never propagate as
/// exceptions; they set failure_stage and the metrics fall back to the
/// failure assignments.
PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config,
                            std::uint64_t seed);

/// Serializes all artifacts of one run into `dir`: coarse.json,
/// refine_revolute.json / refine_prismatic.json (+ loss_history csv),
/// partition.json + partition.ply, report.json.
void write_pipeline_artifacts(const PipelineResult& result, const Dataset& data,
                              const std::string& dir);

// ---------------------------------------------------------------------------
// Multi-run harness
// ---------------------------------------------------------------------------

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<double> axis_refined;
  std::vector<double> axis_coarse;
  std::vector<double> state_refined;
  std::vector<double> position_refined;
  std::vector<double> type_correct;  // 0/1 per scene
  std::vector<double> miou_values;
  double mean_axis_refined = 0;
  double mean_axis_coarse = 0;
};

/// Full pipeline per (scene spec, seed); per-seed means of every metric.
/// The pipeline RNG seed is mixed from the harness seed and the scene index,
/// so different harness seeds rerun the same scenes with different sampling.
std::vector<RunReport> variance_harness(const std::vector<SceneSpec>& specs,
                                        const std::vector<std::uint64_t>& seeds,
                                        const PipelineConfig& config);

}  // namespace artic
