#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "latefuse/ablation.hpp"
#include "latefuse/calibration.hpp"
#include "latefuse/evaluation.hpp"
#include "latefuse/fusion.hpp"
#include "latefuse/simulation.hpp"

namespace latefuse::io {

/// Formats a double with 9 significant digits; all numeric text output goes
/// through this so repeated runs diff cleanly.
std::string format_number(double v);

/// One line of the detection exchange format:
///   frame agent_id pose_x pose_y pose_yaw cx cy cz length width height yaw score
/// Box coordinates are expressed in the record's own frame; the pose is the
/// rigid transform from that frame to the world frame. Lines starting with
/// '#' are comments.
struct DetectionRecord {
  int frame = 0;
  std::string agent_id;
  double pose_x = 0.0;
  double pose_y = 0.0;
  double pose_yaw = 0.0;
  double cx = 0.0, cy = 0.0, cz = 0.0;
  double length = 0.0, width = 0.0, height = 0.0;
  double yaw = 0.0;
  double score = 0.0;
};

void write_detection_file(const std::filesystem::path& path,
                          std::span<const DetectionRecord> records);
std::vector<DetectionRecord> read_detection_file(
    const std::filesystem::path& path);

/// Groups records into per-frame AgentDetections (boxes in the agent frame,
/// frame ids set to the agent id). Returns a frame -> agents map.
std::map<int, std::vector<fusion::AgentDetections>> group_by_frame(
    std::span<const DetectionRecord> records);

std::vector<DetectionRecord> to_records(const sim::GeneratedData& data);
std::vector<DetectionRecord> ground_truth_records(
    std::span<const geom::Box3D> gts, int frames);

/// Calibration sample files: one `raw_score label` pair per line.
void write_sample_file(const std::filesystem::path& path,
                       std::span<const calib::CalibrationSample> samples);
std::vector<calib::CalibrationSample> read_sample_file(
    const std::filesystem::path& path);

/// Fitted calibrator document (JSON: kind, a, b, fit metadata).
void write_calibrator_file(const std::filesystem::path& path,
                           const calib::FitResult& result);
calib::Calibrator read_calibrator_file(const std::filesystem::path& path);

sim::ScenarioConfig read_scenario_config(const std::filesystem::path& path);

void write_method_table(const std::filesystem::path& path,
                        std::span<const eval::MethodResult> results,
                        geom::IouVariant variant, double iou_thresh);
void write_pr_curve(const std::filesystem::path& path,
                    const eval::PrCurve& curve);
void write_reliability(const std::filesystem::path& path,
                       const calib::ReliabilityDiagram& diagram);

std::string file_digest(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;
  std::string digest;
};

struct RunManifest {
  std::string tool_version;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> inputs;
  std::vector<ManifestEntry> outputs;
  std::vector<std::pair<std::string, double>> timings_ms;
};

void write_manifest(const std::filesystem::path& path,
                    const RunManifest& manifest);

}  // namespace latefuse::io
