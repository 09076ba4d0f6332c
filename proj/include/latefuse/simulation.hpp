#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latefuse/calibration.hpp"
#include "latefuse/fusion.hpp"
#include "latefuse/geometry.hpp"

namespace latefuse::sim {

struct RecallPoint {
  double distance = 0.0;     // meters from the agent
  double probability = 1.0;  // detection probability at that distance
};

/// Score model of a synthetic detector. Every emitted detection first draws
/// its true correctness probability p, then whether it actually is a true
/// positive (Bernoulli(p)), and finally reports the raw score
/// s = dbs_inverse(p; miscal_a, miscal_b). The map from raw score back to
/// correctness probability is therefore exactly DBS(miscal_a, miscal_b):
/// the agent's ground-truth calibrator is known by construction.
///
/// p is drawn as base_quality^X with X ~ Exp(1) for object-anchored
/// detections and fp_quality^(1+X) for clutter, so base_quality = 1 yields
/// p = 1 (every detection correct) and fp_quality = 0 yields p = 0.
struct ConfidenceModel {
  double base_quality = 0.85;  // in (0, 1]
  double miscal_a = 1.0;       // > 0
  double miscal_b = 1.0;       // > 0
  double fp_quality = 0.2;     // in [0, 1)
};

struct DetectorProfile {
  std::vector<RecallPoint> recall_curve = {{0.0, 0.9}};  // piecewise linear
  double position_noise_std = 0.0;  // meters
  double yaw_noise_std = 0.0;       // radians
  double size_noise_std = 0.0;      // relative fraction of each extent
  double false_positive_rate = 0.0; // expected clutter detections per frame
  ConfidenceModel confidence;
  double max_range = 100.0;  // meters
};

struct AgentSpec {
  std::string agent_id;
  fusion::Pose2D pose;
  DetectorProfile profile;
  bool is_ego = false;
};

/// Scene geometry sampling parameters (world frame).
struct SceneConfig {
  int num_vehicles = 12;
  double x_min = -140.0;
  double x_max = 140.0;
  double y_min = -40.0;
  double y_max = 40.0;
  double min_spacing = 12.0;  // minimum center distance between vehicles
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  int frames = 0;
  int calibration_frames = 0;
  SceneConfig scene;
  geom::IouVariant iou_variant = geom::IouVariant::k3d;
  double tp_iou_threshold = 0.7;
  std::vector<AgentSpec> agents;
};

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<geom::Box3D> ground_truth;  // world frame, static across frames
  std::vector<AgentSpec> agents;
  int frames = 0;
  int calibration_frames = 0;
  geom::IouVariant iou_variant = geom::IouVariant::k3d;
  double tp_iou_threshold = 0.7;
  SceneConfig scene;  // bounds reused for clutter placement

  const AgentSpec& ego() const;
  /// Ground truth pairwise separation, one ego, positive frame count.
  void validate() const;
};

/// Samples the static vehicle layout and returns the ready scenario.
/// Vehicle dimensions jitter +-10% around (4.5, 2.0, 1.6) m.
Scenario build_scenario(const ScenarioConfig& config);

struct FrameDetections {
  int frame = 0;
  std::vector<fusion::AgentDetections> agents;  // sorted by agent_id
};

struct GeneratedData {
  std::vector<geom::Box3D> ground_truth;  // world frame
  std::vector<FrameDetections> frames;
};

/// Deterministic synthetic detections for the scenario's evaluation frames.
/// Boxes are emitted in each agent's own frame.
GeneratedData generate(const Scenario& scenario);

/// Labeled (raw_score, label) samples for one agent, produced from a
/// dedicated calibration frame stream (disjoint from evaluation frames by
/// stream construction). Labels follow the greedy IoU >= tp_iou_threshold
/// matching rule. Throws UnknownAgent for an unknown id.
std::vector<calib::CalibrationSample> make_calibration_split(
    const Scenario& scenario, const std::string& agent_id);

}  // namespace latefuse::sim
