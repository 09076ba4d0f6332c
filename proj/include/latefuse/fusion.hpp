#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "latefuse/aggregation.hpp"
#include "latefuse/calibration.hpp"
#include "latefuse/geometry.hpp"

namespace latefuse::fusion {

/// 2D rigid transform from an agent's local frame to the world frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // radians
};

struct Detection {
  geom::Box3D box;
  double score = 0.0;
};

/// One agent's shared payload: its pose and its detections (boxes in the
/// agent's own frame, raw confidence scores). Only box coordinates and
/// scores ever cross the agent boundary; nothing about the underlying
/// detector travels with them.
struct AgentDetections {
  std::string agent_id;
  Pose2D pose;
  std::vector<Detection> detections;
  std::string calibrator_ref;  // calibrator name; defaults to agent_id
};

enum class Aggregator { kPsa, kNms, kSoftNms };

const char* to_string(Aggregator agg);
Aggregator aggregator_from_string(const std::string& name);

/// Ego-centered evaluation window, meters.
struct RangeLimits {
  double x_min = -140.0;
  double x_max = 140.0;
  double y_min = -40.0;
  double y_max = 40.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

struct FusionConfig {
  Aggregator aggregator = Aggregator::kPsa;
  agg::PsaParams psa_params;
  double nms_iou_threshold = 0.5;
  double soft_nms_sigma = 0.5;
  double soft_nms_floor = 0.001;
  // Calibrated detections below this are dropped before aggregation.
  double pre_filter_score = 0.05;
  geom::IouVariant iou_variant = geom::IouVariant::k3d;
  double min_edge_iou = 0.0;
  RangeLimits range;
  // With strict_calibrators an agent without a fitted calibrator is an
  // error; otherwise it silently falls back to the identity map.
  bool strict_calibrators = true;
  bool calibrate_ego = true;
};

geom::Box3D box_agent_to_world(const geom::Box3D& box, const Pose2D& pose);
geom::Box3D box_world_to_frame(const geom::Box3D& box, const Pose2D& pose,
                               const std::string& frame_id);

/// Rigid transform agent -> world -> ego for every detection; scores pass
/// through unchanged. Output boxes carry ego_frame as frame_id.
std::vector<Detection> transform_to_ego(const AgentDetections& dets,
                                        const Pose2D& ego_pose,
                                        const std::string& ego_frame);

/// End-to-end late fusion: transform every agent into the ego frame, apply
/// its calibrator, filter by range and minimum calibrated score, then
/// aggregate. Returns the selected candidates with calibrated scores.
/// Agents are merged in agent_id order, so permuting `others` cannot change
/// the result.
agg::CandidateSet fuse(const AgentDetections& ego,
                       std::span<const AgentDetections> others,
                       const std::map<std::string, calib::Calibrator>& calibrators,
                       const FusionConfig& cfg);

}  // namespace latefuse::fusion
