#include "latefuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latefuse/errors.hpp"

namespace latefuse::fusion {

namespace {

const calib::Calibrator kIdentityCal = calib::Calibrator::identity();

const calib::Calibrator& lookup_calibrator(
    const std::map<std::string, calib::Calibrator>& calibrators,
    const AgentDetections& agent, const FusionConfig& cfg) {
  const std::string& key =
      agent.calibrator_ref.empty() ? agent.agent_id : agent.calibrator_ref;
  const auto it = calibrators.find(key);
  if (it != calibrators.end()) {
    return it->second;
  }
  if (cfg.strict_calibrators) {
    throw MissingCalibrator("fuse: no calibrator for agent '" +
                            agent.agent_id + "' (key '" + key + "')");
  }
  return kIdentityCal;
}

}  // namespace

const char* to_string(Aggregator agg) {
  switch (agg) {
    case Aggregator::kPsa:
      return "psa";
    case Aggregator::kNms:
      return "nms";
    case Aggregator::kSoftNms:
      return "softnms";
  }
  return "psa";
}

Aggregator aggregator_from_string(const std::string& name) {
  if (name == "psa") return Aggregator::kPsa;
  if (name == "nms") return Aggregator::kNms;
  if (name == "softnms") return Aggregator::kSoftNms;
  throw ConfigError("unknown aggregator '" + name +
                    "' (expected psa, nms or softnms)");
}

geom::Box3D box_agent_to_world(const geom::Box3D& box, const Pose2D& pose) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  return geom::Box3D(pose.x + c * box.cx - s * box.cy,
                     pose.y + s * box.cx + c * box.cy, box.cz, box.length,
                     box.width, box.height, box.yaw + pose.yaw, "world");
}

geom::Box3D box_world_to_frame(const geom::Box3D& box, const Pose2D& pose,
                               const std::string& frame_id) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  const double rx = box.cx - pose.x;
  const double ry = box.cy - pose.y;
  return geom::Box3D(c * rx + s * ry, -s * rx + c * ry, box.cz, box.length,
                     box.width, box.height, box.yaw - pose.yaw, frame_id);
}

std::vector<Detection> transform_to_ego(const AgentDetections& dets,
                                        const Pose2D& ego_pose,
                                        const std::string& ego_frame) {
  std::vector<Detection> out;
  out.reserve(dets.detections.size());
  for (const Detection& d : dets.detections) {
    out.push_back({box_world_to_frame(box_agent_to_world(d.box, dets.pose),
                                      ego_pose, ego_frame),
                   d.score});
  }
  return out;
}

agg::CandidateSet fuse(const AgentDetections& ego,
                       std::span<const AgentDetections> others,
                       const std::map<std::string, calib::Calibrator>& calibrators,
                       const FusionConfig& cfg) {
  // Deterministic merge order: every agent, ego included, sorted by id.
  std::vector<const AgentDetections*> agents;
  agents.push_back(&ego);
  for (const AgentDetections& a : others) {
    agents.push_back(&a);
  }
  std::sort(agents.begin(), agents.end(),
            [](const AgentDetections* a, const AgentDetections* b) {
              return a->agent_id < b->agent_id;
            });
  for (std::size_t i = 1; i < agents.size(); ++i) {
    if (agents[i]->agent_id == agents[i - 1]->agent_id) {
      throw std::invalid_argument("fuse: duplicate agent_id '" +
                                  agents[i]->agent_id + "'");
    }
  }

  const std::string& ego_frame = ego.agent_id;
  agg::CandidateSet merged;
  for (const AgentDetections* agent : agents) {
    const calib::Calibrator& cal = lookup_calibrator(calibrators, *agent, cfg);
    const bool is_ego = agent == &ego;
    const bool calibrate = !is_ego || cfg.calibrate_ego;
    for (Detection& d : transform_to_ego(*agent, ego.pose, ego_frame)) {
      const double score = calibrate ? cal.apply(d.score) : d.score;
      if (!cfg.range.contains(d.box.cx, d.box.cy)) {
        continue;
      }
      if (score < cfg.pre_filter_score) {
        continue;
      }
      merged.push_back(std::move(d.box), score, agent->agent_id);
    }
  }

  if (cfg.aggregator == Aggregator::kSoftNms) {
    return agg::soft_nms(merged, cfg.soft_nms_sigma, cfg.soft_nms_floor,
                         cfg.iou_variant);
  }
  const std::vector<int> selected =
      cfg.aggregator == Aggregator::kPsa
          ? agg::psa(merged, cfg.psa_params, cfg.iou_variant, cfg.min_edge_iou)
          : agg::nms(merged, cfg.nms_iou_threshold, cfg.iou_variant);
  agg::CandidateSet out;
  for (int idx : selected) {
    out.push_back(merged.boxes[idx], merged.scores[idx],
                  merged.source_agent[idx]);
  }
  return out;
}

}  // namespace latefuse::fusion
