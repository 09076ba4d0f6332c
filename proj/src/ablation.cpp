#include "latefuse/ablation.hpp"

#include <algorithm>

namespace latefuse::eval {

MethodResult evaluate_method(const sim::Scenario& scenario,
                             const sim::GeneratedData& data,
                             const AblationMethod& method, double iou_thresh) {
  const sim::AgentSpec& ego_spec = scenario.ego();
  std::vector<MatchResult> matches;
  matches.reserve(data.frames.size());

  for (const sim::FrameDetections& frame : data.frames) {
    const fusion::AgentDetections* ego = nullptr;
    std::vector<fusion::AgentDetections> others;
    for (const fusion::AgentDetections& ad : frame.agents) {
      if (ad.agent_id == ego_spec.agent_id) {
        ego = &ad;
      } else if (!method.ego_only) {
        others.push_back(ad);
      }
    }
    if (ego == nullptr) {
      continue;
    }
    const agg::CandidateSet fused =
        fusion::fuse(*ego, others, method.calibrators, method.config);

    std::vector<geom::Box3D> gts;
    for (const geom::Box3D& gt : data.ground_truth) {
      geom::Box3D in_ego = fusion::box_world_to_frame(gt, ego_spec.pose,
                                                      ego_spec.agent_id);
      if (method.config.range.contains(in_ego.cx, in_ego.cy)) {
        gts.push_back(std::move(in_ego));
      }
    }
    matches.push_back(
        match_frame(fused, gts, iou_thresh, method.config.iou_variant));
  }

  MethodResult r;
  r.name = method.name;
  r.curve = average_precision(matches);
  r.ap = r.curve.ap;
  r.tp = r.curve.tp;
  r.fp = r.curve.fp;
  r.fn = r.curve.fn;
  return r;
}

std::vector<MethodResult> run_ablation(const sim::Scenario& scenario,
                                       const sim::GeneratedData& data,
                                       std::span<const AblationMethod> methods,
                                       double iou_thresh) {
  std::vector<MethodResult> results;
  results.reserve(methods.size());
  for (const AblationMethod& m : methods) {
    results.push_back(evaluate_method(scenario, data, m, iou_thresh));
  }
  return results;
}

std::vector<AblationMethod> standard_ablation(
    const sim::Scenario& scenario,
    const std::map<std::string, calib::Calibrator>& fitted,
    const fusion::FusionConfig& base) {
  std::map<std::string, calib::Calibrator> identity;
  for (const sim::AgentSpec& a : scenario.agents) {
    identity.emplace(a.agent_id, calib::Calibrator::identity());
  }

  fusion::FusionConfig nms_cfg = base;
  nms_cfg.aggregator = fusion::Aggregator::kNms;
  fusion::FusionConfig psa_cfg = base;
  psa_cfg.aggregator = fusion::Aggregator::kPsa;

  std::vector<AblationMethod> methods;
  methods.push_back({"no_fusion", nms_cfg, identity, true});
  methods.push_back({"nms_uncalibrated", nms_cfg, identity, false});
  methods.push_back({"nms_dbs", nms_cfg, fitted, false});
  methods.push_back({"psa_uncalibrated", psa_cfg, identity, false});
  methods.push_back({"psa_dbs", psa_cfg, fitted, false});
  return methods;
}

}  // namespace latefuse::eval
