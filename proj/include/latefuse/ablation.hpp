#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "latefuse/calibration.hpp"
#include "latefuse/evaluation.hpp"
#include "latefuse/fusion.hpp"
#include "latefuse/simulation.hpp"

namespace latefuse::eval {

/// One row of a method-comparison run.
struct AblationMethod {
  std::string name;
  fusion::FusionConfig config;
  std::map<std::string, calib::Calibrator> calibrators;
  bool ego_only = false;  // the no-collaboration baseline
};

struct MethodResult {
  std::string name;
  double ap = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  PrCurve curve;
};

/// Runs one fusion configuration over generated frames and evaluates AP at
/// iou_thresh. Ground truth is moved into the ego frame and range-filtered
/// with the method's window before matching.
MethodResult evaluate_method(const sim::Scenario& scenario,
                             const sim::GeneratedData& data,
                             const AblationMethod& method, double iou_thresh);

std::vector<MethodResult> run_ablation(const sim::Scenario& scenario,
                                       const sim::GeneratedData& data,
                                       std::span<const AblationMethod> methods,
                                       double iou_thresh);

/// The standard comparison ladder: no fusion, NMS without calibration,
/// NMS + DBS, PSA without calibration, and PSA + DBS (the full method).
std::vector<AblationMethod> standard_ablation(
    const sim::Scenario& scenario,
    const std::map<std::string, calib::Calibrator>& fitted,
    const fusion::FusionConfig& base);

}  // namespace latefuse::eval
