#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "latefuse/aggregation.hpp"
#include "latefuse/geometry.hpp"

namespace latefuse::eval {

/// Greedy matching outcome for one frame.
struct MatchResult {
  std::vector<std::uint8_t> is_tp;  // per detection
  std::vector<int> matched_gt;      // ground-truth index or -1
  std::vector<double> scores;       // detection scores
  int false_negatives = 0;          // unmatched ground truths
  int num_gt = 0;
};

/// Matches detections to ground truth: detections in descending score order
/// (canonical tie-break), each assigned the highest-IoU still-unmatched
/// ground truth with IoU >= iou_thresh, otherwise flagged false positive.
MatchResult match_frame(const agg::CandidateSet& dets,
                        std::span<const geom::Box3D> gts, double iou_thresh,
                        geom::IouVariant variant);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrCurve {
  std::vector<PrPoint> points;  // one point per distinct score threshold
  double ap = 0.0;              // all-points interpolated area
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

/// Global score-sorted sweep over all frames. Detections with equal scores
/// enter the sweep as one threshold step; AP integrates the monotone
/// (non-increasing) precision envelope over recall. Throws NoGroundTruth
/// when the frames contain no ground truth at all.
PrCurve average_precision(std::span<const MatchResult> matches);

}  // namespace latefuse::eval
