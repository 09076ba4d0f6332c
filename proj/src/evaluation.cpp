#include "latefuse/evaluation.hpp"

#include <algorithm>
#include <stdexcept>

#include "latefuse/errors.hpp"

namespace latefuse::eval {

MatchResult match_frame(const agg::CandidateSet& dets,
                        std::span<const geom::Box3D> gts, double iou_thresh,
                        geom::IouVariant variant) {
  dets.validate();
  MatchResult r;
  const std::size_t n = dets.size();
  r.is_tp.assign(n, 0);
  r.matched_gt.assign(n, -1);
  r.scores = dets.scores;
  r.num_gt = static_cast<int>(gts.size());

  std::vector<char> gt_taken(gts.size(), 0);
  for (int det : agg::canonical_order(dets)) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) {
        continue;
      }
      const double v = geom::iou(dets.boxes[det], gts[g], variant);
      if (v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      r.is_tp[det] = 1;
      r.matched_gt[det] = best_gt;
      gt_taken[best_gt] = 1;
    }
  }
  for (char taken : gt_taken) {
    if (!taken) {
      ++r.false_negatives;
    }
  }
  return r;
}

PrCurve average_precision(std::span<const MatchResult> matches) {
  long total_gt = 0;
  std::vector<std::pair<double, int>> dets;  // (score, is_tp)
  for (const MatchResult& m : matches) {
    total_gt += m.num_gt;
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
      dets.emplace_back(m.scores[i], m.is_tp[i]);
    }
  }
  if (total_gt == 0) {
    throw NoGroundTruth("average_precision: no ground-truth boxes");
  }

  std::sort(dets.begin(), dets.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  PrCurve curve;
  long tp = 0;
  long fp = 0;
  std::size_t i = 0;
  while (i < dets.size()) {
    // All detections sharing a score form one threshold step.
    const double score = dets[i].first;
    while (i < dets.size() && dets[i].first == score) {
      (dets[i].second ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back(
        {static_cast<double>(tp) / static_cast<double>(total_gt),
         static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  curve.tp = static_cast<int>(tp);
  curve.fp = static_cast<int>(fp);
  curve.fn = static_cast<int>(total_gt - tp);

  // Monotone precision envelope, then rectangle rule over recall.
  double ap = 0.0;
  double max_precision = 0.0;
  for (std::size_t k = curve.points.size(); k-- > 0;) {
    max_precision = std::max(max_precision, curve.points[k].precision);
    const double prev_recall = k == 0 ? 0.0 : curve.points[k - 1].recall;
    ap += (curve.points[k].recall - prev_recall) * max_precision;
  }
  curve.ap = ap;
  return curve;
}

}  // namespace latefuse::eval
