#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "latefuse/geometry.hpp"

namespace latefuse::agg {

/// Aligned detection candidates: boxes, confidence scores, producing agent.
struct CandidateSet {
  std::vector<geom::Box3D> boxes;
  std::vector<double> scores;
  std::vector<std::string> source_agent;

  std::size_t size() const { return boxes.size(); }
  void push_back(geom::Box3D box, double score, std::string agent);
  /// Equal lengths, scores in [0,1], one shared frame_id.
  void validate() const;
};

/// IoU-weighted graph over candidates, partitioned into connected
/// components. The diagonal is fixed to 1 (self-IoU) so a singleton's
/// promoted score equals its own score.
struct BoxGraph {
  std::size_t n = 0;
  std::vector<double> iou;  // n*n, row-major, symmetric
  std::vector<std::vector<int>> components;  // sorted; partition of 0..n-1

  double at(std::size_t i, std::size_t j) const { return iou[i * n + j]; }
};

struct PsaParams {
  double epsilon = 0.01;  // softmax temperature; > 0
  double phi = 0.5;       // selection threshold; in [0, 1)
};

/// Canonical processing order: score descending, ties broken on
/// (cx, cy, cz, yaw, length, width, height) ascending. All aggregators sort
/// candidates this way internally, which makes them deterministic and
/// exactly permutation-invariant.
std::vector<int> canonical_order(const CandidateSet& cands);

/// Pairwise IoU matrix with unit diagonal, plus connected components over
/// edges with IoU strictly greater than min_edge_iou (default: any non-zero
/// overlap connects).
BoxGraph build_graph(const CandidateSet& cands, geom::IouVariant variant,
                     double min_edge_iou = 0.0);

/// Numerically stable softmax of v / epsilon. Sums to 1; preserves order.
std::vector<double> softmax_scaled(std::span<const double> v, double epsilon);

/// Promotion step: for every vertex, the IoU-weighted sum of scores over its
/// component (s_hat = U_m s_m per component).
std::vector<double> promote(const BoxGraph& graph,
                            std::span<const double> scores);

/// Promote-Suppress selection on a prebuilt graph: per component,
/// s_hat = U_m s_m, s_bar = softmax(s_hat / epsilon), select indices with
/// s_bar strictly greater than phi. Returns ascending indices.
std::vector<int> psa_select(const BoxGraph& graph,
                            std::span<const double> scores,
                            const PsaParams& params);

/// Full Promote-Suppress Aggregation over a candidate set.
std::vector<int> psa(const CandidateSet& cands, const PsaParams& params,
                     geom::IouVariant variant, double min_edge_iou = 0.0);

/// Greedy NMS on a precomputed IoU matrix: repeatedly keep the highest-score
/// remaining candidate (ties -> lower index) and suppress candidates whose
/// IoU with it exceeds the threshold strictly.
std::vector<int> nms_select(std::span<const double> iou_matrix, std::size_t n,
                            std::span<const double> scores,
                            double iou_threshold);

std::vector<int> nms(const CandidateSet& cands, double iou_threshold,
                     geom::IouVariant variant);

/// Soft-NMS with Gaussian decay: processing candidates from the current
/// highest score, the rest decay by exp(-iou^2 / sigma); candidates whose
/// final score falls below score_floor are removed. Survivors keep input
/// order and carry their decayed scores.
CandidateSet soft_nms(const CandidateSet& cands, double sigma,
                      double score_floor, geom::IouVariant variant);

}  // namespace latefuse::agg
