#include "latefuse/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "latefuse/errors.hpp"

namespace latefuse::agg {

namespace {

void require_psa_params(const PsaParams& p) {
  if (!(p.epsilon > 0.0)) {
    throw std::invalid_argument("PsaParams: epsilon must be positive");
  }
  if (!(p.phi >= 0.0 && p.phi < 1.0)) {
    throw std::invalid_argument("PsaParams: phi must be in [0, 1)");
  }
}

// Union-find with path halving.
struct DisjointSet {
  std::vector<int> parent;

  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
};

std::vector<double> iou_matrix(const CandidateSet& cands,
                               geom::IouVariant variant) {
  const std::size_t n = cands.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = geom::iou(cands.boxes[i], cands.boxes[j], variant);
      m[i * n + j] = v;
      m[j * n + i] = v;
    }
  }
  return m;
}

CandidateSet reorder(const CandidateSet& cands, const std::vector<int>& perm) {
  CandidateSet out;
  out.boxes.reserve(perm.size());
  out.scores.reserve(perm.size());
  out.source_agent.reserve(perm.size());
  for (int idx : perm) {
    out.boxes.push_back(cands.boxes[idx]);
    out.scores.push_back(cands.scores[idx]);
    out.source_agent.push_back(cands.source_agent[idx]);
  }
  return out;
}

std::vector<int> map_back(const std::vector<int>& selected,
                          const std::vector<int>& perm) {
  std::vector<int> out;
  out.reserve(selected.size());
  for (int idx : selected) {
    out.push_back(perm[idx]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void CandidateSet::push_back(geom::Box3D box, double score,
                             std::string agent) {
  boxes.push_back(std::move(box));
  scores.push_back(score);
  source_agent.push_back(std::move(agent));
}

void CandidateSet::validate() const {
  if (scores.size() != boxes.size() || source_agent.size() != boxes.size()) {
    throw std::invalid_argument("CandidateSet: misaligned field lengths");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw std::invalid_argument("CandidateSet: scores must be in [0, 1]");
    }
  }
  for (const geom::Box3D& b : boxes) {
    if (b.frame_id != boxes.front().frame_id) {
      throw std::invalid_argument(
          "CandidateSet: all boxes must share one frame_id");
    }
  }
}

std::vector<int> canonical_order(const CandidateSet& cands) {
  std::vector<int> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (cands.scores[i] != cands.scores[j]) {
      return cands.scores[i] > cands.scores[j];
    }
    const geom::Box3D& a = cands.boxes[i];
    const geom::Box3D& b = cands.boxes[j];
    return std::tie(a.cx, a.cy, a.cz, a.yaw, a.length, a.width, a.height) <
           std::tie(b.cx, b.cy, b.cz, b.yaw, b.length, b.width, b.height);
  });
  return order;
}

BoxGraph build_graph(const CandidateSet& cands, geom::IouVariant variant,
                     double min_edge_iou) {
  cands.validate();
  BoxGraph g;
  g.n = cands.size();
  if (g.n == 0) {
    return g;
  }
  g.iou = iou_matrix(cands, variant);

  DisjointSet ds(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (g.iou[i * g.n + j] > min_edge_iou) {
        ds.unite(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  std::vector<int> root_to_component(g.n, -1);
  for (std::size_t i = 0; i < g.n; ++i) {
    const int root = ds.find(static_cast<int>(i));
    if (root_to_component[root] < 0) {
      root_to_component[root] = static_cast<int>(g.components.size());
      g.components.emplace_back();
    }
    g.components[root_to_component[root]].push_back(static_cast<int>(i));
  }
  return g;
}

std::vector<double> softmax_scaled(std::span<const double> v, double epsilon) {
  if (v.empty()) {
    throw std::invalid_argument("softmax_scaled: empty input");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("softmax_scaled: epsilon must be positive");
  }
  const double vmax = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp((v[i] - vmax) / epsilon);
    sum += out[i];
  }
  for (double& x : out) {
    x /= sum;
  }
  return out;
}

std::vector<double> promote(const BoxGraph& graph,
                            std::span<const double> scores) {
  if (scores.size() != graph.n) {
    throw std::invalid_argument("promote: score count does not match graph");
  }
  std::vector<double> s_hat(graph.n, 0.0);
  for (const std::vector<int>& comp : graph.components) {
    for (int i : comp) {
      double acc = 0.0;
      for (int j : comp) {
        acc += graph.at(i, j) * scores[j];
      }
      s_hat[i] = acc;
    }
  }
  return s_hat;
}

std::vector<int> psa_select(const BoxGraph& graph,
                            std::span<const double> scores,
                            const PsaParams& params) {
  require_psa_params(params);
  if (scores.size() != graph.n) {
    throw std::invalid_argument("psa_select: score count does not match graph");
  }
  std::vector<int> selected;
  std::vector<double> s_hat;
  for (const std::vector<int>& comp : graph.components) {
    s_hat.clear();
    for (int i : comp) {
      double acc = 0.0;
      for (int j : comp) {
        acc += graph.at(i, j) * scores[j];
      }
      s_hat.push_back(acc);
    }
    const std::vector<double> s_bar = softmax_scaled(s_hat, params.epsilon);
    for (std::size_t k = 0; k < comp.size(); ++k) {
      if (s_bar[k] > params.phi) {
        selected.push_back(comp[k]);
      }
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

std::vector<int> psa(const CandidateSet& cands, const PsaParams& params,
                     geom::IouVariant variant, double min_edge_iou) {
  require_psa_params(params);
  cands.validate();
  if (cands.size() == 0) {
    return {};
  }
  const std::vector<int> perm = canonical_order(cands);
  const CandidateSet ordered = reorder(cands, perm);
  const BoxGraph graph = build_graph(ordered, variant, min_edge_iou);
  return map_back(psa_select(graph, ordered.scores, params), perm);
}

std::vector<int> nms_select(std::span<const double> iou_matrix_in,
                            std::size_t n, std::span<const double> scores,
                            double iou_threshold) {
  if (iou_matrix_in.size() != n * n || scores.size() != n) {
    throw std::invalid_argument("nms_select: inconsistent input sizes");
  }
  std::vector<int> by_score(n);
  std::iota(by_score.begin(), by_score.end(), 0);
  std::stable_sort(by_score.begin(), by_score.end(),
                   [&](int i, int j) { return scores[i] > scores[j]; });

  std::vector<char> suppressed(n, 0);
  std::vector<int> kept;
  for (int i : by_score) {
    if (suppressed[i]) {
      continue;
    }
    kept.push_back(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (!suppressed[j] && static_cast<std::size_t>(i) != j &&
          iou_matrix_in[i * n + j] > iou_threshold) {
        suppressed[j] = 1;
      }
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<int> nms(const CandidateSet& cands, double iou_threshold,
                     geom::IouVariant variant) {
  cands.validate();
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms: iou_threshold must be in [0, 1]");
  }
  if (cands.size() == 0) {
    return {};
  }
  const std::vector<int> perm = canonical_order(cands);
  const CandidateSet ordered = reorder(cands, perm);
  const std::vector<double> m = iou_matrix(ordered, variant);
  return map_back(
      nms_select(m, ordered.size(), ordered.scores, iou_threshold), perm);
}

CandidateSet soft_nms(const CandidateSet& cands, double sigma,
                      double score_floor, geom::IouVariant variant) {
  cands.validate();
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("soft_nms: sigma must be positive");
  }
  if (!(score_floor >= 0.0 && score_floor <= 1.0)) {
    throw std::invalid_argument("soft_nms: score_floor must be in [0, 1]");
  }
  const std::size_t n = cands.size();
  if (n == 0) {
    return {};
  }
  const std::vector<int> perm = canonical_order(cands);
  const CandidateSet ordered = reorder(cands, perm);
  const std::vector<double> m = iou_matrix(ordered, variant);

  std::vector<double> current = ordered.scores;
  std::vector<char> frozen(n, 0);
  for (std::size_t step = 0; step < n; ++step) {
    int best = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!frozen[i] && (best < 0 || current[i] > current[best])) {
        best = static_cast<int>(i);
      }
    }
    frozen[best] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (!frozen[j]) {
        const double v = m[best * n + j];
        current[j] *= std::exp(-(v * v) / sigma);
      }
    }
  }

  // Back to input order; drop candidates that decayed below the floor.
  std::vector<double> decayed(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    decayed[perm[k]] = current[k];
  }
  CandidateSet out;
  for (std::size_t i = 0; i < n; ++i) {
    if (decayed[i] >= score_floor) {
      out.push_back(cands.boxes[i], decayed[i], cands.source_agent[i]);
    }
  }
  return out;
}

}  // namespace latefuse::agg
