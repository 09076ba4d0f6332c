#include "latefuse/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latefuse/errors.hpp"
#include "latefuse/evaluation.hpp"
#include "latefuse/rng.hpp"

namespace latefuse::sim {

namespace {

constexpr std::uint64_t kSplitEval = 0;
constexpr std::uint64_t kSplitCalibration = 1;
constexpr std::uint64_t kSplitScene = 2;

constexpr double kBaseLength = 4.5;
constexpr double kBaseWidth = 2.0;
constexpr double kBaseHeight = 1.6;

double recall_at(const DetectorProfile& profile, double distance) {
  if (distance > profile.max_range) {
    return 0.0;
  }
  const auto& curve = profile.recall_curve;
  if (curve.empty()) {
    return 1.0;
  }
  if (distance <= curve.front().distance) {
    return curve.front().probability;
  }
  if (distance >= curve.back().distance) {
    return curve.back().probability;
  }
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (distance <= curve[i].distance) {
      const double span = curve[i].distance - curve[i - 1].distance;
      const double t = span > 0.0 ? (distance - curve[i - 1].distance) / span : 1.0;
      return curve[i - 1].probability +
             t * (curve[i].probability - curve[i - 1].probability);
    }
  }
  return curve.back().probability;
}

// p = q^X with X ~ Exp(1): q = 1 gives p = 1 exactly, smaller q spreads the
// correctness probability towards 0.
double draw_tp_quality(rng::Xoshiro256& gen, double q) {
  const double x = gen.exponential();
  if (q >= 1.0) {
    return 1.0;
  }
  if (q <= 0.0) {
    return 0.0;
  }
  return std::exp(std::log(q) * x);
}

// p = q^(1+X): clutter stays below q, so false alarms carry genuinely low
// correctness probability.
double draw_clutter_quality(rng::Xoshiro256& gen, double q) {
  const double x = gen.exponential();
  if (q >= 1.0) {
    return 1.0;
  }
  if (q <= 0.0) {
    return 0.0;
  }
  return std::exp(std::log(q) * (1.0 + x));
}

// Inverse of DBS(miscal_a, miscal_b): the emitted raw score whose
// calibrated value equals the true correctness probability p.
double miscalibrated_score(double p, const ConfidenceModel& cm) {
  const double inner = 1.0 - std::pow(1.0 - p, 1.0 / cm.miscal_b);
  return std::clamp(std::pow(inner, 1.0 / cm.miscal_a), 0.0, 1.0);
}

double bev_radius(const geom::Box3D& b) {
  return 0.5 * std::hypot(b.length, b.width);
}

// True when `box` cannot overlap any ground truth except `skip` at or above
// the threshold; uses a center-distance prefilter before exact IoU.
bool clear_of_ground_truth(const geom::Box3D& box,
                           std::span<const geom::Box3D> gts, int skip,
                           double iou_thresh, geom::IouVariant variant) {
  const double rb = bev_radius(box);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (static_cast<int>(g) == skip) {
      continue;
    }
    const double dist = std::hypot(box.cx - gts[g].cx, box.cy - gts[g].cy);
    if (dist > rb + bev_radius(gts[g])) {
      continue;
    }
    if (geom::iou(box, gts[g], variant) >= iou_thresh) {
      return false;
    }
  }
  return true;
}

struct NoiseDraw {
  double dx, dy, dz, dyaw, sl, sw, sh;
};

// Localization noise shrinks with detection quality: a confident detection
// is usually a well-regressed one. quality = 1 halves the profile noise,
// quality = 0 adds 25%.
double noise_scale_for_quality(double quality) {
  return 1.25 - 0.75 * quality;
}

NoiseDraw draw_noise(rng::Xoshiro256& gen, const DetectorProfile& p,
                     double quality) {
  const double k = noise_scale_for_quality(quality);
  NoiseDraw n;
  n.dx = gen.normal(0.0, k * p.position_noise_std);
  n.dy = gen.normal(0.0, k * p.position_noise_std);
  n.dz = gen.normal(0.0, 0.5 * k * p.position_noise_std);
  n.dyaw = gen.normal(0.0, k * p.yaw_noise_std);
  n.sl = gen.normal(0.0, k * p.size_noise_std);
  n.sw = gen.normal(0.0, k * p.size_noise_std);
  n.sh = gen.normal(0.0, k * p.size_noise_std);
  return n;
}

geom::Box3D perturbed(const geom::Box3D& gt, const NoiseDraw& n, double f,
                      double extra_dx = 0.0, double extra_dy = 0.0) {
  const auto dim = [](double base, double rel) {
    return base * std::max(0.2, 1.0 + rel);
  };
  return geom::Box3D(gt.cx + extra_dx + f * n.dx, gt.cy + extra_dy + f * n.dy,
                     gt.cz + f * n.dz, dim(gt.length, f * n.sl),
                     dim(gt.width, f * n.sw), dim(gt.height, f * n.sh),
                     gt.yaw + f * n.dyaw, gt.frame_id);
}

// Noisy copy of the ground truth, with the perturbation shrunk until it
// stays a true positive at the matching threshold.
geom::Box3D make_tp_box(const Scenario& sc, int gt_index,
                        const DetectorProfile& profile,
                        rng::Xoshiro256& gen, double quality) {
  const geom::Box3D& gt = sc.ground_truth[gt_index];
  const NoiseDraw n = draw_noise(gen, profile, quality);
  double f = 1.0;
  for (int k = 0; k < 40; ++k, f *= 0.5) {
    geom::Box3D cand = perturbed(gt, n, f);
    if (geom::iou(cand, gt, sc.iou_variant) >= sc.tp_iou_threshold &&
        clear_of_ground_truth(cand, sc.ground_truth, gt_index,
                              sc.tp_iou_threshold, sc.iou_variant)) {
      return cand;
    }
  }
  return gt;
}

// Poorly localized detection: the box drifts away from its object until its
// IoU falls into a band just below the matching threshold, so it stays a
// cluster member that narrowly fails to count.
geom::Box3D make_near_miss_box(const Scenario& sc, int gt_index,
                               const DetectorProfile& profile,
                               rng::Xoshiro256& gen, double quality) {
  const geom::Box3D& gt = sc.ground_truth[gt_index];
  const double theta = gen.uniform(0.0, 2.0 * geom::kPi);
  const double target_iou = gen.uniform(0.5, 0.69);
  const NoiseDraw n = draw_noise(gen, profile, quality);
  double mag = 0.25;
  for (int k = 0; k < 60; ++k, mag *= 1.18) {
    geom::Box3D cand =
        perturbed(gt, n, 1.0, mag * std::cos(theta), mag * std::sin(theta));
    const double v = geom::iou(cand, gt, sc.iou_variant);
    if (v < sc.tp_iou_threshold && v <= target_iou &&
        clear_of_ground_truth(cand, sc.ground_truth, gt_index,
                              sc.tp_iou_threshold, sc.iou_variant)) {
      return cand;
    }
  }
  return perturbed(gt, n, 1.0, 60.0 * std::cos(theta), 60.0 * std::sin(theta));
}

// Clutter box placed uniformly in the scene, away from every ground truth.
geom::Box3D make_clutter_box(const Scenario& sc, rng::Xoshiro256& gen) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double cx = gen.uniform(sc.scene.x_min, sc.scene.x_max);
    const double cy = gen.uniform(sc.scene.y_min, sc.scene.y_max);
    const double yaw = gen.uniform(-geom::kPi, geom::kPi);
    const double l = kBaseLength * gen.uniform(0.9, 1.1);
    const double w = kBaseWidth * gen.uniform(0.9, 1.1);
    const double h = kBaseHeight * gen.uniform(0.9, 1.1);
    geom::Box3D cand(cx, cy, 0.5 * h, l, w, h, yaw, "world");
    if (clear_of_ground_truth(cand, sc.ground_truth, -1, sc.tp_iou_threshold,
                              sc.iou_variant)) {
      return cand;
    }
  }
  // Dense-scene fallback: park it outside the scene bounds.
  return geom::Box3D(sc.scene.x_max + 50.0, sc.scene.y_max + 50.0,
                     0.5 * kBaseHeight, kBaseLength, kBaseWidth, kBaseHeight,
                     0.0, "world");
}

struct WorldDetection {
  geom::Box3D box;
  double score;
};

// One (frame, agent) draw in the world frame. Every detection slot draws a
// correctness probability p and a correctness outcome ~ Bernoulli(p); the
// emitted geometry is conditioned to agree with the outcome, and the raw
// score is the miscalibrated image of p.
std::vector<WorldDetection> generate_agent_frame(const Scenario& sc,
                                                 const AgentSpec& agent,
                                                 rng::Xoshiro256& gen) {
  std::vector<WorldDetection> dets;
  const std::size_t num_gt = sc.ground_truth.size();
  std::vector<char> has_correct(num_gt, 0);
  std::vector<char> in_range(num_gt, 0);

  for (std::size_t g = 0; g < num_gt; ++g) {
    const geom::Box3D& gt = sc.ground_truth[g];
    const double dist =
        std::hypot(gt.cx - agent.pose.x, gt.cy - agent.pose.y);
    in_range[g] = dist <= agent.profile.max_range;
    if (!in_range[g]) {
      continue;
    }
    if (!gen.bernoulli(recall_at(agent.profile, dist))) {
      continue;
    }
    const double p =
        draw_tp_quality(gen, agent.profile.confidence.base_quality);
    const bool correct = gen.bernoulli(p);
    geom::Box3D box =
        correct
            ? make_tp_box(sc, static_cast<int>(g), agent.profile, gen, p)
            : make_near_miss_box(sc, static_cast<int>(g), agent.profile, gen,
                                 p);
    if (correct) {
      has_correct[g] = 1;
    }
    dets.push_back({std::move(box),
                    miscalibrated_score(p, agent.profile.confidence)});
  }

  const int clutter = gen.poisson(agent.profile.false_positive_rate);
  for (int k = 0; k < clutter; ++k) {
    const double p =
        draw_clutter_quality(gen, agent.profile.confidence.fp_quality);
    const bool correct = gen.bernoulli(p);
    if (correct) {
      // A correct clutter slot becomes a duplicate detection of some object
      // this agent has not yet detected correctly; if every in-range object
      // is taken the slot is dropped so labels stay exact.
      std::vector<int> free_gts;
      for (std::size_t g = 0; g < num_gt; ++g) {
        if (in_range[g] && !has_correct[g]) {
          free_gts.push_back(static_cast<int>(g));
        }
      }
      const double u = gen.uniform();
      if (free_gts.empty()) {
        continue;
      }
      const int pick = free_gts[static_cast<std::size_t>(
          u * static_cast<double>(free_gts.size()))];
      geom::Box3D box = make_tp_box(sc, pick, agent.profile, gen, p);
      has_correct[pick] = 1;
      dets.push_back({std::move(box),
                      miscalibrated_score(p, agent.profile.confidence)});
    } else {
      dets.push_back({make_clutter_box(sc, gen),
                      miscalibrated_score(p, agent.profile.confidence)});
    }
  }
  return dets;
}

std::vector<const AgentSpec*> agents_by_id(const Scenario& sc) {
  std::vector<const AgentSpec*> out;
  for (const AgentSpec& a : sc.agents) {
    out.push_back(&a);
  }
  std::sort(out.begin(), out.end(), [](const AgentSpec* a, const AgentSpec* b) {
    return a->agent_id < b->agent_id;
  });
  return out;
}

}  // namespace

const AgentSpec& Scenario::ego() const {
  for (const AgentSpec& a : agents) {
    if (a.is_ego) {
      return a;
    }
  }
  throw std::invalid_argument("Scenario: no agent designated ego");
}

void Scenario::validate() const {
  if (frames <= 0) {
    throw std::invalid_argument("Scenario: frames must be positive");
  }
  if (agents.empty()) {
    throw std::invalid_argument("Scenario: no agents");
  }
  int ego_count = 0;
  for (const AgentSpec& a : agents) {
    if (a.is_ego) {
      ++ego_count;
    }
    if (a.agent_id.empty() ||
        a.agent_id.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument(
          "Scenario: agent ids must be non-empty and whitespace-free");
    }
    const DetectorProfile& p = a.profile;
    if (p.position_noise_std < 0.0 || p.yaw_noise_std < 0.0 ||
        p.size_noise_std < 0.0 || p.false_positive_rate < 0.0 ||
        p.max_range <= 0.0) {
      throw std::invalid_argument("Scenario: invalid noise parameters for '" +
                                  a.agent_id + "'");
    }
    if (!(p.confidence.miscal_a > 0.0 && p.confidence.miscal_b > 0.0)) {
      throw std::invalid_argument(
          "Scenario: miscalibration parameters must be positive for '" +
          a.agent_id + "'");
    }
    if (!(p.confidence.base_quality > 0.0 && p.confidence.base_quality <= 1.0)) {
      throw std::invalid_argument("Scenario: base_quality must be in (0, 1]");
    }
    if (!(p.confidence.fp_quality >= 0.0 && p.confidence.fp_quality < 1.0)) {
      throw std::invalid_argument("Scenario: fp_quality must be in [0, 1)");
    }
    for (std::size_t i = 1; i < p.recall_curve.size(); ++i) {
      if (p.recall_curve[i].distance < p.recall_curve[i - 1].distance) {
        throw std::invalid_argument(
            "Scenario: recall curve distances must be non-decreasing");
      }
    }
    for (const RecallPoint& rp : p.recall_curve) {
      if (!(rp.probability >= 0.0 && rp.probability <= 1.0)) {
        throw std::invalid_argument(
            "Scenario: recall probabilities must be in [0, 1]");
      }
    }
  }
  if (ego_count != 1) {
    throw std::invalid_argument("Scenario: exactly one agent must be ego");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (agents[i].agent_id == agents[j].agent_id) {
        throw std::invalid_argument("Scenario: duplicate agent id '" +
                                    agents[i].agent_id + "'");
      }
    }
  }
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    for (std::size_t j = i + 1; j < ground_truth.size(); ++j) {
      if (geom::iou_bev(ground_truth[i], ground_truth[j]) >= 0.3) {
        throw std::invalid_argument(
            "Scenario: ground-truth vehicles overlap (pairwise IoU must stay "
            "below 0.3)");
      }
    }
  }
}

Scenario build_scenario(const ScenarioConfig& config) {
  Scenario sc;
  sc.seed = config.seed;
  sc.agents = config.agents;
  sc.frames = config.frames;
  sc.calibration_frames = config.calibration_frames;
  sc.iou_variant = config.iou_variant;
  sc.tp_iou_threshold = config.tp_iou_threshold;
  sc.scene = config.scene;

  rng::Xoshiro256 gen =
      rng::make_stream(config.seed, kSplitScene, 0, 0);
  const SceneConfig& scene = config.scene;
  int placed = 0;
  int attempts = 0;
  while (placed < scene.num_vehicles && attempts < 100000) {
    ++attempts;
    const double cx = gen.uniform(scene.x_min, scene.x_max);
    const double cy = gen.uniform(scene.y_min, scene.y_max);
    bool ok = true;
    for (const geom::Box3D& other : sc.ground_truth) {
      if (std::hypot(cx - other.cx, cy - other.cy) < scene.min_spacing) {
        ok = false;
        break;
      }
    }
    const double yaw = gen.uniform(-geom::kPi, geom::kPi);
    const double l = kBaseLength * gen.uniform(0.9, 1.1);
    const double w = kBaseWidth * gen.uniform(0.9, 1.1);
    const double h = kBaseHeight * gen.uniform(0.9, 1.1);
    if (!ok) {
      continue;
    }
    sc.ground_truth.emplace_back(cx, cy, 0.5 * h, l, w, h, yaw, "world");
    ++placed;
  }
  if (placed < scene.num_vehicles) {
    throw ConfigError(
        "build_scenario: could not place the requested vehicles with the "
        "given spacing");
  }
  sc.validate();
  return sc;
}

GeneratedData generate(const Scenario& scenario) {
  scenario.validate();
  GeneratedData data;
  data.ground_truth = scenario.ground_truth;
  data.frames.reserve(scenario.frames);
  const std::vector<const AgentSpec*> sorted_agents = agents_by_id(scenario);

  for (int frame = 0; frame < scenario.frames; ++frame) {
    FrameDetections fd;
    fd.frame = frame;
    for (const AgentSpec* agent : sorted_agents) {
      rng::Xoshiro256 gen = rng::make_stream(
          scenario.seed, kSplitEval, static_cast<std::uint64_t>(frame),
          rng::fnv1a64(agent->agent_id));
      fusion::AgentDetections ad;
      ad.agent_id = agent->agent_id;
      ad.pose = agent->pose;
      ad.calibrator_ref = agent->agent_id;
      for (WorldDetection& wd : generate_agent_frame(scenario, *agent, gen)) {
        ad.detections.push_back(
            {fusion::box_world_to_frame(wd.box, agent->pose, agent->agent_id),
             wd.score});
      }
      fd.agents.push_back(std::move(ad));
    }
    data.frames.push_back(std::move(fd));
  }
  return data;
}

std::vector<calib::CalibrationSample> make_calibration_split(
    const Scenario& scenario, const std::string& agent_id) {
  scenario.validate();
  const AgentSpec* agent = nullptr;
  for (const AgentSpec& a : scenario.agents) {
    if (a.agent_id == agent_id) {
      agent = &a;
    }
  }
  if (agent == nullptr) {
    throw UnknownAgent("make_calibration_split: unknown agent '" + agent_id +
                       "'");
  }

  std::vector<calib::CalibrationSample> samples;
  for (int frame = 0; frame < scenario.calibration_frames; ++frame) {
    rng::Xoshiro256 gen = rng::make_stream(
        scenario.seed, kSplitCalibration, static_cast<std::uint64_t>(frame),
        rng::fnv1a64(agent->agent_id));
    const std::vector<WorldDetection> dets =
        generate_agent_frame(scenario, *agent, gen);

    agg::CandidateSet cands;
    for (const WorldDetection& wd : dets) {
      cands.push_back(wd.box, wd.score, agent->agent_id);
    }
    const eval::MatchResult match =
        eval::match_frame(cands, scenario.ground_truth,
                          scenario.tp_iou_threshold, scenario.iou_variant);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      samples.push_back({dets[i].score, match.is_tp[i] ? 1 : 0});
    }
  }
  return samples;
}

}  // namespace latefuse::sim
