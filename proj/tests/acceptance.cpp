// Acceptance suite: one self-contained check per release criterion, each
// printing a single PASS/FAIL line. The CLI binary path must be passed as
// argv[1] for the end-to-end determinism check. Exit code is the number of
// failed criteria.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "latefuse/ablation.hpp"
#include "latefuse/aggregation.hpp"
#include "latefuse/calibration.hpp"
#include "latefuse/evaluation.hpp"
#include "latefuse/fusion.hpp"
#include "latefuse/geometry.hpp"
#include "latefuse/io.hpp"
#include "latefuse/rng.hpp"
#include "latefuse/simulation.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace latefuse;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s [%d] %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  if (!pass) {
    ++g_failures;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------
// Shared scenario definitions (mirrored by configs/hetero.json and
// configs/homo.json for the CLI).
// ---------------------------------------------------------------------

sim::ScenarioConfig hetero_config(std::uint64_t seed, int frames,
                                  int cal_frames) {
  sim::ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.frames = frames;
  cfg.calibration_frames = cal_frames;
  cfg.scene = {14, -100.0, 100.0, -40.0, 40.0, 12.0};

  sim::AgentSpec ego;
  ego.agent_id = "ego";
  ego.pose = {0.0, 0.0, 0.0};
  ego.is_ego = true;
  ego.profile.recall_curve = {{0.0, 0.95}, {50.0, 0.88}, {150.0, 0.75}};
  ego.profile.max_range = 150.0;
  ego.profile.position_noise_std = 0.22;
  ego.profile.yaw_noise_std = 0.04;
  ego.profile.size_noise_std = 0.04;
  ego.profile.false_positive_rate = 1.0;
  ego.profile.confidence = {0.85, 0.85, 1.2, 0.2};

  sim::AgentSpec v1 = ego;
  v1.agent_id = "v1";
  v1.is_ego = false;
  v1.pose = {40.0, 10.0, 0.6};
  v1.profile.false_positive_rate = 1.2;
  v1.profile.confidence = {0.8, 1.1, 0.9, 0.2};

  // The inferior, strongly over-confident agent: its raw score is the fifth
  // root of its true correctness probability.
  sim::AgentSpec v2 = v1;
  v2.agent_id = "v2";
  v2.pose = {-40.0, -10.0, -2.2};
  v2.profile.position_noise_std = 0.33;
  v2.profile.yaw_noise_std = 0.07;
  v2.profile.size_noise_std = 0.08;
  v2.profile.false_positive_rate = 3.0;
  v2.profile.confidence = {0.5, 5.0, 1.0, 0.3};

  cfg.agents = {ego, v1, v2};
  return cfg;
}

sim::ScenarioConfig homo_config(std::uint64_t seed, int frames,
                                int cal_frames) {
  sim::ScenarioConfig cfg = hetero_config(seed, frames, cal_frames);
  for (auto& agent : cfg.agents) {
    agent.profile = cfg.agents[0].profile;  // every agent runs the ego model
  }
  return cfg;
}

std::vector<eval::MethodResult> run_standard_ablation(
    const sim::ScenarioConfig& cfg) {
  const sim::Scenario sc = sim::build_scenario(cfg);
  const sim::GeneratedData data = sim::generate(sc);
  std::map<std::string, calib::Calibrator> fitted;
  for (const auto& agent : sc.agents) {
    fitted.emplace(agent.agent_id,
                   calib::fit(calib::CalibratorKind::kDbs,
                              sim::make_calibration_split(sc, agent.agent_id))
                       .calibrator);
  }
  fusion::FusionConfig base;
  return eval::run_ablation(sc, data,
                            eval::standard_ablation(sc, fitted, base), 0.7);
}

// ---------------------------------------------------------------------

void criterion_1_calibrator_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const calib::Calibrator truth = calib::Calibrator::dbs(2.0, 1.0);
  rng::Xoshiro256 gen(4101);
  std::vector<calib::CalibrationSample> data;
  data.reserve(100000);
  for (int i = 0; i < 100000; ++i) {
    const double s = gen.uniform();
    data.push_back({s, gen.bernoulli(truth.apply(s)) ? 1 : 0});
  }
  const double ece_before = calib::ece(data, calib::Calibrator::identity());
  const calib::FitResult r = calib::fit(calib::CalibratorKind::kDbs, data);
  const double ece_after = calib::ece(data, r.calibrator);
  const double da = std::abs(std::log(r.calibrator.a) - std::log(2.0));
  const double db = std::abs(std::log(r.calibrator.b));
  const double elapsed = seconds_since(t0);

  const bool pass = da < 0.1 && db < 0.1 && ece_before >= 0.1 &&
                    ece_after < 0.02 && elapsed < 10.0;
  report(1, pass,
         fmt("calibrator recovery: |dlog a|=%.4f |dlog b|=%.4f (<0.1), "
             "ece %.4f -> %.4f (>=0.1 -> <0.02), %.1fs (<10s)",
             da, db, ece_before, ece_after, elapsed));
}

void criterion_2_gradient_check() {
  rng::Xoshiro256 gen(4202);
  const double h = 1e-5;
  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<calib::CalibrationSample> data;
    const int n = 20 + static_cast<int>(gen.uniform() * 100);
    for (int i = 0; i < n; ++i) {
      data.push_back({gen.uniform(0.02, 0.98), gen.bernoulli(0.5) ? 1 : 0});
    }
    const double a = std::exp(gen.uniform(-1.2, 1.2));
    const double b = std::exp(gen.uniform(-1.2, 1.2));
    const auto grad = calib::bce_gradient(calib::Calibrator::dbs(a, b), data);
    const double fd_a =
        (calib::bce_loss(calib::Calibrator::dbs(a * std::exp(h), b), data) -
         calib::bce_loss(calib::Calibrator::dbs(a * std::exp(-h), b), data)) /
        (2.0 * h);
    const double fd_b =
        (calib::bce_loss(calib::Calibrator::dbs(a, b * std::exp(h)), data) -
         calib::bce_loss(calib::Calibrator::dbs(a, b * std::exp(-h)), data)) /
        (2.0 * h);
    const double rel_a =
        std::abs(grad[0] - fd_a) / std::max(std::abs(fd_a), 1e-7);
    const double rel_b =
        std::abs(grad[1] - fd_b) / std::max(std::abs(fd_b), 1e-7);
    worst = std::max({worst, rel_a, rel_b});
    if (rel_a > 1e-4 || rel_b > 1e-4) {
      ++bad;
    }
  }
  report(2, bad == 0,
         fmt("gradient check: 100 random points, worst relative error "
             "%.2e (<1e-4), %d failures",
             worst, bad));
}

void criterion_3_geometry_oracles() {
  rng::Xoshiro256 gen(4303);
  int mc_bad = 0;
  for (int i = 0; i < 200; ++i) {
    const geom::Box3D a = oracles::random_box(gen, "t", 3.0);
    const geom::Box3D b = oracles::random_box(gen, "t", 3.0);
    const double exact = geom::iou_bev(a, b);
    const auto mc = oracles::mc_iou_bev(a, b, 1000000, 5000 + i);
    if (mc.n_union == 0) {
      ++mc_bad;
      continue;
    }
    const double se = std::sqrt(std::max(exact * (1.0 - exact), 1e-12) /
                                static_cast<double>(mc.n_union));
    if (std::abs(exact - mc.estimate) > 3.0 * se + 1e-9) {
      ++mc_bad;
    }
  }

  int clip_bad = 0;
  double worst_clip = 0.0;
  for (int i = 0; i < 200; ++i) {
    const geom::ConvexPolygon2D p = oracles::random_convex_quad(gen);
    const geom::ConvexPolygon2D q = oracles::random_convex_quad(gen);
    const double got = geom::polygon_intersection(p, q).area();
    const double expected = oracles::halfplane_intersection_area(p, q);
    worst_clip = std::max(worst_clip, std::abs(got - expected));
    if (std::abs(got - expected) >= 1e-9) {
      ++clip_bad;
    }
  }
  report(3, mc_bad == 0 && clip_bad == 0,
         fmt("geometry oracles: 200 Monte-Carlo pairs (1e6 samples, 3 sigma) "
             "%d outliers; 200 clip pairs worst |err|=%.2e (<1e-9), %d bad",
             mc_bad, worst_clip, clip_bad));
}

void criterion_4_psa_fidelity() {
  bool ok = true;
  std::string detail;

  // Hand instance: two boxes, U = [[1, .6], [.6, 1]], s = [.8, .7].
  {
    agg::BoxGraph g;
    g.n = 2;
    g.iou = {1.0, 0.6, 0.6, 1.0};
    g.components = {{0, 1}};
    const std::vector<double> scores = {0.8, 0.7};
    const auto promoted = agg::promote(g, scores);
    const auto selected = agg::psa_select(g, scores, {0.01, 0.5});
    if (std::abs(promoted[0] - 1.22) > 1e-12 ||
        std::abs(promoted[1] - 1.18) > 1e-12 ||
        selected != std::vector<int>{0}) {
      ok = false;
      detail += " two-box instance failed;";
    }
  }
  // Spatial-agreement motif: a 0.8-clique of three boxes against a lone
  // higher-scored singleton. Promotion favors the clique, and with the weak
  // 0.1 cross-edge the clique side wins the merged component.
  {
    agg::BoxGraph separate;
    separate.n = 4;
    separate.iou = {
        1.0, 0.0, 0.0, 0.0,  //
        0.0, 1.0, 0.8, 0.8,  //
        0.0, 0.8, 1.0, 0.8,  //
        0.0, 0.8, 0.8, 1.0,  //
    };
    separate.components = {{0}, {1, 2, 3}};
    const std::vector<double> scores = {0.81, 0.79, 0.78, 0.79};
    const auto promoted = agg::promote(separate, scores);
    if (std::abs(promoted[1] - 2.046) > 1e-12 ||
        !(promoted[1] > promoted[0])) {
      ok = false;
      detail += " clique promote failed;";
    }
    // The two 0.79 entries tie exactly: the clique's softmax mass splits and
    // the strict threshold keeps only the singleton component's box.
    const auto selected = agg::psa_select(separate, scores, {0.01, 0.5});
    if (selected != std::vector<int>{0}) {
      ok = false;
      detail += " tied-clique selection changed;";
    }

    agg::BoxGraph merged = separate;
    merged.iou[0 * 4 + 1] = 0.1;
    merged.iou[1 * 4 + 0] = 0.1;
    merged.components = {{0, 1, 2, 3}};
    const auto merged_sel = agg::psa_select(merged, scores, {0.01, 0.5});
    if (merged_sel != std::vector<int>{1}) {
      ok = false;
      detail += " merged-component winner wrong;";
    }
  }

  // Permutation invariance and the NMS reference on 1000 random sets.
  rng::Xoshiro256 gen(4404);
  int perm_bad = 0;
  int nms_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(gen.uniform() * 50);
    const agg::CandidateSet cands =
        oracles::random_candidates(gen, n, "t", 9.0);
    const auto base = agg::psa(cands, {0.01, 0.5}, geom::IouVariant::kBev);

    std::vector<int> perm(cands.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1],
                perm[static_cast<std::size_t>(gen.uniform() * i)]);
    }
    agg::CandidateSet shuffled;
    for (int idx : perm) {
      shuffled.push_back(cands.boxes[idx], cands.scores[idx],
                         cands.source_agent[idx]);
    }
    const auto shuffled_sel =
        agg::psa(shuffled, {0.01, 0.5}, geom::IouVariant::kBev);
    std::set<int> mapped;
    for (int idx : shuffled_sel) {
      mapped.insert(perm[idx]);
    }
    if (mapped != std::set<int>(base.begin(), base.end())) {
      ++perm_bad;
    }

    const double threshold = gen.uniform(0.1, 0.7);
    const agg::BoxGraph g = agg::build_graph(cands, geom::IouVariant::kBev);
    if (agg::nms(cands, threshold, geom::IouVariant::kBev) !=
        oracles::nms_reference(g.iou, cands.size(), cands.scores,
                               threshold)) {
      ++nms_bad;
    }
  }
  if (perm_bad > 0 || nms_bad > 0) {
    ok = false;
    detail += fmt(" perm_bad=%d nms_bad=%d;", perm_bad, nms_bad);
  }
  report(4, ok,
         "PSA fidelity: hand instances exact; permutation invariance and "
         "NMS reference over 1000 sets" +
             (detail.empty() ? std::string(" all exact") : detail));
}

void criterion_5_ap_oracle() {
  rng::Xoshiro256 gen(4505);
  int cases = 0;
  int bad = 0;
  double worst = 0.0;
  while (cases < 500) {
    std::vector<eval::MatchResult> matches;
    const int frames = 1 + static_cast<int>(gen.uniform() * 3);
    long total_gt = 0;
    for (int f = 0; f < frames; ++f) {
      eval::MatchResult m;
      m.num_gt = static_cast<int>(gen.uniform() * 5);
      total_gt += m.num_gt;
      const int dets = static_cast<int>(gen.uniform() * 7);
      int tps = 0;
      for (int i = 0; i < dets; ++i) {
        const bool tp = tps < m.num_gt && gen.bernoulli(0.5);
        m.is_tp.push_back(tp ? 1 : 0);
        m.matched_gt.push_back(tp ? tps : -1);
        tps += tp ? 1 : 0;
        m.scores.push_back(std::round(gen.uniform() * 8.0) / 8.0);
      }
      m.false_negatives = m.num_gt - tps;
      matches.push_back(std::move(m));
    }
    if (total_gt == 0) {
      continue;
    }
    ++cases;
    const double got = eval::average_precision(matches).ap;
    const double expected = oracles::ap_reference(matches);
    worst = std::max(worst, std::abs(got - expected));
    if (std::abs(got - expected) >= 1e-9) {
      ++bad;
    }
  }
  report(5, bad == 0,
         fmt("AP oracle: 500 exhaustive-sweep cases, worst |err|=%.2e "
             "(<1e-9), %d bad",
             worst, bad));
}

struct HeteroResults {
  double no_fusion = 0.0;
  double nms_uncal = 0.0;
  double nms_dbs = 0.0;
  double psa_uncal = 0.0;
  double psa_dbs = 0.0;
  double elapsed = 0.0;
};

HeteroResults run_hetero() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results =
      run_standard_ablation(hetero_config(20240901, 500, 600));
  HeteroResults r;
  r.no_fusion = results[0].ap;
  r.nms_uncal = results[1].ap;
  r.nms_dbs = results[2].ap;
  r.psa_uncal = results[3].ap;
  r.psa_dbs = results[4].ap;
  r.elapsed = seconds_since(t0);
  return r;
}

void criterion_6_hetero_ordering(const HeteroResults& r) {
  const bool pass = r.psa_dbs - r.nms_uncal >= 0.03 &&
                    r.nms_uncal > r.no_fusion && r.elapsed < 60.0;
  report(6, pass,
         fmt("hetero ordering: psa+dbs %.4f >= nms uncal %.4f + 0.03 "
             "(delta %+.4f), nms uncal > no fusion %.4f, %.1fs (<60s)",
             r.psa_dbs, r.nms_uncal, r.psa_dbs - r.nms_uncal, r.no_fusion,
             r.elapsed));
}

void criterion_7_component_ablation(const HeteroResults& r) {
  const double d_dbs = r.nms_dbs - r.nms_uncal;
  const double d_psa = r.psa_dbs - r.nms_dbs;
  report(7, d_dbs > 0.0 && d_psa > 0.0,
         fmt("component ablation: DBS adds %+.4f to NMS, PSA adds %+.4f "
             "more (both > 0)",
             d_dbs, d_psa));
}

void criterion_8_homo_sanity() {
  const auto results = run_standard_ablation(homo_config(22, 500, 600));
  const double gap = std::abs(results[4].ap - results[1].ap);
  report(8, gap < 0.02,
         fmt("homo sanity: |psa+dbs %.4f - nms uncal %.4f| = %.4f (<0.02)",
             results[4].ap, results[1].ap, gap));
}

// Full CLI pipeline, run twice; every report must be byte-identical.
void criterion_9_cli_determinism(const std::string& cli) {
  if (cli.empty()) {
    report(9, false, "CLI determinism: no CLI binary path given (argv[1])");
    return;
  }
  const fs::path root =
      fs::temp_directory_path() / "latefuse_acceptance_determinism";
  std::error_code ec;
  fs::remove_all(root, ec);
  fs::create_directories(root);

  // A short copy of the hetero scenario keeps the double run quick.
  const fs::path config = root / "scenario.json";
  {
    std::ofstream out(config);
    out << R"({
  "seed": 20240901,
  "frames": 120,
  "calibration_frames": 200,
  "scene": {"num_vehicles": 14, "x_min": -100, "x_max": 100,
            "y_min": -40, "y_max": 40, "min_spacing": 12},
  "agents": [
    {"id": "ego", "ego": true, "pose": {"x": 0, "y": 0, "yaw": 0},
     "profile": {"recall_curve": [[0, 0.95], [50, 0.88], [150, 0.75]],
                 "max_range": 150, "position_noise_std": 0.22,
                 "yaw_noise_std": 0.04, "size_noise_std": 0.04,
                 "false_positive_rate": 1.0,
                 "confidence": {"base_quality": 0.85, "miscal_a": 0.85,
                                "miscal_b": 1.2, "fp_quality": 0.2}}},
    {"id": "v1", "pose": {"x": 40, "y": 10, "yaw": 0.6},
     "profile": {"recall_curve": [[0, 0.95], [50, 0.88], [150, 0.75]],
                 "max_range": 150, "position_noise_std": 0.22,
                 "yaw_noise_std": 0.04, "size_noise_std": 0.04,
                 "false_positive_rate": 1.2,
                 "confidence": {"base_quality": 0.8, "miscal_a": 1.1,
                                "miscal_b": 0.9, "fp_quality": 0.2}}},
    {"id": "v2", "pose": {"x": -40, "y": -10, "yaw": -2.2},
     "profile": {"recall_curve": [[0, 0.95], [50, 0.88], [150, 0.75]],
                 "max_range": 150, "position_noise_std": 0.33,
                 "yaw_noise_std": 0.07, "size_noise_std": 0.08,
                 "false_positive_rate": 3.0,
                 "confidence": {"base_quality": 0.5, "miscal_a": 5.0,
                                "miscal_b": 1.0, "fp_quality": 0.3}}}
  ]
})";
  }

  const auto shell = [&](const std::string& cmd) {
    const std::string full =
        cmd + " >> " + (root / "log.txt").string() + " 2>&1";
    return std::system(full.c_str());
  };

  bool ran_ok = true;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir / "cals");
    int rc = shell(cli + " simulate --config " + config.string() + " --out " +
                   dir.string());
    for (const char* agent : {"ego", "v1", "v2"}) {
      rc |= shell(cli + " calibrate --samples " +
                  (dir / (std::string("calib_") + agent + ".txt")).string() +
                  " --calibrator dbs --out " +
                  (dir / "cals" / (std::string(agent) + ".json")).string());
    }
    rc |= shell(cli + " fuse --dets " + dir.string() + " --calibrators " +
                (dir / "cals").string() + " --out " +
                (dir / "fused.txt").string());
    rc |= shell(cli + " evaluate --fused " + (dir / "fused.txt").string() +
                " --gt " + (dir / "gt.txt").string() + " --out " +
                (dir / "report.csv").string() + " --pr-out " +
                (dir / "pr.csv").string());
    rc |= shell(cli + " report --config " + config.string() + " --out " +
                (dir / "rep").string());
    if (rc != 0) {
      ran_ok = false;
    }
  }

  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::vector<std::string> files = {
      "gt.txt",          "dets_ego.txt",     "dets_v1.txt",
      "dets_v2.txt",     "calib_ego.txt",    "calib_v1.txt",
      "calib_v2.txt",    "cals/ego.json",    "cals/v1.json",
      "cals/v2.json",    "fused.txt",        "report.csv",
      "pr.csv",          "rep/ablation.csv", "rep/pr_psa_dbs.csv",
      "rep/pr_no_fusion.csv"};
  int mismatched = 0;
  for (const std::string& f : files) {
    const std::string a = slurp(root / "a" / f);
    const std::string b = slurp(root / "b" / f);
    if (a.empty() || a != b) {
      ++mismatched;
    }
  }
  report(9, ran_ok && mismatched == 0,
         fmt("CLI determinism: two pipeline runs, %zu reports compared, "
             "%d mismatched (commands ok=%d)",
             files.size(), mismatched, ran_ok ? 1 : 0));
  if (ran_ok && mismatched == 0) {
    fs::remove_all(root, ec);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  std::printf("latefuse acceptance suite\n");

  criterion_1_calibrator_recovery();
  criterion_2_gradient_check();
  criterion_3_geometry_oracles();
  criterion_4_psa_fidelity();
  criterion_5_ap_oracle();
  const HeteroResults hetero = run_hetero();
  criterion_6_hetero_ordering(hetero);
  criterion_7_component_ablation(hetero);
  criterion_8_homo_sanity();
  criterion_9_cli_determinism(cli);

  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures;
}
