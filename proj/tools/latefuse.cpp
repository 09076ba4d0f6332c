#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latefuse/ablation.hpp"
#include "latefuse/calibration.hpp"
#include "latefuse/errors.hpp"
#include "latefuse/fusion.hpp"
#include "latefuse/io.hpp"
#include "latefuse/simulation.hpp"
#include "latefuse/version.hpp"

namespace fs = std::filesystem;
using namespace latefuse;

namespace {

// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 internal invariant violation.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

class StageTimer {
 public:
  void start(std::string stage) {
    stage_ = std::move(stage);
    t0_ = std::chrono::steady_clock::now();
  }
  void stop(io::RunManifest& manifest) {
    const auto t1 = std::chrono::steady_clock::now();
    manifest.timings_ms.emplace_back(
        stage_, std::chrono::duration<double, std::milli>(t1 - t0_).count());
  }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point t0_;
};

void add_output(io::RunManifest& manifest, const fs::path& path) {
  manifest.outputs.push_back({path.string(), io::file_digest(path)});
}

void add_input(io::RunManifest& manifest, const fs::path& path) {
  manifest.inputs.push_back({path.string(), io::file_digest(path)});
}

struct FusionFlags {
  std::string aggregator = "psa";
  std::string iou = "3d";
  double epsilon = 0.01;
  double phi = 0.5;
  double nms_threshold = 0.5;
  double softnms_sigma = 0.5;
  double softnms_floor = 0.001;
  double pre_filter = 0.05;
  double min_edge_iou = 0.0;
  bool strict = true;
  std::vector<double> range;  // x_min x_max y_min y_max
};

void add_fusion_flags(CLI::App* cmd, FusionFlags& f) {
  cmd->add_option("--aggregator", f.aggregator, "psa, nms or softnms")
      ->check(CLI::IsMember({"psa", "nms", "softnms"}));
  cmd->add_option("--iou", f.iou, "IoU variant (bev or 3d)")
      ->check(CLI::IsMember({"bev", "3d"}));
  cmd->add_option("--epsilon", f.epsilon, "PSA softmax temperature");
  cmd->add_option("--phi", f.phi, "PSA selection threshold");
  cmd->add_option("--nms-threshold", f.nms_threshold, "NMS IoU threshold");
  cmd->add_option("--softnms-sigma", f.softnms_sigma, "Soft-NMS decay sigma");
  cmd->add_option("--softnms-floor", f.softnms_floor, "Soft-NMS score floor");
  cmd->add_option("--pre-filter", f.pre_filter,
                  "drop calibrated detections below this before aggregation");
  cmd->add_option("--min-edge-iou", f.min_edge_iou,
                  "minimum IoU for a box-graph edge");
  cmd->add_flag("--strict,!--no-strict", f.strict,
                "missing calibrators are an error (default on)");
  cmd->add_option("--range", f.range,
                  "evaluation window: x_min x_max y_min y_max")
      ->expected(4);
}

fusion::FusionConfig to_config(const FusionFlags& f) {
  fusion::FusionConfig cfg;
  cfg.aggregator = fusion::aggregator_from_string(f.aggregator);
  cfg.iou_variant = geom::iou_variant_from_string(f.iou);
  cfg.psa_params = {f.epsilon, f.phi};
  cfg.nms_iou_threshold = f.nms_threshold;
  cfg.soft_nms_sigma = f.softnms_sigma;
  cfg.soft_nms_floor = f.softnms_floor;
  cfg.pre_filter_score = f.pre_filter;
  cfg.min_edge_iou = f.min_edge_iou;
  cfg.strict_calibrators = f.strict;
  if (!f.range.empty()) {
    cfg.range = {f.range[0], f.range[1], f.range[2], f.range[3]};
  }
  return cfg;
}

std::map<std::string, calib::Calibrator> load_calibrators(
    const fs::path& dir, io::RunManifest& manifest) {
  std::map<std::string, calib::Calibrator> calibrators;
  if (!fs::is_directory(dir)) {
    throw ConfigError("calibrator directory '" + dir.string() +
                      "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json" &&
        entry.path().filename() != "manifest.json" &&
        entry.path().filename() != "split.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    calibrators.emplace(f.stem().string(), io::read_calibrator_file(f));
    add_input(manifest, f);
  }
  return calibrators;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed_override) {
  io::RunManifest manifest;
  manifest.tool_version = kVersion;
  StageTimer timer;

  sim::ScenarioConfig config = io::read_scenario_config(config_path);
  manifest.config_digest = io::file_digest(config_path);
  if (seed_override) {
    config.seed = *seed_override;
  }
  manifest.seed = config.seed;
  add_input(manifest, config_path);

  fs::create_directories(out_dir);

  timer.start("build_scenario");
  const sim::Scenario scenario = sim::build_scenario(config);
  timer.stop(manifest);

  timer.start("generate");
  const sim::GeneratedData data = sim::generate(scenario);
  timer.stop(manifest);

  timer.start("write_detections");
  const fs::path gt_path = out_dir / "gt.txt";
  io::write_detection_file(
      gt_path, io::ground_truth_records(data.ground_truth, scenario.frames));
  add_output(manifest, gt_path);

  const std::vector<io::DetectionRecord> all_records = io::to_records(data);
  for (const sim::AgentSpec& agent : scenario.agents) {
    std::vector<io::DetectionRecord> agent_records;
    for (const io::DetectionRecord& r : all_records) {
      if (r.agent_id == agent.agent_id) {
        agent_records.push_back(r);
      }
    }
    const fs::path p = out_dir / ("dets_" + agent.agent_id + ".txt");
    io::write_detection_file(p, agent_records);
    add_output(manifest, p);
  }
  timer.stop(manifest);

  timer.start("calibration_split");
  for (const sim::AgentSpec& agent : scenario.agents) {
    const auto samples = sim::make_calibration_split(scenario, agent.agent_id);
    const fs::path p = out_dir / ("calib_" + agent.agent_id + ".txt");
    io::write_sample_file(p, samples);
    add_output(manifest, p);
  }
  timer.stop(manifest);

  // Split manifest: which frames exist, who is ego, how to evaluate.
  nlohmann::json split;
  split["seed"] = scenario.seed;
  split["frames"] = scenario.frames;
  split["calibration_frames"] = scenario.calibration_frames;
  split["iou_variant"] = geom::to_string(scenario.iou_variant);
  split["tp_iou_threshold"] = scenario.tp_iou_threshold;
  split["ego"] = scenario.ego().agent_id;
  split["agents"] = nlohmann::json::array();
  for (const sim::AgentSpec& agent : scenario.agents) {
    split["agents"].push_back(agent.agent_id);
  }
  const fs::path split_path = out_dir / "split.json";
  {
    std::ofstream out(split_path);
    out << split.dump(2) << "\n";
  }
  add_output(manifest, split_path);

  io::write_manifest(out_dir / "manifest.json", manifest);
  std::cout << "simulate: wrote " << scenario.frames << " frames for "
            << scenario.agents.size() << " agents to " << out_dir.string()
            << "\n";
  return kExitOk;
}

int cmd_calibrate(const fs::path& samples_path, const std::string& kind_name,
                  const fs::path& out_path) {
  const auto samples = io::read_sample_file(samples_path);
  if (samples.empty()) {
    throw EmptyDataset("calibrate: no samples in '" + samples_path.string() +
                       "'");
  }
  const calib::CalibratorKind kind =
      calib::calibrator_kind_from_string(kind_name);

  const double ece_before = calib::ece(samples, calib::Calibrator::identity());
  const calib::FitResult result = calib::fit(kind, samples);
  const double ece_after = calib::ece(samples, result.calibrator);

  io::write_calibrator_file(out_path, result);
  std::cout << "calibrate: kind=" << calib::to_string(kind)
            << " samples=" << samples.size() << "\n"
            << "  bce initial=" << io::format_number(result.initial_loss)
            << " final=" << io::format_number(result.final_loss)
            << " iterations=" << result.iterations << "\n"
            << "  ece before=" << io::format_number(ece_before)
            << " after=" << io::format_number(ece_after) << "\n"
            << "  a=" << io::format_number(result.calibrator.a)
            << " b=" << io::format_number(result.calibrator.b) << "\n";
  return kExitOk;
}

std::string detect_ego(const fs::path& dets_dir, std::string flag_value) {
  if (!flag_value.empty()) {
    return flag_value;
  }
  const fs::path split_path = dets_dir / "split.json";
  if (fs::exists(split_path)) {
    std::ifstream in(split_path);
    nlohmann::json j;
    in >> j;
    if (j.contains("ego")) {
      return j["ego"].get<std::string>();
    }
  }
  throw ConfigError(
      "fuse: pass --ego or provide split.json with an 'ego' field");
}

int cmd_fuse(const fs::path& dets_dir, const fs::path& calibrators_dir,
             const FusionFlags& flags, const std::string& ego_flag,
             const fs::path& out_path) {
  io::RunManifest manifest;
  manifest.tool_version = kVersion;
  StageTimer timer;

  const fusion::FusionConfig cfg = to_config(flags);
  const std::string ego_id = detect_ego(dets_dir, ego_flag);

  timer.start("load");
  std::vector<io::DetectionRecord> records;
  std::vector<fs::path> det_files;
  for (const auto& entry : fs::directory_iterator(dets_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("dets_", 0) == 0 && entry.path().extension() == ".txt") {
      det_files.push_back(entry.path());
    }
  }
  std::sort(det_files.begin(), det_files.end());
  if (det_files.empty()) {
    throw ConfigError("fuse: no dets_*.txt files in '" + dets_dir.string() +
                      "'");
  }
  for (const fs::path& f : det_files) {
    add_input(manifest, f);
    for (io::DetectionRecord& r : io::read_detection_file(f)) {
      records.push_back(std::move(r));
    }
  }
  const auto calibrators = load_calibrators(calibrators_dir, manifest);
  timer.stop(manifest);

  timer.start("fuse");
  auto frames = io::group_by_frame(records);

  // Poses are static per file; remember ego's pose for frames where the ego
  // has no detections of its own.
  std::optional<fusion::Pose2D> ego_pose;
  for (const auto& [frame, agents] : frames) {
    for (const fusion::AgentDetections& a : agents) {
      if (a.agent_id == ego_id) {
        ego_pose = a.pose;
        break;
      }
    }
    if (ego_pose) {
      break;
    }
  }
  if (!ego_pose) {
    throw ConfigError("fuse: ego agent '" + ego_id +
                      "' has no records in the detection files");
  }

  std::vector<io::DetectionRecord> fused_records;
  for (auto& [frame, agents] : frames) {
    fusion::AgentDetections ego;
    ego.agent_id = ego_id;
    ego.pose = *ego_pose;
    ego.calibrator_ref = ego_id;
    std::vector<fusion::AgentDetections> others;
    for (fusion::AgentDetections& a : agents) {
      if (a.agent_id == ego_id) {
        ego = std::move(a);
      } else {
        others.push_back(std::move(a));
      }
    }
    const agg::CandidateSet fused = fusion::fuse(ego, others, calibrators, cfg);
    for (std::size_t i = 0; i < fused.size(); ++i) {
      const geom::Box3D& b = fused.boxes[i];
      fused_records.push_back({frame, "fused", ego_pose->x, ego_pose->y,
                               ego_pose->yaw, b.cx, b.cy, b.cz, b.length,
                               b.width, b.height, b.yaw, fused.scores[i]});
    }
  }
  timer.stop(manifest);

  timer.start("write");
  io::write_detection_file(out_path, fused_records);
  add_output(manifest, out_path);
  timer.stop(manifest);

  io::write_manifest(fs::path(out_path.string() + ".manifest.json"),
                     manifest);
  std::cout << "fuse: aggregator=" << flags.aggregator
            << " iou=" << flags.iou << " frames=" << frames.size()
            << " fused_detections=" << fused_records.size() << "\n";
  return kExitOk;
}

int cmd_evaluate(const fs::path& fused_path, const fs::path& gt_path,
                 double iou_thresh, const std::string& iou_name,
                 const std::vector<double>& range_v, const fs::path& out_path,
                 const fs::path& pr_path, const fs::path& dets_dir,
                 const fs::path& calibrators_dir,
                 const fs::path& reliability_dir) {
  io::RunManifest manifest;
  manifest.tool_version = kVersion;
  StageTimer timer;

  const geom::IouVariant variant = geom::iou_variant_from_string(iou_name);
  fusion::RangeLimits range;
  if (!range_v.empty()) {
    range = {range_v[0], range_v[1], range_v[2], range_v[3]};
  }

  timer.start("load");
  const auto fused_records = io::read_detection_file(fused_path);
  const auto gt_records = io::read_detection_file(gt_path);
  add_input(manifest, fused_path);
  add_input(manifest, gt_path);
  timer.stop(manifest);

  fusion::Pose2D ego_pose;
  if (!fused_records.empty()) {
    ego_pose = {fused_records.front().pose_x, fused_records.front().pose_y,
                fused_records.front().pose_yaw};
  }

  timer.start("match");
  std::map<int, std::vector<const io::DetectionRecord*>> gt_by_frame;
  for (const io::DetectionRecord& r : gt_records) {
    gt_by_frame[r.frame].push_back(&r);
  }
  std::map<int, std::vector<const io::DetectionRecord*>> det_by_frame;
  for (const io::DetectionRecord& r : fused_records) {
    det_by_frame[r.frame].push_back(&r);
  }

  const std::string eval_frame = "eval";
  std::vector<eval::MatchResult> matches;
  for (const auto& [frame, gts] : gt_by_frame) {
    std::vector<geom::Box3D> gt_boxes;
    for (const io::DetectionRecord* r : gts) {
      geom::Box3D world(r->cx, r->cy, r->cz, r->length, r->width, r->height,
                        r->yaw, "world");
      geom::Box3D in_ego =
          fusion::box_world_to_frame(world, ego_pose, eval_frame);
      if (range.contains(in_ego.cx, in_ego.cy)) {
        gt_boxes.push_back(std::move(in_ego));
      }
    }
    agg::CandidateSet dets;
    const auto it = det_by_frame.find(frame);
    if (it != det_by_frame.end()) {
      for (const io::DetectionRecord* r : it->second) {
        geom::Box3D box(r->cx, r->cy, r->cz, r->length, r->width, r->height,
                        r->yaw, eval_frame);
        if (range.contains(box.cx, box.cy)) {
          dets.push_back(std::move(box), r->score, r->agent_id);
        }
      }
    }
    matches.push_back(eval::match_frame(dets, gt_boxes, iou_thresh, variant));
  }
  const eval::PrCurve curve = eval::average_precision(matches);
  timer.stop(manifest);

  timer.start("write");
  eval::MethodResult result;
  result.name = "fused";
  result.ap = curve.ap;
  result.tp = curve.tp;
  result.fp = curve.fp;
  result.fn = curve.fn;
  io::write_method_table(out_path, std::vector<eval::MethodResult>{result},
                         variant, iou_thresh);
  add_output(manifest, out_path);
  if (!pr_path.empty()) {
    io::write_pr_curve(pr_path, curve);
    add_output(manifest, pr_path);
  }
  timer.stop(manifest);

  // Optional per-agent reliability diagrams from the raw detection files.
  if (!reliability_dir.empty()) {
    if (dets_dir.empty()) {
      throw ConfigError("evaluate: --reliability-dir requires --dets");
    }
    timer.start("reliability");
    fs::create_directories(reliability_dir);
    std::map<std::string, calib::Calibrator> calibrators;
    if (!calibrators_dir.empty()) {
      calibrators = load_calibrators(calibrators_dir, manifest);
    }
    for (const auto& entry : fs::directory_iterator(dets_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("dets_", 0) != 0 || entry.path().extension() != ".txt") {
        continue;
      }
      const auto agent_records = io::read_detection_file(entry.path());
      if (agent_records.empty()) {
        continue;
      }
      const std::string agent_id = agent_records.front().agent_id;
      std::vector<calib::CalibrationSample> samples;
      std::map<int, std::vector<const io::DetectionRecord*>> by_frame;
      for (const io::DetectionRecord& r : agent_records) {
        by_frame[r.frame].push_back(&r);
      }
      for (const auto& [frame, recs] : by_frame) {
        const auto git = gt_by_frame.find(frame);
        std::vector<geom::Box3D> gt_boxes;
        if (git != gt_by_frame.end()) {
          for (const io::DetectionRecord* r : git->second) {
            gt_boxes.emplace_back(r->cx, r->cy, r->cz, r->length, r->width,
                                  r->height, r->yaw, "world");
          }
        }
        agg::CandidateSet dets;
        for (const io::DetectionRecord* r : recs) {
          fusion::Pose2D pose{r->pose_x, r->pose_y, r->pose_yaw};
          geom::Box3D local(r->cx, r->cy, r->cz, r->length, r->width,
                            r->height, r->yaw, agent_id);
          dets.push_back(fusion::box_agent_to_world(local, pose), r->score,
                         agent_id);
        }
        const eval::MatchResult m =
            eval::match_frame(dets, gt_boxes, iou_thresh, variant);
        for (std::size_t i = 0; i < dets.size(); ++i) {
          samples.push_back({dets.scores[i], m.is_tp[i] ? 1 : 0});
        }
      }
      if (samples.empty()) {
        continue;
      }
      io::write_reliability(
          reliability_dir / (agent_id + "_raw.csv"),
          calib::reliability(samples, calib::Calibrator::identity(), 10));
      const auto cit = calibrators.find(agent_id);
      if (cit != calibrators.end()) {
        io::write_reliability(
            reliability_dir / (agent_id + "_calibrated.csv"),
            calib::reliability(samples, cit->second, 10));
      }
    }
    timer.stop(manifest);
  }

  io::write_manifest(fs::path(out_path.string() + ".manifest.json"),
                     manifest);
  std::cout << "evaluate: ap=" << io::format_number(curve.ap)
            << " tp=" << curve.tp << " fp=" << curve.fp << " fn=" << curve.fn
            << " (iou_variant=" << iou_name << ", threshold="
            << io::format_number(iou_thresh) << ")\n";
  return kExitOk;
}

int cmd_report(const fs::path& config_path, const fs::path& out_dir,
               std::optional<std::uint64_t> seed_override,
               const FusionFlags& flags, double iou_thresh,
               const std::string& calibrator_kind) {
  io::RunManifest manifest;
  manifest.tool_version = kVersion;
  StageTimer timer;

  sim::ScenarioConfig config = io::read_scenario_config(config_path);
  manifest.config_digest = io::file_digest(config_path);
  if (seed_override) {
    config.seed = *seed_override;
  }
  manifest.seed = config.seed;
  add_input(manifest, config_path);
  fs::create_directories(out_dir);

  timer.start("simulate");
  const sim::Scenario scenario = sim::build_scenario(config);
  const sim::GeneratedData data = sim::generate(scenario);
  timer.stop(manifest);

  timer.start("calibrate");
  const calib::CalibratorKind kind =
      calib::calibrator_kind_from_string(calibrator_kind);
  std::map<std::string, calib::Calibrator> fitted;
  for (const sim::AgentSpec& agent : scenario.agents) {
    const auto samples = sim::make_calibration_split(scenario, agent.agent_id);
    fitted.emplace(agent.agent_id, calib::fit(kind, samples).calibrator);
  }
  timer.stop(manifest);

  timer.start("ablation");
  fusion::FusionConfig base = to_config(flags);
  const auto methods = eval::standard_ablation(scenario, fitted, base);
  const auto results = eval::run_ablation(scenario, data, methods, iou_thresh);
  timer.stop(manifest);

  timer.start("write");
  const fs::path table_path = out_dir / "ablation.csv";
  io::write_method_table(table_path, results, base.iou_variant, iou_thresh);
  add_output(manifest, table_path);
  for (const eval::MethodResult& r : results) {
    const fs::path pr_path = out_dir / ("pr_" + r.name + ".csv");
    io::write_pr_curve(pr_path, r.curve);
    add_output(manifest, pr_path);
  }
  timer.stop(manifest);

  io::write_manifest(out_dir / "manifest.json", manifest);
  for (const eval::MethodResult& r : results) {
    std::cout << r.name << ": ap=" << io::format_number(r.ap)
              << " tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latefuse: calibrated late fusion for multi-agent 3D "
               "detection"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand(
      "simulate", "generate a synthetic multi-agent scenario");
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("--config", sim_config, "scenario config JSON")
      ->required();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--seed", sim_seed, "override the config seed");

  // calibrate
  auto* cal_cmd =
      app.add_subcommand("calibrate", "fit a confidence calibrator");
  std::string cal_samples;
  std::string cal_kind = "dbs";
  std::string cal_out;
  cal_cmd->add_option("--samples", cal_samples, "calibration sample file")
      ->required();
  cal_cmd
      ->add_option("--calibrator", cal_kind,
                   "dbs, platt, temperature or identity")
      ->check(CLI::IsMember({"dbs", "platt", "temperature", "identity"}));
  cal_cmd->add_option("--out", cal_out, "output calibrator JSON")->required();

  // fuse
  auto* fuse_cmd =
      app.add_subcommand("fuse", "calibrate and aggregate shared detections");
  std::string fuse_dets;
  std::string fuse_cals;
  std::string fuse_out;
  std::string fuse_ego;
  FusionFlags fuse_flags;
  fuse_cmd->add_option("--dets", fuse_dets, "directory with dets_*.txt")
      ->required();
  fuse_cmd
      ->add_option("--calibrators", fuse_cals,
                   "directory with <agent>.json calibrators")
      ->required();
  fuse_cmd->add_option("--out", fuse_out, "output fused detection file")
      ->required();
  fuse_cmd->add_option("--ego", fuse_ego,
                       "ego agent id (default: from split.json)");
  add_fusion_flags(fuse_cmd, fuse_flags);

  // evaluate
  auto* eval_cmd =
      app.add_subcommand("evaluate", "average precision against ground truth");
  std::string eval_fused;
  std::string eval_gt;
  std::string eval_out;
  std::string eval_pr;
  std::string eval_dets;
  std::string eval_cals;
  std::string eval_reliability;
  std::string eval_iou = "3d";
  double eval_thresh = 0.7;
  std::vector<double> eval_range;
  eval_cmd->add_option("--fused", eval_fused, "fused detection file")
      ->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth file")->required();
  eval_cmd->add_option("--out", eval_out, "report CSV path")->required();
  eval_cmd->add_option("--pr-out", eval_pr, "PR-curve CSV path");
  eval_cmd->add_option("--iou", eval_iou, "IoU variant (bev or 3d)")
      ->check(CLI::IsMember({"bev", "3d"}));
  eval_cmd->add_option("--iou-thresh", eval_thresh, "matching threshold");
  eval_cmd
      ->add_option("--range", eval_range,
                   "evaluation window: x_min x_max y_min y_max")
      ->expected(4);
  eval_cmd->add_option("--dets", eval_dets,
                       "per-agent detections (for reliability diagrams)");
  eval_cmd->add_option("--calibrators", eval_cals,
                       "calibrators (for calibrated reliability diagrams)");
  eval_cmd->add_option("--reliability-dir", eval_reliability,
                       "write per-agent reliability CSVs here");

  // report
  auto* rep_cmd = app.add_subcommand(
      "report", "run the full pipeline and compare fusion methods");
  std::string rep_config;
  std::string rep_out;
  std::optional<std::uint64_t> rep_seed;
  std::string rep_kind = "dbs";
  double rep_thresh = 0.7;
  FusionFlags rep_flags;
  rep_cmd->add_option("--config", rep_config, "scenario config JSON")
      ->required();
  rep_cmd->add_option("--out", rep_out, "output directory")->required();
  rep_cmd->add_option("--seed", rep_seed, "override the config seed");
  rep_cmd
      ->add_option("--calibrator", rep_kind,
                   "dbs, platt, temperature or identity")
      ->check(CLI::IsMember({"dbs", "platt", "temperature", "identity"}));
  rep_cmd->add_option("--iou-thresh", rep_thresh, "matching threshold");
  add_fusion_flags(rep_cmd, rep_flags);

  try {
    app.parse(argc, argv);
    if (sim_cmd->parsed()) {
      return cmd_simulate(sim_config, sim_out, sim_seed);
    }
    if (cal_cmd->parsed()) {
      return cmd_calibrate(cal_samples, cal_kind, cal_out);
    }
    if (fuse_cmd->parsed()) {
      return cmd_fuse(fuse_dets, fuse_cals, fuse_flags, fuse_ego, fuse_out);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(eval_fused, eval_gt, eval_thresh, eval_iou,
                          eval_range, eval_out, eval_pr, eval_dets, eval_cals,
                          eval_reliability);
    }
    if (rep_cmd->parsed()) {
      return cmd_report(rep_config, rep_out, rep_seed, rep_flags, rep_thresh,
                        rep_kind);
    }
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const EmptyDataset& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DegenerateDataset& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NonFinite& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const MissingCalibrator& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const UnknownAgent& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NoGroundTruth& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
