#include "latefuse/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "latefuse/errors.hpp"
#include "latefuse/rng.hpp"
#include "latefuse/version.hpp"

namespace latefuse::io {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot write '" + path.string() + "'");
  }
  out << text;
}

json parse_json(const std::filesystem::path& path, const char* what) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const ParseError& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + ": invalid JSON in '" +
                      path.string() + "': " + e.what());
  }
}

const json& require_field(const json& j, const char* field, const char* ctx) {
  const auto it = j.find(field);
  if (it == j.end()) {
    throw ConfigError(std::string(ctx) + ": missing required field '" + field +
                      "'");
  }
  return *it;
}

}  // namespace

std::string format_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_detection_file(const std::filesystem::path& path,
                          std::span<const DetectionRecord> records) {
  std::ostringstream out;
  out << "# frame agent_id pose_x pose_y pose_yaw cx cy cz length width "
         "height yaw score\n";
  for (const DetectionRecord& r : records) {
    out << r.frame << ' ' << r.agent_id << ' ' << format_number(r.pose_x)
        << ' ' << format_number(r.pose_y) << ' ' << format_number(r.pose_yaw)
        << ' ' << format_number(r.cx) << ' ' << format_number(r.cy) << ' '
        << format_number(r.cz) << ' ' << format_number(r.length) << ' '
        << format_number(r.width) << ' ' << format_number(r.height) << ' '
        << format_number(r.yaw) << ' ' << format_number(r.score) << '\n';
  }
  write_text(path, out.str());
}

std::vector<DetectionRecord> read_detection_file(
    const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<DetectionRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream ls(line);
    DetectionRecord r;
    if (!(ls >> r.frame >> r.agent_id >> r.pose_x >> r.pose_y >> r.pose_yaw >>
          r.cx >> r.cy >> r.cz >> r.length >> r.width >> r.height >> r.yaw >>
          r.score)) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": malformed detection record");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::map<int, std::vector<fusion::AgentDetections>> group_by_frame(
    std::span<const DetectionRecord> records) {
  std::map<int, std::map<std::string, fusion::AgentDetections>> staging;
  for (const DetectionRecord& r : records) {
    auto& agent = staging[r.frame][r.agent_id];
    if (agent.agent_id.empty()) {
      agent.agent_id = r.agent_id;
      agent.pose = {r.pose_x, r.pose_y, r.pose_yaw};
      agent.calibrator_ref = r.agent_id;
    }
    agent.detections.push_back(
        {geom::Box3D(r.cx, r.cy, r.cz, r.length, r.width, r.height, r.yaw,
                     r.agent_id),
         r.score});
  }
  std::map<int, std::vector<fusion::AgentDetections>> out;
  for (auto& [frame, agents] : staging) {
    for (auto& [id, agent] : agents) {
      out[frame].push_back(std::move(agent));
    }
  }
  return out;
}

std::vector<DetectionRecord> to_records(const sim::GeneratedData& data) {
  std::vector<DetectionRecord> records;
  for (const sim::FrameDetections& frame : data.frames) {
    for (const fusion::AgentDetections& agent : frame.agents) {
      for (const fusion::Detection& d : agent.detections) {
        records.push_back({frame.frame, agent.agent_id, agent.pose.x,
                           agent.pose.y, agent.pose.yaw, d.box.cx, d.box.cy,
                           d.box.cz, d.box.length, d.box.width, d.box.height,
                           d.box.yaw, d.score});
      }
    }
  }
  return records;
}

std::vector<DetectionRecord> ground_truth_records(
    std::span<const geom::Box3D> gts, int frames) {
  std::vector<DetectionRecord> records;
  for (int frame = 0; frame < frames; ++frame) {
    for (const geom::Box3D& gt : gts) {
      records.push_back({frame, "gt", 0.0, 0.0, 0.0, gt.cx, gt.cy, gt.cz,
                         gt.length, gt.width, gt.height, gt.yaw, 1.0});
    }
  }
  return records;
}

void write_sample_file(const std::filesystem::path& path,
                       std::span<const calib::CalibrationSample> samples) {
  std::ostringstream out;
  out << "# raw_score label\n";
  for (const calib::CalibrationSample& s : samples) {
    out << format_number(s.raw_score) << ' ' << s.label << '\n';
  }
  write_text(path, out.str());
}

std::vector<calib::CalibrationSample> read_sample_file(
    const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<calib::CalibrationSample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream ls(line);
    calib::CalibrationSample s;
    if (!(ls >> s.raw_score >> s.label) || s.label < 0 || s.label > 1 ||
        s.raw_score < 0.0 || s.raw_score > 1.0) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": malformed calibration sample");
    }
    samples.push_back(s);
  }
  return samples;
}

void write_calibrator_file(const std::filesystem::path& path,
                           const calib::FitResult& result) {
  json j;
  j["kind"] = calib::to_string(result.calibrator.kind);
  j["a"] = result.calibrator.a;
  j["b"] = result.calibrator.b;
  j["fit"] = {{"iterations", result.iterations},
              {"initial_loss", result.initial_loss},
              {"final_loss", result.final_loss}};
  write_text(path, j.dump(2) + "\n");
}

calib::Calibrator read_calibrator_file(const std::filesystem::path& path) {
  const json j = parse_json(path, "calibrator");
  const std::string kind =
      require_field(j, "kind", "calibrator").get<std::string>();
  const double a = require_field(j, "a", "calibrator").get<double>();
  const double b = require_field(j, "b", "calibrator").get<double>();
  switch (calib::calibrator_kind_from_string(kind)) {
    case calib::CalibratorKind::kDbs:
      return calib::Calibrator::dbs(a, b);
    case calib::CalibratorKind::kPlatt:
      return calib::Calibrator::platt(a, b);
    case calib::CalibratorKind::kTemperature:
      return calib::Calibrator::temperature(a);
    case calib::CalibratorKind::kIdentity:
      return calib::Calibrator::identity();
  }
  return calib::Calibrator::identity();
}

sim::ScenarioConfig read_scenario_config(const std::filesystem::path& path) {
  const json j = parse_json(path, "scenario config");
  sim::ScenarioConfig cfg;
  cfg.seed = require_field(j, "seed", "scenario config").get<std::uint64_t>();
  cfg.frames = require_field(j, "frames", "scenario config").get<int>();
  cfg.calibration_frames = j.value("calibration_frames", 0);
  cfg.tp_iou_threshold = j.value("tp_iou_threshold", 0.7);
  if (j.contains("iou_variant")) {
    cfg.iou_variant =
        geom::iou_variant_from_string(j["iou_variant"].get<std::string>());
  }
  if (j.contains("scene")) {
    const json& s = j["scene"];
    cfg.scene.num_vehicles = s.value("num_vehicles", cfg.scene.num_vehicles);
    cfg.scene.x_min = s.value("x_min", cfg.scene.x_min);
    cfg.scene.x_max = s.value("x_max", cfg.scene.x_max);
    cfg.scene.y_min = s.value("y_min", cfg.scene.y_min);
    cfg.scene.y_max = s.value("y_max", cfg.scene.y_max);
    cfg.scene.min_spacing = s.value("min_spacing", cfg.scene.min_spacing);
  }
  for (const json& a : require_field(j, "agents", "scenario config")) {
    sim::AgentSpec spec;
    spec.agent_id = require_field(a, "id", "agent").get<std::string>();
    spec.is_ego = a.value("ego", false);
    if (a.contains("pose")) {
      const json& p = a["pose"];
      spec.pose = {p.value("x", 0.0), p.value("y", 0.0), p.value("yaw", 0.0)};
    }
    if (a.contains("profile")) {
      const json& p = a["profile"];
      sim::DetectorProfile& prof = spec.profile;
      if (p.contains("recall_curve")) {
        prof.recall_curve.clear();
        for (const json& pt : p["recall_curve"]) {
          prof.recall_curve.push_back(
              {pt.at(0).get<double>(), pt.at(1).get<double>()});
        }
      }
      prof.position_noise_std =
          p.value("position_noise_std", prof.position_noise_std);
      prof.yaw_noise_std = p.value("yaw_noise_std", prof.yaw_noise_std);
      prof.size_noise_std = p.value("size_noise_std", prof.size_noise_std);
      prof.false_positive_rate =
          p.value("false_positive_rate", prof.false_positive_rate);
      prof.max_range = p.value("max_range", prof.max_range);
      if (p.contains("confidence")) {
        const json& c = p["confidence"];
        prof.confidence.base_quality =
            c.value("base_quality", prof.confidence.base_quality);
        prof.confidence.miscal_a = c.value("miscal_a", prof.confidence.miscal_a);
        prof.confidence.miscal_b = c.value("miscal_b", prof.confidence.miscal_b);
        prof.confidence.fp_quality =
            c.value("fp_quality", prof.confidence.fp_quality);
      }
    }
    cfg.agents.push_back(std::move(spec));
  }
  return cfg;
}

void write_method_table(const std::filesystem::path& path,
                        std::span<const eval::MethodResult> results,
                        geom::IouVariant variant, double iou_thresh) {
  std::ostringstream out;
  out << "# iou_variant=" << geom::to_string(variant)
      << " iou_threshold=" << format_number(iou_thresh) << "\n";
  out << "method,ap,tp,fp,fn\n";
  for (const eval::MethodResult& r : results) {
    out << r.name << ',' << format_number(r.ap) << ',' << r.tp << ',' << r.fp
        << ',' << r.fn << '\n';
  }
  write_text(path, out.str());
}

void write_pr_curve(const std::filesystem::path& path,
                    const eval::PrCurve& curve) {
  std::ostringstream out;
  out << "# ap=" << format_number(curve.ap) << "\n";
  out << "recall,precision\n";
  for (const eval::PrPoint& p : curve.points) {
    out << format_number(p.recall) << ',' << format_number(p.precision)
        << '\n';
  }
  write_text(path, out.str());
}

void write_reliability(const std::filesystem::path& path,
                       const calib::ReliabilityDiagram& diagram) {
  std::ostringstream out;
  out << "# ece=" << format_number(diagram.ece) << "\n";
  out << "bin_lo,bin_hi,count,confidence,accuracy\n";
  for (std::size_t i = 0; i + 1 < diagram.bin_edges.size(); ++i) {
    out << format_number(diagram.bin_edges[i]) << ','
        << format_number(diagram.bin_edges[i + 1]) << ','
        << diagram.bin_count[i] << ',' << format_number(diagram.bin_confidence[i])
        << ',' << format_number(diagram.bin_accuracy[i]) << '\n';
  }
  write_text(path, out.str());
}

std::string file_digest(const std::filesystem::path& path) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(rng::fnv1a64(read_text(path))));
  return buf;
}

void write_manifest(const std::filesystem::path& path,
                    const RunManifest& manifest) {
  json j;
  j["tool_version"] = manifest.tool_version;
  j["config_digest"] = manifest.config_digest;
  j["seed"] = manifest.seed;
  j["inputs"] = json::array();
  for (const ManifestEntry& e : manifest.inputs) {
    j["inputs"].push_back({{"path", e.path}, {"digest", e.digest}});
  }
  j["outputs"] = json::array();
  for (const ManifestEntry& e : manifest.outputs) {
    j["outputs"].push_back({{"path", e.path}, {"digest", e.digest}});
  }
  j["timings_ms"] = json::object();
  for (const auto& [stage, ms] : manifest.timings_ms) {
    j["timings_ms"][stage] = ms;
  }
  write_text(path, j.dump(2) + "\n");
}

}  // namespace latefuse::io
