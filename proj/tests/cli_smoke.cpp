// Subprocess-level checks of the CLI contract: exit codes (0 ok, 2 config,
// 3 data), diagnostics naming the offending field or agent, and the
// reliability-diagram export. The CLI binary path comes in as argv[1].
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;
fs::path g_root;
std::string g_cli;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path log = g_root / "last_log.txt";
  const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

void check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "ok  " : "FAIL", what.c_str());
  if (!ok) {
    ++g_failures;
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

const char* kScenario = R"({
  "seed": 5, "frames": 30, "calibration_frames": 40,
  "scene": {"num_vehicles": 8, "x_min": -80, "x_max": 80,
            "y_min": -30, "y_max": 30, "min_spacing": 12},
  "agents": [
    {"id": "ego", "ego": true, "pose": {"x": 0, "y": 0, "yaw": 0},
     "profile": {"recall_curve": [[0, 0.9]], "max_range": 120,
                 "position_noise_std": 0.25, "false_positive_rate": 1.0,
                 "confidence": {"base_quality": 0.8, "miscal_a": 2.0,
                                "miscal_b": 1.0, "fp_quality": 0.2}}},
    {"id": "v1", "pose": {"x": 30, "y": 5, "yaw": 0.4},
     "profile": {"recall_curve": [[0, 0.9]], "max_range": 120,
                 "position_noise_std": 0.25, "false_positive_rate": 1.0,
                 "confidence": {"base_quality": 0.8, "miscal_a": 1.0,
                                "miscal_b": 1.0, "fp_quality": 0.2}}}
  ]
})";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::printf("usage: cli_smoke <latefuse-binary>\n");
    return 1;
  }
  g_cli = argv[1];
  g_root = fs::temp_directory_path() / "latefuse_cli_smoke";
  std::error_code ec;
  fs::remove_all(g_root, ec);
  fs::create_directories(g_root);

  // Version and help succeed.
  check(run("--version").exit_code == 0, "--version exits 0");
  check(run("--help").exit_code == 0, "--help exits 0");

  // Config errors exit with 2 and name the problem.
  write_file(g_root / "no_seed.json", R"({"frames": 10, "agents": []})");
  {
    const RunResult r = run("simulate --config " +
                            (g_root / "no_seed.json").string() + " --out " +
                            (g_root / "out_bad").string());
    check(r.exit_code == 2, "simulate without seed exits 2");
    check(r.output.find("'seed'") != std::string::npos,
          "simulate error names the missing field");
  }
  check(run("simulate --config /nonexistent.json --out " +
            (g_root / "x").string())
                .exit_code == 2,
        "unreadable config exits 2");

  // A valid simulate run.
  write_file(g_root / "scenario.json", kScenario);
  const fs::path out = g_root / "out";
  {
    const RunResult r = run("simulate --config " +
                            (g_root / "scenario.json").string() + " --out " +
                            out.string());
    check(r.exit_code == 0, "simulate exits 0");
    check(fs::exists(out / "gt.txt") && fs::exists(out / "dets_ego.txt") &&
              fs::exists(out / "calib_v1.txt") &&
              fs::exists(out / "split.json") &&
              fs::exists(out / "manifest.json"),
          "simulate writes ground truth, detections, splits and manifest");
  }

  // Data errors exit with 3.
  write_file(g_root / "empty.txt", "");
  check(run("calibrate --samples " + (g_root / "empty.txt").string() +
            " --calibrator dbs --out " + (g_root / "c.json").string())
                .exit_code == 3,
        "calibrate on an empty sample file exits 3");
  write_file(g_root / "oneclass.txt", "0.5 1\n0.7 1\n");
  check(run("calibrate --samples " + (g_root / "oneclass.txt").string() +
            " --calibrator dbs --out " + (g_root / "c.json").string())
                .exit_code == 3,
        "calibrate on single-class data exits 3");

  // Fit the real calibrators.
  fs::create_directories(g_root / "cals");
  for (const char* agent : {"ego", "v1"}) {
    const RunResult r =
        run("calibrate --samples " +
            (out / (std::string("calib_") + agent + ".txt")).string() +
            " --calibrator dbs --out " +
            (g_root / "cals" / (std::string(agent) + ".json")).string());
    check(r.exit_code == 0, std::string("calibrate ") + agent + " exits 0");
    check(r.output.find("ece") != std::string::npos,
          "calibrate prints BCE and ECE");
  }

  // Strict fusion with a missing calibrator names the agent and exits 3.
  fs::create_directories(g_root / "cals_partial");
  fs::copy_file(g_root / "cals" / "ego.json",
                g_root / "cals_partial" / "ego.json");
  {
    const RunResult r = run("fuse --dets " + out.string() +
                            " --calibrators " +
                            (g_root / "cals_partial").string() + " --out " +
                            (g_root / "fused_bad.txt").string());
    check(r.exit_code == 3, "fuse with a missing calibrator exits 3");
    check(r.output.find("v1") != std::string::npos,
          "fuse error names the uncovered agent");
  }
  check(run("fuse --dets " + out.string() + " --calibrators " +
            (g_root / "cals_partial").string() + " --no-strict --out " +
            (g_root / "fused_lax.txt").string())
                .exit_code == 0,
        "fuse --no-strict falls back to the identity map");

  // Full fuse and evaluate.
  check(run("fuse --dets " + out.string() + " --calibrators " +
            (g_root / "cals").string() + " --out " +
            (g_root / "fused.txt").string())
                .exit_code == 0,
        "fuse exits 0");
  {
    const RunResult r =
        run("evaluate --fused " + (g_root / "fused.txt").string() + " --gt " +
            (out / "gt.txt").string() + " --out " +
            (g_root / "report.csv").string() + " --pr-out " +
            (g_root / "pr.csv").string() + " --dets " + out.string() +
            " --calibrators " + (g_root / "cals").string() +
            " --reliability-dir " + (g_root / "reliability").string());
    check(r.exit_code == 0, "evaluate exits 0");
    check(r.output.find("ap=") != std::string::npos, "evaluate prints AP");
    check(fs::exists(g_root / "reliability" / "ego_raw.csv") &&
              fs::exists(g_root / "reliability" / "ego_calibrated.csv"),
          "evaluate writes per-agent reliability diagrams");
  }

  // Evaluating a perfect submission: the ground truth against itself.
  {
    const RunResult r = run("evaluate --fused " + (out / "gt.txt").string() +
                            " --gt " + (out / "gt.txt").string() + " --out " +
                            (g_root / "perfect.csv").string());
    check(r.exit_code == 0, "self-evaluation exits 0");
    std::ifstream in(g_root / "perfect.csv");
    std::ostringstream ss;
    ss << in.rdbuf();
    check(ss.str().find(",1,") != std::string::npos ||
              ss.str().find(",1\n") != std::string::npos ||
              ss.str().find("fused,1,") != std::string::npos,
          "ground truth scores AP 1.0 against itself");
  }

  // Ground truth without any boxes is a data error.
  write_file(g_root / "gt_empty.txt", "# empty\n");
  check(run("evaluate --fused " + (g_root / "fused.txt").string() + " --gt " +
            (g_root / "gt_empty.txt").string() + " --out " +
            (g_root / "r.csv").string())
                .exit_code == 3,
        "evaluate without ground truth exits 3");

  // The report command writes the five-method comparison table.
  {
    const RunResult r = run("report --config " +
                            (g_root / "scenario.json").string() + " --out " +
                            (g_root / "rep").string());
    check(r.exit_code == 0, "report exits 0");
    std::ifstream in(g_root / "rep" / "ablation.csv");
    std::string line;
    int method_rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#' && line.find("method,") != 0) {
        ++method_rows;
      }
    }
    check(method_rows == 5, "ablation table has 5 method rows");
    check(fs::exists(g_root / "rep" / "pr_nms_uncalibrated.csv"),
          "report writes per-method PR curves");
  }

  if (g_failures == 0) {
    fs::remove_all(g_root, ec);
  }
  std::printf("%d failures\n", g_failures);
  return g_failures;
}
