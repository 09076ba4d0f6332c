#include "latefuse/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latefuse/errors.hpp"

namespace latefuse::calib {

namespace {

constexpr double kLogClamp = 1e-7;

double clamp01(double v, double eps) {
  return std::clamp(v, eps, 1.0 - eps);
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_valid(const Calibrator& cal) {
  if (!std::isfinite(cal.a) || !std::isfinite(cal.b)) {
    throw std::invalid_argument("Calibrator: parameters must be finite");
  }
  switch (cal.kind) {
    case CalibratorKind::kDbs:
      if (cal.a <= 0.0 || cal.b <= 0.0) {
        throw std::invalid_argument("Calibrator: DBS requires a > 0, b > 0");
      }
      break;
    case CalibratorKind::kPlatt:
      if (cal.a < 0.0) {
        throw std::invalid_argument("Calibrator: Platt requires a >= 0");
      }
      break;
    case CalibratorKind::kTemperature:
      if (cal.b != 0.0) {
        throw std::invalid_argument("Calibrator: Temperature fixes b = 0");
      }
      break;
    case CalibratorKind::kIdentity:
      break;
  }
}

// Loss plus gradient in the internal parameterization, shared by fit() and
// bce_gradient(). Inputs are preprocessed once per fit: for DBS the loop
// consumes log(raw) directly, and for a negative label the log term
// -log(1-c) = -b*log(1-s^a) needs no extra transcendental call.
struct LossGrad {
  double loss = 0.0;
  double g0 = 0.0;
  double g1 = 0.0;
};

struct PreparedData {
  std::vector<double> x;  // log(raw) for DBS, clamped raw for logistic
  std::vector<int> y;
};

PreparedData prepare(std::span<const CalibrationSample> data, double eps,
                     bool take_log) {
  PreparedData p;
  p.x.reserve(data.size());
  p.y.reserve(data.size());
  for (const CalibrationSample& s : data) {
    const double c = clamp01(s.raw_score, eps);
    p.x.push_back(take_log ? std::log(c) : c);
    p.y.push_back(s.label);
  }
  return p;
}

LossGrad dbs_loss_grad(double a, double b, const PreparedData& data) {
  LossGrad r;
  const std::size_t n = data.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ls = data.x[i];      // log raw, <= 0
    const double t = a * ls;
    const double v = -std::expm1(t);  // 1 - s^a in (0, 1)
    const double u = 1.0 - v;         // s^a
    const double lv = std::log(v);
    const double w = std::exp(b * lv);  // (1 - s^a)^b
    const double c = 1.0 - w;
    const bool interior = c >= kLogClamp && c <= 1.0 - kLogClamp;
    const double cc = clamp01(c, kLogClamp);
    double dldc;
    if (data.y[i]) {
      r.loss += interior ? -std::log1p(-w) : -std::log(cc);
      dldc = -1.0 / cc;
    } else {
      r.loss += interior ? -b * lv : -std::log1p(-cc);
      dldc = 1.0 / (1.0 - cc);
    }
    const double dcda = b * (w / v) * u * ls;  // b (1-u)^{b-1} u ln s
    const double dcdb = -w * lv;
    r.g0 += dldc * dcda * a;  // d/d log a
    r.g1 += dldc * dcdb * b;  // d/d log b
  }
  r.loss /= static_cast<double>(n);
  r.g0 /= static_cast<double>(n);
  r.g1 /= static_cast<double>(n);
  return r;
}

LossGrad logistic_loss_grad(double a, double b, const PreparedData& data,
                            bool fit_bias) {
  LossGrad r;
  const std::size_t n = data.x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = data.x[i];
    const double c = sigmoid(a * x + b);
    const double cc = clamp01(c, kLogClamp);
    r.loss += data.y[i] ? -std::log(cc) : -std::log1p(-cc);
    const double dldc = data.y[i] ? -1.0 / cc : 1.0 / (1.0 - cc);
    const double dcdz = c * (1.0 - c);
    r.g0 += dldc * dcdz * x * a;  // d/d log a
    if (fit_bias) {
      r.g1 += dldc * dcdz;  // d/d b
    }
  }
  r.loss /= static_cast<double>(n);
  r.g0 /= static_cast<double>(n);
  r.g1 /= static_cast<double>(n);
  return r;
}

void check_labels(std::span<const CalibrationSample> data) {
  if (data.empty()) {
    throw EmptyDataset("fit: calibration dataset is empty");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (const CalibrationSample& s : data) {
    if (s.label != 0 && s.label != 1) {
      throw std::invalid_argument("CalibrationSample: label must be 0 or 1");
    }
    (s.label ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw DegenerateDataset(
        "fit: need at least one positive and one negative label");
  }
}

}  // namespace

const char* to_string(CalibratorKind kind) {
  switch (kind) {
    case CalibratorKind::kDbs:
      return "dbs";
    case CalibratorKind::kPlatt:
      return "platt";
    case CalibratorKind::kTemperature:
      return "temperature";
    case CalibratorKind::kIdentity:
      return "identity";
  }
  return "identity";
}

CalibratorKind calibrator_kind_from_string(const std::string& name) {
  if (name == "dbs") return CalibratorKind::kDbs;
  if (name == "platt") return CalibratorKind::kPlatt;
  if (name == "temperature") return CalibratorKind::kTemperature;
  if (name == "identity") return CalibratorKind::kIdentity;
  throw ConfigError("unknown calibrator kind '" + name + "'");
}

double Calibrator::apply(double raw_score) const {
  switch (kind) {
    case CalibratorKind::kDbs:
      // Exact at both endpoints: 0 -> 0 and 1 -> 1.
      return 1.0 - std::pow(1.0 - std::pow(raw_score, a), b);
    case CalibratorKind::kPlatt:
      return sigmoid(a * raw_score + b);
    case CalibratorKind::kTemperature:
      return sigmoid(a * raw_score);
    case CalibratorKind::kIdentity:
      return raw_score;
  }
  return raw_score;
}

Calibrator Calibrator::dbs(double a, double b) {
  Calibrator cal{CalibratorKind::kDbs, a, b};
  require_valid(cal);
  return cal;
}

Calibrator Calibrator::platt(double a, double b) {
  Calibrator cal{CalibratorKind::kPlatt, a, b};
  require_valid(cal);
  return cal;
}

Calibrator Calibrator::temperature(double a) {
  Calibrator cal{CalibratorKind::kTemperature, a, 0.0};
  require_valid(cal);
  return cal;
}

Calibrator Calibrator::identity() { return {CalibratorKind::kIdentity, 1.0, 0.0}; }

double bce_loss(const Calibrator& cal,
                std::span<const CalibrationSample> data) {
  if (data.empty()) {
    throw EmptyDataset("bce_loss: dataset is empty");
  }
  require_valid(cal);
  double loss = 0.0;
  for (const CalibrationSample& s : data) {
    const double c = clamp01(cal.apply(s.raw_score), kLogClamp);
    loss += s.label ? -std::log(c) : -std::log1p(-c);
  }
  return loss / static_cast<double>(data.size());
}

std::vector<double> bce_gradient(const Calibrator& cal,
                                 std::span<const CalibrationSample> data) {
  if (data.empty()) {
    throw EmptyDataset("bce_gradient: dataset is empty");
  }
  require_valid(cal);
  switch (cal.kind) {
    case CalibratorKind::kDbs: {
      const LossGrad r =
          dbs_loss_grad(cal.a, cal.b, prepare(data, kLogClamp, true));
      return {r.g0, r.g1};
    }
    case CalibratorKind::kPlatt: {
      const LossGrad r =
          logistic_loss_grad(cal.a, cal.b, prepare(data, kLogClamp, false), true);
      return {r.g0, r.g1};
    }
    case CalibratorKind::kTemperature: {
      const LossGrad r = logistic_loss_grad(
          cal.a, 0.0, prepare(data, kLogClamp, false), false);
      return {r.g0};
    }
    case CalibratorKind::kIdentity:
      return {};
  }
  return {};
}

FitResult fit(CalibratorKind kind, std::span<const CalibrationSample> data,
              const FitOptions& opts) {
  check_labels(data);

  if (kind == CalibratorKind::kIdentity) {
    FitResult r;
    r.calibrator = Calibrator::identity();
    r.initial_loss = r.final_loss = bce_loss(r.calibrator, data);
    return r;
  }

  // theta[0] is log a for every kind; theta[1] is log b (DBS) or b (Platt).
  const bool is_dbs = kind == CalibratorKind::kDbs;
  const bool is_platt = kind == CalibratorKind::kPlatt;
  const int dim = kind == CalibratorKind::kTemperature ? 1 : 2;
  double theta[2] = {0.0, 0.0};

  const PreparedData prepared = prepare(data, opts.clamp_eps, is_dbs);
  auto evaluate = [&](const double* th) -> LossGrad {
    if (is_dbs) {
      return dbs_loss_grad(std::exp(th[0]), std::exp(th[1]), prepared);
    }
    return logistic_loss_grad(std::exp(th[0]), is_platt ? th[1] : 0.0,
                              prepared, is_platt);
  };

  LossGrad cur = evaluate(theta);
  const double initial_loss = cur.loss;
  double best_loss = cur.loss;
  double best_theta[2] = {theta[0], theta[1]};
  int last_improvement = 0;
  int iterations = 0;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    theta[0] -= opts.step_size * cur.g0;
    if (dim > 1) {
      theta[1] -= opts.step_size * cur.g1;
    }
    cur = evaluate(theta);
    iterations = iter;
    if (!std::isfinite(cur.loss) || !std::isfinite(cur.g0) ||
        !std::isfinite(cur.g1)) {
      throw NonFinite("fit: loss or gradient became non-finite (step size "
                      "too large for this dataset)");
    }
    if (cur.loss < best_loss - opts.min_improvement) {
      last_improvement = iter;
    }
    if (cur.loss < best_loss) {
      best_loss = cur.loss;
      best_theta[0] = theta[0];
      best_theta[1] = theta[1];
    }
    if (iter - last_improvement >= opts.patience) {
      break;
    }
  }

  FitResult r;
  switch (kind) {
    case CalibratorKind::kDbs:
      r.calibrator =
          Calibrator::dbs(std::exp(best_theta[0]), std::exp(best_theta[1]));
      break;
    case CalibratorKind::kPlatt:
      r.calibrator = Calibrator::platt(std::exp(best_theta[0]), best_theta[1]);
      break;
    case CalibratorKind::kTemperature:
      r.calibrator = Calibrator::temperature(std::exp(best_theta[0]));
      break;
    case CalibratorKind::kIdentity:
      break;
  }
  r.iterations = iterations;
  r.initial_loss = initial_loss;
  r.final_loss = best_loss;
  return r;
}

ReliabilityDiagram reliability(std::span<const CalibrationSample> data,
                               const Calibrator& cal, int num_bins) {
  if (data.empty()) {
    throw EmptyDataset("reliability: dataset is empty");
  }
  if (num_bins < 1) {
    throw std::invalid_argument("reliability: num_bins must be >= 1");
  }
  require_valid(cal);

  ReliabilityDiagram d;
  d.bin_edges.resize(num_bins + 1);
  for (int i = 0; i <= num_bins; ++i) {
    d.bin_edges[i] = static_cast<double>(i) / num_bins;
  }
  d.bin_confidence.assign(num_bins, 0.0);
  d.bin_accuracy.assign(num_bins, 0.0);
  d.bin_count.assign(num_bins, 0);

  std::vector<double> sum_conf(num_bins, 0.0);
  std::vector<double> sum_label(num_bins, 0.0);
  for (const CalibrationSample& s : data) {
    const double c = cal.apply(s.raw_score);
    const int bin = std::min(num_bins - 1,
                             static_cast<int>(c * static_cast<double>(num_bins)));
    sum_conf[bin] += c;
    sum_label[bin] += s.label;
    ++d.bin_count[bin];
  }

  double weighted_gap = 0.0;
  std::size_t total = 0;
  for (int i = 0; i < num_bins; ++i) {
    if (d.bin_count[i] == 0) {
      continue;  // empty bins stay 0 and carry no ECE weight
    }
    const double n = static_cast<double>(d.bin_count[i]);
    d.bin_confidence[i] = sum_conf[i] / n;
    d.bin_accuracy[i] = sum_label[i] / n;
    weighted_gap += n * std::abs(d.bin_confidence[i] - d.bin_accuracy[i]);
    total += d.bin_count[i];
  }
  d.ece = weighted_gap / static_cast<double>(total);
  return d;
}

double ece(std::span<const CalibrationSample> data, const Calibrator& cal) {
  return reliability(data, cal, 10).ece;
}

}  // namespace latefuse::calib
