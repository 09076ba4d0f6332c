#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace latefuse::calib {

/// A raw detector confidence together with its correctness label.
struct CalibrationSample {
  double raw_score = 0.0;  // in [0, 1]
  int label = 0;           // 0 or 1
};

enum class CalibratorKind { kDbs, kPlatt, kTemperature, kIdentity };

const char* to_string(CalibratorKind kind);
CalibratorKind calibrator_kind_from_string(const std::string& name);

/// Parametric scaling map from raw to calibrated confidence.
///
/// kDbs:         c(s) = 1 - (1 - s^a)^b      with a > 0, b > 0.
///               Monotone, smooth, and maps [0,1] onto [0,1] with fixed
///               endpoints; contains the identity at a = b = 1.
/// kPlatt:       c(s) = 1 / (1 + exp(-(a*s + b)))  with a >= 0.
/// kTemperature: Platt with b fixed to 0.
/// kIdentity:    c(s) = s.
struct Calibrator {
  CalibratorKind kind = CalibratorKind::kIdentity;
  double a = 1.0;
  double b = 0.0;

  double apply(double raw_score) const;

  static Calibrator dbs(double a, double b);
  static Calibrator platt(double a, double b);
  static Calibrator temperature(double a);
  static Calibrator identity();
};

struct FitOptions {
  double step_size = 0.1;
  int max_iterations = 2000;
  // Stop when the best loss has not improved by at least min_improvement
  // within the last `patience` iterations.
  double min_improvement = 1e-9;
  int patience = 20;
  // Raw scores and calibrated scores are clamped into
  // [clamp_eps, 1 - clamp_eps] so endpoint samples keep finite gradients.
  double clamp_eps = 1e-7;
};

struct FitResult {
  Calibrator calibrator;
  int iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Mean binary cross entropy of the calibrated scores against the labels.
/// Calibrated scores are clamped to [1e-7, 1 - 1e-7] before the logs.
/// Throws EmptyDataset on empty input.
double bce_loss(const Calibrator& cal,
                std::span<const CalibrationSample> data);

/// Analytic gradient of bce_loss in the internal fit parameterization:
/// kDbs -> (d/d log a, d/d log b), kPlatt -> (d/d log a, d/d b),
/// kTemperature -> (d/d log a), kIdentity -> ().
/// Positivity constraints are enforced by optimizing log-parameters.
std::vector<double> bce_gradient(const Calibrator& cal,
                                 std::span<const CalibrationSample> data);

/// Full-batch gradient descent on bce_loss. Deterministic for a given
/// (kind, data, opts). Requires at least one positive and one negative
/// label (DegenerateDataset otherwise); throws NonFinite if the loss or
/// gradient leaves the representable range.
FitResult fit(CalibratorKind kind, std::span<const CalibrationSample> data,
              const FitOptions& opts = {});

struct ReliabilityDiagram {
  std::vector<double> bin_edges;       // num_bins + 1 values, 0 .. 1
  std::vector<double> bin_confidence;  // mean calibrated score per bin
  std::vector<double> bin_accuracy;    // empirical positive rate per bin
  std::vector<std::size_t> bin_count;
  double ece = 0.0;  // count-weighted mean |confidence - accuracy|
};

/// Equal-width reliability diagram over calibrated scores. Empty bins are
/// reported with count 0 and excluded from the ECE weighting.
ReliabilityDiagram reliability(std::span<const CalibrationSample> data,
                               const Calibrator& cal, int num_bins);

/// Convenience: 10-bin expected calibration error.
double ece(std::span<const CalibrationSample> data, const Calibrator& cal);

}  // namespace latefuse::calib
