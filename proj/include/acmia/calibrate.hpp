#pragma once

#include <span>
#include <vector>

#include "acmia/attacks.hpp"
#include "acmia/trace.hpp"

namespace acmia {

// tau = exp(alpha), alpha on [alpha_min, alpha_max] in steps of alpha_step.
// alpha_min == alpha_max is a single-point grid.
struct TuneGrid {
  double alpha_min = -3.0 * 0.69314718055994530942;
  double alpha_max = 3.0 * 0.69314718055994530942;
  double alpha_step = 0.1 * 0.69314718055994530942;

  // Same grid expressed in log2(tau), the unit reports use.
  static TuneGrid from_log2(double log2_min, double log2_max, double log2_step);

  // Throws InvalidConfig.
  void validate() const;
  std::vector<double> alphas() const;
};

struct CurvePoint {
  double tau = 1.0;
  double alpha = 0.0;
  double objective = 0.5;
};

struct TuneResult {
  double tau_star = 1.0;
  double alpha_star = 0.0;
  double log2_tau_star = 0.0;
  double objective_value = 0.5;
  std::vector<CurvePoint> curve;
};

// Scores the calibration samples at every grid temperature, computes AUROC
// against their labels and returns the best point. Ties go to the alpha
// closest to 0, then to the smaller alpha. Unlabeled samples are ignored.
// Throws DegenerateSplit, WrongFidelity, InvalidConfig.
TuneResult tune_temperature(std::span<const SampleTrace> calibration, const AttackConfig& attack,
                            const TuneGrid& grid, const AttackInputs& inputs = {}, int threads = 1);

struct KTuneResult {
  double k_star = 20.0;
  double objective_value = 0.5;
  std::vector<std::pair<double, double>> curve;  // (k_percent, auroc)
};

// Same search over Min-K's k. Ties go to the smaller k.
KTuneResult tune_k_percent(std::span<const SampleTrace> calibration, const AttackConfig& attack,
                           std::span<const double> k_values, const AttackInputs& inputs = {}, int threads = 1);

}  // namespace acmia
