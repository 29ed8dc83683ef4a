#include "acmia/calibrate.hpp"

#include <cmath>
#include <numbers>

#include "acmia/error.hpp"
#include "acmia/metrics.hpp"
#include "acmia/parallel.hpp"

namespace acmia {
namespace {

std::vector<SampleTrace> labeled_only(std::span<const SampleTrace> samples) {
  std::vector<SampleTrace> out;
  bool member = false;
  bool nonmember = false;
  for (const auto& s : samples) {
    if (s.label == Label::unlabeled) continue;
    member |= s.label == Label::member;
    nonmember |= s.label == Label::nonmember;
    out.push_back(s);
  }
  if (!member || !nonmember) {
    throw Error(ErrorKind::DegenerateSplit, "calibration split needs at least one member and one non-member");
  }
  return out;
}

void check_fidelity(std::span<const SampleTrace> samples, AttackKind kind) {
  for (const auto& s : samples) {
    if (!accepts(kind, s.fidelity)) {
      throw Error(ErrorKind::WrongFidelity, "sample '" + s.id + "' has fidelity " +
                                                std::string(to_string(s.fidelity)) + ", attack " +
                                                std::string(attack_name(kind)) + " cannot use it");
    }
  }
}

double auroc_at(std::span<const SampleTrace> samples, const AttackConfig& config, const AttackInputs& inputs) {
  return auroc(score_traces(samples, config, inputs, 1));
}

}  // namespace

TuneGrid TuneGrid::from_log2(double log2_min, double log2_max, double log2_step) {
  return TuneGrid{log2_min * std::numbers::ln2, log2_max * std::numbers::ln2, log2_step * std::numbers::ln2};
}

void TuneGrid::validate() const {
  if (!std::isfinite(alpha_min) || !std::isfinite(alpha_max) || !std::isfinite(alpha_step)) {
    throw Error(ErrorKind::InvalidConfig, "grid bounds must be finite");
  }
  if (alpha_min > alpha_max) throw Error(ErrorKind::InvalidConfig, "alpha_min must not exceed alpha_max");
  if (!(alpha_step > 0.0)) throw Error(ErrorKind::InvalidConfig, "alpha_step must be positive");
  if ((alpha_max - alpha_min) / alpha_step > 1e4) {
    throw Error(ErrorKind::InvalidConfig, "grid has more than 10^4 steps");
  }
}

std::vector<double> TuneGrid::alphas() const {
  validate();
  // Index-based points so that halving the step reproduces every coarse point
  // bit for bit.
  const auto steps = static_cast<std::size_t>(std::floor((alpha_max - alpha_min) / alpha_step + 1e-9));
  std::vector<double> out;
  out.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) out.push_back(alpha_min + static_cast<double>(i) * alpha_step);
  return out;
}

TuneResult tune_temperature(std::span<const SampleTrace> calibration, const AttackConfig& attack,
                            const TuneGrid& grid, const AttackInputs& inputs, int threads) {
  if (!uses_temperature(attack.kind)) {
    throw Error(ErrorKind::InvalidConfig,
                "attack " + std::string(attack_name(attack.kind)) + " has no temperature to tune");
  }
  const auto samples = labeled_only(calibration);
  check_fidelity(samples, attack.kind);
  const auto alphas = grid.alphas();

  TuneResult result;
  result.curve.resize(alphas.size());
  parallel_for(alphas.size(), threads, [&](std::size_t i) {
    AttackConfig config = attack;
    config.acmia.tau = std::exp(alphas[i]);
    result.curve[i] = CurvePoint{config.acmia.tau, alphas[i], auroc_at(samples, config, inputs)};
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    const auto& c = result.curve[i];
    const auto& b = result.curve[best];
    if (c.objective > b.objective) {
      best = i;
    } else if (c.objective == b.objective) {
      const double ca = std::abs(c.alpha);
      const double ba = std::abs(b.alpha);
      if (ca < ba || (ca == ba && c.alpha < b.alpha)) best = i;
    }
  }
  result.alpha_star = result.curve[best].alpha;
  result.tau_star = result.curve[best].tau;
  result.log2_tau_star = result.alpha_star / std::numbers::ln2;
  result.objective_value = result.curve[best].objective;
  return result;
}

KTuneResult tune_k_percent(std::span<const SampleTrace> calibration, const AttackConfig& attack,
                           std::span<const double> k_values, const AttackInputs& inputs, int threads) {
  if (!uses_k_percent(attack.kind)) {
    throw Error(ErrorKind::InvalidConfig, "attack " + std::string(attack_name(attack.kind)) + " has no k");
  }
  if (k_values.empty()) throw Error(ErrorKind::InvalidConfig, "k grid is empty");
  const auto samples = labeled_only(calibration);
  check_fidelity(samples, attack.kind);

  KTuneResult result;
  result.curve.resize(k_values.size());
  parallel_for(k_values.size(), threads, [&](std::size_t i) {
    AttackConfig config = attack;
    config.baseline.k_percent = k_values[i];
    result.curve[i] = {k_values[i], auroc_at(samples, config, inputs)};
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.curve.size(); ++i) {
    const auto& c = result.curve[i];
    const auto& b = result.curve[best];
    if (c.second > b.second || (c.second == b.second && c.first < b.first)) best = i;
  }
  result.k_star = result.curve[best].first;
  result.objective_value = result.curve[best].second;
  return result;
}

}  // namespace acmia
