#include "acmia/acmia_scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acmia/error.hpp"
#include "acmia/tsp.hpp"

namespace acmia {
namespace {

void require_full(const SampleTrace& trace) {
  if (trace.fidelity != Fidelity::full) {
    throw Error(ErrorKind::WrongFidelity, "trace '" + trace.id + "' is " +
                                              std::string(to_string(trace.fidelity)) +
                                              ", attack needs full");
  }
}

void require_lossgrid(const SampleTrace& trace) {
  if (trace.fidelity != Fidelity::lossgrid || !trace.loss_grid) {
    throw Error(ErrorKind::WrongFidelity, "trace '" + trace.id + "' is " +
                                              std::string(to_string(trace.fidelity)) +
                                              ", attack needs lossgrid");
  }
}

std::vector<std::size_t> scored_positions(const SampleTrace& trace, bool restrict_fos) {
  if (restrict_fos) return fos_positions(trace);
  std::vector<std::size_t> all(trace.steps.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

template <typename PerStep>
double mean_over(const SampleTrace& trace, bool restrict_fos, PerStep&& per_step) {
  const auto positions = scored_positions(trace, restrict_fos);
  double sum = 0.0;
  for (std::size_t i : positions) {
    const TokenStep& step = trace.steps[i];
    sum += per_step(std::span<const double>(*step.logits), step.token_id);
  }
  return sum / static_cast<double>(positions.size());
}

double sign_one_minus(double tau) {
  if (tau < 1.0) return 1.0;
  if (tau > 1.0) return -1.0;
  return 0.0;
}

}  // namespace

void validate(const AcmiaParams& params) {
  if (!(params.tau > 0.0) || !std::isfinite(params.tau)) {
    throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  }
  if (!(params.delta > 0.0) || !std::isfinite(params.delta)) {
    throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  }
  if (!(params.tau + params.delta > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tau + delta must be positive");
  }
}

double score_ac(const SampleTrace& trace, const AcmiaParams& params) {
  require_full(trace);
  validate(params);
  const double sign = sign_one_minus(params.tau);
  if (sign == 0.0) return 0.0;
  const double mean_gap = mean_over(trace, params.restrict_fos, [&](auto logits, std::size_t id) {
    return log_tsp_single(logits, id, params.tau) - log_tsp_single(logits, id, 1.0);
  });
  return sign * mean_gap;
}

double score_derivac(const SampleTrace& trace, const AcmiaParams& params) {
  require_full(trace);
  validate(params);
  if (params.deriv_mode == DerivMode::analytic) {
    return mean_over(trace, params.restrict_fos, [&](auto logits, std::size_t id) {
      return dlogtsp_dtau(logits, id, params.tau);
    });
  }
  return mean_over(trace, params.restrict_fos, [&](auto logits, std::size_t id) {
    return log_tsp_single(logits, id, params.tau + params.delta) - log_tsp_single(logits, id, params.tau);
  });
}

double score_normac(const SampleTrace& trace, const AcmiaParams& params) {
  require_full(trace);
  validate(params);
  return mean_over(trace, params.restrict_fos, [&](auto logits, std::size_t id) {
    const TspContext ctx = tsp_context(logits, params.tau);
    return (log_tsp_at(ctx, id) - ctx.mu) / std::max(ctx.sigma, kSigmaFloor);
  });
}

double score_ac_lossgrid(const SampleTrace& trace, double tau) {
  require_lossgrid(trace);
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  const double base = trace.loss_grid->at(1.0);
  const double scaled = trace.loss_grid->at(tau);
  return sign_one_minus(tau) * (base - scaled);
}

double score_derivac_lossgrid(const SampleTrace& trace, double tau, double delta) {
  require_lossgrid(trace);
  if (!(tau > 0.0) || !(delta > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tau and delta must be positive");
  }
  return trace.loss_grid->at(tau) - trace.loss_grid->at(tau + delta);
}

}  // namespace acmia
