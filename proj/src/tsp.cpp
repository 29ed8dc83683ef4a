#include "acmia/tsp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "acmia/error.hpp"

namespace acmia {
namespace {

void check_inputs(std::span<const double> logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorKind::NonPositiveTemperature, "tau must be a positive finite number");
  }
  if (logits.size() < 2) {
    throw Error(ErrorKind::VocabularyTooSmall,
                "logit vector has " + std::to_string(logits.size()) + " entries, need at least 2");
  }
  if (logits.size() > kMaxVocabulary) {
    throw Error(ErrorKind::VocabularyTooLarge, "logit vector exceeds 2^20 entries");
  }
  for (double z : logits) {
    if (!std::isfinite(z)) throw Error(ErrorKind::NonFiniteLogit, "logits must be finite");
  }
}

}  // namespace

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double max_value = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(max_value)) return max_value;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

TspContext tsp_context(std::span<const double> logits, double tau) {
  check_inputs(logits, tau);

  TspContext ctx;
  ctx.tau = tau;
  ctx.log_tsp.resize(logits.size());

  // Shift by the max logit first so that the scaled values are <= 0 and the
  // context is exactly invariant to the additive offset of the input.
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    ctx.log_tsp[i] = (logits[i] - max_logit) / tau;
  }
  const double norm = log_sum_exp(ctx.log_tsp);
  for (double& v : ctx.log_tsp) v -= norm;

  // Moments are accumulated as offsets from the largest entry so that a flat
  // distribution yields exactly mu = log_tsp and mu_z = z.
  const double top = *std::max_element(ctx.log_tsp.begin(), ctx.log_tsp.end());
  double mu_offset = 0.0;
  double mean_shifted_logit = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double p = std::exp(ctx.log_tsp[i]);
    mu_offset += p * (ctx.log_tsp[i] - top);
    mean_shifted_logit += p * (logits[i] - max_logit);
  }
  const double mu = top + mu_offset;
  double var = 0.0;
  for (double lp : ctx.log_tsp) {
    const double d = lp - mu;
    var += std::exp(lp) * d * d;
  }
  ctx.mu = mu;
  ctx.sigma = std::sqrt(std::max(var, 0.0));
  ctx.mu_z = mean_shifted_logit + max_logit;
  return ctx;
}

double log_tsp_at(const TspContext& ctx, std::size_t token_id) {
  if (token_id >= ctx.log_tsp.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(token_id) +
                                                " outside vocabulary of " +
                                                std::to_string(ctx.log_tsp.size()));
  }
  return ctx.log_tsp[token_id];
}

double log_tsp_single(std::span<const double> logits, std::size_t token_id, double tau) {
  check_inputs(logits, tau);
  if (token_id >= logits.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(token_id) +
                                                " outside vocabulary of " +
                                                std::to_string(logits.size()));
  }
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp((z - max_logit) / tau);
  return (logits[token_id] - max_logit) / tau - std::log(sum);
}

double dlogtsp_dtau(std::span<const double> logits, std::size_t token_id, double tau) {
  const TspContext ctx = tsp_context(logits, tau);
  if (token_id >= logits.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(token_id) +
                                                " outside vocabulary of " +
                                                std::to_string(logits.size()));
  }
  return (ctx.mu_z - logits[token_id]) / (tau * tau);
}

}  // namespace acmia
