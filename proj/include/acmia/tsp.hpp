#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace acmia {

// Largest vocabulary accepted anywhere in the pipeline.
inline constexpr std::size_t kMaxVocabulary = std::size_t{1} << 20;

// Floor applied to a standard deviation before dividing by it.
inline constexpr double kSigmaFloor = 1e-10;

// log(sum(exp(v))) with max-subtraction. Empty input yields -inf.
double log_sum_exp(std::span<const double> values);

// Temperature-scaled next-token distribution for one step.
//
// log_tsp[i] = z[i]/tau - logsumexp(z/tau). The moments are taken under the
// scaled distribution itself:
//   mu    = E[log_tsp]
//   sigma = sqrt(E[(log_tsp - mu)^2])
//   mu_z  = E[z]                      (expectation of the input logits)
// All fields are unchanged when a constant is added to every logit.
struct TspContext {
  double tau = 1.0;
  std::vector<double> log_tsp;
  double mu = 0.0;
  double sigma = 0.0;
  double mu_z = 0.0;

  std::size_t vocab_size() const noexcept { return log_tsp.size(); }
};

// Throws NonPositiveTemperature, NonFiniteLogit, VocabularyTooSmall.
TspContext tsp_context(std::span<const double> logits, double tau);

// Throws IndexOutOfRange.
double log_tsp_at(const TspContext& ctx, std::size_t token_id);

// d/dtau log TSP(token | tau) = (mu_z - z) / tau^2.
double dlogtsp_dtau(std::span<const double> logits, std::size_t token_id, double tau);

// Single-token log TSP without building a full context; same result as
// log_tsp_at(tsp_context(logits, tau), token_id).
double log_tsp_single(std::span<const double> logits, std::size_t token_id, double tau);

}  // namespace acmia
