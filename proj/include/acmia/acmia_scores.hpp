#pragma once

#include "acmia/trace.hpp"

namespace acmia {

enum class DerivMode { finite_difference, analytic };

struct AcmiaParams {
  double tau = 1.0;
  double delta = 0.01;
  DerivMode deriv_mode = DerivMode::analytic;
  bool restrict_fos = true;
};

// Throws InvalidArgument when tau, delta or tau + delta is not positive.
void validate(const AcmiaParams& params);

// All scores are oriented so that larger means more member-like. The
// token-level scores require FULL fidelity and throw WrongFidelity otherwise.

// sgn(1 - tau) * mean(log TSP(x_t | tau) - log p(x_t)); exactly 0 at tau = 1.
double score_ac(const SampleTrace& trace, const AcmiaParams& params);

// finite_difference: mean(log TSP(tau + delta) - log TSP(tau)).
// analytic:          mean((mu_z - z) / tau^2), the tau-derivative itself.
double score_derivac(const SampleTrace& trace, const AcmiaParams& params);

// mean((log TSP(x_t | tau) - mu) / max(sigma, 1e-10)).
double score_normac(const SampleTrace& trace, const AcmiaParams& params);

// Loss-only variants over all tokens. Throw MissingGridPoint / WrongFidelity.
double score_ac_lossgrid(const SampleTrace& trace, double tau);
double score_derivac_lossgrid(const SampleTrace& trace, double tau, double delta);

}  // namespace acmia
