#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "acmia/acmia_scores.hpp"
#include "acmia/baselines.hpp"
#include "acmia/metrics.hpp"
#include "acmia/trace.hpp"

namespace acmia {

enum class AttackKind {
  loss,
  min_k,
  min_k_pp,
  zlib,
  lowercase,
  ref,
  dc_pdd,
  ac,
  deriv_ac,
  norm_ac,
  ac_lossgrid,
  deriv_ac_lossgrid,
};

// CLI names: loss, mink, minkpp, zlib, lowercase, ref, dcpdd, ac, derivac,
// normac, ac-lossgrid, derivac-lossgrid.
std::string_view attack_name(AttackKind kind) noexcept;
AttackKind parse_attack(std::string_view name);
std::vector<AttackKind> all_attacks();

// Attacks whose score depends on the temperature.
bool uses_temperature(AttackKind kind) noexcept;
// Attacks with a Min-K style k parameter.
bool uses_k_percent(AttackKind kind) noexcept;

// Fidelity matrix:
//   ac, derivac, normac, minkpp          -> full
//   mink, dcpdd                          -> full or chosen
//   loss, zlib, lowercase, ref           -> full, chosen, or lossgrid (tau = 1 entry)
//   ac-lossgrid, derivac-lossgrid        -> lossgrid
bool accepts(AttackKind kind, Fidelity fidelity) noexcept;

struct AttackConfig {
  AttackKind kind = AttackKind::loss;
  AcmiaParams acmia;
  BaselineParams baseline;
};

// Side inputs some baselines need. Paired losses are keyed by sample id and
// come from the same texts scored by another model (ref) or after
// lowercasing (lowercase).
struct AttackInputs {
  const FrequencyTable* frequencies = nullptr;
  const std::unordered_map<std::string, double>* reference_losses = nullptr;
  const std::unordered_map<std::string, double>* lowercase_losses = nullptr;
};

// Throws WrongFidelity (naming the sample) when the trace fidelity is not
// accepted, InvalidArgument when a side input is missing, and whatever the
// underlying score throws.
double score_trace(const SampleTrace& trace, const AttackConfig& config, const AttackInputs& inputs = {});

// One entry per trace, in input order.
ScoreSet score_traces(std::span<const SampleTrace> traces, const AttackConfig& config,
                      const AttackInputs& inputs = {}, int threads = 1);

// Sample id -> sample_loss(all tokens), for building paired-loss inputs.
std::unordered_map<std::string, double> loss_by_id(std::span<const SampleTrace> traces);

}  // namespace acmia
