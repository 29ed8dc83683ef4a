#include "acmia/attacks.hpp"

#include <array>
#include <utility>

#include "acmia/error.hpp"
#include "acmia/parallel.hpp"

namespace acmia {
namespace {

constexpr std::array<std::pair<AttackKind, std::string_view>, 12> kNames{{
    {AttackKind::loss, "loss"},
    {AttackKind::min_k, "mink"},
    {AttackKind::min_k_pp, "minkpp"},
    {AttackKind::zlib, "zlib"},
    {AttackKind::lowercase, "lowercase"},
    {AttackKind::ref, "ref"},
    {AttackKind::dc_pdd, "dcpdd"},
    {AttackKind::ac, "ac"},
    {AttackKind::deriv_ac, "derivac"},
    {AttackKind::norm_ac, "normac"},
    {AttackKind::ac_lossgrid, "ac-lossgrid"},
    {AttackKind::deriv_ac_lossgrid, "derivac-lossgrid"},
}};

double paired_loss(const std::unordered_map<std::string, double>* table, const SampleTrace& trace,
                   std::string_view what) {
  if (table == nullptr) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " losses are required for this attack");
  }
  auto it = table->find(trace.id);
  if (it == table->end()) {
    throw Error(ErrorKind::InvalidArgument, "no " + std::string(what) + " loss for sample '" + trace.id + "'");
  }
  return it->second;
}

}  // namespace

std::string_view attack_name(AttackKind kind) noexcept {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

AttackKind parse_attack(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown attack '" + std::string(name) + "'");
}

std::vector<AttackKind> all_attacks() {
  std::vector<AttackKind> out;
  for (const auto& [k, name] : kNames) out.push_back(k);
  return out;
}

bool uses_temperature(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::ac:
    case AttackKind::deriv_ac:
    case AttackKind::norm_ac:
    case AttackKind::ac_lossgrid:
    case AttackKind::deriv_ac_lossgrid:
      return true;
    default:
      return false;
  }
}

bool uses_k_percent(AttackKind kind) noexcept {
  return kind == AttackKind::min_k || kind == AttackKind::min_k_pp;
}

bool accepts(AttackKind kind, Fidelity fidelity) noexcept {
  switch (kind) {
    case AttackKind::ac:
    case AttackKind::deriv_ac:
    case AttackKind::norm_ac:
    case AttackKind::min_k_pp:
      return fidelity == Fidelity::full;
    case AttackKind::min_k:
    case AttackKind::dc_pdd:
      return fidelity != Fidelity::lossgrid;
    case AttackKind::loss:
    case AttackKind::zlib:
    case AttackKind::lowercase:
    case AttackKind::ref:
      return true;
    case AttackKind::ac_lossgrid:
    case AttackKind::deriv_ac_lossgrid:
      return fidelity == Fidelity::lossgrid;
  }
  return false;
}

double score_trace(const SampleTrace& trace, const AttackConfig& config, const AttackInputs& inputs) {
  if (!accepts(config.kind, trace.fidelity)) {
    throw Error(ErrorKind::WrongFidelity, "sample '" + trace.id + "' has fidelity " +
                                              std::string(to_string(trace.fidelity)) + ", attack " +
                                              std::string(attack_name(config.kind)) + " cannot use it");
  }
  switch (config.kind) {
    case AttackKind::loss:
      return score_loss(trace);
    case AttackKind::min_k:
      return score_minkpct(trace, config.baseline);
    case AttackKind::min_k_pp:
      return score_minkpp(trace, config.baseline);
    case AttackKind::zlib:
      return score_compression(trace, config.baseline);
    case AttackKind::lowercase:
      return score_lowercase(sample_loss(trace, false), paired_loss(inputs.lowercase_losses, trace, "lowercase"));
    case AttackKind::ref:
      return score_ref(sample_loss(trace, false), paired_loss(inputs.reference_losses, trace, "reference"));
    case AttackKind::dc_pdd:
      if (inputs.frequencies == nullptr) {
        throw Error(ErrorKind::InvalidArgument, "dcpdd needs a frequency table");
      }
      return score_dcpdd(trace, *inputs.frequencies, config.baseline);
    case AttackKind::ac:
      return score_ac(trace, config.acmia);
    case AttackKind::deriv_ac:
      return score_derivac(trace, config.acmia);
    case AttackKind::norm_ac:
      return score_normac(trace, config.acmia);
    case AttackKind::ac_lossgrid:
      return score_ac_lossgrid(trace, config.acmia.tau);
    case AttackKind::deriv_ac_lossgrid:
      return score_derivac_lossgrid(trace, config.acmia.tau, config.acmia.delta);
  }
  throw Error(ErrorKind::InvalidArgument, "unhandled attack");
}

ScoreSet score_traces(std::span<const SampleTrace> traces, const AttackConfig& config,
                      const AttackInputs& inputs, int threads) {
  ScoreSet out(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) {
    out[i] = ScoreEntry{traces[i].id, score_trace(traces[i], config, inputs), traces[i].label};
  });
  return out;
}

std::unordered_map<std::string, double> loss_by_id(std::span<const SampleTrace> traces) {
  std::unordered_map<std::string, double> out;
  for (const auto& t : traces) out[t.id] = sample_loss(t, false);
  return out;
}

}  // namespace acmia
