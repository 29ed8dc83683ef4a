#include "acmia/trace.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "acmia/error.hpp"
#include "acmia/tsp.hpp"

namespace acmia {

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::member: return "member";
    case Label::nonmember: return "nonmember";
    case Label::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(Fidelity fidelity) noexcept {
  switch (fidelity) {
    case Fidelity::full: return "full";
    case Fidelity::chosen: return "chosen";
    case Fidelity::lossgrid: return "lossgrid";
  }
  return "full";
}

std::string_view to_string(Split split) noexcept {
  return split == Split::calibration ? "calibration" : "evaluation";
}

Label parse_label(std::string_view text) {
  if (text == "member") return Label::member;
  if (text == "nonmember") return Label::nonmember;
  if (text.empty() || text == "unlabeled" || text == "null") return Label::unlabeled;
  throw Error(ErrorKind::Parse, "unknown label '" + std::string(text) + "'");
}

Fidelity parse_fidelity(std::string_view text) {
  if (text == "full") return Fidelity::full;
  if (text == "chosen") return Fidelity::chosen;
  if (text == "lossgrid") return Fidelity::lossgrid;
  throw Error(ErrorKind::Parse, "unknown fidelity '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "calibration") return Split::calibration;
  if (text == "evaluation") return Split::evaluation;
  throw Error(ErrorKind::Parse, "unknown split '" + std::string(text) + "'");
}

std::optional<double> LossGrid::find(double tau) const {
  const double tolerance = 1e-9 * std::max(1.0, std::abs(tau));
  auto it = points_.lower_bound(tau - tolerance);
  if (it != points_.end() && std::abs(it->first - tau) <= tolerance) return it->second;
  return std::nullopt;
}

double LossGrid::at(double tau) const {
  if (auto loss = find(tau)) return *loss;
  throw Error(ErrorKind::MissingGridPoint, "loss grid has no entry for tau=" + std::to_string(tau));
}

SampleTrace validate_trace(SampleTrace trace) {
  if (trace.steps.empty()) throw Error(ErrorKind::EmptyTrace, "trace '" + trace.id + "' has no steps");

  const auto where = [&](std::size_t i) {
    return "trace '" + trace.id + "' step " + std::to_string(i);
  };

  if (trace.fidelity == Fidelity::lossgrid) {
    if (!trace.loss_grid) {
      throw Error(ErrorKind::FidelityMismatch, "trace '" + trace.id + "' is lossgrid without loss_grid");
    }
    const auto& points = trace.loss_grid->points();
    const bool has_unit = trace.loss_grid->find(1.0).has_value();
    const bool has_other = std::any_of(points.begin(), points.end(), [](const auto& kv) {
      return std::abs(kv.first - 1.0) > 1e-9;
    });
    if (!has_unit || !has_other) {
      throw Error(ErrorKind::FidelityMismatch,
                  "trace '" + trace.id + "' loss_grid needs tau=1 and at least one other tau");
    }
    for (const auto& [tau, loss] : points) {
      if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw Error(ErrorKind::NonPositiveTemperature, "trace '" + trace.id + "' loss_grid tau <= 0");
      }
      if (!(loss >= 0.0) || !std::isfinite(loss)) {
        throw Error(ErrorKind::FidelityMismatch, "trace '" + trace.id + "' loss_grid has a negative loss");
      }
    }
  } else if (trace.loss_grid) {
    throw Error(ErrorKind::FidelityMismatch,
                "trace '" + trace.id + "' carries loss_grid but is not lossgrid fidelity");
  }

  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    TokenStep& step = trace.steps[i];
    if (trace.fidelity == Fidelity::full && !step.logits) {
      throw Error(ErrorKind::FidelityMismatch, where(i) + " has no logits in a full trace");
    }
    if (trace.fidelity == Fidelity::chosen && !step.chosen_logprob) {
      throw Error(ErrorKind::FidelityMismatch, where(i) + " has no chosen_logprob in a chosen trace");
    }
    if (step.logits) {
      const auto& logits = *step.logits;
      if (logits.size() < 2) throw Error(ErrorKind::VocabularyTooSmall, where(i) + " has fewer than 2 logits");
      if (logits.size() > kMaxVocabulary) throw Error(ErrorKind::VocabularyTooLarge, where(i));
      if (step.token_id >= logits.size()) {
        throw Error(ErrorKind::IndexOutOfRange, where(i) + " token id outside the logit vector");
      }
      for (double z : logits) {
        if (!std::isfinite(z)) throw Error(ErrorKind::NonFiniteLogit, where(i));
      }
      const double expected = logits[step.token_id] - log_sum_exp(logits);
      if (step.chosen_logprob) {
        if (std::abs(*step.chosen_logprob - expected) > kLogprobTolerance) {
          throw Error(ErrorKind::InconsistentLogprob,
                      where(i) + " chosen_logprob disagrees with its logits");
        }
      } else {
        step.chosen_logprob = expected;
      }
    } else if (step.chosen_logprob) {
      if (!std::isfinite(*step.chosen_logprob) || *step.chosen_logprob > 0.0) {
        throw Error(ErrorKind::InconsistentLogprob, where(i) + " chosen_logprob must be finite and <= 0");
      }
    } else if (trace.fidelity != Fidelity::lossgrid) {
      throw Error(ErrorKind::FidelityMismatch, where(i) + " has neither logits nor chosen_logprob");
    }
  }
  return trace;
}

std::vector<std::size_t> fos_positions(const SampleTrace& trace) {
  std::vector<std::size_t> positions;
  std::unordered_set<std::uint32_t> seen;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (seen.insert(trace.steps[i].token_id).second) positions.push_back(i);
  }
  return positions;
}

double sample_loss(const SampleTrace& trace, bool restrict_fos) {
  if (trace.fidelity == Fidelity::lossgrid) {
    if (!trace.loss_grid) throw Error(ErrorKind::MissingLogprob, "trace '" + trace.id + "' has no loss grid");
    return trace.loss_grid->at(1.0);
  }
  const auto nll = [&](std::size_t i) {
    const auto& lp = trace.steps[i].chosen_logprob;
    if (!lp) throw Error(ErrorKind::MissingLogprob, "trace '" + trace.id + "' step " + std::to_string(i));
    return -*lp;
  };
  if (trace.steps.empty()) throw Error(ErrorKind::EmptyTrace, "trace '" + trace.id + "' has no steps");

  double sum = 0.0;
  std::size_t count = 0;
  if (restrict_fos) {
    for (std::size_t i : fos_positions(trace)) {
      sum += nll(i);
      ++count;
    }
  } else {
    for (std::size_t i = 0; i < trace.steps.size(); ++i) sum += nll(i);
    count = trace.steps.size();
  }
  return sum / static_cast<double>(count);
}

SampleTrace to_loss_grid(const SampleTrace& full_trace, std::span<const double> taus) {
  if (full_trace.fidelity != Fidelity::full) {
    throw Error(ErrorKind::WrongFidelity, "trace '" + full_trace.id + "' must be full fidelity");
  }
  LossGrid grid;
  const auto add_point = [&](double tau) {
    double sum = 0.0;
    for (const auto& step : full_trace.steps) {
      sum -= log_tsp_single(*step.logits, step.token_id, tau);
    }
    grid.set(tau, sum / static_cast<double>(full_trace.steps.size()));
  };
  add_point(1.0);
  for (double tau : taus) {
    if (!grid.find(tau)) add_point(tau);
  }

  SampleTrace out;
  out.id = full_trace.id;
  out.label = full_trace.label;
  out.text = full_trace.text;
  out.fidelity = Fidelity::lossgrid;
  out.loss_grid = std::move(grid);
  out.steps.reserve(full_trace.steps.size());
  for (const auto& step : full_trace.steps) out.steps.push_back(TokenStep{step.token_id, std::nullopt, std::nullopt});
  return out;
}

LabeledCorpus::LabeledCorpus(std::vector<SampleTrace> samples,
                             std::unordered_map<std::string, Split> split)
    : samples_(std::move(samples)), split_(std::move(split)) {
  std::unordered_set<std::string> ids;
  for (const auto& s : samples_) {
    if (!ids.insert(s.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate sample id '" + s.id + "'");
  }
  for (const auto& [id, which] : split_) {
    if (!ids.count(id)) throw Error(ErrorKind::InvalidArgument, "split names unknown sample id '" + id + "'");
  }
  for (const auto& s : samples_) {
    auto it = split_.find(s.id);
    if (it != split_.end() && it->second == Split::calibration && s.label == Label::unlabeled) {
      throw Error(ErrorKind::InvalidArgument, "calibration sample '" + s.id + "' is unlabeled");
    }
  }
}

std::optional<Split> LabeledCorpus::split_of(const std::string& id) const {
  auto it = split_.find(id);
  if (it == split_.end()) return std::nullopt;
  return it->second;
}

std::vector<SampleTrace> LabeledCorpus::subset(Split split) const {
  std::vector<SampleTrace> out;
  for (const auto& s : samples_) {
    if (split_of(s.id) == split) out.push_back(s);
  }
  return out;
}

void check_disjoint(std::span<const SampleTrace> calibration, std::span<const SampleTrace> evaluation) {
  std::unordered_set<std::string> ids;
  for (const auto& s : calibration) ids.insert(s.id);
  for (const auto& s : evaluation) {
    if (ids.count(s.id)) {
      throw Error(ErrorKind::SplitOverlap, "sample '" + s.id + "' is in both calibration and evaluation");
    }
  }
}

}  // namespace acmia
