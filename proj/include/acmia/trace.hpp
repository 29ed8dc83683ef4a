#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acmia {

enum class Label { member, nonmember, unlabeled };
enum class Fidelity { full, chosen, lossgrid };
enum class Split { calibration, evaluation };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Fidelity fidelity) noexcept;
std::string_view to_string(Split split) noexcept;
Label parse_label(std::string_view text);
Fidelity parse_fidelity(std::string_view text);
Split parse_split(std::string_view text);

struct TokenStep {
  std::uint32_t token_id = 0;
  std::optional<std::vector<double>> logits;
  std::optional<double> chosen_logprob;

  bool operator==(const TokenStep&) const = default;
};

// Mean NLL (nats) keyed by temperature. Lookups tolerate the rounding that
// comes from writing a temperature out as a decimal string and reading it back.
class LossGrid {
 public:
  LossGrid() = default;
  explicit LossGrid(std::map<double, double> points) : points_(std::move(points)) {}

  void set(double tau, double loss) { points_[tau] = loss; }
  std::optional<double> find(double tau) const;
  // Throws MissingGridPoint.
  double at(double tau) const;

  const std::map<double, double>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }

  bool operator==(const LossGrid&) const = default;

 private:
  std::map<double, double> points_;
};

struct SampleTrace {
  std::string id;
  std::vector<TokenStep> steps;
  Label label = Label::unlabeled;
  std::optional<std::string> text;
  Fidelity fidelity = Fidelity::full;
  std::optional<LossGrid> loss_grid;

  bool operator==(const SampleTrace&) const = default;
};

// Tolerance for chosen_logprob against logits[token_id] - logsumexp(logits).
inline constexpr double kLogprobTolerance = 1e-6;

// Checks every trace invariant and fills chosen_logprob from logits where it
// is absent. Throws FidelityMismatch, InconsistentLogprob, EmptyTrace,
// NonFiniteLogit, VocabularyTooSmall, VocabularyTooLarge or IndexOutOfRange.
//
// LOSSGRID traces only need token ids on their steps; the step count is what
// the loss-based attacks consume.
SampleTrace validate_trace(SampleTrace trace);

// Indices of steps whose token id has not appeared earlier in the sample.
std::vector<std::size_t> fos_positions(const SampleTrace& trace);

// Mean -chosen_logprob over all steps (or the first-occurrence set). LOSSGRID
// traces return loss_grid[1] and ignore restrict_fos. Throws MissingLogprob.
double sample_loss(const SampleTrace& trace, bool restrict_fos);

// Builds a LOSSGRID trace from a FULL one: for each tau the grid holds the
// all-token mean of -log TSP(token | tau).
SampleTrace to_loss_grid(const SampleTrace& full_trace, std::span<const double> taus);

class LabeledCorpus {
 public:
  LabeledCorpus() = default;
  // Throws InvalidArgument on duplicate ids, unknown split ids or unlabeled
  // calibration samples.
  LabeledCorpus(std::vector<SampleTrace> samples, std::unordered_map<std::string, Split> split);

  const std::vector<SampleTrace>& samples() const noexcept { return samples_; }
  std::optional<Split> split_of(const std::string& id) const;
  std::vector<SampleTrace> subset(Split split) const;

 private:
  std::vector<SampleTrace> samples_;
  std::unordered_map<std::string, Split> split_;
};

// Throws SplitOverlap when any id appears in both lists.
void check_disjoint(std::span<const SampleTrace> calibration,
                    std::span<const SampleTrace> evaluation);

}  // namespace acmia
