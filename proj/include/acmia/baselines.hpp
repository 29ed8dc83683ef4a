#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acmia/trace.hpp"

namespace acmia {

// Empirical token probabilities from a reference corpus, additively smoothed
// so that every entry is strictly positive.
class FrequencyTable {
 public:
  // freq[i] = (counts[i] + smoothing) / (sum(counts) + smoothing * V).
  // Throws InvalidArgument when the vocabulary is empty or smoothing <= 0.
  static FrequencyTable from_counts(std::span<const std::uint64_t> counts, double smoothing = 1.0);

  std::size_t vocab_size() const noexcept { return freq_.size(); }
  double smoothing() const noexcept { return smoothing_; }
  double probability(std::uint32_t token_id) const;
  std::span<const double> freq() const noexcept { return freq_; }

 private:
  std::vector<double> freq_;
  double smoothing_ = 1.0;
};

struct BaselineParams {
  double k_percent = 20.0;
  double dcpdd_bound_a = 3.0;
  int compression_level = 6;
};

// Throws InvalidArgument.
void validate(const BaselineParams& params);

// Orientation relative to the textbook formulas: Loss, Min-K% and Ref are
// negated; Lowercase, Min-K%++ and DC-PDD are kept as written.

// -mean NLL over all tokens.
double score_loss(const SampleTrace& trace);

// Mean chosen_logprob over the ceil(k% * T) least likely steps.
double score_minkpct(const SampleTrace& trace, const BaselineParams& params);

// Mean of the ceil(k% * T) smallest per-step z-scores (log p - mu) / sigma.
double score_minkpp(const SampleTrace& trace, const BaselineParams& params);

// -(sum NLL in nats) / (zlib-framed DEFLATE size of the UTF-8 text in bytes).
double score_compression(const SampleTrace& trace, const BaselineParams& params);

// loss(lowercased) / loss(original).
double score_lowercase(double loss_original, double loss_lowercased);

// loss(reference model) - loss(target model).
double score_ref(double loss_target, double loss_reference);

// mean over first occurrences of min(-p(x; M) * ln p(x; D'), a).
double score_dcpdd(const SampleTrace& trace, const FrequencyTable& table, const BaselineParams& params);

// Size in bytes of `data` after zlib compression (RFC 1950 framing).
std::size_t zlib_compressed_size(std::string_view data, int level);

// Number of steps a Min-K style selection keeps: ceil(k% * T), at least 1.
std::size_t min_k_count(std::size_t steps, double k_percent);

// Unicode simple lowercase mapping of a UTF-8 string. Covers ASCII, Latin-1,
// Latin Extended-A, Greek and Cyrillic; other code points pass through.
std::string simple_lowercase(std::string_view utf8);

}  // namespace acmia
