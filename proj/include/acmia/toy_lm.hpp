#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "acmia/trace.hpp"

namespace acmia::toy {

using Sequence = std::vector<std::uint32_t>;

struct SynthConfig {
  std::uint64_t seed = 42;
  std::uint32_t vocab_size = 64;
  // Number of preceding tokens the generating chain conditions on.
  std::uint32_t chain_order = 2;
  std::size_t n_members = 400;
  std::size_t n_nonmembers = 400;
  // Extra same-distribution sequences for the reference model and the
  // reference frequency table; never members.
  std::size_t n_reference = 400;
  std::size_t seq_len = 96;
  // Probability that a non-member token is drawn uniformly instead of from
  // the chain. 0 gives identically distributed members and non-members.
  double shift_epsilon = 0.0;
  // The vocabulary is split into `regimes` contiguous token groups. A context
  // whose last token lies in group g draws its next token from group g with
  // probability 1 - regime_leak, and from the other groups otherwise; both
  // parts are symmetric Dirichlet draws with concentration c_g, log-spaced
  // from concentration_min (group 0) to concentration_max (last group).
  // Sequences therefore stay in one regime for long stretches and differ in
  // intrinsic difficulty. regimes = 1 gives a single symmetric Dirichlet with
  // concentration_min.
  std::uint32_t regimes = 4;
  double regime_leak = 0.05;
  double concentration_min = 0.02;
  double concentration_max = 5.0;

  // Throws InvalidConfig.
  void validate() const;
};

// Ground-truth generator: one categorical distribution per context of
// chain_order tokens. Each sampled sequence starts from a context filled with
// one uniformly drawn token.
struct MarkovChain {
  std::uint32_t vocab_size = 0;
  std::uint32_t order = 0;
  std::vector<double> probabilities;  // contexts x vocab, row-major

  std::span<const double> distribution(std::span<const std::uint32_t> context) const;
};

struct SynthCorpus {
  std::vector<Sequence> members;
  std::vector<Sequence> nonmembers;
  std::vector<Sequence> reference;
  MarkovChain chain;
};

// Bitwise identical output for identical configs.
SynthCorpus synth_corpus(const SynthConfig& config);

// Additively smoothed n-gram model fit by counting.
// p(w | ctx) = (count(ctx, w) + beta) / (count(ctx) + beta * V).
class NgramModel {
 public:
  // Throws EmptyCorpus, InvalidConfig, VocabMismatch.
  static NgramModel train(std::span<const Sequence> texts, std::uint32_t order, std::uint32_t vocab_size,
                          double beta);

  std::uint32_t order() const noexcept { return order_; }
  std::uint32_t vocab_size() const noexcept { return vocab_size_; }
  double beta() const noexcept { return beta_; }
  // Padding id used for positions before the start of a sequence.
  std::uint32_t bos() const noexcept { return vocab_size_; }

  // Natural-log next-token probabilities for a context of order - 1 tokens
  // (each < V or == bos()). Throws BadContextLength, VocabMismatch.
  std::vector<double> next_token_logits(std::span<const std::uint32_t> context) const;

  // Count of the given context; 0 when unseen.
  std::uint64_t context_count(std::span<const std::uint32_t> context) const;

 private:
  struct Row {
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;
  };

  std::uint64_t key(std::span<const std::uint32_t> context) const;

  std::uint32_t order_ = 1;
  std::uint32_t vocab_size_ = 2;
  double beta_ = 1.0;
  std::unordered_map<std::uint64_t, Row> rows_;
};

// The order - 1 tokens preceding position t, padded with bos().
std::vector<std::uint32_t> context_at(const NgramModel& model, std::span<const std::uint32_t> text, std::size_t t);

// One FULL trace per text; ids and texts (if non-empty) are parallel to
// `texts`. Throws VocabMismatch when a token is outside the model vocabulary.
std::vector<SampleTrace> emit_traces(const NgramModel& model, std::span<const Sequence> texts,
                                     std::span<const Label> labels, std::span<const std::string> ids,
                                     std::span<const std::string> raw_texts = {});

// Same as emit_traces but each step keeps only chosen_logprob (CHOSEN
// fidelity); used for companion traces that only feed losses.
std::vector<SampleTrace> emit_chosen_traces(const NgramModel& model, std::span<const Sequence> texts,
                                            std::span<const Label> labels, std::span<const std::string> ids);

// Token <-> text mapping. Token t is a word spelled from t / 2 in base 26;
// the low bit is a case bit that capitalizes the first letter.
std::string render_text(std::span<const std::uint32_t> tokens, std::uint32_t vocab_size);
// Throws Parse on words outside the vocabulary.
Sequence tokenize_text(std::string_view text, std::uint32_t vocab_size);

// Count of each token id over all sequences.
std::vector<std::uint64_t> token_counts(std::span<const Sequence> texts, std::uint32_t vocab_size);

// Fraction of x's n-grams that occur verbatim in at least one member.
// Throws SequenceTooShort when x has fewer than n tokens.
double ngram_overlap(std::span<const std::uint32_t> x, std::span<const Sequence> members, std::size_t n);

// Precomputed member n-gram set for repeated overlap queries.
class NgramIndex {
 public:
  NgramIndex(std::span<const Sequence> members, std::size_t n);
  std::size_t n() const noexcept { return n_; }
  double overlap(std::span<const std::uint32_t> x) const;

 private:
  struct Hash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept;
  };
  std::size_t n_;
  std::unordered_set<std::vector<std::uint32_t>, Hash> grams_;
};

// Keeps the candidates whose n-gram overlap with the members is <= cap,
// preserving order.
std::vector<Sequence> filter_by_overlap_cap(std::span<const Sequence> candidates, std::span<const Sequence> members,
                                            std::size_t n, double cap);

}  // namespace acmia::toy
