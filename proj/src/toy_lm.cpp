#include "acmia/toy_lm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "acmia/error.hpp"

namespace acmia::toy {
namespace {

constexpr std::size_t kMaxChainEntries = std::size_t{1} << 26;

// Uniform double in [0, 1) from the top 53 bits, independent of the
// standard library's distribution implementations.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint32_t draw_categorical(std::span<const double> probabilities, std::mt19937_64& rng) {
  const double u = unit_uniform(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (u < cumulative) return static_cast<std::uint32_t>(i);
  }
  // Rounding left u above the final cumulative sum; take the last token with
  // non-zero mass.
  for (std::size_t i = probabilities.size(); i-- > 0;) {
    if (probabilities[i] > 0.0) return static_cast<std::uint32_t>(i);
  }
  return 0;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id)};
  return std::mt19937_64(seq);
}

std::size_t chain_entries(std::uint32_t vocab, std::uint32_t order) {
  std::size_t entries = vocab;
  for (std::uint32_t i = 0; i < order; ++i) {
    if (entries > kMaxChainEntries / vocab) return kMaxChainEntries + 1;
    entries *= vocab;
  }
  return entries;
}

Sequence sample_sequence(const MarkovChain& chain, std::size_t length, double epsilon, std::mt19937_64& rng) {
  Sequence seq;
  seq.reserve(length);
  const auto start = static_cast<std::uint32_t>(std::min<double>(unit_uniform(rng) * chain.vocab_size, chain.vocab_size - 1));
  std::vector<std::uint32_t> context(chain.order, start);
  for (std::size_t t = 0; t < length; ++t) {
    std::uint32_t token = 0;
    if (epsilon > 0.0 && unit_uniform(rng) < epsilon) {
      token = static_cast<std::uint32_t>(std::min<double>(unit_uniform(rng) * chain.vocab_size, chain.vocab_size - 1));
    } else {
      token = draw_categorical(chain.distribution(context), rng);
    }
    seq.push_back(token);
    if (!context.empty()) {
      std::rotate(context.begin(), context.begin() + 1, context.end());
      context.back() = token;
    }
  }
  return seq;
}

std::size_t letters_for(std::uint32_t vocab_size) {
  std::uint32_t max_base = (vocab_size - 1) / 2;
  std::size_t letters = 1;
  while (max_base >= 26) {
    max_base /= 26;
    ++letters;
  }
  return std::max<std::size_t>(letters, 2);
}

}  // namespace

void SynthConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (vocab_size < 2) fail("vocab_size must be >= 2");
  if (chain_order < 1) fail("chain_order must be >= 1");
  if (n_members < 1 || n_nonmembers < 1) fail("member and non-member counts must be >= 1");
  if (seq_len < 1 || seq_len < chain_order) fail("seq_len must be >= chain_order");
  if (!(shift_epsilon >= 0.0 && shift_epsilon < 1.0)) fail("shift_epsilon must lie in [0, 1)");
  if (regimes < 1 || regimes > vocab_size) fail("regimes must lie in [1, vocab_size]");
  if (!(regime_leak >= 0.0 && regime_leak < 1.0)) fail("regime_leak must lie in [0, 1)");
  if (!(concentration_min > 0.0) || !(concentration_max >= concentration_min) || !std::isfinite(concentration_max)) {
    fail("concentrations must satisfy 0 < concentration_min <= concentration_max");
  }
  if (chain_entries(vocab_size, chain_order) > kMaxChainEntries) fail("chain table too large (V^(order+1) > 2^26)");
}

std::span<const double> MarkovChain::distribution(std::span<const std::uint32_t> context) const {
  if (context.size() != order) throw Error(ErrorKind::BadContextLength, "chain context has wrong length");
  std::size_t row = 0;
  for (auto token : context) {
    if (token >= vocab_size) throw Error(ErrorKind::VocabMismatch, "chain context token outside vocabulary");
    row = row * vocab_size + token;
  }
  return std::span<const double>(probabilities).subspan(row * vocab_size, vocab_size);
}

SynthCorpus synth_corpus(const SynthConfig& config) {
  config.validate();
  SynthCorpus corpus;
  corpus.chain.vocab_size = config.vocab_size;
  corpus.chain.order = config.chain_order;

  const std::size_t entries = chain_entries(config.vocab_size, config.chain_order);
  corpus.chain.probabilities.resize(entries);
  auto chain_rng = stream(config.seed, 0);
  const std::uint32_t v = config.vocab_size;
  const auto group_of = [&](std::uint32_t token) {
    return static_cast<std::uint32_t>(static_cast<std::uint64_t>(token) * config.regimes / v);
  };
  std::vector<std::gamma_distribution<double>> gammas;
  for (std::uint32_t g = 0; g < config.regimes; ++g) {
    const double t = config.regimes == 1 ? 0.0 : static_cast<double>(g) / (config.regimes - 1);
    const double c = config.concentration_min * std::pow(config.concentration_max / config.concentration_min, t);
    gammas.emplace_back(c, 1.0);
  }
  std::vector<double> draws(v);
  for (std::size_t row = 0; row < entries / v; ++row) {
    const auto last_token = static_cast<std::uint32_t>(row % v);
    const std::uint32_t group = group_of(last_token);
    double in_sum = 0.0;
    double out_sum = 0.0;
    for (std::uint32_t i = 0; i < v; ++i) {
      draws[i] = gammas[group](chain_rng);
      (group_of(i) == group ? in_sum : out_sum) += draws[i];
    }
    const bool single = config.regimes == 1 || out_sum <= 0.0;
    const double in_mass = single ? 1.0 : 1.0 - config.regime_leak;
    const double out_mass = single ? 0.0 : config.regime_leak;
    auto out = corpus.chain.probabilities.begin() + static_cast<std::ptrdiff_t>(row * v);
    for (std::uint32_t i = 0; i < v; ++i) {
      const bool inside = single || group_of(i) == group;
      const double sum = inside ? in_sum : out_sum;
      out[i] = sum > 0.0 ? (inside ? in_mass : out_mass) * draws[i] / sum : 0.0;
    }
    if (in_sum <= 0.0) {
      for (std::uint32_t i = 0; i < v; ++i) out[i] = 1.0 / v;
    }
  }

  auto member_rng = stream(config.seed, 1);
  auto nonmember_rng = stream(config.seed, 2);
  auto reference_rng = stream(config.seed, 3);
  for (std::size_t i = 0; i < config.n_members; ++i) {
    corpus.members.push_back(sample_sequence(corpus.chain, config.seq_len, 0.0, member_rng));
  }
  for (std::size_t i = 0; i < config.n_nonmembers; ++i) {
    corpus.nonmembers.push_back(sample_sequence(corpus.chain, config.seq_len, config.shift_epsilon, nonmember_rng));
  }
  for (std::size_t i = 0; i < config.n_reference; ++i) {
    corpus.reference.push_back(sample_sequence(corpus.chain, config.seq_len, 0.0, reference_rng));
  }
  return corpus;
}

NgramModel NgramModel::train(std::span<const Sequence> texts, std::uint32_t order, std::uint32_t vocab_size,
                             double beta) {
  if (texts.empty()) throw Error(ErrorKind::EmptyCorpus, "no training texts");
  if (order < 1) throw Error(ErrorKind::InvalidConfig, "order must be >= 1");
  if (vocab_size < 2) throw Error(ErrorKind::InvalidConfig, "vocab_size must be >= 2");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidConfig, "beta must be positive");
  // Contexts are packed base (V + 1) into 64 bits.
  double key_bits = (order - 1) * std::log2(static_cast<double>(vocab_size) + 1.0);
  if (key_bits >= 63.0) throw Error(ErrorKind::InvalidConfig, "order too large for context packing");

  NgramModel model;
  model.order_ = order;
  model.vocab_size_ = vocab_size;
  model.beta_ = beta;
  for (const auto& text : texts) {
    for (std::size_t t = 0; t < text.size(); ++t) {
      if (text[t] >= vocab_size) throw Error(ErrorKind::VocabMismatch, "training token outside vocabulary");
      const auto ctx = context_at(model, text, t);
      Row& row = model.rows_[model.key(ctx)];
      if (row.counts.empty()) row.counts.assign(vocab_size, 0);
      row.counts[text[t]] += 1;
      row.total += 1;
    }
  }
  return model;
}

std::uint64_t NgramModel::key(std::span<const std::uint32_t> context) const {
  if (context.size() + 1 != order_) {
    throw Error(ErrorKind::BadContextLength, "context has " + std::to_string(context.size()) + " tokens, model needs " +
                                                 std::to_string(order_ - 1));
  }
  std::uint64_t k = 0;
  for (auto token : context) {
    if (token > vocab_size_) throw Error(ErrorKind::VocabMismatch, "context token outside vocabulary");
    k = k * (vocab_size_ + 1ULL) + token;
  }
  return k;
}

std::vector<double> NgramModel::next_token_logits(std::span<const std::uint32_t> context) const {
  const auto it = rows_.find(key(context));
  const double v = static_cast<double>(vocab_size_);
  if (it == rows_.end()) return std::vector<double>(vocab_size_, -std::log(v));
  const Row& row = it->second;
  const double log_denominator = std::log(static_cast<double>(row.total) + beta_ * v);
  std::vector<double> logits(vocab_size_);
  for (std::uint32_t i = 0; i < vocab_size_; ++i) {
    logits[i] = std::log(static_cast<double>(row.counts[i]) + beta_) - log_denominator;
  }
  return logits;
}

std::uint64_t NgramModel::context_count(std::span<const std::uint32_t> context) const {
  const auto it = rows_.find(key(context));
  return it == rows_.end() ? 0 : it->second.total;
}

std::vector<std::uint32_t> context_at(const NgramModel& model, std::span<const std::uint32_t> text, std::size_t t) {
  const std::size_t width = model.order() - 1;
  std::vector<std::uint32_t> ctx(width, model.bos());
  for (std::size_t j = 0; j < width; ++j) {
    // ctx[j] holds text[t - width + j] when that position exists.
    if (t + j >= width) ctx[j] = text[t + j - width];
  }
  return ctx;
}

namespace {

void check_parallel(std::size_t texts, std::size_t labels, std::size_t ids) {
  if (labels != texts || ids != texts) {
    throw Error(ErrorKind::InvalidArgument, "texts, labels and ids must have equal length");
  }
}

template <typename MakeStep>
std::vector<SampleTrace> emit(const NgramModel& model, std::span<const Sequence> texts, std::span<const Label> labels,
                              std::span<const std::string> ids, Fidelity fidelity, MakeStep&& make_step) {
  check_parallel(texts.size(), labels.size(), ids.size());
  std::vector<SampleTrace> out;
  out.reserve(texts.size());
  for (std::size_t s = 0; s < texts.size(); ++s) {
    const auto& text = texts[s];
    SampleTrace trace;
    trace.id = ids[s];
    trace.label = labels[s];
    trace.fidelity = fidelity;
    trace.steps.reserve(text.size());
    for (std::size_t t = 0; t < text.size(); ++t) {
      if (text[t] >= model.vocab_size()) {
        throw Error(ErrorKind::VocabMismatch, "sample '" + ids[s] + "' token " + std::to_string(text[t]) +
                                                  " outside vocabulary of " + std::to_string(model.vocab_size()));
      }
      auto logits = model.next_token_logits(context_at(model, text, t));
      trace.steps.push_back(make_step(text[t], std::move(logits)));
    }
    out.push_back(std::move(trace));
  }
  return out;
}

}  // namespace

std::vector<SampleTrace> emit_traces(const NgramModel& model, std::span<const Sequence> texts,
                                     std::span<const Label> labels, std::span<const std::string> ids,
                                     std::span<const std::string> raw_texts) {
  auto traces = emit(model, texts, labels, ids, Fidelity::full, [](std::uint32_t token, std::vector<double> logits) {
    const double lp = logits[token];
    return TokenStep{token, std::move(logits), lp};
  });
  if (!raw_texts.empty()) {
    if (raw_texts.size() != traces.size()) throw Error(ErrorKind::InvalidArgument, "raw_texts length mismatch");
    for (std::size_t i = 0; i < traces.size(); ++i) traces[i].text = raw_texts[i];
  }
  return traces;
}

std::vector<SampleTrace> emit_chosen_traces(const NgramModel& model, std::span<const Sequence> texts,
                                            std::span<const Label> labels, std::span<const std::string> ids) {
  return emit(model, texts, labels, ids, Fidelity::chosen, [](std::uint32_t token, std::vector<double> logits) {
    return TokenStep{token, std::nullopt, logits[token]};
  });
}

std::string render_text(std::span<const std::uint32_t> tokens, std::uint32_t vocab_size) {
  const std::size_t letters = letters_for(vocab_size);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= vocab_size) throw Error(ErrorKind::VocabMismatch, "token outside vocabulary");
    if (i > 0) out.push_back(' ');
    std::uint32_t base = tokens[i] / 2;
    std::string word(letters, 'a');
    for (std::size_t j = letters; j-- > 0;) {
      word[j] = static_cast<char>('a' + base % 26);
      base /= 26;
    }
    if (tokens[i] % 2 == 1) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
    out += word;
  }
  return out;
}

Sequence tokenize_text(std::string_view text, std::uint32_t vocab_size) {
  const std::size_t letters = letters_for(vocab_size);
  Sequence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view word = text.substr(i, j - i);
    if (word.size() != letters) throw Error(ErrorKind::Parse, "word '" + std::string(word) + "' has wrong length");
    std::uint32_t base = 0;
    bool upper = false;
    for (std::size_t k = 0; k < word.size(); ++k) {
      char c = word[k];
      if (k == 0 && c >= 'A' && c <= 'Z') {
        upper = true;
        c = static_cast<char>(c - 'A' + 'a');
      }
      if (c < 'a' || c > 'z') throw Error(ErrorKind::Parse, "word '" + std::string(word) + "' is not a toy token");
      base = base * 26 + static_cast<std::uint32_t>(c - 'a');
    }
    const std::uint32_t token = base * 2 + (upper ? 1 : 0);
    if (token >= vocab_size) throw Error(ErrorKind::Parse, "word '" + std::string(word) + "' outside vocabulary");
    out.push_back(token);
    i = j;
  }
  return out;
}

std::vector<std::uint64_t> token_counts(std::span<const Sequence> texts, std::uint32_t vocab_size) {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (const auto& text : texts) {
    for (auto token : text) {
      if (token >= vocab_size) throw Error(ErrorKind::VocabMismatch, "token outside vocabulary");
      ++counts[token];
    }
  }
  return counts;
}

std::size_t NgramIndex::Hash::operator()(const std::vector<std::uint32_t>& v) const noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (auto x : v) {
    h ^= x;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

NgramIndex::NgramIndex(std::span<const Sequence> members, std::size_t n) : n_(n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  for (const auto& m : members) {
    for (std::size_t i = 0; i + n <= m.size(); ++i) grams_.emplace(m.begin() + static_cast<std::ptrdiff_t>(i),
                                                                 m.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
}

double NgramIndex::overlap(std::span<const std::uint32_t> x) const {
  if (x.size() < n_) {
    throw Error(ErrorKind::SequenceTooShort, "sequence of " + std::to_string(x.size()) + " tokens has no " +
                                                 std::to_string(n_) + "-grams");
  }
  const std::size_t total = x.size() - n_ + 1;
  std::size_t hits = 0;
  std::vector<std::uint32_t> gram(n_);
  for (std::size_t i = 0; i < total; ++i) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(i), n_, gram.begin());
    if (grams_.count(gram)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double ngram_overlap(std::span<const std::uint32_t> x, std::span<const Sequence> members, std::size_t n) {
  return NgramIndex(members, n).overlap(x);
}

std::vector<Sequence> filter_by_overlap_cap(std::span<const Sequence> candidates, std::span<const Sequence> members,
                                            std::size_t n, double cap) {
  const NgramIndex index(members, n);
  std::vector<Sequence> kept;
  for (const auto& c : candidates) {
    if (c.size() >= n && index.overlap(c) <= cap) kept.push_back(c);
  }
  return kept;
}

}  // namespace acmia::toy
