#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "acmia/baselines.hpp"
#include "acmia/error.hpp"
#include "acmia/io.hpp"
#include "acmia/metrics.hpp"
#include "acmia/toy_lm.hpp"
#include "doctest.h"

using namespace acmia;
using namespace acmia::toy;
using doctest::Approx;

namespace {

std::string corpus_digest(const SynthCorpus& c) {
  std::ostringstream out;
  for (const auto* group : {&c.members, &c.nonmembers, &c.reference}) {
    for (const auto& seq : *group) {
      for (auto t : seq) out << t << ' ';
      out << '\n';
    }
    out << '|';
  }
  return io::hash_hex(io::fnv1a64(out.str()));
}

SynthConfig small_config() {
  SynthConfig c;
  c.vocab_size = 16;
  c.seq_len = 64;
  c.n_members = 2;
  c.n_nonmembers = 2;
  c.n_reference = 2;
  return c;
}

std::vector<std::string> ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// AUROC of the Loss attack on a model trained on the members.
double loss_auroc(const SynthCorpus& corpus, std::uint32_t order, double beta) {
  const auto model = NgramModel::train(corpus.members, order, corpus.chain.vocab_size, beta);
  ScoreSet scores;
  for (const auto* group : {&corpus.members, &corpus.nonmembers}) {
    const Label label = group == &corpus.members ? Label::member : Label::nonmember;
    const std::vector<Label> labels(group->size(), label);
    const auto traces = emit_traces(model, *group, labels, ids(label == Label::member ? "m" : "n", group->size()));
    for (const auto& t : traces) scores.push_back({t.id, -sample_loss(t, false), label});
  }
  return auroc(scores);
}

}  // namespace

TEST_CASE("synth_corpus is deterministic and seed-sensitive") {
  const auto a = synth_corpus(small_config());
  const auto b = synth_corpus(small_config());
  CHECK(a.members == b.members);
  CHECK(a.nonmembers == b.nonmembers);
  CHECK(a.reference == b.reference);
  CHECK(a.chain.probabilities == b.chain.probabilities);

  auto other = small_config();
  other.seed = 43;
  CHECK(synth_corpus(other).members != a.members);
}

TEST_CASE("synth_corpus regression pin") {
  const auto c = synth_corpus(small_config());
  CHECK(c.members.size() == 2);
  CHECK(c.nonmembers.size() == 2);
  for (const auto& s : c.members) CHECK(s.size() == 64);
  CHECK(corpus_digest(c) == "91b81be89e7644f7");
}

TEST_CASE("synth_corpus shapes and chain rows") {
  const auto c = synth_corpus(small_config());
  const auto& chain = c.chain;
  CHECK(chain.vocab_size == 16);
  CHECK(chain.order == 2);
  CHECK(chain.probabilities.size() == 16u * 16u * 16u);
  for (std::size_t row = 0; row < chain.probabilities.size() / 16; ++row) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 16; ++j) sum += chain.probabilities[row * 16 + j];
    CHECK(sum == Approx(1.0).epsilon(1e-9));
  }
  for (const auto* group : {&c.members, &c.nonmembers, &c.reference}) {
    for (const auto& s : *group) {
      for (auto t : s) CHECK(t < 16u);
    }
  }
  const std::vector<std::uint32_t> ctx{3, 4};
  CHECK(chain.distribution(ctx).size() == 16);
  CHECK_THROWS_AS(chain.distribution(std::vector<std::uint32_t>{3}), Error);
}

TEST_CASE("config validation") {
  auto bad = small_config();
  bad.vocab_size = 1;
  CHECK_THROWS_AS(synth_corpus(bad), Error);
  bad = small_config();
  bad.n_members = 0;
  CHECK_THROWS_AS(synth_corpus(bad), Error);
  bad = small_config();
  bad.seq_len = 1;
  CHECK_THROWS_AS(synth_corpus(bad), Error);
  bad = small_config();
  bad.shift_epsilon = 1.0;
  CHECK_THROWS_AS(synth_corpus(bad), Error);
}

TEST_CASE("unshifted corpora: members and non-members are exchangeable") {
  SynthConfig c;
  c.vocab_size = 16;
  c.n_members = 300;
  c.n_nonmembers = 300;
  c.n_reference = 1;
  c.seq_len = 48;
  const auto corpus = synth_corpus(c);
  // Token histograms of the two groups agree up to sampling noise.
  const auto m = token_counts(corpus.members, 16);
  const auto n = token_counts(corpus.nonmembers, 16);
  const double total = 300.0 * 48.0;
  for (std::size_t i = 0; i < 16; ++i) {
    const double pm = m[i] / total;
    const double pn = n[i] / total;
    CHECK(std::abs(pm - pn) <= 0.05);
  }
  // Weak memorization leaves Loss near chance; strong memorization separates.
  CHECK(std::abs(loss_auroc(corpus, 3, 1e6) - 0.5) <= 0.1);
  const double strong = loss_auroc(corpus, 3, 0.01);
  const double medium = loss_auroc(corpus, 3, 1.0);
  CHECK(strong > 0.5);
  CHECK(strong >= medium);
}

TEST_CASE("n-gram counts by hand") {
  const std::vector<Sequence> texts{{0, 1, 0, 1, 0, 1}};
  const double beta = 0.1;
  const auto model = NgramModel::train(texts, 2, 2, beta);
  const std::vector<std::uint32_t> after_zero{0};
  CHECK(model.context_count(after_zero) == 3);
  const auto logits = model.next_token_logits(after_zero);
  CHECK(std::exp(logits[1]) == Approx((3 + beta) / (3 + 2 * beta)).epsilon(1e-12));
  CHECK(std::exp(logits[0]) == Approx(beta / (3 + 2 * beta)).epsilon(1e-12));

  const std::vector<std::uint32_t> after_one{1};
  CHECK(model.context_count(after_one) == 2);
  CHECK(std::exp(model.next_token_logits(after_one)[0]) == Approx((2 + beta) / (2 + 2 * beta)).epsilon(1e-12));

  const std::vector<std::uint32_t> at_start{model.bos()};
  CHECK(std::exp(model.next_token_logits(at_start)[0]) == Approx((1 + beta) / (1 + 2 * beta)).epsilon(1e-12));
}

TEST_CASE("unseen contexts and large smoothing give uniform distributions") {
  const std::vector<Sequence> texts{{0, 1, 2, 3}};
  const auto model = NgramModel::train(texts, 3, 4, 0.5);
  const std::vector<std::uint32_t> unseen{3, 3};
  CHECK(model.context_count(unseen) == 0);
  for (double lp : model.next_token_logits(unseen)) CHECK(lp == Approx(-std::log(4.0)).epsilon(1e-12));

  const auto flat = NgramModel::train(texts, 3, 4, 1e12);
  const std::vector<std::uint32_t> seen{0, 1};
  for (double lp : flat.next_token_logits(seen)) CHECK(lp == Approx(-std::log(4.0)).epsilon(1e-9));

  CHECK_THROWS_AS(model.next_token_logits(std::vector<std::uint32_t>{1}), Error);
  CHECK_THROWS_AS(NgramModel::train(std::vector<Sequence>{}, 2, 4, 0.5), Error);
  CHECK_THROWS_AS(NgramModel::train(texts, 2, 4, 0.0), Error);
  CHECK_THROWS_AS(NgramModel::train(std::vector<Sequence>{{7}}, 2, 4, 0.5), Error);
}

TEST_CASE("next-token distributions are normalized and respect the smoothing floor") {
  const auto corpus = synth_corpus(small_config());
  const double beta = 0.1;
  const auto model = NgramModel::train(corpus.members, 3, 16, beta);
  for (const auto& seq : corpus.members) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto ctx = context_at(model, seq, t);
      const auto logits = model.next_token_logits(ctx);
      double sum = 0.0;
      const double floor_p = beta / (model.context_count(ctx) + beta * 16);
      for (double lp : logits) {
        sum += std::exp(lp);
        CHECK(std::exp(lp) >= floor_p * (1 - 1e-12));
      }
      CHECK(sum == Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("logit regression pin") {
  const auto corpus = synth_corpus(small_config());
  const auto model = NgramModel::train(corpus.members, 3, 16, 0.1);
  const auto logits = model.next_token_logits(context_at(model, corpus.members[0], 10));
  std::string joined;
  for (double v : logits) joined += io::format_double(v) + ",";
  CHECK(joined ==
        "-5.62040086571715,-0.0949479265853661,-5.62040086571715,-5.62040086571715,-3.22250559291878,"
        "-5.62040086571715,-5.62040086571715,-5.62040086571715,-5.62040086571715,-5.62040086571715,"
        "-5.62040086571715,-5.62040086571715,-5.62040086571715,-5.62040086571715,-5.62040086571715,"
        "-5.62040086571715,");
}

TEST_CASE("emitted traces") {
  SynthConfig c;
  c.vocab_size = 32;
  c.n_members = 100;
  c.n_nonmembers = 100;
  c.n_reference = 1;
  c.seq_len = 40;
  const auto corpus = synth_corpus(c);
  const auto model = NgramModel::train(corpus.members, 3, 32, 0.1);
  const std::vector<Label> member_labels(100, Label::member), nonmember_labels(100, Label::nonmember);

  std::vector<std::string> raw;
  for (const auto& s : corpus.members) raw.push_back(render_text(s, 32));
  const auto members = emit_traces(model, corpus.members, member_labels, ids("m", 100), raw);
  const auto nonmembers = emit_traces(model, corpus.nonmembers, nonmember_labels, ids("n", 100));
  CHECK(members.size() == 100);
  CHECK(members[7].id == "m7");
  CHECK(members[7].text == raw[7]);
  CHECK_FALSE(nonmembers[0].text.has_value());

  double member_loss = 0.0, nonmember_loss = 0.0;
  for (const auto& t : members) {
    CHECK(validate_trace(t) == t);
    CHECK(t.fidelity == Fidelity::full);
    CHECK(t.steps.size() == 40);
    member_loss += sample_loss(t, false);
  }
  for (const auto& t : nonmembers) nonmember_loss += sample_loss(t, false);
  CHECK(member_loss < nonmember_loss);

  const auto chosen = emit_chosen_traces(model, corpus.members, member_labels, ids("m", 100));
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    CHECK(chosen[i].fidelity == Fidelity::chosen);
    CHECK(sample_loss(chosen[i], false) == sample_loss(members[i], false));
  }

  CHECK(emit_traces(model, std::vector<Sequence>{}, std::vector<Label>{}, std::vector<std::string>{}).empty());
  const std::vector<Sequence> outside{{40}};
  CHECK_THROWS_AS(emit_traces(model, outside, std::vector<Label>{Label::member}, ids("x", 1)), Error);
}

TEST_CASE("ngram_overlap examples") {
  const std::vector<Sequence> members{{2, 3, 9}};
  const Sequence x{1, 2, 3, 4};
  CHECK(ngram_overlap(x, members, 2) == Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ngram_overlap(Sequence{2, 3, 9}, members, 2) == 1.0);
  CHECK(ngram_overlap(Sequence{2, 3, 9}, members, 3) == 1.0);
  CHECK(ngram_overlap(Sequence{5, 6, 7}, members, 1) == 0.0);
  CHECK_THROWS_AS(ngram_overlap(Sequence{1}, members, 2), Error);
  const NgramIndex index(members, 2);
  CHECK(index.overlap(x) == ngram_overlap(x, members, 2));
}

TEST_CASE("overlap of contained sequences does not grow with n") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::uint32_t> tok(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Sequence> members(3);
    for (auto& m : members) {
      m.resize(30);
      for (auto& t : m) t = tok(rng);
    }
    // x is a window of one member with a few tokens changed.
    Sequence x(members[0].begin() + 5, members[0].begin() + 25);
    for (int k = 0; k < 3; ++k) x[rng() % x.size()] = tok(rng);
    double previous = 2.0;
    for (std::size_t n = 1; n <= x.size(); ++n) {
      const double v = ngram_overlap(x, members, n);
      CHECK(v <= previous + 1e-15);
      previous = v;
    }
  }
}

TEST_CASE("filter_by_overlap_cap") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::uint32_t> tok(0, 3);
  std::vector<Sequence> members(5), candidates(40);
  for (auto* group : {&members, &candidates}) {
    for (auto& s : *group) {
      s.resize(20);
      for (auto& t : s) t = tok(rng);
    }
  }
  const double cap = 0.2;
  const auto kept = filter_by_overlap_cap(candidates, members, 4, cap);
  std::size_t cursor = 0;
  for (const auto& c : candidates) {
    const bool keep = ngram_overlap(c, members, 4) <= cap;
    if (keep) {
      REQUIRE(cursor < kept.size());
      CHECK(kept[cursor++] == c);
    }
  }
  CHECK(cursor == kept.size());
}

TEST_CASE("text rendering") {
  const Sequence tokens{0, 1, 2, 3, 50, 51, 63};
  const auto text = render_text(tokens, 64);
  CHECK(tokenize_text(text, 64) == tokens);

  Sequence folded = tokens;
  for (auto& t : folded) t &= ~1u;
  CHECK(tokenize_text(simple_lowercase(text), 64) == folded);
  CHECK(render_text(Sequence{1}, 64) != render_text(Sequence{0}, 64));
  CHECK(simple_lowercase(render_text(Sequence{1}, 64)) == render_text(Sequence{0}, 64));

  std::mt19937_64 rng(23);
  for (std::uint32_t v : {2u, 3u, 64u, 1000u, 70000u}) {
    std::uniform_int_distribution<std::uint32_t> tok(0, v - 1);
    Sequence s(50);
    for (auto& t : s) t = tok(rng);
    CHECK(tokenize_text(render_text(s, v), v) == s);
  }
  CHECK_THROWS_AS(tokenize_text("zzzzzz", 64), Error);
}

TEST_CASE("token_counts") {
  const std::vector<Sequence> texts{{0, 1, 1}, {3}};
  CHECK(token_counts(texts, 4) == std::vector<std::uint64_t>{1, 2, 0, 1});
}
