#include <cmath>
#include <random>

#include "acmia/calibrate.hpp"
#include "acmia/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acmia;
using doctest::Approx;

namespace {

// Members have sharper next-token distributions around the realized token.
std::vector<SampleTrace> labeled_corpus(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<SampleTrace> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto t = testing::random_full_trace(rng, "s" + std::to_string(i), 4, 16, 8);
    const bool member = i % 2 == 0;
    t.label = member ? Label::member : Label::nonmember;
    if (member) {
      for (auto& s : t.steps) {
        (*s.logits)[s.token_id] += 1.5;
        s.chosen_logprob.reset();
      }
      t = validate_trace(std::move(t));
    }
    out.push_back(std::move(t));
  }
  return out;
}

AttackConfig attack(AttackKind kind) {
  AttackConfig c;
  c.kind = kind;
  return c;
}

}  // namespace

TEST_CASE("grid construction") {
  const auto g = TuneGrid::from_log2(-3.0, 3.0, 0.1);
  const auto alphas = g.alphas();
  CHECK(alphas.size() == 61);
  CHECK(alphas.front() == Approx(-3.0 * std::log(2.0)));
  CHECK(alphas.back() == Approx(3.0 * std::log(2.0)));
  CHECK(TuneGrid{0.5, 0.5, 0.1}.alphas() == std::vector<double>{0.5});
  CHECK_THROWS_AS(TuneGrid({1.0, 0.0, 0.1}).validate(), Error);
  CHECK_THROWS_AS(TuneGrid({0.0, 1.0, 0.0}).validate(), Error);
  CHECK_THROWS_AS(TuneGrid({0.0, 1.0, 1e-5}).validate(), Error);
  CHECK_NOTHROW(TuneGrid({0.0, 1.0, 1e-4}).validate());
}

TEST_CASE("single-point grid returns that temperature") {
  const auto corpus = labeled_corpus(1, 40);
  const auto r = tune_temperature(corpus, attack(AttackKind::ac), TuneGrid{0.4, 0.4, 0.1});
  CHECK(r.curve.size() == 1);
  CHECK(r.alpha_star == 0.4);
  CHECK(r.tau_star == std::exp(0.4));
  CHECK(r.objective_value == r.curve[0].objective);
}

TEST_CASE("AC at tau = 1 is uninformative") {
  const auto corpus = labeled_corpus(2, 40);
  const auto r = tune_temperature(corpus, attack(AttackKind::ac), TuneGrid{0.0, 0.0, 0.1});
  CHECK(r.tau_star == 1.0);
  CHECK(r.objective_value == 0.5);
}

TEST_CASE("result invariants and determinism") {
  const auto corpus = labeled_corpus(3, 60);
  for (auto kind : {AttackKind::ac, AttackKind::deriv_ac, AttackKind::norm_ac}) {
    const auto grid = TuneGrid::from_log2(-2.0, 2.0, 0.25);
    const auto r = tune_temperature(corpus, attack(kind), grid);
    double best = 0.0;
    for (const auto& c : r.curve) best = std::max(best, c.objective);
    CHECK(r.objective_value == best);
    CHECK(r.tau_star == std::exp(r.alpha_star));
    CHECK(r.log2_tau_star == Approx(r.alpha_star / std::log(2.0)).epsilon(1e-15));

    const auto again = tune_temperature(corpus, attack(kind), grid, {}, 4);
    CHECK(again.tau_star == r.tau_star);
    CHECK(again.objective_value == r.objective_value);
    REQUIRE(again.curve.size() == r.curve.size());
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
      CHECK(again.curve[i].tau == r.curve[i].tau);
      CHECK(again.curve[i].objective == r.curve[i].objective);
    }
  }
}

TEST_CASE("refining the grid never lowers the optimum") {
  const auto corpus = labeled_corpus(4, 50);
  for (auto kind : {AttackKind::ac, AttackKind::norm_ac}) {
    double previous = 0.0;
    for (double step : {0.8, 0.4, 0.2, 0.1, 0.05}) {
      const auto r = tune_temperature(corpus, attack(kind), TuneGrid::from_log2(-3.0, 3.0, step));
      CHECK(r.objective_value >= previous);
      previous = r.objective_value;
    }
  }
}

TEST_CASE("ties prefer the temperature closest to 1") {
  // All scores tie at every temperature, so every AUROC is 0.5.
  std::vector<SampleTrace> corpus;
  for (int i = 0; i < 4; ++i) {
    SampleTrace t;
    t.id = "u" + std::to_string(i);
    t.label = i % 2 ? Label::member : Label::nonmember;
    t.steps.push_back(TokenStep{0, std::vector<double>{0.0, 0.0}, {}});
    corpus.push_back(validate_trace(t));
  }
  const auto r = tune_temperature(corpus, attack(AttackKind::norm_ac), TuneGrid{-1.0, 1.0, 0.5});
  CHECK(r.alpha_star == 0.0);
  const auto skew = tune_temperature(corpus, attack(AttackKind::norm_ac), TuneGrid{-0.75, 0.75, 0.5});
  CHECK(skew.alpha_star == -0.25);
}

TEST_CASE("tuning errors") {
  auto corpus = labeled_corpus(5, 10);
  const auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Parse;
  };
  std::vector<SampleTrace> members;
  for (const auto& t : corpus) {
    if (t.label == Label::member) members.push_back(t);
  }
  CHECK(kind_of([&] { tune_temperature(members, attack(AttackKind::ac), TuneGrid{}); }) == ErrorKind::DegenerateSplit);
  CHECK(kind_of([&] { tune_temperature(corpus, attack(AttackKind::loss), TuneGrid{}); }) == ErrorKind::InvalidConfig);

  const std::vector<double> taus{2.0};
  std::vector<SampleTrace> grids;
  for (const auto& t : corpus) {
    auto g = to_loss_grid(t, taus);
    g.label = t.label;
    grids.push_back(validate_trace(g));
  }
  CHECK(kind_of([&] { tune_temperature(grids, attack(AttackKind::ac), TuneGrid{}); }) == ErrorKind::WrongFidelity);
}

TEST_CASE("k tuning") {
  const auto corpus = labeled_corpus(6, 60);
  const std::vector<double> ks{5, 10, 20, 50, 100};
  const auto r = tune_k_percent(corpus, attack(AttackKind::min_k), ks);
  REQUIRE(r.curve.size() == ks.size());
  double best = 0.0;
  for (const auto& [k, obj] : r.curve) best = std::max(best, obj);
  CHECK(r.objective_value == best);
  for (const auto& [k, obj] : r.curve) {
    if (obj == best) {
      CHECK(r.k_star == k);
      break;
    }
  }
  CHECK_THROWS_AS(tune_k_percent(corpus, attack(AttackKind::ac), ks), Error);
}
