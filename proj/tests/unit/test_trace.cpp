#include <cmath>
#include <random>
#include <set>

#include "acmia/error.hpp"
#include "acmia/trace.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acmia;
using doctest::Approx;

namespace {

SampleTrace full_trace(std::vector<std::pair<std::uint32_t, std::vector<double>>> steps) {
  SampleTrace t;
  t.id = "t";
  for (auto& [token, logits] : steps) t.steps.push_back(TokenStep{token, std::move(logits), std::nullopt});
  return t;
}

SampleTrace chosen_trace(const std::vector<double>& logprobs) {
  SampleTrace t;
  t.id = "c";
  t.fidelity = Fidelity::chosen;
  for (std::size_t i = 0; i < logprobs.size(); ++i) {
    t.steps.push_back(TokenStep{static_cast<std::uint32_t>(i), std::nullopt, logprobs[i]});
  }
  return t;
}

SampleTrace lossgrid_trace(std::map<double, double> grid, std::size_t steps = 3) {
  SampleTrace t;
  t.id = "g";
  t.fidelity = Fidelity::lossgrid;
  for (std::size_t i = 0; i < steps; ++i) t.steps.push_back(TokenStep{static_cast<std::uint32_t>(i), {}, {}});
  t.loss_grid = LossGrid(std::move(grid));
  return t;
}

SampleTrace with_tokens(const std::vector<std::uint32_t>& tokens) {
  SampleTrace t;
  t.id = "f";
  t.fidelity = Fidelity::chosen;
  for (auto token : tokens) t.steps.push_back(TokenStep{token, std::nullopt, -1.0});
  return t;
}

ErrorKind kind_of(const SampleTrace& t) {
  try {
    validate_trace(t);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Parse;
}

}  // namespace

TEST_CASE("validate_trace fills chosen_logprob from logits") {
  const auto t = validate_trace(full_trace({{0, {0.0, 0.0}}}));
  REQUIRE(t.steps[0].chosen_logprob.has_value());
  CHECK(*t.steps[0].chosen_logprob == Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("validate_trace accepts a consistent chosen_logprob") {
  auto t = full_trace({{0, {1.0, 0.0}}});
  t.steps[0].chosen_logprob = -0.313262;
  CHECK_NOTHROW(validate_trace(t));
  t.steps[0].chosen_logprob = -0.4;
  CHECK(kind_of(t) == ErrorKind::InconsistentLogprob);
}

TEST_CASE("validate_trace rejects malformed traces") {
  auto missing = chosen_trace({-1.0, -2.0});
  missing.steps[1].chosen_logprob.reset();
  CHECK(kind_of(missing) == ErrorKind::FidelityMismatch);

  CHECK(kind_of(full_trace({})) == ErrorKind::EmptyTrace);

  auto full_without_logits = full_trace({{0, {0.0, 0.0}}});
  full_without_logits.steps[0].logits.reset();
  full_without_logits.steps[0].chosen_logprob = -1.0;
  CHECK(kind_of(full_without_logits) == ErrorKind::FidelityMismatch);

  CHECK(kind_of(full_trace({{2, {0.0, 0.0}}})) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of(full_trace({{0, {0.0}}})) == ErrorKind::VocabularyTooSmall);
  CHECK(kind_of(full_trace({{0, {0.0, NAN}}})) == ErrorKind::NonFiniteLogit);

  CHECK(kind_of(chosen_trace({0.5})) == ErrorKind::InconsistentLogprob);

  auto chosen_with_grid = chosen_trace({-1.0});
  chosen_with_grid.loss_grid = LossGrid({{1.0, 1.0}, {2.0, 1.5}});
  CHECK(kind_of(chosen_with_grid) == ErrorKind::FidelityMismatch);

  CHECK(kind_of(lossgrid_trace({{2.0, 1.0}, {3.0, 1.0}})) == ErrorKind::FidelityMismatch);
  CHECK(kind_of(lossgrid_trace({{1.0, 1.0}})) == ErrorKind::FidelityMismatch);
  CHECK(kind_of(lossgrid_trace({{1.0, -0.5}, {2.0, 1.0}})) == ErrorKind::FidelityMismatch);
  CHECK_NOTHROW(validate_trace(lossgrid_trace({{1.0, 2.5}, {2.0, 2.9}})));
}

TEST_CASE("validate_trace is idempotent") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto once = testing::random_full_trace(rng, "r" + std::to_string(i));
    CHECK(validate_trace(once) == once);
  }
  const auto chosen = validate_trace(chosen_trace({-1.0, -3.0}));
  CHECK(validate_trace(chosen) == chosen);
}

TEST_CASE("fos_positions") {
  using V = std::vector<std::size_t>;
  CHECK(fos_positions(with_tokens({5, 7, 5, 9})) == V{0, 1, 3});
  CHECK(fos_positions(with_tokens({3})) == V{0});
  CHECK(fos_positions(with_tokens({2, 2, 2, 2})) == V{0});

  std::mt19937_64 rng(23);
  for (int i = 0; i < 100; ++i) {
    const auto t = testing::random_full_trace(rng, "r");
    const auto pos = fos_positions(t);
    REQUIRE(!pos.empty());
    CHECK(pos.front() == 0);
    std::set<std::uint32_t> seen;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      if (k > 0) CHECK(pos[k] > pos[k - 1]);
      CHECK(seen.insert(t.steps[pos[k]].token_id).second);
    }
    // Every token id of the trace is represented exactly once.
    std::set<std::uint32_t> all;
    for (const auto& s : t.steps) all.insert(s.token_id);
    CHECK(all == seen);
  }
}

TEST_CASE("sample_loss") {
  CHECK(sample_loss(validate_trace(chosen_trace({-1.0, -3.0})), false) == 2.0);

  auto uniform = full_trace({});
  for (std::uint32_t tok : {0u, 3u, 1u, 1u, 2u}) uniform.steps.push_back(TokenStep{tok, std::vector<double>(4, 0.5), {}});
  CHECK(sample_loss(validate_trace(uniform), false) == Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(sample_loss(validate_trace(uniform), true) == Approx(std::log(4.0)).epsilon(1e-12));

  const auto grid = validate_trace(lossgrid_trace({{1.0, 2.5}, {2.0, 2.9}}));
  CHECK(sample_loss(grid, false) == 2.5);
  CHECK(sample_loss(grid, true) == 2.5);

  // Repeated tokens: FOS keeps steps 0 and 1 only.
  auto repeated = chosen_trace({-1.0, -2.0, -9.0});
  repeated.steps[2].token_id = 0;
  CHECK(sample_loss(validate_trace(repeated), true) == 1.5);
  CHECK(sample_loss(validate_trace(repeated), false) == 4.0);

  auto distinct = chosen_trace({-0.25, -1.75, -4.0, -0.5});
  distinct = validate_trace(distinct);
  CHECK(sample_loss(distinct, true) == sample_loss(distinct, false));
}

TEST_CASE("to_loss_grid") {
  std::mt19937_64 rng(31);
  const auto full = testing::random_full_trace(rng, "x", 3, 10);
  const std::vector<double> taus{0.5, 2.0};
  const auto grid = validate_trace(to_loss_grid(full, taus));
  CHECK(grid.fidelity == Fidelity::lossgrid);
  CHECK(grid.id == full.id);
  CHECK(grid.steps.size() == full.steps.size());
  REQUIRE(grid.loss_grid.has_value());
  CHECK(grid.loss_grid->at(1.0) == Approx(sample_loss(full, false)).epsilon(1e-12));
  for (double tau : taus) {
    long double sum = 0.0L;
    for (const auto& s : full.steps) sum -= testing::naive_log_tsp(*s.logits, s.token_id, tau);
    CHECK(grid.loss_grid->at(tau) == Approx(static_cast<double>(sum / full.steps.size())).epsilon(1e-10));
  }
  CHECK_THROWS_AS(grid.loss_grid->at(3.0), Error);
  CHECK(grid.loss_grid->find(0.5 + 1e-12).has_value());
}

TEST_CASE("labels, fidelities and splits parse and print") {
  for (auto l : {Label::member, Label::nonmember, Label::unlabeled}) CHECK(parse_label(to_string(l)) == l);
  for (auto f : {Fidelity::full, Fidelity::chosen, Fidelity::lossgrid}) CHECK(parse_fidelity(to_string(f)) == f);
  for (auto s : {Split::calibration, Split::evaluation}) CHECK(parse_split(to_string(s)) == s);
  CHECK_THROWS_AS(parse_fidelity("FULLish"), Error);
}

TEST_CASE("LabeledCorpus") {
  auto a = validate_trace(chosen_trace({-1.0}));
  a.id = "a";
  a.label = Label::member;
  auto b = a;
  b.id = "b";
  b.label = Label::nonmember;
  auto u = a;
  u.id = "u";
  u.label = Label::unlabeled;

  const LabeledCorpus corpus({a, b, u}, {{"a", Split::calibration}, {"b", Split::evaluation}, {"u", Split::evaluation}});
  CHECK(corpus.subset(Split::calibration).size() == 1);
  CHECK(corpus.subset(Split::evaluation).size() == 2);
  CHECK(corpus.split_of("a") == Split::calibration);
  CHECK_FALSE(corpus.split_of("zzz").has_value());

  CHECK_THROWS_AS(LabeledCorpus({a, a}, {}), Error);
  CHECK_THROWS_AS(LabeledCorpus({a}, {{"missing", Split::evaluation}}), Error);
  CHECK_THROWS_AS(LabeledCorpus({u}, {{"u", Split::calibration}}), Error);
}

TEST_CASE("check_disjoint") {
  auto a = validate_trace(chosen_trace({-1.0}));
  a.id = "a";
  auto b = a;
  b.id = "b";
  const std::vector<SampleTrace> left{a}, right{b}, both{a, b};
  CHECK_NOTHROW(check_disjoint(left, right));
  try {
    check_disjoint(left, both);
    FAIL("expected SplitOverlap");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SplitOverlap);
  }
}
