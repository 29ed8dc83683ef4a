#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "acmia/acmia_scores.hpp"
#include "acmia/baselines.hpp"
#include "acmia/error.hpp"
#include "acmia/tsp.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace acmia;
using doctest::Approx;

namespace {

SampleTrace one_step(std::vector<double> logits, std::uint32_t token) {
  SampleTrace t;
  t.id = "one";
  t.steps.push_back(TokenStep{token, std::move(logits), std::nullopt});
  return validate_trace(std::move(t));
}

SampleTrace grid_trace(std::map<double, double> grid) {
  SampleTrace t;
  t.id = "g";
  t.fidelity = Fidelity::lossgrid;
  t.steps.push_back(TokenStep{0, {}, {}});
  t.loss_grid = LossGrid(std::move(grid));
  return validate_trace(std::move(t));
}

AcmiaParams params(double tau, DerivMode mode = DerivMode::analytic, double delta = 0.01, bool fos = true) {
  return AcmiaParams{tau, delta, mode, fos};
}

SampleTrace shifted(SampleTrace t, double c) {
  for (auto& s : t.steps) {
    for (auto& z : *s.logits) z += c;
  }
  return t;
}

}  // namespace

TEST_CASE("score_ac examples") {
  std::mt19937_64 rng(1);
  const auto random = testing::random_full_trace(rng, "r", 5, 20);
  CHECK(score_ac(random, params(1.0)) == 0.0);
  for (double tau : {0.25, 0.9, 3.0}) CHECK(score_ac(one_step({0.0, 0.0}, 1), params(tau)) == Approx(0.0).epsilon(1e-15));
  CHECK(score_ac(one_step({1.0, 0.0}, 0), params(2.0)) == Approx(0.16081529666188386).epsilon(1e-12));
}

TEST_CASE("score_derivac examples") {
  for (auto mode : {DerivMode::analytic, DerivMode::finite_difference}) {
    CHECK(score_derivac(one_step({2.0, 2.0, 2.0}, 1), params(1.7, mode)) == Approx(0.0).epsilon(1e-15));
  }
  const auto t = one_step({1.0, 0.0}, 0);
  CHECK(score_derivac(t, params(1.0)) == Approx(-0.26894142136999512).epsilon(1e-12));
  CHECK(score_derivac(t, params(1.0, DerivMode::finite_difference, 0.01)) ==
        Approx(-0.0026724379286263).epsilon(1e-9));
}

TEST_CASE("score_normac examples") {
  CHECK(score_normac(one_step({1.0, 0.0}, 0), params(1.0)) == Approx(0.60653065971263342).epsilon(1e-10));
  CHECK(score_normac(one_step({1.0, 0.0}, 1), params(1.0)) == Approx(-1.6487212707001282).epsilon(1e-10));
  CHECK(score_normac(one_step({0.5, 0.5, 0.5}, 2), params(3.0)) == 0.0);
}

TEST_CASE("token-level scores reject other fidelities") {
  const auto grid = grid_trace({{1.0, 2.0}, {2.0, 2.4}});
  for (auto fn : {score_ac, score_derivac, score_normac}) {
    try {
      fn(grid, params(2.0));
      FAIL("expected WrongFidelity");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::WrongFidelity);
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(params(0.0)), Error);
  CHECK_THROWS_AS(validate(params(1.0, DerivMode::analytic, 0.0)), Error);
  CHECK_THROWS_AS(validate(params(-1.0)), Error);
  CHECK_NOTHROW(validate(AcmiaParams{}));
}

TEST_CASE("lossgrid examples") {
  CHECK(score_ac_lossgrid(grid_trace({{1.0, 2.0}, {2.0, 2.4}}), 2.0) == Approx(0.4).epsilon(1e-12));
  CHECK(score_ac_lossgrid(grid_trace({{1.0, 2.0}, {0.5, 1.1}}), 0.5) == Approx(0.9).epsilon(1e-12));
  CHECK(score_derivac_lossgrid(grid_trace({{1.0, 2.0}, {1.01, 2.1}}), 1.0, 0.01) == Approx(-0.1).epsilon(1e-12));
  CHECK(score_derivac_lossgrid(grid_trace({{1.0, 2.0}, {1.5, 2.0}, {1.6, 2.0}}), 1.5, 0.1) == 0.0);
  CHECK(score_ac_lossgrid(grid_trace({{1.0, 2.0}, {2.0, 2.4}}), 1.0) == 0.0);

  try {
    score_ac_lossgrid(grid_trace({{1.0, 2.0}, {2.0, 2.4}}), 3.0);
    FAIL("expected MissingGridPoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingGridPoint);
  }
  try {
    score_ac_lossgrid(one_step({1.0, 0.0}, 0), 2.0);
    FAIL("expected WrongFidelity");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::WrongFidelity);
  }
}

TEST_CASE("lossgrid variants match token-level scores over all tokens") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto full = testing::random_full_trace(rng, "r", 1, 30);
    const double tau = 0.3 + 0.04 * i;
    const double delta = 0.01;
    const std::vector<double> taus{tau, tau + delta};
    const auto grid = validate_trace(to_loss_grid(full, taus));
    CHECK(std::abs(score_ac_lossgrid(grid, tau) - score_ac(full, params(tau, DerivMode::analytic, delta, false))) <= 1e-9);
    CHECK(std::abs(score_derivac_lossgrid(grid, tau, delta) -
                   score_derivac(full, params(tau, DerivMode::finite_difference, delta, false))) <= 1e-9);
  }
}

TEST_CASE("AC continuity around tau = 1") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto t = testing::random_full_trace(rng, "r", 2, 20);
    double bound = 0.0;
    for (const auto& s : t.steps) {
      for (double tau : {0.9, 1.0, 1.1}) bound = std::max(bound, std::abs(dlogtsp_dtau(*s.logits, s.token_id, tau)));
    }
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      for (double tau : {1.0 - eps, 1.0 + eps}) {
        // Slack covers curvature between 1 and tau.
        CHECK(std::abs(score_ac(t, params(tau))) <= bound * eps * 1.5 + 1e-12);
      }
    }
  }
}

TEST_CASE("finite difference over delta approaches the analytic derivative") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> tau_dist(0.3, 4.0);
  for (int i = 0; i < 100; ++i) {
    const auto t = testing::random_full_trace(rng, "r", 1, 20);
    const double tau = tau_dist(rng);
    const double delta = 1e-4;
    const double analytic = score_derivac(t, params(tau));
    const double fd = score_derivac(t, params(tau, DerivMode::finite_difference, delta)) / delta;
    CHECK(std::abs(fd - analytic) <= 1e-3 * std::max(std::abs(analytic), 1e-3));
  }
}

TEST_CASE("NormAC at tau = 1 equals Min-K%++ at k = 100") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto t = testing::random_full_trace(rng, "r", 1, 30);
    const double minkpp = score_minkpp(t, BaselineParams{100.0, 3.0, 6});
    CHECK(std::abs(score_normac(t, params(1.0, DerivMode::analytic, 0.01, false)) - minkpp) <= 1e-9);
  }
}

TEST_CASE("scores are invariant to a constant logit shift") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> shift(-1e3, 1e3);
  for (int i = 0; i < 100; ++i) {
    const auto t = testing::random_full_trace(rng, "r", 1, 20);
    const auto s = shifted(t, shift(rng));
    const double tau = 0.5 + 0.02 * i;
    for (auto mode : {DerivMode::analytic, DerivMode::finite_difference}) {
      CHECK(std::abs(score_derivac(t, params(tau, mode)) - score_derivac(s, params(tau, mode))) <= 1e-9);
    }
    CHECK(std::abs(score_ac(t, params(tau)) - score_ac(s, params(tau))) <= 1e-9);
    CHECK(std::abs(score_normac(t, params(tau)) - score_normac(s, params(tau))) <= 1e-9);
  }
}

TEST_CASE("scaling finite-difference scores by 1/delta keeps their order") {
  std::mt19937_64 rng(7);
  const double delta = 0.01;
  std::vector<double> raw;
  for (int i = 0; i < 60; ++i) {
    raw.push_back(score_derivac(testing::random_full_trace(rng, "r", 1, 20), params(1.3, DerivMode::finite_difference, delta)));
  }
  std::vector<double> scaled;
  for (double v : raw) scaled.push_back(v / delta);
  std::vector<std::size_t> a(raw.size()), b(raw.size());
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  std::stable_sort(a.begin(), a.end(), [&](auto i, auto j) { return raw[i] < raw[j]; });
  std::stable_sort(b.begin(), b.end(), [&](auto i, auto j) { return scaled[i] < scaled[j]; });
  CHECK(a == b);
}

TEST_CASE("FOS restriction only drops repeated tokens") {
  SampleTrace t;
  t.id = "rep";
  t.steps.push_back(TokenStep{0, std::vector<double>{1.0, 0.0, -1.0}, {}});
  t.steps.push_back(TokenStep{1, std::vector<double>{0.0, 2.0, 0.0}, {}});
  t.steps.push_back(TokenStep{0, std::vector<double>{-3.0, 0.0, 3.0}, {}});
  t = validate_trace(t);
  SampleTrace head = t;
  head.steps.pop_back();
  CHECK(score_ac(t, params(2.0)) == score_ac(head, params(2.0, DerivMode::analytic, 0.01, false)));
  CHECK(score_ac(t, params(2.0)) != score_ac(t, params(2.0, DerivMode::analytic, 0.01, false)));
}
