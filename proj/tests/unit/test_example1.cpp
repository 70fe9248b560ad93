#include <cmath>

#include "cribcoord/example1.hpp"
#include "doctest.h"
#include "oracle/naive_info.hpp"

using namespace cribcoord;
using namespace cribcoord::example1;

TEST_CASE("target: X1 two uniform bits, B uniform, Y the selected bit") {
  const auto q = build_target();
  const auto& j = q.joint();
  CHECK(q.x1().size == 4);
  CHECK(q.x2().size == 2);
  CHECK(q.w().size == 1);
  CHECK(q.y().size == 2);
  // P(x1 = 1, b = 1, y = 1): x1 index 1 is (x11, x12) = (0, 1), B = 2 selects x12 = 1.
  const std::vector<std::size_t> hit{1, 1, 0, 1}, miss{1, 0, 0, 1};
  CHECK(j.at(hit) == doctest::Approx(1.0 / 8).epsilon(1e-14));
  CHECK(j.at(miss) == 0.0);
  const auto y = marginalize(j, {var::Y});
  CHECK(y[0] == doctest::Approx(0.5));
  CHECK(q.conditional_dependence() < 1e-15);
  for (std::size_t x1 = 0; x1 < 4; ++x1) {
    CHECK(select(x1, 0) == (x1 >> 1));
    CHECK(select(x1, 1) == (x1 & 1));
  }
}

TEST_CASE("no-crib witness: triple (2, 1, 3), exact marginal, tight link constraints") {
  const auto w = verify_nocrib_witness();
  CHECK(w.match.worst < 1e-12);
  CHECK(w.triple.h1 == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(w.triple.h2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.triple.h12 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(w.report.feasible);
  CHECK(w.general.feasible);
  const auto [g1, g2] = selector_markov_gaps(w.joint);
  CHECK(std::fabs(g1) < 1e-10);
  CHECK(std::fabs(g2) < 1e-10);
  // Entropies recomputed by the oracle.
  CHECK(std::fabs(oracle::entropy(w.joint, {var::Xt1}) - 2.0) < 1e-12);
  CHECK(std::fabs(oracle::entropy(w.joint, {var::Xt1, var::Xt2}) - 3.0) < 1e-12);
}

TEST_CASE("crib witness: triple (1, 1, 2) and all three constraints tight") {
  const auto w = verify_crib_witness();
  CHECK(w.match.worst < 1e-12);
  CHECK(w.triple.h1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.triple.h2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(w.triple.h12 == doctest::Approx(2.0).epsilon(1e-14));
  REQUIRE(w.report.inequalities.size() == 3);
  for (const auto& in : w.report.inequalities) CHECK(std::fabs(in.slack) < 1e-9);
  CHECK(w.report.feasible);
  CHECK(w.general.feasible);
  // First constraint's rhs is I(X1B ; X1, B) = 1.
  CHECK(std::fabs(oracle::mutual_information(w.joint, {var::U1}, {var::X1, var::X2}) - 1.0) < 1e-12);
  // Enc 1 sees B only through Xtilde2.
  CHECK(check_markov(w.joint, {var::U1, var::Xt1}, {var::X2}, {var::X1, var::Xt2, var::T}) < 1e-12);
}

TEST_CASE("converse hook follows link image sizes") {
  CHECK_FALSE(prop1_converse(DeterministicLinks::identity(4, 2))({0.0, 0.0}));
  CHECK(prop1_converse(DeterministicLinks{{0, 1, 2, 2}, {0, 1}, 3, 2})({5.0, 5.0}));
  CHECK(prop1_converse(DeterministicLinks{{0, 1, 2, 3}, {0, 0}, 4, 1})({0.0, 0.0}));
}

TEST_CASE("small adversarial search finds nothing below the thresholds") {
  Prop1Config c;
  c.search.restarts = 24;
  c.search.u1_size = 4;
  c.search.threads = 1;
  const auto ev = prop1_adversarial_search(c);
  for (const auto* e : {&ev.u1, &ev.u2}) {
    CHECK(e->restarts == 24);
    CHECK(e->counterexamples == 0);
    if (e->min_matched) CHECK(*e->min_matched >= e->threshold - c.margin);
    CHECK(e->verdict == "no counterexample found (24 restarts)");
  }
  CHECK(ev.u1.threshold == 2.0);
  CHECK(ev.u2.threshold == 1.0);
  CHECK(ev.u1.matched > 0);
  CHECK(ev.u2.matched > 0);
}

TEST_CASE("binary Xtilde1 with a capped U1 cannot reproduce the target without cribbing") {
  Prop1Config c;
  c.search.restarts = 16;
  c.search.u1_size = 1;
  c.search.u2_size = 2;
  c.search.threads = 1;
  c.xt1_size = 2;
  c.xt2_size = 2;
  const auto ev = prop1_adversarial_search(c);
  CHECK(ev.u1.matched == 0);
  CHECK(ev.u1.best_deviation > 1e-3);
}

TEST_CASE("crib search reaches H(Xtilde1) close to 1") {
  CribSearchConfig c;
  c.search.restarts = 30;
  c.search.threads = 1;
  const auto r = crib_search(c);
  REQUIRE(r.found);
  CHECK(r.triple.h1 <= 1.02);
  CHECK(r.triple.h1 >= 1.0 - 1e-6);
  REQUIRE(r.report);
  CHECK(r.report->feasible);
  CHECK(r.match.pass);
}
