#include <cmath>

#include "cribcoord/example1.hpp"
#include "cribcoord/regions.hpp"
#include "doctest.h"
#include "oracle/region_oracle.hpp"
#include "support/generators.hpp"

using namespace cribcoord;

namespace {

void check_against(const ConstraintReport& rep, const oracle::Sides& sides, double tol) {
  REQUIRE(rep.inequalities.size() == sides.size());
  for (const auto& q : rep.inequalities) {
    const auto& [lhs, rhs] = sides.at(q.label);
    CHECK(std::fabs(q.rhs - rhs) < tol);
    if (q.kind == NamedBound::Kind::Structural) CHECK(std::fabs(q.lhs - lhs) < tol);
  }
}

// Y independent of everything; q(x1, x2, w, y) = q(x1) q(x2) q(y).
TargetSpec independent_y_target() {
  const Variable x1{var::X1, 2}, x2{var::X2, 2}, w{var::W, 1}, y{var::Y, 2};
  JointPmf j = JointPmf({x1}, {0.3, 0.7});
  j = compose(j, ConditionalKernel({}, {x2}, {0.6, 0.4}));
  j = compose(j, ConditionalKernel({}, {w}, {1.0}));
  j = compose(j, ConditionalKernel({}, {y}, {0.25, 0.75}));
  return TargetSpec(j);
}

SearchConfig small_search(std::size_t restarts) {
  SearchConfig c;
  c.restarts = restarts;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("bound sets carry the expected labels") {
  CHECK(crib_bounds().size() == 8);
  CHECK(nocrib_bounds().size() == 3);
  CHECK(crib_perfect_channel_bounds().size() == 3);
}

TEST_CASE("property: cribbing evaluator matches the oracle") {
  gen::Rng rng(41);
  for (int it = 0; it < 150; ++it) {
    const auto s = gen::random_sizes(rng, 4096);
    const auto q = gen::random_target(rng, s, false);
    const auto ch = gen::random_channel(rng, s, it % 2 == 0);
    const auto j = build_cribbing_joint(q, gen::random_crib(rng, q, s, ch));
    const auto rep = thm1_evaluate(j, 1e-9);
    const auto o = oracle::from(j);
    check_against(rep, oracle::crib_sides(o), 1e-10);
    check_against(crib_feasibility_evaluate(j), oracle::crib_perfect_sides(o), 1e-10);
    // Feasible iff every structural slack clears the tolerance.
    bool all = true;
    for (const auto& in : rep.inequalities)
      if (in.kind == NamedBound::Kind::Structural && in.slack < -rep.tol) all = false;
    CHECK(rep.feasible == all);
    CHECK(rep.min_r01 >= 0.0);
    CHECK(rep.min_r02 >= 0.0);
    CHECK(rep.min_sum >= 0.0);
  }
}

TEST_CASE("property: no-cribbing evaluator matches the oracle") {
  gen::Rng rng(42);
  for (int it = 0; it < 150; ++it) {
    const auto s = gen::random_sizes(rng, 4096);
    const auto q = gen::random_target(rng, s, true);
    const auto ch = gen::random_channel(rng, s, true);
    const auto& L = *ch.links;
    const auto j = build_nocrib_joint(q, gen::random_nocrib(rng, q, s, ch));
    const auto rep = thm2_evaluate(j, L, 1e-9);
    const auto o = oracle::with_link_outputs(oracle::from(j), L.f1, L.f2, L.ytilde1_size, L.ytilde2_size);
    check_against(rep, oracle::nocrib_sides(o), 1e-10);
    CHECK(rep.r02_unlimited);
    CHECK(rep.min_r02 == 0.0);
  }
}

TEST_CASE("no-cribbing evaluation rejects a channel that is not the stated links") {
  gen::Rng rng(43);
  const gen::Sizes s{2, 2, 1, 2, 1, 2, 2, 2, 2};
  const auto q = gen::random_target(rng, s, true);
  const Variable xt1{var::Xt1, 2}, xt2{var::Xt2, 2}, yt{var::Yt, 4};
  const MacChannel noisy{ConditionalKernel({xt1, xt2}, {yt}, std::vector<double>(16, 0.25)), std::nullopt};
  const auto j = build_nocrib_joint(q, gen::random_nocrib(rng, q, s, noisy));
  CHECK_THROWS_AS(thm2_evaluate(j, DeterministicLinks::identity(2, 2)), PreconditionError);
  CHECK_THROWS_AS(thm2_evaluate(j), InvalidArgument);
  CHECK_THROWS_AS(thm1_evaluate(marginalize(j, {var::X1, var::Y})), InvalidArgument);
}

TEST_CASE("Example-1 witnesses on the evaluators") {
  const auto q = example1::build_target();
  const auto crib = build_cribbing_joint(q, example1::crib_witness());
  const auto pc = crib_feasibility_evaluate(crib);
  CHECK(pc.feasible);
  CHECK(pc.at("xtilde1_entropy").lhs == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& in : pc.inequalities) CHECK(std::fabs(in.slack) < 1e-9);
  const auto t1 = thm1_evaluate(crib);
  CHECK(t1.feasible);
  for (const auto& in : t1.inequalities)
    if (in.kind == NamedBound::Kind::Structural) CHECK(std::fabs(in.slack) < 1e-9);

  const auto nocrib = build_nocrib_joint(q, example1::nocrib_witness());
  const auto t2 = thm2_evaluate(nocrib, DeterministicLinks::identity(4, 2));
  CHECK(t2.feasible);
  CHECK(t2.at("link1_capacity").lhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t2.at("link1_capacity").rhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::fabs(t2.at("link2_capacity").slack) < 1e-12);
  // Region nesting: the no-crib witness also satisfies the cribbing constraints.
  CHECK(crib_feasibility_evaluate(nocrib).feasible);
}

TEST_CASE("constant auxiliaries give zero rates but fail the marginal unless q factorizes") {
  const auto q = example1::build_target();
  const Variable t{var::T, 1}, u1{var::U1, 1}, u2{var::U2, 1}, xt1{var::Xt1, 1}, xt2{var::Xt2, 1};
  const auto ch = example1::perfect_channel(1, 1);
  const CribFactorization f{JointPmf({t}, {1.0}),
                            ConditionalKernel({q.x2(), t}, {u2, xt2}, {1.0, 1.0}),
                            ConditionalKernel({q.x1(), xt2, t}, {u1, xt1}, {1.0, 1.0, 1.0, 1.0}),
                            ch.kernel,
                            ConditionalKernel({u1, u2, q.w(), {var::Yt, 1}, t}, {q.y()}, {0.5, 0.5})};
  const auto j = build_cribbing_joint(q, f);
  const auto rep = thm1_evaluate(j);
  CHECK(rep.min_r01 == 0.0);
  CHECK(rep.min_r02 == 0.0);
  CHECK_FALSE(check_marginal_match(j, q, 1e-6).pass);
}

TEST_CASE("property: feasibility is monotone in the rates") {
  gen::Rng rng(44);
  for (int it = 0; it < 200; ++it) {
    const auto s = gen::random_sizes(rng, 1024);
    const auto q = gen::random_target(rng, s, false);
    const auto ch = gen::random_channel(rng, s, false);
    const auto rep = thm1_evaluate(build_cribbing_joint(q, gen::random_crib(rng, q, s, ch)));
    const RatePoint p{rep.min_r01 + 0.1 * double(it % 3), rep.min_r02 + 0.05 * double(it % 5)};
    const RatePoint bigger{p.r01 + 0.3, p.r02 + 0.2};
    CHECK(rep.rate_slack(bigger) >= rep.rate_slack(p));
    if (rep.admits(p)) CHECK(rep.admits(bigger));
  }
}

TEST_CASE("cardinality caps") {
  const auto q = example1::build_target();
  for (std::size_t a : {1, 2, 3})
    for (std::size_t b : {1, 2}) {
      const auto c = cardinality_caps(q, a, b, a * b);
      CHECK(c.u1 == 16 * a * a * b * b);
      CHECK(c.u2 == c.u1 * c.u1);
      CHECK(c.t == 3);
    }
  const Variable x1{var::X1, 1}, x2{var::X2, 1}, w{var::W, 1}, y{var::Y, 1};
  CHECK(cardinality_caps(TargetSpec(JointPmf({x1, x2, w, y}, {1.0})), 1, 1, 1).u1 == 1);
}

TEST_CASE("search: Y independent of the sources needs no shared randomness") {
  const SearchProblem p{independent_y_target(), MacChannel::from_links(DeterministicLinks::identity(2, 2))};
  for (Mode m : {Mode::Crib, Mode::NoCrib}) {
    const auto out = min_r01_search(p, small_search(6), m);
    REQUIRE(out.found);
    CHECK(out.point.r01 < 1e-6);
    CHECK(witness_ok(verify_witness(p, out.best->factorization, m, 1e-6)));
  }
}

TEST_CASE("search: no-cribbing witnesses for Example 1 respect the converse threshold") {
  const SearchProblem p{example1::build_target(), example1::perfect_channel(4, 2)};
  SearchConfig c = small_search(8);
  c.u1_size = 4;
  c.u2_size = 2;
  const auto out = min_rate_search(p, c, Mode::NoCrib, Objective::MinR01, true);
  for (const auto& w : out.all) {
    const auto j = build_joint(p.target, w.factorization);
    CHECK(entropy(j, {var::Xt1}) >= 2.0 - 0.02);
    CHECK(entropy(j, {var::Xt2}) >= 1.0 - 0.02);
    CHECK(witness_ok(verify_witness(p, w.factorization, Mode::NoCrib, c.tol)));
  }
}

TEST_CASE("search: determinism and preconditions") {
  const SearchProblem p{independent_y_target(), MacChannel::from_links(DeterministicLinks::identity(2, 2))};
  SearchConfig c = small_search(4);
  c.threads = 2;
  const auto a = min_rate_search(p, c, Mode::Crib, Objective::MinSum, true);
  const auto b = min_rate_search(p, c, Mode::Crib, Objective::MinSum, true);
  REQUIRE(a.all.size() == b.all.size());
  for (std::size_t i = 0; i < a.all.size(); ++i) {
    CHECK(a.all[i].restart == b.all[i].restart);
    CHECK(a.all[i].report.min_sum == b.all[i].report.min_sum);
  }
  CHECK(a.value == b.value);

  const Variable x1{var::X1, 2}, x2{var::X2, 2}, w{var::W, 1}, y{var::Y, 1};
  const SearchProblem dep{TargetSpec(JointPmf({x1, x2, w, y}, {0.5, 0.0, 0.0, 0.5})),
                          MacChannel::from_links(DeterministicLinks::identity(2, 2))};
  CHECK_THROWS_AS(min_r01_search(dep, c, Mode::NoCrib), PreconditionError);
  SearchConfig bad = c;
  bad.t_size = 4;
  CHECK_THROWS_AS(min_r01_search(p, bad, Mode::Crib), InvalidArgument);
  bad = c;
  bad.restarts = 0;
  CHECK_THROWS_AS(min_r01_search(p, bad, Mode::Crib), InvalidArgument);
}

TEST_CASE("sweep: row count, dominance and converse verdicts") {
  const auto q = example1::build_target();
  const SearchProblem p{q, example1::perfect_channel(2, 2)};
  const auto w = verify_witness(p, example1::crib_witness(), Mode::Crib, 1e-6);
  REQUIRE(witness_ok(w));
  std::vector<RatePoint> grid;
  for (double a : {0.0, 0.5, 1.0})
    for (double b : {0.0, 0.5, 1.0}) grid.push_back({a, b});
  SearchConfig c = small_search(2);
  c.explore_iterations = 20;
  c.polish_iterations = 5;
  const auto res = region_sweep(p, grid, c, Mode::Crib, {}, {w});
  CHECK(res.rows.size() == 9);
  for (const auto& row : res.rows) {
    if (row.point.r01 >= w.report.min_r01 && row.point.r02 >= w.report.min_r02 &&
        row.point.r01 + row.point.r02 >= w.report.min_sum)
      CHECK(row.verdict == Verdict::Feasible);
  }

  // Links too narrow for the no-crib thresholds: the converse blocks every point.
  const DeterministicLinks narrow{{0, 1, 2}, {0, 1}, 3, 2};
  const SearchProblem pn{q, MacChannel::from_links(narrow)};
  const auto blocked = region_sweep(pn, grid, c, Mode::NoCrib, example1::prop1_converse(narrow));
  CHECK(blocked.rows.size() == 9);
  for (const auto& row : blocked.rows) CHECK(row.verdict == Verdict::Infeasible);
  CHECK(blocked.witnesses.empty());
  CHECK_THROWS_AS(region_sweep(p, {}, c, Mode::Crib), InvalidArgument);
}
