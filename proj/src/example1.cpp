#include "cribcoord/example1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cribcoord/rng.hpp"
#include "parallel.hpp"
#include "search_programs.hpp"

namespace cribcoord::example1 {
namespace {

const Variable kX1{var::X1, kX1Size};
const Variable kX2{var::X2, kBSize};
const Variable kW{var::W, 1};
const Variable kY{var::Y, 2};
const Variable kT{var::T, 1};

JointPmf trivial_t() { return JointPmf({kT}, {1.0}); }

}  // namespace

std::size_t select(std::size_t x1, std::size_t b) { return b == 0 ? (x1 >> 1) & 1 : x1 & 1; }

TargetSpec build_target() {
  std::vector<double> p(kX1Size * kBSize * 2, 0.0);
  for (std::size_t x1 = 0; x1 < kX1Size; ++x1)
    for (std::size_t b = 0; b < kBSize; ++b) p[(x1 * kBSize + b) * 2 + select(x1, b)] = 1.0 / 8.0;
  return TargetSpec(JointPmf({kX1, kX2, kW, kY}, std::move(p)));
}

MacChannel perfect_channel(std::size_t xt1_size, std::size_t xt2_size) {
  return MacChannel::from_links(DeterministicLinks::identity(xt1_size, xt2_size));
}

NoCribFactorization nocrib_witness() {
  const Variable u1{var::U1, kX1Size}, u2{var::U2, kBSize};
  const Variable xt1{var::Xt1, kX1Size}, xt2{var::Xt2, kBSize};
  const auto ch = perfect_channel(kX1Size, kBSize);
  const std::size_t nb = kBSize;
  return NoCribFactorization{
      trivial_t(),
      ConditionalKernel::deterministic({kX1, kT}, {u1}, [](std::size_t r) { return r; }),
      ConditionalKernel::deterministic({u1, kX1, kT}, {xt1}, [](std::size_t r) { return r % kX1Size; }),
      ConditionalKernel::deterministic({kX2, kT}, {u2}, [](std::size_t r) { return r; }),
      ConditionalKernel::deterministic({u2, kX2, kT}, {xt2}, [nb](std::size_t r) { return r % nb; }),
      ch.kernel,
      ConditionalKernel::deterministic({u1, u2, kW, {var::Yt, ch.yt_size()}, kT}, {kY},
                                       [](std::size_t r) {
                                         const std::size_t yt_n = kX1Size * kBSize;
                                         const std::size_t u = r / yt_n;  // (u1, u2), W and T trivial
                                         return select(u / kBSize, u % kBSize);
                                       }),
  };
}

CribFactorization crib_witness() {
  const Variable u1{var::U1, 2}, u2{var::U2, kBSize};
  const Variable xt2{var::Xt2, kBSize};
  const auto ch = perfect_channel(2, kBSize);
  return CribFactorization{
      trivial_t(),
      ConditionalKernel::deterministic({kX2, kT}, {u2, xt2}, [](std::size_t b) { return b * kBSize + b; }),
      ConditionalKernel::deterministic({kX1, xt2, kT}, {u1, {var::Xt1, 2}},
                                       [](std::size_t r) {
                                         const std::size_t s = select(r / kBSize, r % kBSize);
                                         return s * 2 + s;
                                       }),
      ch.kernel,
      ConditionalKernel::deterministic({u1, u2, kW, {var::Yt, ch.yt_size()}, kT}, {kY},
                                       [&](std::size_t r) { return r / (kBSize * ch.yt_size()); }),
  };
}

EntropyTriple entropy_triple(const JointPmf& joint) {
  return {entropy(joint, {var::Xt1}), entropy(joint, {var::Xt2}), entropy(joint, {var::Xt1, var::Xt2})};
}

std::pair<double, double> selector_markov_gaps(const JointPmf& joint) {
  using namespace var;
  return {mutual_information(joint, {Y}, {X2}, {X1, U2, Xt2}), mutual_information(joint, {Y}, {X1}, {X2, U1, Xt1})};
}

WitnessCheck verify_nocrib_witness() {
  const auto target = build_target();
  const JointPmf joint = build_nocrib_joint(target, nocrib_witness());
  const auto links = DeterministicLinks::identity(kX1Size, kBSize);
  auto rep = thm2_evaluate(joint, links);
  return WitnessCheck{joint, rep, rep, check_marginal_match(joint, target, 1e-12), entropy_triple(joint)};
}

WitnessCheck verify_crib_witness() {
  const auto target = build_target();
  const JointPmf joint = build_cribbing_joint(target, crib_witness());
  return WitnessCheck{joint, crib_feasibility_evaluate(joint), thm1_evaluate(joint),
                      check_marginal_match(joint, target, 1e-12), entropy_triple(joint)};
}

// -------------------------------------------------------- adversarial search

namespace {

struct RunSummary {
  bool matched = false;
  double value = 0.0;
  double deviation = 0.0;
};

ConverseEvidence summarize(const std::string& quantity, double threshold, double margin,
                           const std::vector<RunSummary>& runs) {
  ConverseEvidence ev;
  ev.quantity = quantity;
  ev.threshold = threshold;
  ev.restarts = runs.size();
  ev.best_deviation = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    ev.best_deviation = std::min(ev.best_deviation, r.deviation);
    if (r.matched) {
      ++ev.matched;
      if (!ev.min_matched || r.value < *ev.min_matched) ev.min_matched = r.value;
      if (r.value < threshold - margin) ++ev.counterexamples;
    }
    if (r.value < threshold - margin && (!ev.best_deviation_below || r.deviation < *ev.best_deviation_below))
      ev.best_deviation_below = r.deviation;
  }
  ev.verdict = ev.counterexamples ? "counterexample found (" + std::to_string(ev.counterexamples) + " runs)"
                                  : "no counterexample found (" + std::to_string(ev.restarts) + " restarts)";
  return ev;
}

}  // namespace

Prop1Evidence prop1_adversarial_search(const Prop1Config& cfg) {
  cfg.search.validate();
  const SearchProblem problem{build_target(), perfect_channel(cfg.xt1_size, cfg.xt2_size)};
  const auto spec =
      detail::make_program(problem, Mode::NoCrib, cfg.search.u1_size, cfg.search.u2_size, cfg.search.t_size);
  const auto settings = detail::solver_settings(cfg.search);

  using namespace var;
  const InfoExpr q1 = InfoExpr::I({U1, Xt1}, {X1}, {T});
  const InfoExpr q2 = InfoExpr::I({U2, Xt2}, {X2}, {T});

  auto run = [&](const InfoExpr& q, std::uint64_t tag) {
    engine::Goal goal;
    goal.objective = {q};
    goal.match = problem.target.joint();
    const engine::Program program(spec, std::move(goal));
    return detail::parallel_map(cfg.search.restarts, cfg.search.threads, [&](std::size_t r) {
      const auto res = program.solve(settings, stream_seed(cfg.search.seed, r, tag));
      const auto f = detail::to_factorization(problem, Mode::NoCrib, program.spec(), res.tables);
      const JointPmf joint = build_joint(problem.target, f);
      const auto m = check_marginal_match(joint, problem.target, cfg.match_tol);
      return RunSummary{m.pass, q.eval(joint), m.worst};
    });
  };
  return {summarize("I(U1,Xtilde1;X1|T)", 2.0, cfg.margin, run(q1, 11)),
          summarize("I(U2,Xtilde2;X2|T)", 1.0, cfg.margin, run(q2, 12))};
}

ConverseHook prop1_converse(const DeterministicLinks& links) {
  const bool blocked = links.image1_size() < kX1Size || links.image2_size() < kBSize;
  return [blocked](const RatePoint&) { return blocked; };
}

// ------------------------------------------------------------ crib search

CribSearchResult crib_search(const CribSearchConfig& cfg) {
  cfg.search.validate();
  const SearchProblem problem{build_target(), perfect_channel(cfg.xt1_size, cfg.xt2_size)};
  const auto bounds = crib_perfect_channel_bounds();
  engine::Goal goal;
  goal.objective = {InfoExpr::H({var::Xt1}, {var::T})};
  goal.constraints = detail::structural_exprs(bounds);
  goal.match = problem.target.joint();
  const engine::Program program(
      detail::make_program(problem, Mode::Crib, cfg.search.u1_size, cfg.search.u2_size, cfg.search.t_size),
      std::move(goal));
  const auto settings = detail::solver_settings(cfg.search);

  struct Run {
    bool ok = false;
    double h1 = 0.0;
    std::optional<CribFactorization> f;
  };
  auto runs = detail::parallel_map(cfg.search.restarts, cfg.search.threads, [&](std::size_t r) {
    const auto res = program.solve(settings, stream_seed(cfg.search.seed, r, 21));
    auto f = std::get<CribFactorization>(detail::to_factorization(problem, Mode::Crib, program.spec(), res.tables));
    const JointPmf joint = build_cribbing_joint(problem.target, f);
    const bool ok = crib_feasibility_evaluate(joint, cfg.search.tol).feasible &&
                    check_marginal_match(joint, problem.target, cfg.search.tol).pass;
    return Run{ok, entropy(joint, {var::Xt1}, {var::T}), ok ? std::optional(std::move(f)) : std::nullopt};
  });

  CribSearchResult out;
  out.restarts = runs.size();
  const Run* best = nullptr;
  for (const auto& r : runs) {
    if (!r.ok) continue;
    ++out.verified;
    if (!best || r.h1 < best->h1) best = &r;
  }
  if (best) {
    out.found = true;
    out.witness = best->f;
    const JointPmf joint = build_cribbing_joint(problem.target, *best->f);
    out.triple = entropy_triple(joint);
    out.report = crib_feasibility_evaluate(joint, cfg.search.tol);
    out.match = check_marginal_match(joint, problem.target, cfg.search.tol);
  }
  return out;
}

}  // namespace cribcoord::example1
