#include "cribcoord/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cribcoord/rng.hpp"
#include "parallel.hpp"
#include "search_programs.hpp"

namespace cribcoord {
namespace {

using K = NamedBound::Kind;
using E = InfoExpr;

void require_vars(const JointPmf& joint, const VarNames& names, const char* what) {
  for (const auto& n : names)
    if (!joint.has(n)) throw InvalidArgument(std::string(what) + ": joint lacks variable '" + n + "'");
}

}  // namespace

// ---------------------------------------------------------------- bounds

std::vector<NamedBound> crib_bounds() {
  using namespace var;
  const VarNames t = {T};
  const E i_u1_dec = E::I({U1}, {U2, W, Yt}, t);
  const E i_u2_dec = E::I({U2}, {U1, W, Yt}, t);
  const E i_u1_src = E::I({U1}, {X1, Xt2}, t);
  const E i_u2_src = E::I({U2}, {X2}, t);
  const VarNames all = {X1, X2, W, Y};
  return {
      {"decode_u1", K::Structural, i_u1_dec, i_u1_src},
      {"decode_u2", K::Structural, i_u2_dec, i_u2_src},
      {"decode_joint", K::Structural, E::I({U1, U2}, {W, Yt}, t), i_u1_src + i_u2_src - E::I({U1}, {U2}, t)},
      {"r01_individual", K::R01, {}, E::I({U1}, all, t) - i_u1_dec},
      {"r02_individual", K::R02, {}, E::I({U2}, all, t) - i_u2_dec},
      {"r01_cross", K::R01, {}, E::I({U1}, all, t) - E::I({U1}, {W, Yt}, t) + i_u2_src - i_u2_dec},
      {"r02_cross", K::R02, {}, E::I({U2}, all, t) - E::I({U2}, {W, Yt}, t) + i_u1_src - i_u1_dec},
      {"sum_rate", K::Sum, {}, E::I({U1, U2}, all, t) - E::I({U1, U2}, {W, Yt}, t)},
  };
}

std::vector<NamedBound> nocrib_bounds() {
  using namespace var;
  const VarNames wt = {W, T};
  return {
      {"link1_capacity", K::Structural, E::H({Yt1}, wt), E::I({U1, Yt1}, {X1}, wt)},
      {"link2_capacity", K::Structural, E::H({Yt2}, wt), E::I({U2, Yt2}, {X2}, wt)},
      {"r01", K::R01, {}, E::I({U1, Yt1}, {X1, Y}, {X2, W, T}) - E::H({Yt1}, wt)},
  };
}

std::vector<NamedBound> crib_perfect_channel_bounds() {
  using namespace var;
  const VarNames t = {T};
  const E d1 = E::I({U1, Xt1}, {X1, Xt2}, t);
  const E d2 = E::I({U2, Xt2}, {X2}, t);
  return {
      {"xtilde1_entropy", K::Structural, E::H({Xt1}, t), d1 - E::I({U1}, {U2, Xt2}, {Xt1, T})},
      {"xtilde2_entropy", K::Structural, E::H({Xt2}, t), d2 - E::I({U2}, {U1, Xt1}, {Xt2, T})},
      {"xtilde_joint_entropy", K::Structural, E::H({Xt1, Xt2}, t), d2 - E::I({U2, Xt2}, {U1, Xt1}, t) + d1},
  };
}

ConstraintReport evaluate_bounds(const std::vector<NamedBound>& bounds, const JointPmf& joint, double tol,
                                 bool r02_unlimited) {
  for (const auto& b : bounds) {
    require_vars(joint, b.lhs.variables(), "constraint evaluation");
    require_vars(joint, b.rhs.variables(), "constraint evaluation");
  }
  ConstraintReport rep;
  rep.tol = tol;
  rep.r02_unlimited = r02_unlimited;
  rep.feasible = true;
  double r01 = 0.0, r02 = 0.0, sum = 0.0;
  bool any_sum = false;
  for (const auto& b : bounds) {
    Inequality q{b.label, b.kind, 0.0, b.rhs.eval(joint), 0.0};
    switch (b.kind) {
      case K::Structural:
        q.lhs = b.lhs.eval(joint);
        q.slack = q.lhs - q.rhs;
        if (q.slack < -tol) rep.feasible = false;
        break;
      case K::R01: r01 = std::max(r01, q.rhs); break;
      case K::R02: r02 = std::max(r02, q.rhs); break;
      case K::Sum:
        sum = std::max(sum, q.rhs);
        any_sum = true;
        break;
    }
    rep.inequalities.push_back(std::move(q));
  }
  rep.min_r01 = r01;
  rep.min_r02 = r02_unlimited ? 0.0 : r02;
  rep.min_sum = any_sum ? sum : rep.min_r01 + rep.min_r02;
  for (auto& q : rep.inequalities) {
    if (q.kind == K::Structural) continue;
    q.lhs = q.kind == K::R01 ? rep.min_r01 : q.kind == K::R02 ? r02 : rep.min_sum;
    q.slack = q.lhs - q.rhs;
  }
  return rep;
}

const Inequality& ConstraintReport::at(const std::string& label) const {
  for (const auto& q : inequalities)
    if (q.label == label) return q;
  throw InvalidArgument("report has no inequality labelled '" + label + "'");
}

double ConstraintReport::rate_slack(const RatePoint& p) const {
  double s = std::numeric_limits<double>::infinity();
  for (const auto& q : inequalities)
    if (q.kind == K::Structural) s = std::min(s, q.slack);
  s = std::min(s, p.r01 - min_r01);
  if (!r02_unlimited) {
    s = std::min(s, p.r02 - min_r02);
    s = std::min(s, p.r01 + p.r02 - min_sum);
  }
  return s;
}

ConstraintReport thm1_evaluate(const JointPmf& joint, double tol) {
  require_vars(joint, kJointOrder, "cribbing evaluation");
  return evaluate_bounds(crib_bounds(), joint, tol);
}

ConstraintReport thm2_evaluate(const JointPmf& joint, double tol) {
  using namespace var;
  require_vars(joint, {X1, X2, W, T, U1, U2, Yt1, Yt2, Y}, "no-cribbing evaluation");
  return evaluate_bounds(nocrib_bounds(), joint, tol, true);
}

ConstraintReport thm2_evaluate(const JointPmf& joint, const DeterministicLinks& links, double tol) {
  return thm2_evaluate(split_link_output(joint, links), tol);
}

JointPmf split_link_output(const JointPmf& joint, const DeterministicLinks& links) {
  require_vars(joint, {var::Xt1, var::Xt2, var::Yt}, "link split");
  if (joint.variable(var::Xt1).size != links.f1.size() || joint.variable(var::Xt2).size != links.f2.size() ||
      joint.variable(var::Yt).size != links.ytilde1_size * links.ytilde2_size)
    throw InvalidArgument("link split: alphabets do not match the links");
  const std::size_t a = joint.position(var::Xt1), b = joint.position(var::Xt2), c = joint.position(var::Yt);
  double stray = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] == 0.0) continue;
    const auto d = joint.unflatten(i);
    if (d[c] != links.f1[d[a]] * links.ytilde2_size + links.f2[d[b]]) stray += joint[i];
  }
  if (stray > kNormTolerance)
    throw PreconditionError("channel is not the stated deterministic links: mass " + std::to_string(stray) +
                                " off the link graph",
                            stray);
  // Ytilde = y1 * |Ytilde2| + y2 is exactly the row-major flattening of
  // (Ytilde1, Ytilde2), so the table itself is unchanged.
  std::vector<Variable> vars;
  for (const auto& v : joint.variables()) {
    if (v.name == var::Yt) {
      vars.push_back({var::Yt1, links.ytilde1_size});
      vars.push_back({var::Yt2, links.ytilde2_size});
    } else {
      vars.push_back(v);
    }
  }
  return JointPmf(std::move(vars), {joint.probs().begin(), joint.probs().end()});
}

ConstraintReport crib_feasibility_evaluate(const JointPmf& joint, double tol) {
  using namespace var;
  require_vars(joint, {X1, X2, T, U1, U2, Xt1, Xt2}, "perfect-channel cribbing evaluation");
  return evaluate_bounds(crib_perfect_channel_bounds(), joint, tol);
}

// ---------------------------------------------------------------- search

const char* to_string(Mode m) { return m == Mode::Crib ? "crib" : "nocrib"; }

Mode parse_mode(const std::string& s) {
  if (s == "crib") return Mode::Crib;
  if (s == "nocrib") return Mode::NoCrib;
  throw InvalidArgument("mode must be 'crib' or 'nocrib', got '" + s + "'");
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible: return "feasible";
    case Verdict::Infeasible: return "infeasible";
    case Verdict::Unknown: return "unknown";
  }
  return "?";
}

void SearchConfig::validate() const {
  if (u1_size < 1 || u2_size < 1 || t_size < 1) throw InvalidArgument("search: cardinalities must be >= 1");
  if (t_size > kMaxTimeSharing)
    throw InvalidArgument("search: |T| must be <= " + std::to_string(kMaxTimeSharing));
  if (restarts < 1 || explore_iterations < 1) throw InvalidArgument("search: budgets must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("search: tolerance must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("search: learning rate must be positive");
}

Witness verify_witness(const SearchProblem& problem, const Factorization& f, Mode mode, double tol,
                       std::size_t restart) {
  const JointPmf joint = build_joint(problem.target, f);
  ConstraintReport rep = [&] {
    if (mode == Mode::Crib) return thm1_evaluate(joint, tol);
    if (!problem.channel.links) throw InvalidArgument("no-cribbing evaluation needs deterministic links");
    return thm2_evaluate(joint, *problem.channel.links, tol);
  }();
  return Witness{restart, f, std::move(rep), check_marginal_match(joint, problem.target, tol)};
}

bool witness_ok(const Witness& w) { return w.report.feasible && w.match.pass; }

namespace {

double objective_value(const ConstraintReport& r, Objective o) {
  switch (o) {
    case Objective::MinR01: return r.min_r01;
    case Objective::MinR02: return r.min_r02;
    case Objective::MinSum: return r.min_sum;
  }
  return 0.0;
}

}  // namespace

SearchOutcome min_rate_search(const SearchProblem& problem, const SearchConfig& cfg, Mode mode,
                              Objective objective, bool keep_all) {
  cfg.validate();
  if (mode == Mode::NoCrib) {
    const double dep = problem.target.conditional_dependence();
    if (dep > kIndependenceTolerance)
      throw PreconditionError("no-cribbing search requires I(X1;X2|W)=0, measured " + std::to_string(dep), dep);
  }
  const auto bounds = mode == Mode::Crib ? crib_bounds() : nocrib_bounds();
  engine::Goal goal;
  goal.constraints = detail::structural_exprs(bounds);
  goal.match = problem.target.joint();
  goal.floor = 0.0;
  const K kind = objective == Objective::MinR01 ? K::R01 : objective == Objective::MinR02 ? K::R02 : K::Sum;
  goal.objective = detail::rate_exprs(bounds, kind);
  if (mode == Mode::NoCrib && objective == Objective::MinSum) goal.objective = detail::rate_exprs(bounds, K::R01);

  const engine::Program program(detail::make_program(problem, mode, cfg.u1_size, cfg.u2_size, cfg.t_size),
                                std::move(goal));
  const auto settings = detail::solver_settings(cfg);
  const auto tag = static_cast<std::uint64_t>(objective) + 1;

  auto runs = detail::parallel_map(cfg.restarts, cfg.threads, [&](std::size_t r) -> std::optional<Witness> {
    const auto res = program.solve(settings, stream_seed(cfg.seed, r, tag));
    Witness w = verify_witness(problem, detail::to_factorization(problem, mode, program.spec(), res.tables), mode,
                               cfg.tol, r);
    if (!witness_ok(w)) return std::nullopt;
    return w;
  });

  SearchOutcome out;
  out.restarts = cfg.restarts;
  for (auto& w : runs) {
    if (!w) continue;
    ++out.verified;
    const double v = objective_value(w->report, objective);
    if (!out.best || v < out.value) {
      out.best = *w;
      out.value = v;
    }
    if (keep_all) out.all.push_back(std::move(*w));
  }
  out.found = out.best.has_value();
  if (out.found) {
    out.status = "found";
    out.point = {out.best->report.min_r01, out.best->report.min_r02};
  } else {
    out.status = "none found (" + std::to_string(cfg.restarts) + " restarts)";
  }
  return out;
}

SweepResult region_sweep(const SearchProblem& problem, const std::vector<RatePoint>& grid, const SearchConfig& cfg,
                         Mode mode, const ConverseHook& converse, std::vector<Witness> seed_witnesses) {
  if (grid.empty()) throw InvalidArgument("sweep: empty grid");
  SweepResult res;
  res.witnesses = std::move(seed_witnesses);
  std::vector<Objective> objectives = {Objective::MinR01};
  if (mode == Mode::Crib) objectives = {Objective::MinR01, Objective::MinR02, Objective::MinSum};
  const bool certain_infeasible = converse && std::all_of(grid.begin(), grid.end(), converse);
  if (!certain_infeasible) {
    for (auto o : objectives) {
      auto out = min_rate_search(problem, cfg, mode, o, true);
      for (auto& w : out.all) res.witnesses.push_back(std::move(w));
    }
  }
  for (const auto& p : grid) {
    SweepRow row{p, Verdict::Unknown, std::nullopt, std::nullopt};
    for (std::size_t i = 0; i < res.witnesses.size(); ++i) {
      const double s = res.witnesses[i].report.rate_slack(p);
      if (!row.best_slack || s > *row.best_slack) {
        row.best_slack = s;
        row.witness_id = i;
      }
    }
    if (row.best_slack && *row.best_slack >= -cfg.tol) {
      row.verdict = Verdict::Feasible;
    } else if (converse && converse(p)) {
      row.verdict = Verdict::Infeasible;
    }
    res.rows.push_back(row);
  }
  return res;
}

CardinalityCaps cardinality_caps(const TargetSpec& target, std::size_t xt1_size, std::size_t xt2_size,
                                 std::size_t yt_size) {
  const std::size_t prod =
      target.x1().size * target.x2().size * target.w().size * xt1_size * xt2_size * yt_size * target.y().size;
  return {prod, prod * prod, kMaxTimeSharing};
}

}  // namespace cribcoord
