#pragma once

// Rate-region evaluation on built joints, and numerical search over
// factorizations for achievable shared-randomness rates.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cribcoord/factorgraph.hpp"
#include "cribcoord/info_expr.hpp"

namespace cribcoord {

struct RatePoint {
  double r01 = 0.0;
  double r02 = 0.0;
};

/// One evaluated inequality. Structural records: slack = lhs - rhs.
/// Rate records: rhs is the bound's value, lhs the reported minimum rate of
/// that kind, slack = lhs - rhs (never negative).
struct Inequality {
  std::string label;
  NamedBound::Kind kind = NamedBound::Kind::Structural;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

struct ConstraintReport {
  std::vector<Inequality> inequalities;
  bool feasible = false;
  double min_r01 = 0.0;
  double min_r02 = 0.0;
  double min_sum = 0.0;
  double tol = 0.0;
  bool r02_unlimited = false;

  const Inequality& at(const std::string& label) const;
  /// Smallest margin by which `p` clears every constraint (structural slacks
  /// and the three rate bounds); negative when some constraint fails.
  double rate_slack(const RatePoint& p) const;
  bool admits(const RatePoint& p) const { return rate_slack(p) >= -tol; }
};

/// Cribbing inner bound on the full joint (kJointOrder variables).
std::vector<NamedBound> crib_bounds();
/// No-cribbing characterization with Ytilde split into (Ytilde1, Ytilde2).
std::vector<NamedBound> nocrib_bounds();
/// Cribbing constraints specialized to independent sources, a perfect
/// channel Ytilde = (Xtilde1, Xtilde2) and unlimited shared randomness.
std::vector<NamedBound> crib_perfect_channel_bounds();

/// Evaluates bounds; min rates are maxima of their bounds clamped at 0.
ConstraintReport evaluate_bounds(const std::vector<NamedBound>& bounds, const JointPmf& joint,
                                 double tol, bool r02_unlimited = false);

ConstraintReport thm1_evaluate(const JointPmf& joint, double tol = 1e-9);

/// Joint must carry Ytilde1 and Ytilde2 as separate variables.
ConstraintReport thm2_evaluate(const JointPmf& joint, double tol = 1e-9);
/// Splits Ytilde by `links` first; PreconditionError if the joint puts mass
/// where Ytilde differs from the links' output.
ConstraintReport thm2_evaluate(const JointPmf& joint, const DeterministicLinks& links,
                               double tol = 1e-9);
JointPmf split_link_output(const JointPmf& joint, const DeterministicLinks& links);

ConstraintReport crib_feasibility_evaluate(const JointPmf& joint, double tol = 1e-9);

// ------------------------------------------------------------------ search

enum class Mode { Crib, NoCrib };
enum class Objective { MinR01, MinR02, MinSum };

const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct SearchConfig {
  std::size_t u1_size = 2;
  std::size_t u2_size = 2;
  std::size_t t_size = 1;
  std::size_t restarts = 200;
  std::size_t explore_iterations = 400;
  std::size_t polish_iterations = 40;
  double learning_rate = 0.05;
  double marginal_weight = 1e3;
  double constraint_weight = 1e3;
  double init_scale = 1.0;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct SearchProblem {
  TargetSpec target;
  MacChannel channel;
};

struct Witness {
  std::size_t restart = 0;
  Factorization factorization;
  ConstraintReport report;
  MarginalMatch match;
};

struct SearchOutcome {
  bool found = false;
  std::string status;  // "found" or "none found (N restarts)"
  RatePoint point;     // (min_r01, min_r02) of the best witness
  double value = 0.0;  // optimized quantity on the best witness
  std::optional<Witness> best;
  std::size_t restarts = 0;
  std::size_t verified = 0;
  std::vector<Witness> all;  // every verified witness, when requested
};

/// Multi-restart search minimizing the chosen rate bound subject to the
/// structural constraints and the per-branch marginal match. Every
/// candidate is rebuilt through the factorgraph builders and re-evaluated;
/// only re-verified candidates count.
SearchOutcome min_rate_search(const SearchProblem& problem, const SearchConfig& cfg, Mode mode,
                              Objective objective = Objective::MinR01, bool keep_all = false);

inline SearchOutcome min_r01_search(const SearchProblem& problem, const SearchConfig& cfg, Mode mode) {
  return min_rate_search(problem, cfg, mode, Objective::MinR01);
}

/// Rebuilds and re-evaluates a factorization exactly as the search does.
Witness verify_witness(const SearchProblem& problem, const Factorization& f, Mode mode, double tol,
                       std::size_t restart = 0);
bool witness_ok(const Witness& w);

enum class Verdict { Feasible, Infeasible, Unknown };
const char* to_string(Verdict v);

struct SweepRow {
  RatePoint point;
  Verdict verdict = Verdict::Unknown;
  std::optional<double> best_slack;
  std::optional<std::size_t> witness_id;
};

/// Returns true when a converse certifies the point infeasible.
using ConverseHook = std::function<bool(const RatePoint&)>;

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<Witness> witnesses;  // witness_id indexes this list
};

/// Searches for witnesses (minimizing each applicable rate objective) and
/// classifies every grid point. `seed_witnesses` are added before searching.
SweepResult region_sweep(const SearchProblem& problem, const std::vector<RatePoint>& grid,
                         const SearchConfig& cfg, Mode mode, const ConverseHook& converse = {},
                         std::vector<Witness> seed_witnesses = {});

struct CardinalityCaps {
  std::size_t u1 = 1;
  std::size_t u2 = 1;
  std::size_t t = 3;
};

/// |U1| <= |X1||X2||W||Xt1||Xt2||Yt||Y|, |U2| <= |U1| times the same product, |T| <= 3.
CardinalityCaps cardinality_caps(const TargetSpec& target, std::size_t xt1_size,
                                 std::size_t xt2_size, std::size_t yt_size);

}  // namespace cribcoord
