#pragma once

// Gradient-based search over products of stochastic factors.
//
// A program is a list of discrete variables and factors p(outputs | inputs).
// Fixed factors are given tables; trainable factors are softmax-parameterized
// per row. The joint is compiled once onto its support (entries where every
// fixed factor is positive), so objective, constraints and gradients are
// sums over that support.
//
// Solving runs two phases from a random start:
//   explore: Adam on  objective + wc * sum min(0, c_i - margin)^2
//                                + wm * sum_{x,t} (P(x,t) - P(t) q(x))^2
//   polish:  damped Gauss-Newton (minimum-norm steps) on the residuals
//            P(x,t) - P(t) q(x) and min(0, c_i - margin), objective ignored.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cribcoord/info_expr.hpp"
#include "cribcoord/probcore.hpp"

namespace cribcoord::engine {

struct FactorSpec {
  std::string label;
  VarNames inputs;
  VarNames outputs;
  /// Row-major (inputs, then outputs) table; empty means trainable.
  std::vector<double> fixed;

  bool trainable() const { return fixed.empty(); }
};

struct ProgramSpec {
  std::vector<Variable> vars;
  std::vector<FactorSpec> factors;
};

struct Goal {
  /// Minimize max(floor, pieces...). No pieces: pure feasibility.
  std::vector<InfoExpr> objective;
  double floor = -std::numeric_limits<double>::infinity();
  /// Each expression must be >= 0.
  std::vector<InfoExpr> constraints;
  /// Target law q over `match_vars`; every time-sharing branch must reproduce it.
  std::optional<JointPmf> match;
  std::string time_var = "T";
};

struct SolverSettings {
  std::size_t explore_iterations = 400;
  std::size_t polish_iterations = 40;
  double learning_rate = 0.05;
  double marginal_weight = 1e3;
  double constraint_weight = 1e3;
  double constraint_margin = 1e-7;
  double init_scale = 1.0;
  std::size_t check_every = 25;
  double rel_improvement = 1e-7;
  /// Polish stops once every marginal residual and constraint violation is below this.
  double polish_target = 1e-12;
};

using Params = std::vector<std::vector<double>>;  // logits per factor; empty for fixed

struct SolveResult {
  Params logits;
  std::vector<std::vector<double>> tables;  // row-stochastic tables per factor
  double objective = 0.0;
  double max_residual = 0.0;  // largest |P(x,t) - P(t) q(x)|
  double worst_constraint = 0.0;  // min_i c_i (positive when all satisfied)
  std::size_t iterations = 0;
};

struct Evaluation {
  double loss = 0.0;
  double objective = 0.0;
  std::vector<double> constraint_values;
  std::vector<double> residuals;  // P(x,t) - P(t) q(x), t-major
  Params grad;
};

struct Weights {
  double objective = 1.0;
  double marginal = 0.0;
  double constraint = 0.0;
  double margin = 0.0;
};

class Program {
 public:
  /// Throws ResourceLimit when the support exceeds `support_cap` entries.
  Program(ProgramSpec spec, Goal goal, std::size_t support_cap = std::size_t{1} << 22);

  const ProgramSpec& spec() const { return spec_; }
  std::size_t support_size() const { return n_entries_; }
  std::size_t parameter_count() const;

  Params random_start(std::uint64_t seed, double scale) const;
  std::vector<std::vector<double>> tables(const Params& logits) const;

  Evaluation evaluate(const Params& logits, const Weights& w, bool want_grad = true) const;

  SolveResult solve(const SolverSettings& s, std::uint64_t seed) const;
  SolveResult solve_from(const SolverSettings& s, Params logits) const;

 private:
  struct FactorInfo {
    std::size_t rows = 1, cols = 1;
    std::vector<std::size_t> scope;  // inputs then outputs
  };
  struct EntropySet {
    std::vector<std::uint32_t> cell;  // per entry
    std::size_t cells = 0;
  };

  void compile(std::size_t cap);
  std::size_t set_index(const VarNames& vars);
  void forward(const std::vector<std::vector<double>>& tab, std::vector<double>& p) const;
  void backward(const std::vector<std::vector<double>>& tab, const Params& logits,
                const std::vector<double>& g, Params& grad) const;
  void polish(const SolverSettings& s, Params& logits) const;

  ProgramSpec spec_;
  Goal goal_;
  std::vector<FactorInfo> finfo_;
  std::size_t n_entries_ = 0;
  std::vector<std::uint32_t> idx_;  // n_entries_ x factors
  std::vector<EntropySet> sets_;
  struct CompiledExpr {
    std::vector<std::pair<std::size_t, double>> terms;  // (set, coef)
  };
  std::vector<CompiledExpr> objective_;
  std::vector<CompiledExpr> constraints_;
  // Marginal matching.
  bool has_match_ = false;
  std::size_t n_t_ = 1;
  std::vector<double> q_;
  std::vector<std::uint32_t> match_cell_;  // per entry: t * |q| + x
};

}  // namespace cribcoord::engine
