#include "search_programs.hpp"

namespace cribcoord::detail {
namespace {

std::vector<double> as_table(std::span<const double> xs) { return {xs.begin(), xs.end()}; }

std::vector<double> link_table(const std::vector<std::size_t>& f, std::size_t out_size) {
  std::vector<double> t(f.size() * out_size, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) t[i * out_size + f[i]] = 1.0;
  return t;
}

}  // namespace

engine::ProgramSpec make_program(const SearchProblem& problem, Mode mode, std::size_t u1_size,
                                 std::size_t u2_size, std::size_t t_size) {
  const auto& tg = problem.target;
  const auto& ch = problem.channel;
  if (ch.kernel.inputs().size() != 2 || ch.kernel.inputs()[0].name != var::Xt1 ||
      ch.kernel.inputs()[1].name != var::Xt2 || ch.kernel.outputs().size() != 1 ||
      ch.kernel.outputs()[0].name != var::Yt)
    throw InvalidArgument("channel must be a kernel (Ytilde | Xtilde1, Xtilde2)");

  engine::ProgramSpec p;
  const Variable x1 = tg.x1(), x2 = tg.x2(), w = tg.w(), y = tg.y();
  const Variable t{var::T, t_size}, u1{var::U1, u1_size}, u2{var::U2, u2_size};
  const Variable xt1{var::Xt1, ch.xt1_size()}, xt2{var::Xt2, ch.xt2_size()};
  const JointPmf src = tg.source();

  if (mode == Mode::Crib) {
    const Variable yt{var::Yt, ch.yt_size()};
    p.vars = {x1, x2, w, t, u1, u2, xt1, xt2, yt, y};
    p.factors = {
        {"source", {}, {x1.name, x2.name, w.name}, as_table(src.probs())},
        {"p_t", {}, {var::T}, {}},
        {"enc2", {x2.name, var::T}, {var::U2, var::Xt2}, {}},
        {"enc1", {x1.name, var::Xt2, var::T}, {var::U1, var::Xt1}, {}},
        {"channel", {var::Xt1, var::Xt2}, {var::Yt}, as_table(ch.kernel.table())},
        {"decoder", {var::U1, var::U2, w.name, var::Yt, var::T}, {y.name}, {}},
    };
    return p;
  }

  if (!ch.links) throw InvalidArgument("no-cribbing search needs a deterministic-link channel");
  const auto& L = *ch.links;
  const Variable yt1{var::Yt1, L.ytilde1_size}, yt2{var::Yt2, L.ytilde2_size};
  p.vars = {x1, x2, w, t, u1, u2, xt1, xt2, yt1, yt2, y};
  p.factors = {
      {"source", {}, {x1.name, x2.name, w.name}, as_table(src.probs())},
      {"p_t", {}, {var::T}, {}},
      {"aux1", {x1.name, var::T}, {var::U1}, {}},
      {"input1", {var::U1, x1.name, var::T}, {var::Xt1}, {}},
      {"aux2", {x2.name, var::T}, {var::U2}, {}},
      {"input2", {var::U2, x2.name, var::T}, {var::Xt2}, {}},
      {"link1", {var::Xt1}, {var::Yt1}, link_table(L.f1, L.ytilde1_size)},
      {"link2", {var::Xt2}, {var::Yt2}, link_table(L.f2, L.ytilde2_size)},
      {"decoder", {var::U1, var::U2, w.name, var::Yt1, var::Yt2, var::T}, {y.name}, {}},
  };
  return p;
}

Factorization to_factorization(const SearchProblem& problem, Mode mode, const engine::ProgramSpec& spec,
                               const std::vector<std::vector<double>>& tables) {
  auto v = [&](const std::string& n) -> Variable {
    for (const auto& x : spec.vars)
      if (x.name == n) return x;
    throw InvalidArgument("program lacks variable '" + n + "'");
  };
  auto vs = [&](const VarNames& ns) {
    std::vector<Variable> out;
    for (const auto& n : ns) out.push_back(v(n));
    return out;
  };
  auto kernel = [&](std::size_t f) {
    const auto& fs = spec.factors[f];
    return ConditionalKernel(vs(fs.inputs), vs(fs.outputs), tables[f]);
  };
  const JointPmf p_t({v(var::T)}, tables[1]);
  const auto& tg = problem.target;
  const std::vector<Variable> dec_in = {v(var::U1), v(var::U2), tg.w(), Variable{var::Yt, problem.channel.yt_size()},
                                        v(var::T)};

  if (mode == Mode::Crib)
    return CribFactorization{p_t, kernel(2), kernel(3), problem.channel.kernel,
                             ConditionalKernel(dec_in, {tg.y()}, tables[5])};
  return NoCribFactorization{p_t,       kernel(2), kernel(3), kernel(4), kernel(5),
                             problem.channel.kernel,
                             ConditionalKernel(dec_in, {tg.y()}, tables[8])};
}

std::vector<InfoExpr> structural_exprs(const std::vector<NamedBound>& bounds) {
  std::vector<InfoExpr> out;
  for (const auto& b : bounds)
    if (b.kind == NamedBound::Kind::Structural) out.push_back(b.lhs - b.rhs);
  return out;
}

std::vector<InfoExpr> rate_exprs(const std::vector<NamedBound>& bounds, NamedBound::Kind kind) {
  std::vector<InfoExpr> out;
  for (const auto& b : bounds)
    if (b.kind == kind) out.push_back(b.rhs);
  return out;
}

engine::SolverSettings solver_settings(const SearchConfig& cfg) {
  engine::SolverSettings s;
  s.explore_iterations = cfg.explore_iterations;
  s.polish_iterations = cfg.polish_iterations;
  s.learning_rate = cfg.learning_rate;
  s.marginal_weight = cfg.marginal_weight;
  s.constraint_weight = cfg.constraint_weight;
  s.init_scale = cfg.init_scale;
  return s;
}

}  // namespace cribcoord::detail
