#include "cribcoord/search_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

namespace cribcoord::engine {
namespace {

constexpr double kLogFloor = 1e-300;

void softmax_row(const double* z, double* out, std::size_t n) {
  double mx = z[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (out[i] = std::exp(z[i] - mx));
  for (std::size_t i = 0; i < n; ++i) out[i] /= s;
}

}  // namespace

Program::Program(ProgramSpec spec, Goal goal, std::size_t support_cap)
    : spec_(std::move(spec)), goal_(std::move(goal)) {
  compile(support_cap);
}

std::size_t Program::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t f = 0; f < spec_.factors.size(); ++f)
    if (spec_.factors[f].trainable()) n += finfo_[f].rows * finfo_[f].cols;
  return n;
}

void Program::compile(std::size_t cap) {
  const auto& vars = spec_.vars;
  const std::size_t nv = vars.size();
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < nv; ++i) {
    if (vars[i].size == 0) throw InvalidArgument("program: empty alphabet for '" + vars[i].name + "'");
    if (!pos.emplace(vars[i].name, i).second)
      throw InvalidArgument("program: duplicate variable '" + vars[i].name + "'");
  }
  auto lookup = [&](const std::string& n, const std::string& where) {
    auto it = pos.find(n);
    if (it == pos.end()) throw InvalidArgument(where + ": unknown variable '" + n + "'");
    return it->second;
  };

  const std::size_t nf = spec_.factors.size();
  finfo_.resize(nf);
  std::vector<std::vector<std::size_t>> fstride(nf);
  std::vector<std::size_t> ready(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    const auto& fs = spec_.factors[f];
    auto& fi = finfo_[f];
    if (fs.outputs.empty()) throw InvalidArgument("factor '" + fs.label + "' has no outputs");
    for (const auto& n : fs.inputs) {
      fi.scope.push_back(lookup(n, "factor '" + fs.label + "'"));
      fi.rows *= vars[fi.scope.back()].size;
    }
    for (const auto& n : fs.outputs) {
      fi.scope.push_back(lookup(n, "factor '" + fs.label + "'"));
      fi.cols *= vars[fi.scope.back()].size;
    }
    if (!fs.trainable() && fs.fixed.size() != fi.rows * fi.cols)
      throw InvalidArgument("factor '" + fs.label + "': table has " + std::to_string(fs.fixed.size()) +
                            " entries, expected " + std::to_string(fi.rows * fi.cols));
    fstride[f].assign(fi.scope.size(), 1);
    for (std::size_t k = fi.scope.size(); k-- > 1;)
      fstride[f][k - 1] = fstride[f][k] * vars[fi.scope[k]].size;
    ready[f] = *std::max_element(fi.scope.begin(), fi.scope.end());
  }
  std::vector<std::size_t> produced(nv, 0);
  for (const auto& fs : spec_.factors)
    for (const auto& n : fs.outputs) ++produced[pos.at(n)];
  for (std::size_t i = 0; i < nv; ++i)
    if (produced[i] != 1)
      throw InvalidArgument("program: variable '" + vars[i].name + "' is the output of " +
                            std::to_string(produced[i]) + " factors, expected exactly one");

  auto factor_index = [&](std::size_t f, const std::vector<std::size_t>& a) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < finfo_[f].scope.size(); ++j) k += a[finfo_[f].scope[j]] * fstride[f][j];
    return k;
  };

  // Depth-first enumeration, pruning as soon as a fixed factor is zero.
  std::vector<std::size_t> a(nv, 0);
  std::vector<std::vector<std::size_t>> check_at(nv);
  for (std::size_t f = 0; f < nf; ++f)
    if (!spec_.factors[f].trainable()) check_at[ready[f]].push_back(f);
  std::vector<std::vector<std::size_t>> support;
  auto rec = [&](auto&& self, std::size_t d) -> void {
    if (d == nv) {
      if (support.size() >= cap)
        throw ResourceLimit("program support exceeds " + std::to_string(cap) + " entries");
      support.push_back(a);
      return;
    }
    for (std::size_t v = 0; v < vars[d].size; ++v) {
      a[d] = v;
      bool ok = true;
      for (auto f : check_at[d])
        if (spec_.factors[f].fixed[factor_index(f, a)] <= 0.0) {
          ok = false;
          break;
        }
      if (ok) self(self, d + 1);
    }
  };
  rec(rec, 0);
  n_entries_ = support.size();
  if (n_entries_ == 0) throw InvalidArgument("program: fixed factors leave an empty support");

  idx_.resize(n_entries_ * nf);
  for (std::size_t e = 0; e < n_entries_; ++e)
    for (std::size_t f = 0; f < nf; ++f) idx_[e * nf + f] = static_cast<std::uint32_t>(factor_index(f, support[e]));

  auto compile_set = [&](const VarNames& names) {
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(lookup(n, "information expression"));
    EntropySet s;
    s.cell.resize(n_entries_);
    std::unordered_map<std::size_t, std::uint32_t> ids;
    for (std::size_t e = 0; e < n_entries_; ++e) {
      std::size_t key = 0;
      for (auto c : cols) key = key * vars[c].size + support[e][c];
      auto [it, fresh] = ids.emplace(key, static_cast<std::uint32_t>(ids.size()));
      s.cell[e] = it->second;
    }
    s.cells = ids.size();
    return s;
  };
  std::vector<VarNames> set_names;
  auto compile_expr = [&](const InfoExpr& ex) {
    CompiledExpr c;
    for (const auto& t : ex.terms()) {
      auto it = std::find(set_names.begin(), set_names.end(), t.vars);
      std::size_t k = static_cast<std::size_t>(it - set_names.begin());
      if (it == set_names.end()) {
        set_names.push_back(t.vars);
        sets_.push_back(compile_set(t.vars));
      }
      c.terms.emplace_back(k, t.coef);
    }
    return c;
  };
  for (const auto& e : goal_.objective) objective_.push_back(compile_expr(e));
  for (const auto& e : goal_.constraints) constraints_.push_back(compile_expr(e));

  if (goal_.match) {
    has_match_ = true;
    const auto& mv = goal_.match->variables();
    std::vector<std::size_t> cols;
    for (const auto& v : mv) {
      const std::size_t c = lookup(v.name, "marginal target");
      if (vars[c].size != v.size)
        throw InvalidArgument("marginal target: alphabet of '" + v.name + "' differs from program");
      cols.push_back(c);
    }
    q_.assign(goal_.match->probs().begin(), goal_.match->probs().end());
    const auto tp = pos.find(goal_.time_var);
    n_t_ = tp == pos.end() ? 1 : vars[tp->second].size;
    match_cell_.resize(n_entries_);
    for (std::size_t e = 0; e < n_entries_; ++e) {
      std::size_t x = 0;
      for (auto c : cols) x = x * vars[c].size + support[e][c];
      const std::size_t t = tp == pos.end() ? 0 : support[e][tp->second];
      match_cell_[e] = static_cast<std::uint32_t>(t * q_.size() + x);
    }
  }
}

Params Program::random_start(std::uint64_t seed, double scale) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Params p(spec_.factors.size());
  for (std::size_t f = 0; f < p.size(); ++f) {
    if (!spec_.factors[f].trainable()) continue;
    p[f].resize(finfo_[f].rows * finfo_[f].cols);
    for (auto& z : p[f]) z = nd(rng);
  }
  return p;
}

std::vector<std::vector<double>> Program::tables(const Params& logits) const {
  std::vector<std::vector<double>> tab(spec_.factors.size());
  for (std::size_t f = 0; f < tab.size(); ++f) {
    if (!spec_.factors[f].trainable()) {
      tab[f] = spec_.factors[f].fixed;
      continue;
    }
    const auto& fi = finfo_[f];
    if (logits[f].size() != fi.rows * fi.cols)
      throw InvalidArgument("factor '" + spec_.factors[f].label + "': parameter block has wrong size");
    tab[f].resize(fi.rows * fi.cols);
    for (std::size_t r = 0; r < fi.rows; ++r)
      softmax_row(&logits[f][r * fi.cols], &tab[f][r * fi.cols], fi.cols);
  }
  return tab;
}

void Program::forward(const std::vector<std::vector<double>>& tab, std::vector<double>& p) const {
  const std::size_t nf = tab.size();
  p.assign(n_entries_, 1.0);
  for (std::size_t e = 0; e < n_entries_; ++e) {
    double v = 1.0;
    const std::uint32_t* ix = &idx_[e * nf];
    for (std::size_t f = 0; f < nf; ++f) v *= tab[f][ix[f]];
    p[e] = v;
  }
}

void Program::backward(const std::vector<std::vector<double>>& tab, const Params& logits,
                       const std::vector<double>& g, Params& grad) const {
  (void)logits;
  const std::size_t nf = tab.size();
  std::vector<std::vector<double>> G(nf);
  for (std::size_t f = 0; f < nf; ++f)
    if (spec_.factors[f].trainable()) G[f].assign(tab[f].size(), 0.0);
  std::vector<double> prefix(nf + 1), suffix(nf + 1);
  for (std::size_t e = 0; e < n_entries_; ++e) {
    if (g[e] == 0.0) continue;
    const std::uint32_t* ix = &idx_[e * nf];
    prefix[0] = 1.0;
    for (std::size_t f = 0; f < nf; ++f) prefix[f + 1] = prefix[f] * tab[f][ix[f]];
    suffix[nf] = 1.0;
    for (std::size_t f = nf; f-- > 0;) suffix[f] = suffix[f + 1] * tab[f][ix[f]];
    for (std::size_t f = 0; f < nf; ++f)
      if (!G[f].empty()) G[f][ix[f]] += g[e] * prefix[f] * suffix[f + 1];
  }
  grad.assign(nf, {});
  for (std::size_t f = 0; f < nf; ++f) {
    if (G[f].empty()) continue;
    const auto& fi = finfo_[f];
    grad[f].resize(G[f].size());
    for (std::size_t r = 0; r < fi.rows; ++r) {
      const double* F = &tab[f][r * fi.cols];
      const double* Gr = &G[f][r * fi.cols];
      double s = 0.0;
      for (std::size_t c = 0; c < fi.cols; ++c) s += F[c] * Gr[c];
      for (std::size_t c = 0; c < fi.cols; ++c) grad[f][r * fi.cols + c] = F[c] * (Gr[c] - s);
    }
  }
}

Evaluation Program::evaluate(const Params& logits, const Weights& w, bool want_grad) const {
  const auto tab = tables(logits);
  std::vector<double> p;
  forward(tab, p);

  // Marginals and -log2 of each compiled entropy set.
  std::vector<std::vector<double>> neglog(sets_.size());
  std::vector<double> H(sets_.size(), 0.0);
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    std::vector<double> m(sets_[s].cells, 0.0);
    for (std::size_t e = 0; e < n_entries_; ++e) m[sets_[s].cell[e]] += p[e];
    auto& L = neglog[s];
    L.resize(m.size());
    for (std::size_t c = 0; c < m.size(); ++c) {
      L[c] = -std::log2(std::max(m[c], kLogFloor));
      if (m[c] > 0.0) H[s] += m[c] * L[c];
    }
  }
  auto value = [&](const CompiledExpr& ex) {
    double v = 0.0;
    for (auto [s, c] : ex.terms) v += c * H[s];
    return v;
  };

  Evaluation out;
  std::vector<double> a(sets_.size(), 0.0);  // d loss / d H(set)
  if (!objective_.empty()) {
    std::size_t best = 0;
    double bv = value(objective_[0]);
    for (std::size_t i = 1; i < objective_.size(); ++i) {
      const double v = value(objective_[i]);
      if (v > bv) {
        bv = v;
        best = i;
      }
    }
    if (bv >= goal_.floor) {
      out.objective = bv;
      for (auto [s, c] : objective_[best].terms) a[s] += w.objective * c;
    } else {
      out.objective = goal_.floor;
    }
  }
  out.loss = w.objective * out.objective;
  for (const auto& ce : constraints_) {
    const double c = value(ce);
    out.constraint_values.push_back(c);
    const double v = std::min(0.0, c - w.margin);
    if (v < 0.0 && w.constraint > 0.0) {
      out.loss += w.constraint * v * v;
      for (auto [s, k] : ce.terms) a[s] += 2.0 * w.constraint * v * k;
    }
  }

  std::vector<double> D, st;
  if (has_match_) {
    const std::size_t nq = q_.size();
    D.assign(n_t_ * nq, 0.0);
    for (std::size_t e = 0; e < n_entries_; ++e) D[match_cell_[e]] += p[e];
    st.assign(n_t_, 0.0);
    for (std::size_t t = 0; t < n_t_; ++t) {
      double pt = 0.0;
      for (std::size_t x = 0; x < nq; ++x) pt += D[t * nq + x];
      for (std::size_t x = 0; x < nq; ++x) D[t * nq + x] -= pt * q_[x];
      for (std::size_t x = 0; x < nq; ++x) {
        st[t] += D[t * nq + x] * q_[x];
        out.loss += w.marginal * D[t * nq + x] * D[t * nq + x];
      }
    }
    out.residuals = D;
  }
  if (!want_grad) return out;

  std::vector<double> g(n_entries_, 0.0);
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    if (a[s] == 0.0) continue;
    const auto& cell = sets_[s].cell;
    const auto& L = neglog[s];
    for (std::size_t e = 0; e < n_entries_; ++e) g[e] += a[s] * L[cell[e]];
  }
  if (has_match_ && w.marginal > 0.0) {
    const std::size_t nq = q_.size();
    for (std::size_t e = 0; e < n_entries_; ++e)
      g[e] += 2.0 * w.marginal * (D[match_cell_[e]] - st[match_cell_[e] / nq]);
  }
  backward(tab, logits, g, out.grad);
  return out;
}

namespace {

std::vector<double> flatten(const Params& p) {
  std::vector<double> v;
  for (const auto& b : p) v.insert(v.end(), b.begin(), b.end());
  return v;
}

void add_flat(Params& p, const Eigen::VectorXd& d) {
  std::size_t k = 0;
  for (auto& b : p)
    for (auto& z : b) z += d[static_cast<Eigen::Index>(k++)];
}

}  // namespace

void Program::polish(const SolverSettings& s, Params& logits) const {
  if (!has_match_ && constraints_.empty()) return;
  const std::size_t nq = q_.size();
  const std::size_t nparam = parameter_count();
  if (nparam == 0) return;

  // Residual vector: marginal deviations, then hinge-violated constraints.
  struct State {
    std::vector<double> r;
    double cost = 0.0;
    double worst = 0.0;
  };
  auto residuals = [&](const Params& lg) {
    const Evaluation ev = evaluate(lg, Weights{0.0, 0.0, 0.0, 0.0}, false);
    State st;
    st.r = ev.residuals;
    for (double c : ev.constraint_values) st.r.push_back(std::min(0.0, c - s.constraint_margin));
    for (double x : st.r) {
      st.cost += x * x;
      st.worst = std::max(st.worst, std::fabs(x));
    }
    return st;
  };

  double lambda = 1e-6;
  State cur = residuals(logits);
  for (std::size_t it = 0; it < s.polish_iterations; ++it) {
    if (cur.worst <= s.polish_target) break;

    // Jacobian rows by one backward pass per residual.
    const auto tab = tables(logits);
    std::vector<double> p;
    forward(tab, p);
    std::vector<std::vector<double>> neglog(sets_.size());
    for (std::size_t si = 0; si < sets_.size(); ++si) {
      std::vector<double> m(sets_[si].cells, 0.0);
      for (std::size_t e = 0; e < n_entries_; ++e) m[sets_[si].cell[e]] += p[e];
      neglog[si].resize(m.size());
      for (std::size_t c = 0; c < m.size(); ++c) neglog[si][c] = -std::log2(std::max(m[c], kLogFloor));
    }
    const std::size_t nres = cur.r.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nres), static_cast<Eigen::Index>(nparam));
    std::vector<double> g(n_entries_);
    Params grad;
    for (std::size_t k = 0; k < nres; ++k) {
      if (cur.r[k] == 0.0 && k >= n_t_ * nq) continue;  // inactive hinge
      if (has_match_ && k < n_t_ * nq) {
        const std::size_t t = k / nq, x = k % nq;
        for (std::size_t e = 0; e < n_entries_; ++e) {
          const std::size_t mc = match_cell_[e];
          g[e] = (mc == k ? 1.0 : 0.0) - (mc / nq == t ? q_[x] : 0.0);
        }
      } else {
        const auto& ce = constraints_[k - (has_match_ ? n_t_ * nq : 0)];
        std::fill(g.begin(), g.end(), 0.0);
        for (auto [si, coef] : ce.terms) {
          const auto& cell = sets_[si].cell;
          for (std::size_t e = 0; e < n_entries_; ++e) g[e] += coef * neglog[si][cell[e]];
        }
      }
      backward(tab, logits, g, grad);
      const auto flat = flatten(grad);
      for (std::size_t j = 0; j < nparam; ++j) J(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = flat[j];
    }
    const Eigen::Map<const Eigen::VectorXd> r(cur.r.data(), static_cast<Eigen::Index>(nres));
    const Eigen::MatrixXd JJt = J * J.transpose();
    bool accepted = false;
    while (lambda < 1e10) {
      Eigen::MatrixXd A = JJt;
      A.diagonal().array() += lambda * (1.0 + JJt.diagonal().array());
      const Eigen::VectorXd y = A.ldlt().solve(r);
      const Eigen::VectorXd step = -J.transpose() * y;
      Params trial = logits;
      add_flat(trial, step);
      State next = residuals(trial);
      if (next.cost < cur.cost) {
        logits = std::move(trial);
        cur = std::move(next);
        lambda = std::max(lambda / 4.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
}

SolveResult Program::solve(const SolverSettings& s, std::uint64_t seed) const {
  return solve_from(s, random_start(seed, s.init_scale));
}

SolveResult Program::solve_from(const SolverSettings& s, Params logits) const {
  const Weights w{1.0, s.marginal_weight, s.constraint_weight, s.constraint_margin};
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Params m1(logits.size()), m2(logits.size());
  for (std::size_t f = 0; f < logits.size(); ++f) {
    m1[f].assign(logits[f].size(), 0.0);
    m2[f].assign(logits[f].size(), 0.0);
  }
  SolveResult out;
  double last_check = std::numeric_limits<double>::infinity();
  double c1 = 1.0, c2 = 1.0;
  for (std::size_t it = 1; it <= s.explore_iterations; ++it) {
    const Evaluation ev = evaluate(logits, w);
    ++out.iterations;
    c1 *= b1;
    c2 *= b2;
    for (std::size_t f = 0; f < logits.size(); ++f)
      for (std::size_t i = 0; i < logits[f].size(); ++i) {
        const double gi = ev.grad[f][i];
        m1[f][i] = b1 * m1[f][i] + (1 - b1) * gi;
        m2[f][i] = b2 * m2[f][i] + (1 - b2) * gi * gi;
        logits[f][i] -= s.learning_rate * (m1[f][i] / (1 - c1)) / (std::sqrt(m2[f][i] / (1 - c2)) + eps);
      }
    if (s.check_every && it % s.check_every == 0) {
      if (last_check - ev.loss < s.rel_improvement * std::max(1.0, std::fabs(ev.loss))) break;
      last_check = ev.loss;
    }
  }
  polish(s, logits);

  const Evaluation fin = evaluate(logits, Weights{1.0, 0.0, 0.0, 0.0}, false);
  out.objective = fin.objective;
  out.max_residual = 0.0;
  for (double d : fin.residuals) out.max_residual = std::max(out.max_residual, std::fabs(d));
  out.worst_constraint = std::numeric_limits<double>::infinity();
  for (double c : fin.constraint_values) out.worst_constraint = std::min(out.worst_constraint, c);
  out.tables = tables(logits);
  out.logits = std::move(logits);
  return out;
}

}  // namespace cribcoord::engine
