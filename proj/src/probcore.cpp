#include "cribcoord/probcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace cribcoord {
namespace {

std::vector<std::size_t> make_strides(std::span<const Variable> vars) {
  std::vector<std::size_t> strides(vars.size(), 1);
  for (std::size_t i = vars.size(); i-- > 1;) strides[i - 1] = strides[i] * vars[i].size;
  return strides;
}

void validate_variables(std::span<const Variable> vars, std::string_view what) {
  std::unordered_set<std::string> seen;
  for (const auto& v : vars) {
    if (v.size == 0)
      throw InvalidArgument(std::string(what) + ": variable '" + v.name + "' has empty alphabet");
    if (v.name.empty()) throw InvalidArgument(std::string(what) + ": unnamed variable");
    if (!seen.insert(v.name).second)
      throw InvalidArgument(std::string(what) + ": duplicate variable '" + v.name + "'");
  }
}

long double total_mass(std::span<const double> xs) {
  long double s = 0.0L;
  for (double x : xs) s += x;
  return s;
}

// Table over the variables at `positions` (in that order), summed over the rest.
std::vector<double> marginal_table(const JointPmf& joint, std::span<const std::size_t> positions) {
  const auto& vars = joint.variables();
  std::vector<std::size_t> out_stride(vars.size(), 0);
  std::size_t out_size = 1;
  for (std::size_t k = positions.size(); k-- > 0;) {
    out_stride[positions[k]] = out_size;
    out_size *= vars[positions[k]].size;
  }
  std::vector<double> out(out_size, 0.0);
  if (vars.empty()) {
    out[0] = joint[0];
    return out;
  }
  // Odometer walk keeping the output index in step with the full index.
  Assignment digit(vars.size(), 0);
  std::size_t oi = 0;
  const auto probs = joint.probs();
  for (std::size_t flat = 0; flat < probs.size(); ++flat) {
    out[oi] += probs[flat];
    for (std::size_t d = vars.size(); d-- > 0;) {
      if (++digit[d] < vars[d].size) {
        oi += out_stride[d];
        break;
      }
      oi -= out_stride[d] * (vars[d].size - 1);
      digit[d] = 0;
    }
  }
  return out;
}

double entropy_of(std::span<const double> table) {
  double h = 0.0;
  for (double p : table)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

std::vector<std::size_t> resolve(const JointPmf& joint, const VarNames& names) {
  std::vector<std::size_t> pos;
  pos.reserve(names.size());
  for (const auto& n : names) {
    const std::size_t p = joint.position(n);
    if (std::find(pos.begin(), pos.end(), p) != pos.end())
      throw InvalidArgument("variable '" + n + "' listed twice");
    pos.push_back(p);
  }
  return pos;
}

void require_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                      const JointPmf& joint) {
  for (auto p : a)
    if (std::find(b.begin(), b.end(), p) != b.end())
      throw InvalidArgument("variable sets overlap on '" + joint.variables()[p].name + "'");
}

// Entropy of the marginal over a set of positions, order irrelevant.
double set_entropy(const JointPmf& joint, std::vector<std::size_t> pos) {
  std::sort(pos.begin(), pos.end());
  return entropy_of(marginal_table(joint, pos));
}

std::vector<std::size_t> set_union(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

std::size_t table_size(std::span<const Variable> vars) {
  std::size_t n = 1;
  for (const auto& v : vars) {
    if (v.size != 0 && n > std::numeric_limits<std::size_t>::max() / v.size)
      throw ResourceLimit("table size overflows size_t");
    n *= v.size;
  }
  return n;
}

// ---------------------------------------------------------------- JointPmf

JointPmf::JointPmf(std::vector<Variable> vars, std::vector<double> probs)
    : vars_(std::move(vars)), probs_(std::move(probs)) {
  validate_variables(vars_, "JointPmf");
  if (probs_.size() != table_size(vars_))
    throw InvalidArgument("JointPmf: table has " + std::to_string(probs_.size()) +
                          " entries, expected " + std::to_string(table_size(vars_)));
  for (double p : probs_)
    if (!(p >= 0.0) || !std::isfinite(p))
      throw InvalidArgument("JointPmf: negative or non-finite entry");
  const long double total = total_mass(probs_);
  if (std::fabs(static_cast<double>(total - 1.0L)) > kNormTolerance)
    throw InvalidArgument("JointPmf: entries sum to " + std::to_string(static_cast<double>(total)));
  strides_ = make_strides(vars_);
}

JointPmf JointPmf::uniform(std::vector<Variable> vars) {
  const std::size_t n = table_size(vars);
  return JointPmf(std::move(vars), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

JointPmf JointPmf::point_mass(std::vector<Variable> vars, const Assignment& at) {
  if (at.size() != vars.size()) throw InvalidArgument("point_mass: assignment has wrong arity");
  const auto strides = make_strides(vars);
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (at[i] >= vars[i].size) throw InvalidArgument("point_mass: value out of range");
    flat += at[i] * strides[i];
  }
  std::vector<double> probs(table_size(vars), 0.0);
  probs[flat] = 1.0;
  return JointPmf(std::move(vars), std::move(probs));
}

bool JointPmf::has(std::string_view name) const {
  return std::any_of(vars_.begin(), vars_.end(), [&](const Variable& v) { return v.name == name; });
}

std::size_t JointPmf::position(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i].name == name) return i;
  throw InvalidArgument("unknown variable '" + std::string(name) + "'");
}

const Variable& JointPmf::variable(std::string_view name) const { return vars_[position(name)]; }

VarNames JointPmf::names() const {
  VarNames out;
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

std::size_t JointPmf::flat_index(std::span<const std::size_t> assignment) const {
  if (assignment.size() != vars_.size())
    throw InvalidArgument("assignment has wrong arity");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (assignment[i] >= vars_[i].size)
      throw InvalidArgument("value out of range for '" + vars_[i].name + "'");
    flat += assignment[i] * strides_[i];
  }
  return flat;
}

Assignment JointPmf::unflatten(std::size_t flat) const {
  Assignment a(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    a[i] = flat / strides_[i];
    flat %= strides_[i];
  }
  return a;
}

// -------------------------------------------------------- ConditionalKernel

ConditionalKernel::ConditionalKernel(std::vector<Variable> inputs, std::vector<Variable> outputs,
                                     std::vector<double> table)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), table_(std::move(table)) {
  std::vector<Variable> all = inputs_;
  all.insert(all.end(), outputs_.begin(), outputs_.end());
  validate_variables(all, "ConditionalKernel");
  if (outputs_.empty()) throw InvalidArgument("ConditionalKernel: no output variables");
  rows_ = table_size(inputs_);
  cols_ = table_size(outputs_);
  if (table_.size() != rows_ * cols_)
    throw InvalidArgument("ConditionalKernel: table has " + std::to_string(table_.size()) +
                          " entries, expected " + std::to_string(rows_ * cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    long double s = 0.0L;
    for (double p : row(r)) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw InvalidArgument("ConditionalKernel: negative or non-finite entry in row " +
                              std::to_string(r));
      s += p;
    }
    if (std::fabs(static_cast<double>(s - 1.0L)) > kNormTolerance)
      throw InvalidArgument("ConditionalKernel: row " + std::to_string(r) + " sums to " +
                            std::to_string(static_cast<double>(s)));
  }
}

ConditionalKernel ConditionalKernel::deterministic(
    std::vector<Variable> inputs, std::vector<Variable> outputs,
    const std::function<std::size_t(std::size_t)>& map) {
  const std::size_t rows = table_size(inputs);
  const std::size_t cols = table_size(outputs);
  std::vector<double> table(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = map(r);
    if (c >= cols) throw InvalidArgument("deterministic kernel: image out of range");
    table[r * cols + c] = 1.0;
  }
  return ConditionalKernel(std::move(inputs), std::move(outputs), std::move(table));
}

bool ConditionalKernel::is_deterministic() const {
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto rw = row(r);
    if (std::count(rw.begin(), rw.end(), 1.0) != 1) return false;
  }
  return true;
}

// ---------------------------------------------------------------- operations

void for_each_assignment(std::span<const Variable> vars,
                         const std::function<void(std::size_t, const Assignment&)>& fn) {
  const std::size_t n = table_size(vars);
  Assignment digit(vars.size(), 0);
  for (std::size_t flat = 0; flat < n; ++flat) {
    fn(flat, digit);
    for (std::size_t d = vars.size(); d-- > 0;) {
      if (++digit[d] < vars[d].size) break;
      digit[d] = 0;
    }
  }
}

JointPmf marginalize(const JointPmf& joint, const VarNames& keep) {
  auto pos = resolve(joint, keep);
  std::sort(pos.begin(), pos.end());
  std::vector<Variable> out_vars;
  for (auto p : pos) out_vars.push_back(joint.variables()[p]);
  return JointPmf(std::move(out_vars), marginal_table(joint, pos));
}

JointPmf reorder(const JointPmf& joint, const VarNames& order) {
  if (order.size() != joint.variables().size())
    throw InvalidArgument("reorder: order must name every variable exactly once");
  const auto pos = resolve(joint, order);
  return JointPmf([&] {
    std::vector<Variable> v;
    for (auto p : pos) v.push_back(joint.variables()[p]);
    return v;
  }(), marginal_table(joint, pos));
}

JointPmf condition(const JointPmf& joint,
                   const std::vector<std::pair<std::string, std::size_t>>& evidence) {
  const auto& vars = joint.variables();
  std::vector<long> fixed(vars.size(), -1);
  for (const auto& [name, value] : evidence) {
    const std::size_t p = joint.position(name);
    if (fixed[p] >= 0) throw InvalidArgument("evidence names '" + name + "' twice");
    if (value >= vars[p].size)
      throw InvalidArgument("evidence value out of range for '" + name + "'");
    fixed[p] = static_cast<long>(value);
  }
  std::vector<std::size_t> rest;
  std::vector<Variable> rest_vars;
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (fixed[i] < 0) {
      rest.push_back(i);
      rest_vars.push_back(vars[i]);
    }
  std::vector<double> out(table_size(rest_vars), 0.0);
  const auto rest_strides = make_strides(rest_vars);
  long double mass = 0.0L;
  for_each_assignment(vars, [&](std::size_t flat, const Assignment& a) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (fixed[i] >= 0 && a[i] != static_cast<std::size_t>(fixed[i])) return;
    std::size_t oi = 0;
    for (std::size_t k = 0; k < rest.size(); ++k) oi += a[rest[k]] * rest_strides[k];
    out[oi] += joint[flat];
    mass += joint[flat];
  });
  if (!(mass > 0.0L)) throw ConditioningOnNull("conditioning on a zero-probability event");
  for (auto& p : out) p = static_cast<double>(p / mass);
  return JointPmf(std::move(rest_vars), std::move(out));
}

double entropy(const JointPmf& joint, const VarNames& targets, const VarNames& given) {
  const auto t = resolve(joint, targets);
  const auto g = resolve(joint, given);
  require_disjoint(t, g, joint);
  if (t.empty()) return 0.0;
  const double h_joint = set_entropy(joint, set_union(t, g));
  return g.empty() ? h_joint : h_joint - set_entropy(joint, g);
}

double mutual_information(const JointPmf& joint, const VarNames& a, const VarNames& b,
                          const VarNames& given) {
  const auto pa = resolve(joint, a);
  const auto pb = resolve(joint, b);
  const auto pc = resolve(joint, given);
  require_disjoint(pa, pb, joint);
  require_disjoint(pa, pc, joint);
  require_disjoint(pb, pc, joint);
  if (pa.empty() || pb.empty()) return 0.0;
  const auto ac = set_union(pa, pc);
  const auto bc = set_union(pb, pc);
  const auto abc = set_union(ac, pb);
  return set_entropy(joint, ac) + set_entropy(joint, bc) - set_entropy(joint, abc) -
         (pc.empty() ? 0.0 : set_entropy(joint, pc));
}

double tv_distance(const JointPmf& p, const JointPmf& q) {
  if (p.variables() != q.variables())
    throw InvalidArgument("tv_distance: distributions have different shapes");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::fabs(p[i] - q[i]);
  return d;
}

JointPmf compose(const JointPmf& joint, const ConditionalKernel& kernel) {
  const auto& vars = joint.variables();
  std::vector<std::size_t> in_pos;
  for (const auto& v : kernel.inputs()) {
    const std::size_t p = joint.position(v.name);
    if (vars[p].size != v.size)
      throw InvalidArgument("compose: alphabet of '" + v.name + "' differs between joint and kernel");
    in_pos.push_back(p);
  }
  for (const auto& v : kernel.outputs())
    if (joint.has(v.name)) throw InvalidArgument("compose: output '" + v.name + "' already in joint");

  const auto in_strides = make_strides(kernel.inputs());
  std::vector<Variable> out_vars = vars;
  out_vars.insert(out_vars.end(), kernel.outputs().begin(), kernel.outputs().end());
  const std::size_t cols = kernel.cols();
  std::vector<double> out(joint.size() * cols, 0.0);
  for_each_assignment(vars, [&](std::size_t flat, const Assignment& a) {
    const double p = joint[flat];
    if (p == 0.0) return;
    std::size_t r = 0;
    for (std::size_t k = 0; k < in_pos.size(); ++k) r += a[in_pos[k]] * in_strides[k];
    const auto row = kernel.row(r);
    for (std::size_t c = 0; c < cols; ++c) out[flat * cols + c] = p * row[c];
  });
  return JointPmf(std::move(out_vars), std::move(out));
}

JointPmf iid_extension(const JointPmf& p, std::size_t n, std::size_t cap) {
  if (n == 0) throw InvalidArgument("iid_extension: n must be positive");
  const std::size_t base = p.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > cap / base)
      throw ResourceLimit("iid_extension: table for n=" + std::to_string(n) + " exceeds cap of " +
                          std::to_string(cap) + " entries");
    total *= base;
  }
  std::vector<Variable> vars;
  for (std::size_t i = 1; i <= n; ++i)
    for (const auto& v : p.variables()) vars.push_back({v.name + "_" + std::to_string(i), v.size});
  std::vector<double> probs(total, 1.0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      prod *= p[rem % base];
      rem /= base;
    }
    probs[flat] = prod;
  }
  return JointPmf(std::move(vars), std::move(probs));
}

}  // namespace cribcoord
