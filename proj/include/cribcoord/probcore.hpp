#pragma once

// Exact discrete probability: labeled joint tables, kernels, and the
// information measures built on them. All measures are in bits.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cribcoord/errors.hpp"

namespace cribcoord {

/// Construction-time tolerance on total mass and kernel row sums.
inline constexpr double kNormTolerance = 1e-12;

/// Default cap on table sizes produced by iid_extension.
inline constexpr std::size_t kDefaultTableCap = std::size_t{1} << 24;

struct Variable {
  std::string name;
  std::size_t size = 1;

  friend bool operator==(const Variable&, const Variable&) = default;
};

using VarNames = std::vector<std::string>;
using Assignment = std::vector<std::size_t>;

/// Product of alphabet sizes. Throws ResourceLimit on overflow.
std::size_t table_size(std::span<const Variable> vars);

/// Dense probability table over an ordered list of named variables. The
/// last variable varies fastest (row-major). Immutable once built.
class JointPmf {
 public:
  /// Validates names, sizes, non-negativity and total mass (within 1e-12).
  JointPmf(std::vector<Variable> vars, std::vector<double> probs);

  static JointPmf uniform(std::vector<Variable> vars);
  static JointPmf point_mass(std::vector<Variable> vars, const Assignment& at);

  const std::vector<Variable>& variables() const { return vars_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t flat) const { return probs_[flat]; }

  bool has(std::string_view name) const;
  /// Position of `name` in variables(); throws InvalidArgument if absent.
  std::size_t position(std::string_view name) const;
  const Variable& variable(std::string_view name) const;
  VarNames names() const;

  std::size_t flat_index(std::span<const std::size_t> assignment) const;
  Assignment unflatten(std::size_t flat) const;
  double at(std::span<const std::size_t> assignment) const {
    return probs_[flat_index(assignment)];
  }
  std::size_t stride(std::size_t pos) const { return strides_[pos]; }

 private:
  std::vector<Variable> vars_;
  std::vector<double> probs_;
  std::vector<std::size_t> strides_;
};

/// Stochastic map p(outputs | inputs). Row r is indexed by the row-major
/// flat index of the input assignment, column c likewise over outputs.
/// An empty input list gives a single row, i.e. a plain pmf.
class ConditionalKernel {
 public:
  ConditionalKernel(std::vector<Variable> inputs, std::vector<Variable> outputs,
                    std::vector<double> table);

  /// Kernel whose row r puts all mass on column `map(r)`.
  static ConditionalKernel deterministic(
      std::vector<Variable> inputs, std::vector<Variable> outputs,
      const std::function<std::size_t(std::size_t)>& map);

  const std::vector<Variable>& inputs() const { return inputs_; }
  const std::vector<Variable>& outputs() const { return outputs_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> table() const { return table_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(table_).subspan(r * cols_, cols_);
  }
  double operator()(std::size_t r, std::size_t c) const { return table_[r * cols_ + c]; }

  /// True when every row is a point mass.
  bool is_deterministic() const;

 private:
  std::vector<Variable> inputs_;
  std::vector<Variable> outputs_;
  std::vector<double> table_;
  std::size_t rows_ = 1;
  std::size_t cols_ = 1;
};

/// Calls fn(flat, assignment) for every cell of the product alphabet, in
/// row-major order.
void for_each_assignment(std::span<const Variable> vars,
                         const std::function<void(std::size_t, const Assignment&)>& fn);

/// Sum over every variable not in `keep`. Output keeps the joint's order.
JointPmf marginalize(const JointPmf& joint, const VarNames& keep);

/// Same distribution with axes permuted into `order` (a permutation of the
/// joint's names).
JointPmf reorder(const JointPmf& joint, const VarNames& order);

/// Bayes-normalized distribution of the remaining variables given a
/// partial assignment. Throws ConditioningOnNull for zero-mass evidence.
JointPmf condition(const JointPmf& joint,
                   const std::vector<std::pair<std::string, std::size_t>>& evidence);

/// H(targets | given) in bits; 0 log 0 = 0.
double entropy(const JointPmf& joint, const VarNames& targets, const VarNames& given = {});

/// I(a ; b | given) in bits. Unclamped; may be -1e-16-ish from rounding.
double mutual_information(const JointPmf& joint, const VarNames& a, const VarNames& b,
                          const VarNames& given = {});

/// Unnormalized L1 distance, range [0, 2].
double tv_distance(const JointPmf& p, const JointPmf& q);

/// Extends the joint by p(outputs | inputs). Output order: joint's
/// variables followed by the kernel outputs.
JointPmf compose(const JointPmf& joint, const ConditionalKernel& kernel);

/// n-fold product. Block variable for v at position i (1-based) is named
/// "v_i"; positions are laid out slowest-first.
JointPmf iid_extension(const JointPmf& p, std::size_t n, std::size_t cap = kDefaultTableCap);

}  // namespace cribcoord
