#pragma once

// Linear combinations of joint entropies. Every rate and feasibility
// expression is written once in this form and then evaluated either on an
// exact JointPmf or on the search engine's parameterized joint.

#include <string>
#include <vector>

#include "cribcoord/probcore.hpp"

namespace cribcoord {

struct EntropyTerm {
  double coef = 0.0;
  VarNames vars;  // sorted, duplicate-free; empty set has entropy 0
};

class InfoExpr {
 public:
  InfoExpr() = default;

  /// H(a | given).
  static InfoExpr H(const VarNames& a, const VarNames& given = {});
  /// I(a ; b | given). The three lists must be pairwise disjoint.
  static InfoExpr I(const VarNames& a, const VarNames& b, const VarNames& given = {});

  InfoExpr& operator+=(const InfoExpr& o);
  InfoExpr& operator-=(const InfoExpr& o);
  friend InfoExpr operator+(InfoExpr a, const InfoExpr& b) { return a += b; }
  friend InfoExpr operator-(InfoExpr a, const InfoExpr& b) { return a -= b; }
  friend InfoExpr operator*(double k, InfoExpr a);

  /// Terms with merged duplicates and zero coefficients removed.
  const std::vector<EntropyTerm>& terms() const { return terms_; }
  /// Every variable mentioned by some term.
  VarNames variables() const;

  double eval(const JointPmf& joint) const;

 private:
  void add(double coef, VarNames vars);
  std::vector<EntropyTerm> terms_;
};

/// A constraint `lhs >= rhs` or a rate bound `R >= rhs` (lhs unset).
struct NamedBound {
  enum class Kind { Structural, R01, R02, Sum };
  std::string label;
  Kind kind = Kind::Structural;
  InfoExpr lhs;
  InfoExpr rhs;
};

const char* to_string(NamedBound::Kind k);

}  // namespace cribcoord
