#include "cribcoord/info_expr.hpp"

#include <algorithm>
#include <set>

namespace cribcoord {
namespace {

VarNames unite(VarNames a, const VarNames& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

void require_disjoint(const VarNames& a, const VarNames& b) {
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      throw InvalidArgument("information expression: variable '" + x + "' appears in two argument lists");
}

}  // namespace

void InfoExpr::add(double coef, VarNames vars) {
  std::sort(vars.begin(), vars.end());
  if (std::adjacent_find(vars.begin(), vars.end()) != vars.end())
    throw InvalidArgument("information expression: repeated variable in entropy term");
  if (vars.empty()) return;
  for (auto it = terms_.begin(); it != terms_.end(); ++it) {
    if (it->vars == vars) {
      it->coef += coef;
      if (it->coef == 0.0) terms_.erase(it);
      return;
    }
  }
  if (coef != 0.0) terms_.push_back({coef, std::move(vars)});
}

InfoExpr InfoExpr::H(const VarNames& a, const VarNames& given) {
  require_disjoint(a, given);
  InfoExpr e;
  e.add(1.0, unite(a, given));
  e.add(-1.0, unite({}, given));
  return e;
}

InfoExpr InfoExpr::I(const VarNames& a, const VarNames& b, const VarNames& given) {
  require_disjoint(a, b);
  require_disjoint(a, given);
  require_disjoint(b, given);
  InfoExpr e;
  e.add(1.0, unite(a, given));
  e.add(1.0, unite(b, given));
  e.add(-1.0, unite(unite(a, b), given));
  e.add(-1.0, unite({}, given));
  return e;
}

InfoExpr& InfoExpr::operator+=(const InfoExpr& o) {
  for (const auto& t : o.terms_) add(t.coef, t.vars);
  return *this;
}

InfoExpr& InfoExpr::operator-=(const InfoExpr& o) {
  for (const auto& t : o.terms_) add(-t.coef, t.vars);
  return *this;
}

InfoExpr operator*(double k, InfoExpr a) {
  if (k == 0.0) return {};
  for (auto& t : a.terms_) t.coef *= k;
  return a;
}

VarNames InfoExpr::variables() const {
  std::set<std::string> all;
  for (const auto& t : terms_) all.insert(t.vars.begin(), t.vars.end());
  return {all.begin(), all.end()};
}

double InfoExpr::eval(const JointPmf& joint) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.coef * entropy(joint, t.vars);
  return v;
}

const char* to_string(NamedBound::Kind k) {
  switch (k) {
    case NamedBound::Kind::Structural: return "structural";
    case NamedBound::Kind::R01: return "r01";
    case NamedBound::Kind::R02: return "r02";
    case NamedBound::Kind::Sum: return "sum";
  }
  return "?";
}

}  // namespace cribcoord
