#pragma once

// Direct-summation information measures, written independently of the
// library's stride/marginal machinery: every quantity is computed by
// looping over the full table and accumulating marginals in ordered maps
// keyed by explicit value tuples. Only the raw table and alphabet sizes are
// taken from the library type.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cribcoord/probcore.hpp"

namespace oracle {

struct Table {
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  std::vector<double> p;
  std::vector<std::vector<std::size_t>> d;  // digits of each flat index
};

// Digits of a flat index, last variable fastest.
inline std::vector<std::size_t> digits(const Table& t, std::size_t flat) {
  std::vector<std::size_t> d(t.sizes.size());
  for (std::size_t k = t.sizes.size(); k-- > 0;) {
    d[k] = flat % t.sizes[k];
    flat /= t.sizes[k];
  }
  return d;
}

inline Table from(const cribcoord::JointPmf& joint) {
  Table t;
  for (const auto& v : joint.variables()) {
    t.names.push_back(v.name);
    t.sizes.push_back(v.size);
  }
  t.p.assign(joint.probs().begin(), joint.probs().end());
  for (std::size_t i = 0; i < t.p.size(); ++i) t.d.push_back(digits(t, i));
  return t;
}

inline std::vector<std::size_t> columns(const Table& t, const std::vector<std::string>& names) {
  std::vector<std::size_t> cols;
  for (const auto& n : names) {
    std::size_t k = 0;
    while (k < t.names.size() && t.names[k] != n) ++k;
    if (k == t.names.size()) throw std::runtime_error("oracle: unknown variable " + n);
    cols.push_back(k);
  }
  return cols;
}

using Key = std::vector<std::size_t>;

inline Key project(const std::vector<std::size_t>& d, const std::vector<std::size_t>& cols) {
  Key k;
  for (auto c : cols) k.push_back(d[c]);
  return k;
}

inline std::map<Key, double> marginal(const Table& t, const std::vector<std::size_t>& cols) {
  std::map<Key, double> m;
  for (std::size_t i = 0; i < t.p.size(); ++i) m[project(t.d[i], cols)] += t.p[i];
  return m;
}

inline std::vector<std::size_t> concat(std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// H(A | C) = -sum_x p(x) log2( p(a,c) / p(c) ).
inline double entropy(const Table& t, const std::vector<std::string>& a,
                      const std::vector<std::string>& c = {}) {
  const auto ca = columns(t, a);
  const auto cc = columns(t, c);
  const auto m_ac = marginal(t, concat(ca, cc));
  const auto m_c = marginal(t, cc);
  double h = 0.0;
  for (std::size_t i = 0; i < t.p.size(); ++i) {
    if (t.p[i] <= 0.0) continue;
    const auto& d = t.d[i];
    const double pac = m_ac.at(project(d, concat(ca, cc)));
    const double pc = m_c.at(project(d, cc));
    h -= t.p[i] * std::log2(pac / pc);
  }
  return h;
}

/// I(A ; B | C) = sum_x p(x) log2( p(a,b,c) p(c) / (p(a,c) p(b,c)) ).
inline double mutual_information(const Table& t, const std::vector<std::string>& a,
                                 const std::vector<std::string>& b,
                                 const std::vector<std::string>& c = {}) {
  const auto ca = columns(t, a);
  const auto cb = columns(t, b);
  const auto cc = columns(t, c);
  const auto abc = concat(concat(ca, cb), cc);
  const auto ac = concat(ca, cc);
  const auto bc = concat(cb, cc);
  const auto m_abc = marginal(t, abc);
  const auto m_ac = marginal(t, ac);
  const auto m_bc = marginal(t, bc);
  const auto m_c = marginal(t, cc);
  double total = 0.0;
  for (std::size_t i = 0; i < t.p.size(); ++i) {
    if (t.p[i] <= 0.0) continue;
    const auto& d = t.d[i];
    const double num = m_abc.at(project(d, abc)) * m_c.at(project(d, cc));
    const double den = m_ac.at(project(d, ac)) * m_bc.at(project(d, bc));
    total += t.p[i] * std::log2(num / den);
  }
  return total;
}

inline double entropy(const cribcoord::JointPmf& j, const std::vector<std::string>& a,
                      const std::vector<std::string>& c = {}) {
  return entropy(from(j), a, c);
}

inline double mutual_information(const cribcoord::JointPmf& j, const std::vector<std::string>& a,
                                 const std::vector<std::string>& b,
                                 const std::vector<std::string>& c = {}) {
  return mutual_information(from(j), a, b, c);
}

}  // namespace oracle
