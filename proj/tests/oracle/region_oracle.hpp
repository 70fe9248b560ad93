#pragma once

// Every inequality of the cribbing inner bound, the no-cribbing
// characterization, the perfect-channel cribbing constraints and the binning
// window, written out term by term on the direct-summation oracle.

#include <map>
#include <string>
#include <utility>

#include "oracle/naive_info.hpp"

namespace oracle {

using Sides = std::map<std::string, std::pair<double, double>>;  // label -> (lhs, rhs); rate bounds use lhs = 0

inline Sides crib_sides(const Table& p) {
  auto I = [&](std::vector<std::string> a, std::vector<std::string> b) {
    return mutual_information(p, a, b, {"T"});
  };
  const std::vector<std::string> all{"X1", "X2", "W", "Y"};
  Sides s;
  s["decode_u1"] = {I({"U1"}, {"U2", "W", "Ytilde"}), I({"U1"}, {"X1", "Xtilde2"})};
  s["decode_u2"] = {I({"U2"}, {"U1", "W", "Ytilde"}), I({"U2"}, {"X2"})};
  s["decode_joint"] = {I({"U1", "U2"}, {"W", "Ytilde"}),
                       I({"U1"}, {"X1", "Xtilde2"}) + I({"U2"}, {"X2"}) - I({"U1"}, {"U2"})};
  s["r01_individual"] = {0.0, I({"U1"}, all) - I({"U1"}, {"U2", "W", "Ytilde"})};
  s["r02_individual"] = {0.0, I({"U2"}, all) - I({"U2"}, {"U1", "W", "Ytilde"})};
  s["r01_cross"] = {0.0, I({"U1"}, all) - I({"U1"}, {"W", "Ytilde"}) + I({"U2"}, {"X2"}) -
                             I({"U2"}, {"U1", "W", "Ytilde"})};
  s["r02_cross"] = {0.0, I({"U2"}, all) - I({"U2"}, {"W", "Ytilde"}) + I({"U1"}, {"X1", "Xtilde2"}) -
                             I({"U1"}, {"U2", "W", "Ytilde"})};
  s["sum_rate"] = {0.0, I({"U1", "U2"}, all) - I({"U1", "U2"}, {"W", "Ytilde"})};
  return s;
}

/// Replaces the Ytilde column by Ytilde1 = f1(Xtilde1) and Ytilde2 = f2(Xtilde2).
inline Table with_link_outputs(const Table& in, const std::vector<std::size_t>& f1, const std::vector<std::size_t>& f2,
                               std::size_t y1_size, std::size_t y2_size) {
  const auto yt = columns(in, {"Ytilde"})[0];
  const auto x1 = columns(in, {"Xtilde1"})[0];
  const auto x2 = columns(in, {"Xtilde2"})[0];
  Table out;
  for (std::size_t k = 0; k < in.names.size(); ++k)
    if (k != yt) {
      out.names.push_back(in.names[k]);
      out.sizes.push_back(in.sizes[k]);
    }
  out.names.push_back("Ytilde1");
  out.sizes.push_back(y1_size);
  out.names.push_back("Ytilde2");
  out.sizes.push_back(y2_size);
  out.p = in.p;
  for (const auto& d : in.d) {
    std::vector<std::size_t> e;
    for (std::size_t k = 0; k < d.size(); ++k)
      if (k != yt) e.push_back(d[k]);
    e.push_back(f1[d[x1]]);
    e.push_back(f2[d[x2]]);
    out.d.push_back(e);
  }
  return out;
}

/// `p` carries the link outputs as separate variables Ytilde1, Ytilde2.
inline Sides nocrib_sides(const Table& p) {
  Sides s;
  const double h1 = entropy(p, {"Ytilde1"}, {"W", "T"});
  s["link1_capacity"] = {h1, mutual_information(p, {"U1", "Ytilde1"}, {"X1"}, {"W", "T"})};
  s["link2_capacity"] = {entropy(p, {"Ytilde2"}, {"W", "T"}),
                         mutual_information(p, {"U2", "Ytilde2"}, {"X2"}, {"W", "T"})};
  s["r01"] = {0.0, mutual_information(p, {"U1", "Ytilde1"}, {"X1", "Y"}, {"X2", "W", "T"}) - h1};
  return s;
}

inline Sides crib_perfect_sides(const Table& p) {
  auto I = [&](std::vector<std::string> a, std::vector<std::string> b, std::vector<std::string> c = {"T"}) {
    return mutual_information(p, a, b, c);
  };
  const double d1 = I({"U1", "Xtilde1"}, {"X1", "Xtilde2"});
  const double d2 = I({"U2", "Xtilde2"}, {"X2"});
  Sides s;
  s["xtilde1_entropy"] = {entropy(p, {"Xtilde1"}, {"T"}), d1 - I({"U1"}, {"U2", "Xtilde2"}, {"Xtilde1", "T"})};
  s["xtilde2_entropy"] = {entropy(p, {"Xtilde2"}, {"T"}), d2 - I({"U2"}, {"U1", "Xtilde1"}, {"Xtilde2", "T"})};
  s["xtilde_joint_entropy"] = {entropy(p, {"Xtilde1", "Xtilde2"}, {"T"}),
                               d2 - I({"U2", "Xtilde2"}, {"U1", "Xtilde1"}) + d1};
  return s;
}

/// The eight binning-window entropies, keyed like osrb::WindowBounds.
inline std::map<std::string, double> window_sides(const Table& p) {
  const std::vector<std::string> all{"X1", "X2", "W", "Y"};
  return {{"cap1", entropy(p, {"U1"}, {"X1", "Xtilde2"})},
          {"cap2", entropy(p, {"U2"}, {"X2"})},
          {"sw1", entropy(p, {"U1"}, {"U2", "W", "Ytilde"})},
          {"sw2", entropy(p, {"U2"}, {"U1", "W", "Ytilde"})},
          {"sw12", entropy(p, {"U1", "U2"}, {"W", "Ytilde"})},
          {"f1", entropy(p, {"U1"}, all)},
          {"f2", entropy(p, {"U2"}, all)},
          {"f12", entropy(p, {"U1", "U2"}, all)}};
}

}  // namespace oracle
