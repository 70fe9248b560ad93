#pragma once

// Point-to-point cribbing instances: X1 a uniform bit, X2 and W unary,
// U1 = X1 through BSC(a), Xtilde1 = U1, Ytilde = Xtilde1 through BSC(b), Y = U1.

#include "cribcoord/factorgraph.hpp"

namespace inst {

using namespace cribcoord;

inline std::vector<double> bsc(double e) { return {1 - e, e, e, 1 - e}; }

inline TargetSpec p2p_target(double a) {
  const Variable x1{var::X1, 2}, x2{var::X2, 1}, w{var::W, 1}, y{var::Y, 2};
  return TargetSpec(JointPmf({x1, x2, w, y}, {0.5 * (1 - a), 0.5 * a, 0.5 * a, 0.5 * (1 - a)}));
}

/// (Ytilde | Xtilde1, Xtilde2) with a binary Xtilde1 and unary Xtilde2.
inline MacChannel p2p_channel(double b) {
  const Variable xt1{var::Xt1, 2}, xt2{var::Xt2, 1}, yt{var::Yt, 2};
  return {ConditionalKernel({xt1, xt2}, {yt}, bsc(b)), std::nullopt};
}

inline CribFactorization p2p_factorization(double a, double b) {
  const Variable t{var::T, 1}, x1{var::X1, 2}, x2{var::X2, 1}, w{var::W, 1}, y{var::Y, 2};
  const Variable u1{var::U1, 2}, u2{var::U2, 1}, xt1{var::Xt1, 2}, xt2{var::Xt2, 1}, yt{var::Yt, 2};
  // (U1, Xtilde1 | X1): mass only on xt1 = u1.
  std::vector<double> enc1(8, 0.0);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t u = 0; u < 2; ++u) enc1[x * 4 + u * 2 + u] = bsc(a)[x * 2 + u];
  std::vector<double> dec(8, 0.0);
  for (std::size_t u = 0; u < 2; ++u)
    for (std::size_t o = 0; o < 2; ++o) dec[(u * 2 + o) * 2 + u] = 1.0;
  return {JointPmf({t}, {1.0}),
          ConditionalKernel({x2, t}, {u2, xt2}, {1.0}),
          ConditionalKernel({x1, xt2, t}, {u1, xt1}, enc1),
          p2p_channel(b).kernel,
          ConditionalKernel({u1, u2, w, yt, t}, {y}, dec)};
}

inline JointPmf p2p_joint(double a, double b) { return build_cribbing_joint(p2p_target(a), p2p_factorization(a, b)); }

}  // namespace inst
