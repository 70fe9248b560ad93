#pragma once

// Markov-factorized joints for the two-encoder coordination problem.
//
// Cribbing shape:
//   q(x1,x2,w) p(t) p(u2,xt2|x2,t) p(u1,xt1|x1,xt2,t) p(yt|xt1,xt2) p(y|u1,u2,w,yt,t)
// No-cribbing shape:
//   q(w)q(x1|w)q(x2|w) p(t) prod_j p(uj|xj,t) p(xtj|uj,xj,t) p(yt|xt1,xt2) p(y|u1,u2,w,yt,t)
//
// Built joints always use the variable order of kJointOrder.

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cribcoord/probcore.hpp"

namespace cribcoord {

namespace var {
inline const std::string X1 = "X1";
inline const std::string X2 = "X2";
inline const std::string W = "W";
inline const std::string T = "T";
inline const std::string U1 = "U1";
inline const std::string U2 = "U2";
inline const std::string Xt1 = "Xtilde1";
inline const std::string Xt2 = "Xtilde2";
inline const std::string Yt = "Ytilde";
inline const std::string Yt1 = "Ytilde1";
inline const std::string Yt2 = "Ytilde2";
inline const std::string Y = "Y";
}  // namespace var

/// Variable order of every joint produced by the builders.
inline const VarNames kJointOrder = {var::X1, var::X2, var::W,   var::T,  var::U1,
                                     var::U2, var::Xt1, var::Xt2, var::Yt, var::Y};

/// Maximum time-sharing alphabet accepted by factorizations and searches.
inline constexpr std::size_t kMaxTimeSharing = 3;

/// The distribution q(x1,x2,w,y) the coordination scheme must reproduce.
/// Stored in the order (X1, X2, W, Y) regardless of input order.
class TargetSpec {
 public:
  explicit TargetSpec(const JointPmf& joint);

  const JointPmf& joint() const { return joint_; }
  /// q(x1, x2, w).
  JointPmf source() const;
  /// I(X1 ; X2 | W) in bits.
  double conditional_dependence() const;

  const Variable& x1() const { return joint_.variables()[0]; }
  const Variable& x2() const { return joint_.variables()[1]; }
  const Variable& w() const { return joint_.variables()[2]; }
  const Variable& y() const { return joint_.variables()[3]; }

 private:
  JointPmf joint_;
};

struct CribFactorization {
  JointPmf p_t;                // over T
  ConditionalKernel enc2;      // (U2, Xtilde2 | X2, T)
  ConditionalKernel enc1;      // (U1, Xtilde1 | X1, Xtilde2, T)
  ConditionalKernel channel;   // (Ytilde | Xtilde1, Xtilde2)
  ConditionalKernel decoder;   // (Y | U1, U2, W, Ytilde, T)
};

struct NoCribFactorization {
  JointPmf p_t;                // over T
  ConditionalKernel aux1;      // (U1 | X1, T)
  ConditionalKernel input1;    // (Xtilde1 | U1, X1, T)
  ConditionalKernel aux2;      // (U2 | X2, T)
  ConditionalKernel input2;    // (Xtilde2 | U2, X2, T)
  ConditionalKernel channel;   // (Ytilde | Xtilde1, Xtilde2)
  ConditionalKernel decoder;   // (Y | U1, U2, W, Ytilde, T)
};

using Factorization = std::variant<CribFactorization, NoCribFactorization>;

/// Channel of two deterministic links: Ytilde = (f1(Xtilde1), f2(Xtilde2)),
/// encoded as ytilde = f1 * ytilde2_size + f2.
struct DeterministicLinks {
  std::vector<std::size_t> f1;  // indexed by Xtilde1
  std::vector<std::size_t> f2;  // indexed by Xtilde2
  std::size_t ytilde1_size = 1;
  std::size_t ytilde2_size = 1;

  static DeterministicLinks identity(std::size_t xt1_size, std::size_t xt2_size);
  /// Number of distinct values in the image of f1 / f2.
  std::size_t image1_size() const;
  std::size_t image2_size() const;
};

/// Channel kernel (Ytilde | Xtilde1, Xtilde2) of a pair of deterministic links.
ConditionalKernel deterministic_link_channel(const DeterministicLinks& links);

/// Channel of the coordination problem: a kernel, optionally known to be a
/// pair of deterministic links.
struct MacChannel {
  ConditionalKernel kernel;
  std::optional<DeterministicLinks> links;

  static MacChannel from_links(const DeterministicLinks& links);
  std::size_t xt1_size() const { return kernel.inputs()[0].size; }
  std::size_t xt2_size() const { return kernel.inputs()[1].size; }
  std::size_t yt_size() const { return kernel.outputs()[0].size; }
};

JointPmf build_cribbing_joint(const TargetSpec& target, const CribFactorization& f);

/// Throws PreconditionError if I(X1;X2|W) > kIndependenceTolerance.
JointPmf build_nocrib_joint(const TargetSpec& target, const NoCribFactorization& f);

JointPmf build_joint(const TargetSpec& target, const Factorization& f);

inline constexpr double kIndependenceTolerance = 1e-9;

/// Re-expresses a no-cribbing factorization in the cribbing shape (Enc 1
/// simply ignores Xtilde2).
CribFactorization as_cribbing(const NoCribFactorization& f);

struct MarginalMatch {
  /// L-infinity deviation of p(x1,x2,w,y|t) from q per t; NaN where P(T=t)=0.
  std::vector<double> per_t;
  double worst = 0.0;
  std::size_t worst_t = 0;
  bool pass = false;
};

MarginalMatch check_marginal_match(const JointPmf& joint, const TargetSpec& target, double tol);

/// I(A ; B | C); callers assert it vanishes for claimed Markov chains.
double check_markov(const JointPmf& joint, const VarNames& a, const VarNames& b, const VarNames& c);

}  // namespace cribcoord
