#pragma once

// Finite-blocklength execution of the random-binning coordination protocol:
// seeded bin maps over auxiliary sequences, the two encoders (Enc 1 sees
// Xtilde2^n), a maximum-likelihood Slepian-Wolf decoder over bin-consistent
// candidates, and the decoder's output simulation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cribcoord/probcore.hpp"

namespace cribcoord::osrb {

/// Shared-randomness rates (R01, R02) and binning extras (Rt1, Rt2), bits/symbol.
struct Rates {
  double r01 = 0.0;
  double rt1 = 0.0;
  double r02 = 0.0;
  double rt2 = 0.0;
};

/// Single-letter conditionals read off a cribbing-shaped joint with trivial T.
/// Rows whose conditioning event has zero probability are uniform.
struct ProtocolModel {
  std::size_t nx1 = 1, nx2 = 1, nw = 1, nu1 = 1, nu2 = 1, nxt1 = 1, nxt2 = 1, nyt = 1, ny = 1;
  std::vector<double> source;  // q(x1, x2, w)
  std::vector<double> u2_x2;   // p(u2 | x2)                 [x2][u2]
  std::vector<double> xt2_u2x2;  // p(xt2 | u2, x2)          [u2][x2][xt2]
  std::vector<double> u1_x1xt2;  // p(u1 | x1, xt2)          [x1][xt2][u1]
  std::vector<double> xt1_u1x1xt2;  // p(xt1 | u1, x1, xt2)  [u1][x1][xt2][xt1]
  std::vector<double> channel;  // p(yt | xt1, xt2)          [xt1][xt2][yt]
  std::vector<double> decoder;  // p(y | u1, u2, w, yt)      [u1][u2][w][yt][y]
  std::vector<double> sw;       // p(u1, u2, w, yt)          [u1][u2][w][yt]
  std::vector<double> target;   // q(x1, x2, w, y)

  /// Throws InvalidArgument unless the joint has all cribbing variables and |T| = 1.
  static ProtocolModel from_joint(const JointPmf& joint);
};

// ------------------------------------------------------------ rate window

struct WindowBounds {
  double cap1 = 0.0;   // H(U1 | X1, Xtilde2)
  double cap2 = 0.0;   // H(U2 | X2)
  double sw1 = 0.0;    // H(U1 | U2, W, Ytilde)
  double sw2 = 0.0;    // H(U2 | U1, W, Ytilde)
  double sw12 = 0.0;   // H(U1, U2 | W, Ytilde)
  double f1 = 0.0;     // H(U1 | X1, X2, W, Y)
  double f2 = 0.0;     // H(U2 | X1, X2, W, Y)
  double f12 = 0.0;    // H(U1, U2 | X1, X2, W, Y)
};

struct Condition {
  std::string label;
  double slack = 0.0;  // >= 0 when satisfied
};

struct RateWindow {
  WindowBounds bounds;
  bool nonempty = false;
  std::optional<Rates> choice;
  /// Slacks of the eight conditions (plus non-negativity) at `choice`, or,
  /// for an empty window, the three conditions that cannot hold together.
  std::vector<Condition> conditions;
};

WindowBounds window_bounds(const JointPmf& joint);
std::vector<Condition> check_rates(const WindowBounds& b, const Rates& r);
RateWindow osrb_rate_window(const JointPmf& joint, double tol = 1e-12);

// ---------------------------------------------------------------- binning

/// Sequence index: first symbol most significant.
std::size_t sequence_count(std::size_t alphabet, std::size_t n, std::size_t cap);
std::vector<std::size_t> decode_sequence(std::size_t index, std::size_t alphabet, std::size_t n);
std::size_t encode_sequence(const std::vector<std::size_t>& seq, std::size_t alphabet);

/// Number of index bits for rate R at blocklength n: ceil(nR), with a 1e-9
/// allowance so that exact products like 4 * 0.5 are not rounded up.
std::size_t bin_bits(double rate, std::size_t n);

class BinningScheme {
 public:
  BinningScheme(std::uint64_t seed, std::size_t user, std::size_t alphabet, std::size_t n, double r0,
                double rt, std::size_t cap = std::size_t{1} << 22);

  std::size_t n() const { return n_; }
  std::size_t alphabet() const { return alphabet_; }
  std::size_t sequences() const { return count_; }
  std::size_t k_bits() const { return kbits_; }
  std::size_t f_bits() const { return fbits_; }
  std::uint64_t k_count() const { return std::uint64_t{1} << kbits_; }
  std::uint64_t f_count() const { return std::uint64_t{1} << fbits_; }

  std::pair<std::uint64_t, std::uint64_t> bin_of(std::size_t seq) const { return {k_[seq], f_[seq]}; }
  /// Sequences in bin (k, f), ascending.
  std::vector<std::size_t> members(std::uint64_t k, std::uint64_t f) const;

 private:
  std::size_t n_, alphabet_, count_, kbits_, fbits_;
  std::vector<std::uint64_t> k_, f_;
  std::vector<std::pair<std::uint64_t, std::size_t>> inverse_;  // (k * f_count + f, seq), sorted
};

// ----------------------------------------------------------- protocol steps

struct EncoderOutput {
  std::vector<std::size_t> u;
  std::vector<std::size_t> xt;
};

/// Distribution over u2^n in bin (k2, f2) proportional to prod p(u2_i | x2_i).
/// Empty when the restricted support has zero mass (encoder abort).
std::vector<std::pair<std::size_t, double>> encoder2_law(const ProtocolModel& m, const BinningScheme& s,
                                                         std::uint64_t k2, std::uint64_t f2,
                                                         const std::vector<std::size_t>& x2);
std::vector<std::pair<std::size_t, double>> encoder1_law(const ProtocolModel& m, const BinningScheme& s,
                                                         std::uint64_t k1, std::uint64_t f1,
                                                         const std::vector<std::size_t>& x1,
                                                         const std::vector<std::size_t>& xt2);

std::optional<EncoderOutput> encoder_sample_2(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k2,
                                              std::uint64_t f2, const std::vector<std::size_t>& x2,
                                              std::mt19937_64& rng);
std::optional<EncoderOutput> encoder_sample_1(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k1,
                                              std::uint64_t f1, const std::vector<std::size_t>& x1,
                                              const std::vector<std::size_t>& xt2, std::mt19937_64& rng);

struct Decoded {
  std::vector<std::size_t> u1;
  std::vector<std::size_t> u2;
};

/// Unique maximizer of prod p(u1_i, u2_i, w_i, yt_i) over bin-consistent
/// pairs; nullopt on ties (relative 1e-12) or when every candidate has zero
/// likelihood. A single candidate pair is returned unconditionally.
std::optional<Decoded> sw_decode(const ProtocolModel& m, const BinningScheme& s1, std::uint64_t k1,
                                 std::uint64_t f1, const BinningScheme& s2, std::uint64_t k2, std::uint64_t f2,
                                 const std::vector<std::size_t>& w, const std::vector<std::size_t>& yt);

// ---------------------------------------------------------------- protocol

enum class SimMode { Exact, MonteCarlo };

struct ProtocolConfig {
  std::size_t n = 1;
  Rates rates;
  std::uint64_t seed = 1;
  std::size_t trials = 1000;  // Monte-Carlo only
  SimMode mode = SimMode::MonteCarlo;
  /// Fix (F1, F2) instead of drawing them uniformly.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> fixed_f;
  std::size_t sequence_cap = std::size_t{1} << 22;
  std::size_t exact_leaf_cap = std::size_t{1} << 26;
  std::size_t block_table_cap = std::size_t{1} << 24;
  std::size_t threads = 0;
};

struct SimulationReport {
  std::size_t n = 0;
  SimMode mode = SimMode::MonteCarlo;
  std::size_t trials = 0;  // Monte-Carlo trials; 0 in exact mode
  Rates rates;
  std::size_t bits[4] = {0, 0, 0, 0};  // ceil(nR) for r01, rt1, r02, rt2
  double decode_error_rate = 0.0;      // wrong or failed SW decoding
  double encoder_abort_rate = 0.0;
  double tv_first_order = 0.0;
  std::optional<double> tv_block;  // exact in exact mode, plug-in estimate otherwise
  bool tv_block_biased = false;
  /// Per-position empirical law of Ytilde given (Xtilde1, Xtilde2); [pos][xt1][xt2][yt], MC only.
  std::vector<double> channel_counts;
  std::vector<double> source_block_counts;  // MC counts of (x1,x2,w) blocks when within cap
};

/// Throws ResourceLimit when sequence or exact-enumeration caps are exceeded.
SimulationReport run_protocol(const JointPmf& joint, const ProtocolConfig& cfg);

/// 2 sqrt(eps) (H + log2|S| + log2(1/sqrt(eps))), with g(0) = 0.
double g_epsilon(double eps, double entropy_hq, double alphabet_product);

}  // namespace cribcoord::osrb
