#include "cribcoord/osrb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "cribcoord/factorgraph.hpp"
#include "cribcoord/rng.hpp"
#include "parallel.hpp"

namespace cribcoord::osrb {
namespace {

// Conditional table p(children | parents), rows in parent row-major order.
std::vector<double> conditional(const JointPmf& joint, const VarNames& parents, const VarNames& children) {
  VarNames all = parents;
  all.insert(all.end(), children.begin(), children.end());
  const JointPmf m = reorder(marginalize(joint, all), all);
  std::size_t cols = 1;
  for (const auto& c : children) cols *= joint.variable(c).size;
  std::vector<double> t(m.probs().begin(), m.probs().end());
  for (std::size_t r = 0; r < t.size() / cols; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += t[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) t[r * cols + c] = s > 0.0 ? t[r * cols + c] / s : 1.0 / double(cols);
  }
  return t;
}

std::vector<double> table_of(const JointPmf& joint, const VarNames& order) {
  const JointPmf m = reorder(marginalize(joint, order), order);
  return {m.probs().begin(), m.probs().end()};
}

std::size_t draw(const double* p, std::size_t k, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (u < p[i]) return i;
    u -= p[i];
  }
  // Land on the last positive entry so rounding never selects a zero-mass symbol.
  for (std::size_t i = k; i-- > 0;)
    if (p[i] > 0.0) return i;
  return k - 1;
}

std::uint64_t draw_index(std::uint64_t count, std::mt19937_64& rng) {
  if (count <= 1) return 0;
  return std::uniform_int_distribution<std::uint64_t>(0, count - 1)(rng);
}

double clamp0(double x) { return x < 0.0 ? 0.0 : x; }

}  // namespace

ProtocolModel ProtocolModel::from_joint(const JointPmf& in) {
  for (const auto& n : kJointOrder)
    if (!in.has(n)) throw InvalidArgument("protocol model: joint lacks variable '" + n + "'");
  if (in.variable(var::T).size != 1)
    throw InvalidArgument("protocol model: time sharing must be trivial (|T| = 1)");
  const JointPmf j = reorder(in, kJointOrder);
  using namespace var;
  ProtocolModel m;
  m.nx1 = j.variable(X1).size;
  m.nx2 = j.variable(X2).size;
  m.nw = j.variable(W).size;
  m.nu1 = j.variable(U1).size;
  m.nu2 = j.variable(U2).size;
  m.nxt1 = j.variable(Xt1).size;
  m.nxt2 = j.variable(Xt2).size;
  m.nyt = j.variable(Yt).size;
  m.ny = j.variable(Y).size;
  m.source = table_of(j, {X1, X2, W});
  m.u2_x2 = conditional(j, {X2}, {U2});
  m.xt2_u2x2 = conditional(j, {U2, X2}, {Xt2});
  m.u1_x1xt2 = conditional(j, {X1, Xt2}, {U1});
  m.xt1_u1x1xt2 = conditional(j, {U1, X1, Xt2}, {Xt1});
  m.channel = conditional(j, {Xt1, Xt2}, {Yt});
  m.decoder = conditional(j, {U1, U2, W, Yt}, {Y});
  m.sw = table_of(j, {U1, U2, W, Yt});
  m.target = table_of(j, {X1, X2, W, Y});
  return m;
}

// ------------------------------------------------------------ rate window

WindowBounds window_bounds(const JointPmf& joint) {
  using namespace var;
  for (const auto& n : kJointOrder)
    if (!joint.has(n)) throw InvalidArgument("rate window: joint lacks variable '" + n + "'");
  WindowBounds b;
  b.cap1 = clamp0(entropy(joint, {U1}, {X1, Xt2}));
  b.cap2 = clamp0(entropy(joint, {U2}, {X2}));
  b.sw1 = clamp0(entropy(joint, {U1}, {U2, W, Yt}));
  b.sw2 = clamp0(entropy(joint, {U2}, {U1, W, Yt}));
  b.sw12 = clamp0(entropy(joint, {U1, U2}, {W, Yt}));
  b.f1 = clamp0(entropy(joint, {U1}, {X1, X2, W, Y}));
  b.f2 = clamp0(entropy(joint, {U2}, {X1, X2, W, Y}));
  b.f12 = clamp0(entropy(joint, {U1, U2}, {X1, X2, W, Y}));
  return b;
}

std::vector<Condition> check_rates(const WindowBounds& b, const Rates& r) {
  const double a1 = r.r01 + r.rt1, a2 = r.r02 + r.rt2;
  return {
      {"binning_cap_1", b.cap1 - a1},
      {"binning_cap_2", b.cap2 - a2},
      {"sw_floor_1", a1 - b.sw1},
      {"sw_floor_2", a2 - b.sw2},
      {"sw_floor_sum", a1 + a2 - b.sw12},
      {"f_cap_1", b.f1 - r.rt1},
      {"f_cap_2", b.f2 - r.rt2},
      {"f_cap_sum", b.f12 - r.rt1 - r.rt2},
      {"nonnegative", std::min({r.r01, r.rt1, r.r02, r.rt2})},
  };
}

RateWindow osrb_rate_window(const JointPmf& joint, double tol) {
  RateWindow w;
  w.bounds = window_bounds(joint);
  const auto& b = w.bounds;
  w.nonempty = b.sw1 <= b.cap1 + tol && b.sw2 <= b.cap2 + tol && b.cap1 + b.cap2 >= b.sw12 - tol;
  if (!w.nonempty) {
    w.conditions = {{"sw_floor_1_vs_cap_1", b.cap1 - b.sw1},
                    {"sw_floor_2_vs_cap_2", b.cap2 - b.sw2},
                    {"sw_floor_sum_vs_caps", b.cap1 + b.cap2 - b.sw12}};
    return w;
  }
  // Midpoints of [sw_j, cap_j], pushed toward the caps if the sum floor needs it.
  const double d1 = std::max(0.0, b.cap1 - b.sw1), d2 = std::max(0.0, b.cap2 - b.sw2);
  double lambda = 0.5;
  if (d1 + d2 > 0.0) lambda = std::clamp((b.sw12 - b.sw1 - b.sw2) / (d1 + d2), 0.5, 1.0);
  const double a1 = std::min(b.sw1 + lambda * d1, std::max(b.cap1, b.sw1));
  const double a2 = std::min(b.sw2 + lambda * d2, std::max(b.cap2, b.sw2));
  double rt1 = 0.5 * std::min(a1, b.f1), rt2 = 0.5 * std::min(a2, b.f2);
  if (rt1 + rt2 > b.f12) {
    const double s = rt1 + rt2 > 0.0 ? b.f12 / (rt1 + rt2) : 0.0;
    rt1 *= s;
    rt2 *= s;
  }
  w.choice = Rates{a1 - rt1, rt1, a2 - rt2, rt2};
  w.conditions = check_rates(b, *w.choice);
  return w;
}

// ---------------------------------------------------------------- binning

std::size_t sequence_count(std::size_t alphabet, std::size_t n, std::size_t cap) {
  std::size_t c = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (c > cap / alphabet) throw ResourceLimit("sequence space exceeds enumeration cap " + std::to_string(cap));
    c *= alphabet;
  }
  if (c > cap) throw ResourceLimit("sequence space exceeds enumeration cap " + std::to_string(cap));
  return c;
}

std::vector<std::size_t> decode_sequence(std::size_t index, std::size_t alphabet, std::size_t n) {
  std::vector<std::size_t> s(n);
  for (std::size_t i = n; i-- > 0;) {
    s[i] = index % alphabet;
    index /= alphabet;
  }
  return s;
}

std::size_t encode_sequence(const std::vector<std::size_t>& seq, std::size_t alphabet) {
  std::size_t k = 0;
  for (auto v : seq) k = k * alphabet + v;
  return k;
}

std::size_t bin_bits(double rate, std::size_t n) {
  if (!(rate >= 0.0)) throw InvalidArgument("rates must be non-negative");
  const double b = std::ceil(double(n) * rate - 1e-9);
  if (b > 62.0) throw ResourceLimit("bin index wider than 62 bits");
  return b <= 0.0 ? 0 : static_cast<std::size_t>(b);
}

BinningScheme::BinningScheme(std::uint64_t seed, std::size_t user, std::size_t alphabet, std::size_t n, double r0,
                             double rt, std::size_t cap)
    : n_(n), alphabet_(alphabet), count_(sequence_count(alphabet, n, cap)), kbits_(bin_bits(r0, n)),
      fbits_(bin_bits(rt, n)) {
  if (kbits_ + fbits_ > 62) throw ResourceLimit("bin index wider than 62 bits");
  k_.resize(count_);
  f_.resize(count_);
  inverse_.resize(count_);
  for (std::size_t s = 0; s < count_; ++s) {
    k_[s] = kbits_ ? stream_seed(seed, 2 * user, s) >> (64 - kbits_) : 0;
    f_[s] = fbits_ ? stream_seed(seed, 2 * user + 1, s) >> (64 - fbits_) : 0;
    inverse_[s] = {(k_[s] << fbits_) | f_[s], s};
  }
  std::sort(inverse_.begin(), inverse_.end());
}

std::vector<std::size_t> BinningScheme::members(std::uint64_t k, std::uint64_t f) const {
  const std::uint64_t key = (k << fbits_) | f;
  auto lo = std::lower_bound(inverse_.begin(), inverse_.end(), std::make_pair(key, std::size_t{0}));
  std::vector<std::size_t> out;
  for (; lo != inverse_.end() && lo->first == key; ++lo) out.push_back(lo->second);
  return out;
}

// ----------------------------------------------------------- protocol steps

namespace {

using Law = std::vector<std::pair<std::size_t, double>>;

template <class Weight>
Law restricted_law(const BinningScheme& s, std::uint64_t k, std::uint64_t f, Weight weight) {
  Law law;
  double total = 0.0;
  for (auto seq : s.members(k, f)) {
    const auto u = decode_sequence(seq, s.alphabet(), s.n());
    double w = 1.0;
    for (std::size_t i = 0; i < u.size() && w > 0.0; ++i) w *= weight(i, u[i]);
    if (w > 0.0) {
      law.emplace_back(seq, w);
      total += w;
    }
  }
  for (auto& e : law) e.second /= total;
  return law;
}

std::size_t draw_law(const Law& law, std::mt19937_64& rng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t i = 0; i + 1 < law.size(); ++i) {
    if (u < law[i].second) return law[i].first;
    u -= law[i].second;
  }
  return law.back().first;
}

}  // namespace

Law encoder2_law(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k2, std::uint64_t f2,
                 const std::vector<std::size_t>& x2) {
  return restricted_law(s, k2, f2, [&](std::size_t i, std::size_t u) { return m.u2_x2[x2[i] * m.nu2 + u]; });
}

Law encoder1_law(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k1, std::uint64_t f1,
                 const std::vector<std::size_t>& x1, const std::vector<std::size_t>& xt2) {
  return restricted_law(s, k1, f1, [&](std::size_t i, std::size_t u) {
    return m.u1_x1xt2[(x1[i] * m.nxt2 + xt2[i]) * m.nu1 + u];
  });
}

std::optional<EncoderOutput> encoder_sample_2(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k2,
                                              std::uint64_t f2, const std::vector<std::size_t>& x2,
                                              std::mt19937_64& rng) {
  const Law law = encoder2_law(m, s, k2, f2, x2);
  if (law.empty()) return std::nullopt;
  EncoderOutput out;
  out.u = decode_sequence(draw_law(law, rng), s.alphabet(), s.n());
  out.xt.resize(out.u.size());
  for (std::size_t i = 0; i < out.u.size(); ++i)
    out.xt[i] = draw(&m.xt2_u2x2[(out.u[i] * m.nx2 + x2[i]) * m.nxt2], m.nxt2, rng);
  return out;
}

std::optional<EncoderOutput> encoder_sample_1(const ProtocolModel& m, const BinningScheme& s, std::uint64_t k1,
                                              std::uint64_t f1, const std::vector<std::size_t>& x1,
                                              const std::vector<std::size_t>& xt2, std::mt19937_64& rng) {
  const Law law = encoder1_law(m, s, k1, f1, x1, xt2);
  if (law.empty()) return std::nullopt;
  EncoderOutput out;
  out.u = decode_sequence(draw_law(law, rng), s.alphabet(), s.n());
  out.xt.resize(out.u.size());
  for (std::size_t i = 0; i < out.u.size(); ++i)
    out.xt[i] = draw(&m.xt1_u1x1xt2[((out.u[i] * m.nx1 + x1[i]) * m.nxt2 + xt2[i]) * m.nxt1], m.nxt1, rng);
  return out;
}

std::optional<Decoded> sw_decode(const ProtocolModel& m, const BinningScheme& s1, std::uint64_t k1, std::uint64_t f1,
                                 const BinningScheme& s2, std::uint64_t k2, std::uint64_t f2,
                                 const std::vector<std::size_t>& w, const std::vector<std::size_t>& yt) {
  const auto b1 = s1.members(k1, f1);
  const auto b2 = s2.members(k2, f2);
  const std::size_t n = s1.n();
  if (b1.size() == 1 && b2.size() == 1)
    return Decoded{decode_sequence(b1[0], m.nu1, n), decode_sequence(b2[0], m.nu2, n)};
  if (b1.empty() || b2.empty()) return std::nullopt;

  // Per-position likelihood slices p(u1, u2, w_i, yt_i).
  std::vector<double> P(n * m.nu1 * m.nu2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m.nu1; ++a)
      for (std::size_t b = 0; b < m.nu2; ++b)
        P[(i * m.nu1 + a) * m.nu2 + b] = m.sw[((a * m.nu2 + b) * m.nw + w[i]) * m.nyt + yt[i]];

  std::vector<std::vector<std::size_t>> d2;
  d2.reserve(b2.size());
  for (auto s : b2) d2.push_back(decode_sequence(s, m.nu2, n));

  struct Cand {
    double ub;
    std::size_t seq;
    std::vector<std::size_t> digits;
  };
  std::vector<Cand> c1;
  c1.reserve(b1.size());
  for (auto s : b1) {
    auto d = decode_sequence(s, m.nu1, n);
    double ub = 1.0;
    for (std::size_t i = 0; i < n && ub > 0.0; ++i) {
      const double* row = &P[(i * m.nu1 + d[i]) * m.nu2];
      ub *= *std::max_element(row, row + m.nu2);
    }
    if (ub > 0.0) c1.push_back({ub, s, std::move(d)});
  }
  std::stable_sort(c1.begin(), c1.end(), [](const Cand& a, const Cand& b) { return a.ub > b.ub; });

  constexpr double rel = 1e-12;
  double best = 0.0;
  bool tie = false;
  const Cand* bu1 = nullptr;
  std::size_t bu2 = 0;
  for (const auto& c : c1) {
    if (best > 0.0 && c.ub < best * (1.0 - rel)) break;
    for (std::size_t j = 0; j < d2.size(); ++j) {
      double sc = 1.0;
      for (std::size_t i = 0; i < n && sc > 0.0; ++i) sc *= P[(i * m.nu1 + c.digits[i]) * m.nu2 + d2[j][i]];
      if (sc <= 0.0) continue;
      if (sc > best * (1.0 + rel)) {
        best = sc;
        bu1 = &c;
        bu2 = j;
        tie = false;
      } else if (sc >= best * (1.0 - rel)) {
        tie = true;
      }
    }
  }
  if (best <= 0.0 || tie) return std::nullopt;
  return Decoded{bu1->digits, d2[bu2]};
}

// ---------------------------------------------------------------- protocol

namespace {

struct Symbols {
  std::size_t s = 1;  // |X1||X2||W||Y|
  std::size_t src = 1;
};

std::size_t symbol(const ProtocolModel& m, std::size_t x1, std::size_t x2, std::size_t w, std::size_t y) {
  return ((x1 * m.nx2 + x2) * m.nw + w) * m.ny + y;
}

bool fits_u64(std::size_t base, std::size_t n) {
  return double(n) * std::log2(double(std::max<std::size_t>(base, 2))) < 63.0;
}

struct Tally {
  std::size_t aborts = 0, errors = 0;
  std::vector<std::uint64_t> first;  // |S| symbol counts
  std::vector<std::uint64_t> blocks;  // block index per trial
  std::vector<std::uint64_t> channel;  // n * nxt1 * nxt2 * nyt
  std::vector<std::uint64_t> source_blocks;  // source block index per trial
};

}  // namespace

SimulationReport run_protocol(const JointPmf& joint, const ProtocolConfig& cfg) {
  if (cfg.n < 1) throw InvalidArgument("blocklength must be >= 1");
  const ProtocolModel m = ProtocolModel::from_joint(joint);
  const BinningScheme s1(cfg.seed, 1, m.nu1, cfg.n, cfg.rates.r01, cfg.rates.rt1, cfg.sequence_cap);
  const BinningScheme s2(cfg.seed, 2, m.nu2, cfg.n, cfg.rates.r02, cfg.rates.rt2, cfg.sequence_cap);
  const std::size_t n = cfg.n;
  const std::size_t S = m.nx1 * m.nx2 * m.nw * m.ny;
  const std::size_t nsrc = m.nx1 * m.nx2 * m.nw;

  SimulationReport rep;
  rep.n = n;
  rep.mode = cfg.mode;
  rep.rates = cfg.rates;
  rep.bits[0] = s1.k_bits();
  rep.bits[1] = s1.f_bits();
  rep.bits[2] = s2.k_bits();
  rep.bits[3] = s2.f_bits();
  if (cfg.fixed_f && (cfg.fixed_f->first >= s1.f_count() || cfg.fixed_f->second >= s2.f_count()))
    throw InvalidArgument("fixed F index out of range");

  auto block_q = [&](std::uint64_t b) {
    double q = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      q *= m.target[b % S];
      b /= S;
    }
    return q;
  };
  auto first_tv = [&](const std::vector<double>& freq) {
    double tv = 0.0;
    for (std::size_t s = 0; s < S; ++s) tv += std::fabs(freq[s] - m.target[s]);
    return tv;
  };
  const bool block_ok = fits_u64(S, n);

  if (cfg.mode == SimMode::Exact) {
    // Induced law of the (x, y) block, keyed by sum_i s_i * S^i.
    std::unordered_map<std::uint64_t, double> law;
    double abort_mass = 0.0, error_mass = 0.0;
    std::size_t leaves = 0;
    auto bump = [&] {
      if (++leaves > cfg.exact_leaf_cap)
        throw ResourceLimit("exact enumeration exceeds " + std::to_string(cfg.exact_leaf_cap) + " states");
    };
    if (!block_ok) throw ResourceLimit("block alphabet too large for exact mode");

    std::vector<std::uint64_t> pw(n, 1);
    for (std::size_t i = 1; i < n; ++i) pw[i] = pw[i - 1] * S;
    auto emit = [&](const std::vector<std::size_t>& x1, const std::vector<std::size_t>& x2,
                    const std::vector<std::size_t>& w, const std::vector<std::size_t>& y, double p) {
      std::uint64_t key = 0;
      for (std::size_t i = 0; i < n; ++i) key += symbol(m, x1[i], x2[i], w[i], y[i]) * pw[i];
      law[key] += p;
    };
    // Enumerates every sequence v with prob prod_i row(i)[v_i] > 0.
    auto product_support = [&](std::size_t alpha, auto row, auto&& fn) {
      std::vector<std::size_t> v(n, 0);
      auto rec = [&](auto&& self, std::size_t i, double p) -> void {
        if (i == n) return fn(v, p);
        const double* r = row(i);
        for (std::size_t a = 0; a < alpha; ++a) {
          if (r[a] <= 0.0) continue;
          v[i] = a;
          self(self, i + 1, p * r[a]);
        }
      };
      rec(rec, 0, 1.0);
    };
    const std::vector<std::size_t> zeros(n, 0);
    const std::uint64_t nk1 = s1.k_count(), nk2 = s2.k_count();
    const std::uint64_t nf1 = cfg.fixed_f ? 1 : s1.f_count(), nf2 = cfg.fixed_f ? 1 : s2.f_count();
    const double pkf = 1.0 / (double(nk1) * double(nf1) * double(nk2) * double(nf2));

    product_support(nsrc, [&](std::size_t) { return m.source.data(); }, [&](const std::vector<std::size_t>& src, double ps) {
      std::vector<std::size_t> x1(n), x2(n), w(n);
      for (std::size_t i = 0; i < n; ++i) {
        x1[i] = src[i] / (m.nx2 * m.nw);
        x2[i] = (src[i] / m.nw) % m.nx2;
        w[i] = src[i] % m.nw;
      }
      for (std::uint64_t k1 = 0; k1 < nk1; ++k1)
        for (std::uint64_t f1i = 0; f1i < nf1; ++f1i)
          for (std::uint64_t k2 = 0; k2 < nk2; ++k2)
            for (std::uint64_t f2i = 0; f2i < nf2; ++f2i) {
              const std::uint64_t f1 = cfg.fixed_f ? cfg.fixed_f->first : f1i;
              const std::uint64_t f2 = cfg.fixed_f ? cfg.fixed_f->second : f2i;
              const double p0 = ps * pkf;
              const Law l2 = encoder2_law(m, s2, k2, f2, x2);
              if (l2.empty()) {
                bump();
                abort_mass += p0;
                emit(x1, x2, w, zeros, p0);
                continue;
              }
              for (const auto& [u2s, pu2] : l2) {
                const auto u2 = decode_sequence(u2s, m.nu2, n);
                product_support(
                    m.nxt2, [&](std::size_t i) { return &m.xt2_u2x2[(u2[i] * m.nx2 + x2[i]) * m.nxt2]; },
                    [&](const std::vector<std::size_t>& xt2, double pxt2) {
                      const double p1 = p0 * pu2 * pxt2;
                      const Law l1 = encoder1_law(m, s1, k1, f1, x1, xt2);
                      if (l1.empty()) {
                        bump();
                        abort_mass += p1;
                        emit(x1, x2, w, zeros, p1);
                        return;
                      }
                      for (const auto& [u1s, pu1] : l1) {
                        const auto u1 = decode_sequence(u1s, m.nu1, n);
                        product_support(
                            m.nxt1,
                            [&](std::size_t i) { return &m.xt1_u1x1xt2[((u1[i] * m.nx1 + x1[i]) * m.nxt2 + xt2[i]) * m.nxt1]; },
                            [&](const std::vector<std::size_t>& xt1, double pxt1) {
                              const std::vector<std::size_t> xt1c = xt1;
                              product_support(
                                  m.nyt, [&](std::size_t i) { return &m.channel[(xt1c[i] * m.nxt2 + xt2[i]) * m.nyt]; },
                                  [&](const std::vector<std::size_t>& yt, double pyt) {
                                    const double p2 = p1 * pu1 * pxt1 * pyt;
                                    const auto dec = sw_decode(m, s1, k1, f1, s2, k2, f2, w, yt);
                                    if (!dec) {
                                      bump();
                                      error_mass += p2;
                                      emit(x1, x2, w, zeros, p2);
                                      return;
                                    }
                                    if (dec->u1 != u1 || dec->u2 != u2) error_mass += p2;
                                    product_support(
                                        m.ny,
                                        [&](std::size_t i) {
                                          return &m.decoder[(((dec->u1[i] * m.nu2 + dec->u2[i]) * m.nw + w[i]) * m.nyt + yt[i]) * m.ny];
                                        },
                                        [&](const std::vector<std::size_t>& y, double py) {
                                          bump();
                                          emit(x1, x2, w, y, p2 * py);
                                        });
                                  });
                            });
                      }
                    });
              }
            }
    });

    double tv = 0.0, covered = 0.0;
    std::vector<double> freq(S, 0.0);
    for (const auto& [key, p] : law) {
      const double q = block_q(key);
      tv += std::fabs(p - q);
      covered += q;
      std::uint64_t b = key;
      for (std::size_t i = 0; i < n; ++i) {
        freq[b % S] += p / double(n);
        b /= S;
      }
    }
    tv += clamp0(1.0 - covered);
    rep.tv_block = tv;
    rep.tv_first_order = first_tv(freq);
    rep.decode_error_rate = error_mass;
    rep.encoder_abort_rate = abort_mass;
    return rep;
  }

  // Monte-Carlo.
  if (cfg.trials < 1) throw InvalidArgument("trials must be >= 1");
  rep.trials = cfg.trials;
  std::vector<double> src_cdf(m.source);
  const bool src_blocks_ok = fits_u64(nsrc, n) && std::pow(double(nsrc), double(n)) <= double(cfg.block_table_cap);
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (cfg.trials + kChunk - 1) / kChunk;
  const std::size_t nch = n * m.nxt1 * m.nxt2 * m.nyt;

  auto tallies = detail::parallel_map(chunks, cfg.threads, [&](std::size_t c) {
    Tally t;
    t.first.assign(S, 0);
    t.channel.assign(nch, 0);
    const std::size_t lo = c * kChunk, hi = std::min(cfg.trials, lo + kChunk);
    std::vector<std::size_t> x1(n), x2(n), w(n), yt(n), y(n);
    for (std::size_t trial = lo; trial < hi; ++trial) {
      std::mt19937_64 rng(stream_seed(cfg.seed, 1000003, trial));
      std::uint64_t sb = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = draw(m.source.data(), nsrc, rng);
        x1[i] = s / (m.nx2 * m.nw);
        x2[i] = (s / m.nw) % m.nx2;
        w[i] = s % m.nw;
        sb = sb * nsrc + s;
      }
      if (src_blocks_ok) t.source_blocks.push_back(sb);
      const std::uint64_t k1 = draw_index(s1.k_count(), rng), k2 = draw_index(s2.k_count(), rng);
      std::uint64_t f1 = draw_index(s1.f_count(), rng), f2 = draw_index(s2.f_count(), rng);
      if (cfg.fixed_f) {
        f1 = cfg.fixed_f->first;
        f2 = cfg.fixed_f->second;
      }
      std::fill(y.begin(), y.end(), 0);
      const auto e2 = encoder_sample_2(m, s2, k2, f2, x2, rng);
      const auto e1 = e2 ? encoder_sample_1(m, s1, k1, f1, x1, e2->xt, rng) : std::nullopt;
      if (!e1) {
        ++t.aborts;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          yt[i] = draw(&m.channel[(e1->xt[i] * m.nxt2 + e2->xt[i]) * m.nyt], m.nyt, rng);
          ++t.channel[((i * m.nxt1 + e1->xt[i]) * m.nxt2 + e2->xt[i]) * m.nyt + yt[i]];
        }
        const auto dec = sw_decode(m, s1, k1, f1, s2, k2, f2, w, yt);
        if (!dec || dec->u1 != e1->u || dec->u2 != e2->u) ++t.errors;
        if (dec)
          for (std::size_t i = 0; i < n; ++i)
            y[i] = draw(&m.decoder[(((dec->u1[i] * m.nu2 + dec->u2[i]) * m.nw + w[i]) * m.nyt + yt[i]) * m.ny], m.ny,
                        rng);
      }
      std::uint64_t key = 0, pw = 1;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t s = symbol(m, x1[i], x2[i], w[i], y[i]);
        ++t.first[s];
        key += s * pw;
        pw *= S;
      }
      if (block_ok) t.blocks.push_back(key);
    }
    return t;
  });

  std::size_t aborts = 0, errors = 0;
  std::vector<std::uint64_t> first(S, 0), blocks, src_blocks;
  std::vector<std::uint64_t> chan(nch, 0);
  for (auto& t : tallies) {
    aborts += t.aborts;
    errors += t.errors;
    for (std::size_t s = 0; s < S; ++s) first[s] += t.first[s];
    for (std::size_t k = 0; k < nch; ++k) chan[k] += t.channel[k];
    blocks.insert(blocks.end(), t.blocks.begin(), t.blocks.end());
    src_blocks.insert(src_blocks.end(), t.source_blocks.begin(), t.source_blocks.end());
  }
  const double N = double(cfg.trials);
  rep.encoder_abort_rate = double(aborts) / N;
  rep.decode_error_rate = double(errors) / N;
  std::vector<double> freq(S);
  for (std::size_t s = 0; s < S; ++s) freq[s] = double(first[s]) / (N * double(n));
  rep.tv_first_order = first_tv(freq);
  rep.channel_counts.assign(chan.begin(), chan.end());

  if (block_ok) {
    std::sort(blocks.begin(), blocks.end());
    double tv = 0.0, covered = 0.0;
    for (std::size_t i = 0; i < blocks.size();) {
      std::size_t j = i;
      while (j < blocks.size() && blocks[j] == blocks[i]) ++j;
      const double q = block_q(blocks[i]);
      tv += std::fabs(double(j - i) / N - q);
      covered += q;
      i = j;
    }
    rep.tv_block = tv + clamp0(1.0 - covered);
    rep.tv_block_biased = true;
  }
  if (src_blocks_ok) {
    rep.source_block_counts.assign(static_cast<std::size_t>(std::pow(double(nsrc), double(n)) + 0.5), 0.0);
    for (auto b : src_blocks) rep.source_block_counts[b] += 1.0;
  }
  return rep;
}

double g_epsilon(double eps, double entropy_hq, double alphabet_product) {
  if (!(eps >= 0.0)) throw InvalidArgument("g_epsilon: eps must be non-negative");
  if (!(alphabet_product >= 1.0)) throw InvalidArgument("g_epsilon: alphabet size must be >= 1");
  if (eps == 0.0) return 0.0;
  const double r = std::sqrt(eps);
  return 2.0 * r * (entropy_hq + std::log2(alphabet_product) + std::log2(1.0 / r));
}

}  // namespace cribcoord::osrb
