#include "cribcoord/factorgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace cribcoord {
namespace {

std::string describe(const std::vector<Variable>& vars) {
  std::string s = "(";
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i) s += ", ";
    s += vars[i].name + ":" + std::to_string(vars[i].size);
  }
  return s + ")";
}

// Checks names and order exactly; sizes only where the expectation fixes one
// (size 0 means "any").
void expect_vars(const std::string& kernel, const char* role, const std::vector<Variable>& got,
                 const std::vector<Variable>& want) {
  bool ok = got.size() == want.size();
  for (std::size_t i = 0; ok && i < got.size(); ++i)
    ok = got[i].name == want[i].name && (want[i].size == 0 || got[i].size == want[i].size);
  if (!ok)
    throw InvalidArgument("kernel '" + kernel + "': " + role + " " + describe(got) +
                          " do not match expected " + describe(want));
}

ConditionalKernel as_kernel(const JointPmf& p_t) {
  if (p_t.variables().size() != 1 || p_t.variables()[0].name != var::T)
    throw InvalidArgument("p_t must be a distribution over the single variable T");
  if (p_t.variables()[0].size > kMaxTimeSharing)
    throw InvalidArgument("time-sharing alphabet larger than " + std::to_string(kMaxTimeSharing));
  return ConditionalKernel({}, p_t.variables(), std::vector<double>(p_t.probs().begin(), p_t.probs().end()));
}

}  // namespace

// --------------------------------------------------------------- TargetSpec

TargetSpec::TargetSpec(const JointPmf& joint)
    : joint_([&] {
        if (joint.variables().size() != 4)
          throw InvalidArgument("target must be a distribution over exactly X1, X2, W, Y");
        return reorder(joint, {var::X1, var::X2, var::W, var::Y});
      }()) {}

JointPmf TargetSpec::source() const { return marginalize(joint_, {var::X1, var::X2, var::W}); }

double TargetSpec::conditional_dependence() const {
  return mutual_information(joint_, {var::X1}, {var::X2}, {var::W});
}

// ------------------------------------------------------------------ channels

DeterministicLinks DeterministicLinks::identity(std::size_t xt1_size, std::size_t xt2_size) {
  DeterministicLinks l;
  for (std::size_t i = 0; i < xt1_size; ++i) l.f1.push_back(i);
  for (std::size_t i = 0; i < xt2_size; ++i) l.f2.push_back(i);
  l.ytilde1_size = xt1_size;
  l.ytilde2_size = xt2_size;
  return l;
}

std::size_t DeterministicLinks::image1_size() const {
  return std::set<std::size_t>(f1.begin(), f1.end()).size();
}

std::size_t DeterministicLinks::image2_size() const {
  return std::set<std::size_t>(f2.begin(), f2.end()).size();
}

ConditionalKernel deterministic_link_channel(const DeterministicLinks& links) {
  if (links.f1.empty() || links.f2.empty())
    throw InvalidArgument("deterministic links: maps must be total on non-empty alphabets");
  for (auto v : links.f1)
    if (v >= links.ytilde1_size) throw InvalidArgument("deterministic links: f1 value out of range");
  for (auto v : links.f2)
    if (v >= links.ytilde2_size) throw InvalidArgument("deterministic links: f2 value out of range");
  const std::size_t n2 = links.f2.size();
  return ConditionalKernel::deterministic(
      {{var::Xt1, links.f1.size()}, {var::Xt2, n2}},
      {{var::Yt, links.ytilde1_size * links.ytilde2_size}},
      [&](std::size_t row) { return links.f1[row / n2] * links.ytilde2_size + links.f2[row % n2]; });
}

MacChannel MacChannel::from_links(const DeterministicLinks& links) {
  return MacChannel{deterministic_link_channel(links), links};
}

// ------------------------------------------------------------------ builders

JointPmf build_cribbing_joint(const TargetSpec& target, const CribFactorization& f) {
  const auto pt = as_kernel(f.p_t);
  const Variable t = f.p_t.variables()[0];
  expect_vars("enc2", "inputs", f.enc2.inputs(), {target.x2(), t});
  expect_vars("enc2", "outputs", f.enc2.outputs(), {{var::U2, 0}, {var::Xt2, 0}});
  const Variable u2 = f.enc2.outputs()[0];
  const Variable xt2 = f.enc2.outputs()[1];
  expect_vars("enc1", "inputs", f.enc1.inputs(), {target.x1(), xt2, t});
  expect_vars("enc1", "outputs", f.enc1.outputs(), {{var::U1, 0}, {var::Xt1, 0}});
  const Variable u1 = f.enc1.outputs()[0];
  const Variable xt1 = f.enc1.outputs()[1];
  expect_vars("channel", "inputs", f.channel.inputs(), {xt1, xt2});
  expect_vars("channel", "outputs", f.channel.outputs(), {{var::Yt, 0}});
  const Variable yt = f.channel.outputs()[0];
  expect_vars("decoder", "inputs", f.decoder.inputs(), {u1, u2, target.w(), yt, t});
  expect_vars("decoder", "outputs", f.decoder.outputs(), {target.y()});

  JointPmf j = target.source();
  for (const ConditionalKernel* k : {&pt, &f.enc2, &f.enc1, &f.channel, &f.decoder}) j = compose(j, *k);
  return reorder(j, kJointOrder);
}

JointPmf build_nocrib_joint(const TargetSpec& target, const NoCribFactorization& f) {
  const double dep = target.conditional_dependence();
  if (dep > kIndependenceTolerance)
    throw PreconditionError("no-cribbing factorization requires I(X1;X2|W)=0, measured " +
                                std::to_string(dep) + " bits",
                            dep);
  const auto pt = as_kernel(f.p_t);
  const Variable t = f.p_t.variables()[0];
  expect_vars("aux1", "inputs", f.aux1.inputs(), {target.x1(), t});
  expect_vars("aux1", "outputs", f.aux1.outputs(), {{var::U1, 0}});
  const Variable u1 = f.aux1.outputs()[0];
  expect_vars("input1", "inputs", f.input1.inputs(), {u1, target.x1(), t});
  expect_vars("input1", "outputs", f.input1.outputs(), {{var::Xt1, 0}});
  expect_vars("aux2", "inputs", f.aux2.inputs(), {target.x2(), t});
  expect_vars("aux2", "outputs", f.aux2.outputs(), {{var::U2, 0}});
  const Variable u2 = f.aux2.outputs()[0];
  expect_vars("input2", "inputs", f.input2.inputs(), {u2, target.x2(), t});
  expect_vars("input2", "outputs", f.input2.outputs(), {{var::Xt2, 0}});
  const Variable xt1 = f.input1.outputs()[0];
  const Variable xt2 = f.input2.outputs()[0];
  expect_vars("channel", "inputs", f.channel.inputs(), {xt1, xt2});
  expect_vars("channel", "outputs", f.channel.outputs(), {{var::Yt, 0}});
  const Variable yt = f.channel.outputs()[0];
  expect_vars("decoder", "inputs", f.decoder.inputs(), {u1, u2, target.w(), yt, t});
  expect_vars("decoder", "outputs", f.decoder.outputs(), {target.y()});

  JointPmf j = target.source();
  for (const ConditionalKernel* k :
       {&pt, &f.aux1, &f.input1, &f.aux2, &f.input2, &f.channel, &f.decoder})
    j = compose(j, *k);
  return reorder(j, kJointOrder);
}

JointPmf build_joint(const TargetSpec& target, const Factorization& f) {
  return std::visit(
      [&](const auto& fac) -> JointPmf {
        if constexpr (std::is_same_v<std::decay_t<decltype(fac)>, CribFactorization>)
          return build_cribbing_joint(target, fac);
        else
          return build_nocrib_joint(target, fac);
      },
      f);
}

CribFactorization as_cribbing(const NoCribFactorization& f) {
  const Variable x1 = f.aux1.inputs()[0];
  const Variable x2 = f.aux2.inputs()[0];
  const Variable t = f.aux1.inputs()[1];
  const Variable u1 = f.aux1.outputs()[0];
  const Variable u2 = f.aux2.outputs()[0];
  const Variable xt1 = f.input1.outputs()[0];
  const Variable xt2 = f.input2.outputs()[0];

  // p(u2, xt2 | x2, t) = p(u2 | x2, t) p(xt2 | u2, x2, t)
  std::vector<double> enc2(x2.size * t.size * u2.size * xt2.size);
  for (std::size_t a = 0; a < x2.size; ++a)
    for (std::size_t tt = 0; tt < t.size; ++tt)
      for (std::size_t u = 0; u < u2.size; ++u)
        for (std::size_t x = 0; x < xt2.size; ++x)
          enc2[((a * t.size + tt) * u2.size + u) * xt2.size + x] =
              f.aux2(a * t.size + tt, u) * f.input2((u * x2.size + a) * t.size + tt, x);

  // p(u1, xt1 | x1, xt2, t) = p(u1 | x1, t) p(xt1 | u1, x1, t), constant in xt2
  std::vector<double> enc1(x1.size * xt2.size * t.size * u1.size * xt1.size);
  for (std::size_t a = 0; a < x1.size; ++a)
    for (std::size_t c = 0; c < xt2.size; ++c)
      for (std::size_t tt = 0; tt < t.size; ++tt)
        for (std::size_t u = 0; u < u1.size; ++u)
          for (std::size_t x = 0; x < xt1.size; ++x)
            enc1[(((a * xt2.size + c) * t.size + tt) * u1.size + u) * xt1.size + x] =
                f.aux1(a * t.size + tt, u) * f.input1((u * x1.size + a) * t.size + tt, x);

  return CribFactorization{
      f.p_t,
      ConditionalKernel({x2, t}, {u2, xt2}, std::move(enc2)),
      ConditionalKernel({x1, xt2, t}, {u1, xt1}, std::move(enc1)),
      f.channel,
      f.decoder,
  };
}

// ------------------------------------------------------------------- checks

MarginalMatch check_marginal_match(const JointPmf& joint, const TargetSpec& target, double tol) {
  for (const auto& n : {var::X1, var::X2, var::W, var::Y, var::T})
    if (!joint.has(n)) throw InvalidArgument("marginal check: joint lacks variable '" + n + "'");
  for (const auto& v : target.joint().variables())
    if (joint.variable(v.name).size != v.size)
      throw InvalidArgument("marginal check: alphabet of '" + v.name + "' differs from target");

  const JointPmf m = reorder(marginalize(joint, {var::T, var::X1, var::X2, var::W, var::Y}),
                             {var::T, var::X1, var::X2, var::W, var::Y});
  const auto q = target.joint().probs();
  const std::size_t nt = joint.variable(var::T).size;
  const std::size_t cell = q.size();

  MarginalMatch out;
  out.per_t.assign(nt, std::numeric_limits<double>::quiet_NaN());
  out.worst = -1.0;
  for (std::size_t t = 0; t < nt; ++t) {
    double pt = 0.0;
    for (std::size_t i = 0; i < cell; ++i) pt += m[t * cell + i];
    if (pt <= 0.0) continue;
    double dev = 0.0;
    for (std::size_t i = 0; i < cell; ++i) dev = std::max(dev, std::fabs(m[t * cell + i] / pt - q[i]));
    out.per_t[t] = dev;
    if (dev > out.worst) {
      out.worst = dev;
      out.worst_t = t;
    }
  }
  out.pass = out.worst <= tol;
  return out;
}

double check_markov(const JointPmf& joint, const VarNames& a, const VarNames& b, const VarNames& c) {
  return mutual_information(joint, a, b, c);
}

}  // namespace cribcoord
