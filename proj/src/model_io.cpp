#include "cribcoord/model_io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>

namespace cribcoord::io {
namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw InvalidArgument(field + ": " + msg);
}

const Json& member(const Json& obj, const char* key, const std::string& field) {
  if (!obj.is_object()) fail(field, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(field, std::string("missing \"") + key + "\"");
  return *it;
}

std::size_t as_size(const Json& v, const std::string& field) {
  if (!v.is_number_integer() || v.get<long long>() < 0) fail(field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<std::string> as_names(const Json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "expected an array of variable names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) fail(field + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

std::vector<double> as_probs(const Json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "expected an array of probabilities");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = parse_probability(v[i], field + "[" + std::to_string(i) + "]");
  return out;
}

void normalize_rows(std::vector<double>& t, std::size_t cols, const std::string& field) {
  for (std::size_t r = 0; r < t.size() / cols; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += t[r * cols + c];
    if (std::fabs(s - 1.0) > 1e-9) {
      std::ostringstream os;
      os.precision(12);
      os << "row " << r << " sums to " << s << ", not 1";
      fail(field, os.str());
    }
    for (std::size_t c = 0; c < cols; ++c) t[r * cols + c] /= s;
  }
}

class Registry {
 public:
  void add(const Variable& v, const std::string& field) {
    auto [it, fresh] = vars_.emplace(v.name, v);
    if (!fresh && it->second.size != v.size)
      fail(field, "variable '" + v.name + "' has size " + std::to_string(v.size) + " but was declared with size " +
                      std::to_string(it->second.size));
  }
  bool has(const std::string& n) const { return vars_.count(n) > 0; }
  const Variable& get(const std::string& n, const std::string& field) const {
    auto it = vars_.find(n);
    if (it == vars_.end()) fail(field, "undeclared variable '" + n + "'");
    return it->second;
  }
  std::vector<Variable> get(const std::vector<std::string>& ns, const std::string& field) const {
    std::vector<Variable> out;
    for (const auto& n : ns) out.push_back(get(n, field));
    return out;
  }

 private:
  std::map<std::string, Variable> vars_;
};

ConditionalKernel parse_kernel(const Json& k, const std::string& name, const Registry& reg) {
  const std::string field = "factorization.kernels." + name;
  const auto in = reg.get(as_names(member(k, "given", field), field + ".given"), field + ".given");
  const auto out = reg.get(as_names(member(k, "outputs", field), field + ".outputs"), field + ".outputs");
  auto table = as_probs(member(k, "table", field), field + ".table");
  const std::size_t expected = table_size(in) * table_size(out);
  if (table.size() != expected)
    throw InvalidArgument("kernel '" + name + "': table has " + std::to_string(table.size()) + " entries, expected " +
                          std::to_string(expected));
  normalize_rows(table, table_size(out), "kernel '" + name + "'");
  return ConditionalKernel(in, out, std::move(table));
}

Json numbers(std::span<const double> xs) {
  Json a = Json::array();
  for (double x : xs) a.push_back(x);
  return a;
}

Json names(const std::vector<Variable>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) a.push_back(v.name);
  return a;
}

Json kernel_json(const ConditionalKernel& k) {
  return Json{{"given", names(k.inputs())}, {"outputs", names(k.outputs())}, {"table", numbers(k.table())}};
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

double parse_probability(const Json& v, const std::string& field) {
  double p = 0.0;
  if (v.is_number()) {
    p = v.get<double>();
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        p = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } else {
        const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
        std::size_t ua = 0, ub = 0;
        const double num = std::stod(a, &ua), den = std::stod(b, &ub);
        if (ua != a.size() || ub != b.size() || den == 0.0) throw std::invalid_argument(s);
        p = num / den;
      }
    } catch (const std::exception&) {
      fail(field, "cannot parse probability \"" + s + "\"");
    }
  } else {
    fail(field, "expected a number or a string");
  }
  if (!(p >= 0.0) || !std::isfinite(p)) fail(field, "probability must be finite and non-negative");
  return p;
}

Model parse_model(const Json& doc, std::string sha256) {
  if (!doc.is_object()) fail("model", "expected a JSON object");
  Registry reg;
  const Json& vars = member(doc, "variables", "model");
  if (!vars.is_array()) fail("variables", "expected an array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string field = "variables[" + std::to_string(i) + "]";
    const Json& n = member(vars[i], "name", field);
    if (!n.is_string()) fail(field + ".name", "expected a string");
    const std::size_t size = as_size(member(vars[i], "size", field), field + ".size");
    if (size == 0) fail(field + ".size", "alphabet size must be >= 1");
    if (reg.has(n.get<std::string>())) fail(field, "duplicate variable '" + n.get<std::string>() + "'");
    if (auto it = vars[i].find("labels"); it != vars[i].end()) {
      if (!it->is_array() || it->size() != size) fail(field + ".labels", "expected " + std::to_string(size) + " labels");
    }
    reg.add({n.get<std::string>(), size}, field);
  }

  const Json& tj = member(doc, "target", "model");
  const auto order = as_names(member(tj, "order", "target"), "target.order");
  auto probs = as_probs(member(tj, "probs", "target"), "target.probs");
  const auto tvars = reg.get(order, "target.order");
  if (probs.size() != table_size(tvars))
    fail("target.probs", "has " + std::to_string(probs.size()) + " entries, expected " +
                             std::to_string(table_size(tvars)));
  normalize_rows(probs, probs.size(), "target.probs");
  Model model{TargetSpec(JointPmf(tvars, std::move(probs))), std::nullopt, std::nullopt, std::move(sha256)};

  if (auto it = doc.find("channel"); it != doc.end()) {
    const Json& c = *it;
    const Json& type = member(c, "type", "channel");
    if (type == "links") {
      DeterministicLinks L;
      L.ytilde1_size = as_size(member(c, "ytilde1_size", "channel"), "channel.ytilde1_size");
      L.ytilde2_size = as_size(member(c, "ytilde2_size", "channel"), "channel.ytilde2_size");
      for (auto [key, dst, lim] : {std::tuple{"f1", &L.f1, L.ytilde1_size}, std::tuple{"f2", &L.f2, L.ytilde2_size}}) {
        const Json& f = member(c, key, "channel");
        const std::string field = std::string("channel.") + key;
        if (!f.is_array() || f.empty()) fail(field, "expected a non-empty array");
        for (std::size_t i = 0; i < f.size(); ++i) {
          dst->push_back(as_size(f[i], field + "[" + std::to_string(i) + "]"));
          if (dst->back() >= lim) fail(field + "[" + std::to_string(i) + "]", "link output out of range");
        }
      }
      model.channel = MacChannel::from_links(L);
    } else if (type == "table") {
      const auto in = reg.get(VarNames{var::Xt1, var::Xt2}, "channel");
      const auto out = reg.get(VarNames{var::Yt}, "channel");
      auto table = as_probs(member(c, "table", "channel"), "channel.table");
      if (table.size() != table_size(in) * table_size(out))
        throw InvalidArgument("kernel 'channel': table has " + std::to_string(table.size()) + " entries, expected " +
                              std::to_string(table_size(in) * table_size(out)));
      normalize_rows(table, out[0].size, "kernel 'channel'");
      model.channel = MacChannel{ConditionalKernel(in, out, std::move(table)), std::nullopt};
    } else {
      fail("channel.type", "expected \"links\" or \"table\"");
    }
    for (const auto& v : model.channel->kernel.inputs()) reg.add(v, "channel");
    reg.add(model.channel->kernel.outputs()[0], "channel");
  }

  if (auto it = doc.find("factorization"); it != doc.end()) {
    const Json& f = *it;
    if (!model.channel) fail("factorization", "a factorization requires a \"channel\"");
    const Json& mj = member(f, "mode", "factorization");
    if (!mj.is_string()) fail("factorization.mode", "expected \"crib\" or \"nocrib\"");
    Mode mode;
    try {
      mode = parse_mode(mj.get<std::string>());
    } catch (const InvalidArgument& e) {
      fail("factorization.mode", e.what());
    }
    auto pt = as_probs(member(f, "p_t", "factorization"), "factorization.p_t");
    if (pt.empty()) fail("factorization.p_t", "must not be empty");
    const Variable t{var::T, pt.size()};
    reg.add(t, "factorization.p_t");
    normalize_rows(pt, pt.size(), "factorization.p_t");
    const JointPmf p_t({t}, std::move(pt));

    const Json& ks = member(f, "kernels", "factorization");
    if (!ks.is_object()) fail("factorization.kernels", "expected an object");
    const std::vector<std::string> wanted = mode == Mode::Crib
                                                ? std::vector<std::string>{"enc2", "enc1", "decoder"}
                                                : std::vector<std::string>{"aux1", "input1", "aux2", "input2", "decoder"};
    for (auto k = ks.begin(); k != ks.end(); ++k)
      if (std::find(wanted.begin(), wanted.end(), k.key()) == wanted.end())
        fail("factorization.kernels", "unknown kernel '" + k.key() + "' for mode " + to_string(mode));
    auto kernel = [&](const std::string& name) {
      return parse_kernel(member(ks, name.c_str(), "factorization.kernels"), name, reg);
    };
    if (mode == Mode::Crib) {
      model.factorization = CribFactorization{p_t, kernel("enc2"), kernel("enc1"), model.channel->kernel,
                                              kernel("decoder")};
    } else {
      model.factorization = NoCribFactorization{p_t,           kernel("aux1"), kernel("input1"),
                                                kernel("aux2"), kernel("input2"), model.channel->kernel,
                                                kernel("decoder")};
    }
  }
  return model;
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  Json doc;
  try {
    doc = Json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < bytes.size(); ++i) {
      if (bytes[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidArgument(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  try {
    if (doc.is_object() && doc.contains("witness_model")) return parse_model(doc["witness_model"], sha256_hex(bytes));
    return parse_model(doc, sha256_hex(bytes));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

Json model_to_json(const TargetSpec& target, const MacChannel& channel, const Factorization& f) {
  std::vector<Variable> declared;
  auto declare = [&](const Variable& v) {
    for (const auto& d : declared)
      if (d.name == v.name) return;
    declared.push_back(v);
  };
  for (const auto& v : target.joint().variables()) declare(v);
  Json kernels = Json::object();
  Json p_t;
  std::string mode;
  auto add = [&](const char* name, const ConditionalKernel& k) {
    for (const auto& v : k.inputs()) declare(v);
    for (const auto& v : k.outputs()) declare(v);
    kernels[name] = kernel_json(k);
  };
  std::visit(
      [&](const auto& fac) {
        using F = std::decay_t<decltype(fac)>;
        p_t = numbers(fac.p_t.probs());
        declare(fac.p_t.variables()[0]);
        if constexpr (std::is_same_v<F, CribFactorization>) {
          mode = "crib";
          add("enc2", fac.enc2);
          add("enc1", fac.enc1);
        } else {
          mode = "nocrib";
          add("aux1", fac.aux1);
          add("input1", fac.input1);
          add("aux2", fac.aux2);
          add("input2", fac.input2);
        }
        add("decoder", fac.decoder);
      },
      f);
  for (const auto& v : channel.kernel.inputs()) declare(v);
  declare(channel.kernel.outputs()[0]);

  Json vars = Json::array();
  for (const auto& v : declared) vars.push_back({{"name", v.name}, {"size", v.size}});
  Json ch;
  if (channel.links) {
    const auto& L = *channel.links;
    ch = {{"type", "links"}, {"f1", L.f1}, {"f2", L.f2}, {"ytilde1_size", L.ytilde1_size},
          {"ytilde2_size", L.ytilde2_size}};
  } else {
    ch = {{"type", "table"}, {"table", numbers(channel.kernel.table())}};
  }
  return Json{{"variables", vars},
              {"target", {{"order", names(target.joint().variables())}, {"probs", numbers(target.joint().probs())}}},
              {"channel", ch},
              {"factorization", {{"mode", mode}, {"p_t", p_t}, {"kernels", kernels}}}};
}

Json to_json(const ConstraintReport& r) {
  Json ineq = Json::array();
  for (const auto& q : r.inequalities)
    ineq.push_back({{"label", q.label}, {"kind", to_string(q.kind)}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"slack", q.slack}});
  return Json{{"feasible", r.feasible},
              {"tol", r.tol},
              {"min_r01", r.min_r01},
              {"min_r02", r.r02_unlimited ? Json("unlimited") : Json(r.min_r02)},
              {"min_sum", r.min_sum},
              {"inequalities", ineq}};
}

Json to_json(const MarginalMatch& m) {
  Json per = Json::array();
  for (double d : m.per_t) per.push_back(number_or_null(d));
  return Json{{"pass", m.pass}, {"worst", m.worst}, {"worst_t", m.worst_t}, {"per_t", per}};
}

Json to_json(const RatePoint& p) { return Json{{"r01", p.r01}, {"r02", p.r02}}; }

Json to_json(const osrb::Rates& r) { return Json{{"r01", r.r01}, {"rt1", r.rt1}, {"r02", r.r02}, {"rt2", r.rt2}}; }

Json to_json(const osrb::RateWindow& w) {
  const auto& b = w.bounds;
  Json conds = Json::array();
  for (const auto& c : w.conditions) conds.push_back({{"label", c.label}, {"slack", c.slack}});
  return Json{{"nonempty", w.nonempty},
              {"bounds",
               {{"cap1", b.cap1}, {"cap2", b.cap2}, {"sw1", b.sw1}, {"sw2", b.sw2}, {"sw12", b.sw12}, {"f1", b.f1},
                {"f2", b.f2}, {"f12", b.f12}}},
              {"choice", w.choice ? to_json(*w.choice) : Json(nullptr)},
              {"conditions", conds}};
}

Json to_json(const osrb::SimulationReport& r) {
  const double n = double(r.n);
  return Json{{"n", r.n},
              {"mode", r.mode == osrb::SimMode::Exact ? "exact" : "montecarlo"},
              {"trials", r.trials},
              {"rates", to_json(r.rates)},
              {"bin_bits", {{"r01", r.bits[0]}, {"rt1", r.bits[1]}, {"r02", r.bits[2]}, {"rt2", r.bits[3]}}},
              {"effective_rates",
               {{"r01", r.bits[0] / n}, {"rt1", r.bits[1] / n}, {"r02", r.bits[2] / n}, {"rt2", r.bits[3] / n}}},
              {"decode_error_rate", r.decode_error_rate},
              {"encoder_abort_rate", r.encoder_abort_rate},
              {"tv_first_order", r.tv_first_order},
              {"tv_block", r.tv_block ? Json(*r.tv_block) : Json(nullptr)},
              {"tv_block_biased", r.tv_block_biased}};
}

Json to_json(const example1::EntropyTriple& t) { return Json{{"h1", t.h1}, {"h2", t.h2}, {"h12", t.h12}}; }

Json to_json(const example1::ConverseEvidence& e) {
  return Json{{"quantity", e.quantity},
              {"threshold", e.threshold},
              {"restarts", e.restarts},
              {"matched", e.matched},
              {"counterexamples", e.counterexamples},
              {"min_matched", e.min_matched ? Json(*e.min_matched) : Json(nullptr)},
              {"best_deviation", number_or_null(e.best_deviation)},
              {"verdict", e.verdict}};
}

void write_json(const Json& doc, const std::string& path) {
  const std::string text = doc.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

}  // namespace cribcoord::io
