// cribcoord: region evaluation and search, the selector example, protocol
// simulation and rate sweeps. Exit codes: 0 success, 1 error, 2 infeasible.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cribcoord/example1.hpp"
#include "cribcoord/model_io.hpp"
#include "cribcoord/osrb.hpp"
#include "cribcoord/regions.hpp"

namespace {

using namespace cribcoord;
using io::Json;

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kInfeasible = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string model;
  std::string mode;
  std::string out;
  std::optional<double> tol;  // evaluation default 1e-9, search default SearchConfig::tol
  SearchConfig search;
  std::string objective = "r01";
  std::size_t n = 2;
  std::string rates = "auto";
  std::size_t trials = 10000;
  std::string sim = "montecarlo";
  std::string grid;
  bool skip_converse = false;
};

void add_search_flags(CLI::App* app, Options& o) {
  app->add_option("--restarts", o.search.restarts, "Search restarts");
  app->add_option("--seed", o.search.seed, "Random seed");
  app->add_option("--u1", o.search.u1_size, "|U1| used by the search");
  app->add_option("--u2", o.search.u2_size, "|U2| used by the search");
  app->add_option("--t", o.search.t_size, "|T| used by the search");
  app->add_option("--explore", o.search.explore_iterations, "First-order iterations per restart");
  app->add_option("--polish", o.search.polish_iterations, "Gauss-Newton iterations per restart");
  app->add_option("--threads", o.search.threads, "Worker threads (0: all cores)");
}

Mode resolve_mode(const Options& o, const io::Model& m) {
  if (!o.mode.empty()) return parse_mode(o.mode);
  if (m.factorization) return std::holds_alternative<CribFactorization>(*m.factorization) ? Mode::Crib : Mode::NoCrib;
  return Mode::Crib;
}

const MacChannel& require_channel(const io::Model& m) {
  if (!m.channel) throw InvalidArgument("model has no \"channel\"");
  return *m.channel;
}

bool identity_links(const MacChannel& c) {
  if (!c.links) return false;
  const auto& L = *c.links;
  const auto id = DeterministicLinks::identity(L.f1.size(), L.f2.size());
  return L.f1 == id.f1 && L.f2 == id.f2 && L.ytilde1_size == id.ytilde1_size && L.ytilde2_size == id.ytilde2_size;
}

bool is_example1_target(const TargetSpec& t) {
  const auto q = example1::build_target();
  if (t.joint().variables() != q.joint().variables()) return false;
  return tv_distance(t.joint(), q.joint()) < 1e-12;
}

Json header(const char* command, const io::Model& m) {
  return Json{{"command", command}, {"input_sha256", m.sha256}};
}

ConstraintReport evaluate(const JointPmf& joint, const MacChannel& ch, Mode mode, double tol) {
  if (mode == Mode::Crib) return thm1_evaluate(joint, tol);
  if (!ch.links) throw InvalidArgument("no-cribbing evaluation requires a deterministic-links channel");
  return thm2_evaluate(joint, *ch.links, tol);
}

int cmd_region(const Options& o) {
  const auto m = io::load_model(o.model);
  const Mode mode = resolve_mode(o, m);
  const auto& ch = require_channel(m);
  Json doc = header("region", m);
  doc["mode"] = to_string(mode);

  if (m.factorization) {
    const double tol = o.tol.value_or(1e-9);
    doc["tol"] = tol;
    Factorization f = *m.factorization;
    if (mode == Mode::Crib) {
      if (auto* nc = std::get_if<NoCribFactorization>(&f)) f = as_cribbing(*nc);
    } else if (std::holds_alternative<CribFactorization>(f)) {
      throw InvalidArgument("a cribbing factorization cannot be evaluated in nocrib mode");
    }
    const JointPmf joint = build_joint(m.target, f);
    const auto report = evaluate(joint, ch, mode, tol);
    const auto match = check_marginal_match(joint, m.target, tol);
    doc["match"] = io::to_json(match);
    doc["report"] = io::to_json(report);
    if (mode == Mode::Crib && identity_links(ch))
      doc["perfect_channel_report"] = io::to_json(crib_feasibility_evaluate(joint, tol));
    const bool ok = report.feasible && match.pass;
    doc["verdict"] = ok ? "feasible" : "infeasible";
    io::write_json(doc, o.out);
    return ok ? kOk : kInfeasible;
  }

  SearchConfig cfg = o.search;
  cfg.tol = o.tol.value_or(cfg.tol);
  doc["tol"] = cfg.tol;
  Objective obj = Objective::MinR01;
  if (o.objective == "r02") obj = Objective::MinR02;
  else if (o.objective == "sum") obj = Objective::MinSum;
  else if (o.objective != "r01") throw UsageError("--objective must be r01, r02 or sum");
  const SearchProblem problem{m.target, ch};
  const auto res = min_rate_search(problem, cfg, mode, obj);
  doc["search"] = {{"status", res.status}, {"objective", o.objective}, {"restarts", res.restarts},
                   {"verified", res.verified}, {"seed", cfg.seed}};
  if (!res.found) {
    doc["verdict"] = "none found";
    io::write_json(doc, o.out);
    return kInfeasible;
  }
  doc["search"]["value"] = res.value;
  doc["search"]["point"] = io::to_json(res.point);
  doc["search"]["witness_restart"] = res.best->restart;
  doc["match"] = io::to_json(res.best->match);
  doc["report"] = io::to_json(res.best->report);
  doc["verdict"] = "feasible";
  doc["witness_model"] = io::model_to_json(m.target, ch, res.best->factorization);
  io::write_json(doc, o.out);
  return kOk;
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << x;
  return os.str();
}

int cmd_example1(const Options& o) {
  const auto nc = example1::verify_nocrib_witness();
  const auto cr = example1::verify_crib_witness();
  std::ostringstream text;
  text << "selector example: entropy triple (H(Xtilde1), H(Xtilde2), H(Xtilde1,Xtilde2)) in bits\n";
  text << "scheme    H1      H2      H12     marginal_dev  constraints\n";
  auto row = [&](const char* name, const example1::WitnessCheck& w) {
    text << std::left << std::setw(10) << name << fmt(w.triple.h1) << "  " << fmt(w.triple.h2) << "  "
         << fmt(w.triple.h12) << "  " << std::setw(12) << std::scientific << std::setprecision(1) << w.match.worst
         << std::fixed << "  " << (w.report.feasible ? "satisfied" : "violated") << "\n";
  };
  row("no-crib", nc);
  row("crib", cr);

  Json doc{{"command", "example1"},
           {"nocrib", {{"triple", io::to_json(nc.triple)}, {"match", io::to_json(nc.match)},
                       {"report", io::to_json(nc.report)}}},
           {"crib", {{"triple", io::to_json(cr.triple)}, {"match", io::to_json(cr.match)},
                     {"report", io::to_json(cr.report)}}}};
  if (!o.skip_converse) {
    example1::Prop1Config cfg;
    cfg.search.restarts = o.search.restarts;
    cfg.search.seed = o.search.seed;
    cfg.search.threads = o.search.threads;
    const auto ev = example1::prop1_adversarial_search(cfg);
    text << "converse search (no cribbing, |U1|=" << cfg.search.u1_size << ", |U2|=" << cfg.search.u2_size << "):\n";
    for (const auto* e : {&ev.u1, &ev.u2}) {
      text << "  " << e->quantity << " >= " << fmt(e->threshold, 1) << ": " << e->verdict << ", matched "
           << e->matched << "/" << e->restarts;
      if (e->min_matched) text << ", smallest matched value " << fmt(*e->min_matched);
      text << "\n";
    }
    doc["converse"] = {io::to_json(ev.u1), io::to_json(ev.u2)};
    doc["converse_seed"] = cfg.search.seed;
  }
  std::cout << text.str();
  if (!o.out.empty()) io::write_json(doc, o.out);
  return kOk;
}

osrb::Rates parse_rates(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--rates: cannot parse '" + item + "'");
    }
  }
  if (v.size() != 4) throw UsageError("--rates expects r01,rt1,r02,rt2 or auto");
  for (double x : v)
    if (!(x >= 0.0)) throw UsageError("--rates must be non-negative");
  return {v[0], v[1], v[2], v[3]};
}

int cmd_simulate(const Options& o) {
  const auto m = io::load_model(o.model);
  if (!m.factorization) throw InvalidArgument("simulate requires a factorization in the model");
  Factorization f = *m.factorization;
  if (auto* nc = std::get_if<NoCribFactorization>(&f)) f = as_cribbing(*nc);
  osrb::ProtocolConfig cfg;
  cfg.n = o.n;
  cfg.seed = o.search.seed;
  cfg.trials = o.trials;
  cfg.threads = o.search.threads;
  if (o.sim == "exact") cfg.mode = osrb::SimMode::Exact;
  else if (o.sim != "montecarlo") throw UsageError("--sim must be exact or montecarlo");
  if (cfg.mode == osrb::SimMode::MonteCarlo && cfg.trials == 0) throw UsageError("--trials must be >= 1");
  if (cfg.n == 0) throw UsageError("--n must be >= 1");

  const JointPmf joint = build_joint(m.target, f);
  const auto window = osrb::osrb_rate_window(joint);
  Json doc = header("simulate", m);
  doc["window"] = io::to_json(window);
  if (o.rates == "auto") {
    if (!window.nonempty) {
      doc["verdict"] = "empty rate window";
      io::write_json(doc, o.out);
      return kInfeasible;
    }
    cfg.rates = *window.choice;
  } else {
    cfg.rates = parse_rates(o.rates);
    Json conds = Json::array();
    for (const auto& c : osrb::check_rates(window.bounds, cfg.rates))
      conds.push_back({{"label", c.label}, {"slack", c.slack}});
    doc["rate_conditions"] = conds;
  }
  doc["seed"] = cfg.seed;
  doc["simulation"] = io::to_json(osrb::run_protocol(joint, cfg));
  io::write_json(doc, o.out);
  return kOk;
}

std::vector<double> axis(const std::string& spec, const char* name) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(spec);
  if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(is >> std::ws).eof())
    throw UsageError(std::string("--grid: ") + name + " axis must be min:max:step");
  if (!(step > 0.0) || hi < lo) throw UsageError("--grid: empty grid");
  std::vector<double> v;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) v.push_back(lo + double(i) * step);
  return v;
}

int cmd_sweep(const Options& o) {
  const auto comma = o.grid.find(',');
  if (o.grid.empty() || comma == std::string::npos) throw UsageError("--grid expects r01min:max:step,r02min:max:step");
  const auto a1 = axis(o.grid.substr(0, comma), "r01"), a2 = axis(o.grid.substr(comma + 1), "r02");
  std::vector<RatePoint> grid;
  for (double r1 : a1)
    for (double r2 : a2) grid.push_back({r1, r2});

  const auto m = io::load_model(o.model);
  const Mode mode = resolve_mode(o, m);
  const auto& ch = require_channel(m);
  SearchConfig cfg = o.search;
  cfg.tol = o.tol.value_or(cfg.tol);
  const SearchProblem problem{m.target, ch};

  std::vector<Witness> seeds;
  if (m.factorization) {
    Factorization f = *m.factorization;
    if (mode == Mode::Crib)
      if (auto* nc = std::get_if<NoCribFactorization>(&f)) f = as_cribbing(*nc);
    auto w = verify_witness(problem, f, mode, cfg.tol);
    if (witness_ok(w)) seeds.push_back(std::move(w));
  }
  ConverseHook converse;
  if (mode == Mode::NoCrib && ch.links && is_example1_target(m.target)) converse = example1::prop1_converse(*ch.links);
  const auto res = region_sweep(problem, grid, cfg, mode, converse, std::move(seeds));

  std::ostringstream csv;
  csv << "rate_r01,rate_r02,verdict,best_slack,witness_id\n";
  csv << std::setprecision(17);
  for (const auto& r : res.rows) {
    csv << r.point.r01 << "," << r.point.r02 << "," << to_string(r.verdict) << ",";
    if (r.best_slack) csv << *r.best_slack;
    csv << ",";
    if (r.witness_id) csv << *r.witness_id;
    csv << "\n";
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + o.out + "'");
    f << csv.str();
    Json doc = header("sweep", m);
    doc["mode"] = to_string(mode);
    doc["csv"] = o.out;
    doc["rows"] = res.rows.size();
    doc["witnesses"] = res.witnesses.size();
    doc["converse"] = static_cast<bool>(converse);
    io::write_json(doc, "");
  }
  return kOk;
}

int cmd_info(const Options& o) {
  const auto m = io::load_model(o.model);
  const auto& q = m.target.joint();
  Json vars = Json::array();
  for (const auto& v : q.variables()) vars.push_back({{"name", v.name}, {"size", v.size}});
  Json doc = header("info", m);
  doc["target_variables"] = vars;
  doc["H(X1,X2,W,Y)"] = entropy(q, q.names());
  doc["I(X1;X2|W)"] = m.target.conditional_dependence();
  doc["channel"] = m.channel ? (m.channel->links ? "links" : "table") : "none";
  if (m.factorization)
    doc["factorization"] = std::holds_alternative<CribFactorization>(*m.factorization) ? "crib" : "nocrib";
  if (m.channel) {
    const auto caps = cardinality_caps(m.target, m.channel->xt1_size(), m.channel->xt2_size(), m.channel->yt_size());
    doc["cardinality_caps"] = {{"u1", caps.u1}, {"u2", caps.u2}, {"t", caps.t}};
  }
  io::write_json(doc, o.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong coordination over multiple-access channels with and without cribbing"};
  app.require_subcommand(1);
  Options o;

  auto* region = app.add_subcommand("region", "Evaluate a factorization, or search for one");
  region->add_option("--model", o.model, "Model file")->required();
  region->add_option("--mode", o.mode, "crib or nocrib")->check(CLI::IsMember({"crib", "nocrib"}));
  region->add_option("--tol", o.tol, "Feasibility tolerance (default 1e-9 for a given factorization, 1e-6 for search)");
  region->add_option("--objective", o.objective, "Search objective: r01, r02 or sum");
  region->add_option("--out", o.out, "Report path (default stdout)");
  add_search_flags(region, o);

  auto* ex1 = app.add_subcommand("example1", "Selector example: witnesses and converse evidence");
  ex1->add_option("--out", o.out, "JSON report path");
  ex1->add_flag("--skip-converse", o.skip_converse, "Skip the adversarial converse search");
  add_search_flags(ex1, o);

  auto* sim = app.add_subcommand("simulate", "Run the random-binning protocol at finite blocklength");
  sim->add_option("--model", o.model, "Model file with a factorization")->required();
  sim->add_option("--n", o.n, "Blocklength");
  sim->add_option("--rates", o.rates, "r01,rt1,r02,rt2 or auto");
  sim->add_option("--trials", o.trials, "Monte-Carlo trials");
  sim->add_option("--sim", o.sim, "exact or montecarlo");
  sim->add_option("--seed", o.search.seed, "Random seed");
  sim->add_option("--threads", o.search.threads, "Worker threads (0: all cores)");
  sim->add_option("--out", o.out, "Report path (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Classify a grid of shared-randomness rates");
  sweep->add_option("--model", o.model, "Model file")->required();
  sweep->add_option("--mode", o.mode, "crib or nocrib")->check(CLI::IsMember({"crib", "nocrib"}));
  sweep->add_option("--grid", o.grid, "r01min:max:step,r02min:max:step")->required();
  sweep->add_option("--tol", o.tol, "Feasibility tolerance (default 1e-6)");
  sweep->add_option("--out", o.out, "CSV path (default stdout)");
  add_search_flags(sweep, o);

  auto* info = app.add_subcommand("info", "Summarize a model file");
  info->add_option("--model", o.model, "Model file")->required();
  info->add_option("--out", o.out, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kError;
  }

  try {
    if (*region) return cmd_region(o);
    if (*ex1) return cmd_example1(o);
    if (*sim) return cmd_simulate(o);
    if (*sweep) return cmd_sweep(o);
    if (*info) return cmd_info(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
