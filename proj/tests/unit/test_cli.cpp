#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cribcoord/model_io.hpp"
#include "doctest.h"
#include "support/osrb_instances.hpp"

using namespace cribcoord;
using io::Json;

namespace {

const std::filesystem::path kTmp = CRIBCOORD_TEST_TMP;

std::string tmp(const std::string& name) {
  std::filesystem::create_directories(kTmp);
  return (kTmp / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string write(const std::string& name, const std::string& body) {
  const auto path = tmp(name);
  std::ofstream(path) << body;
  return path;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::string& args) {
  const auto out = tmp("stdout.txt"), err = tmp("stderr.txt");
  const std::string cmd = std::string(CRIBCOORD_CLI) + " " + args + " > " + out + " 2> " + err;
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string crib_model() {
  return write("crib.json", io::model_to_json(example1::build_target(), example1::perfect_channel(2, 2),
                                              example1::crib_witness())
                                .dump(2));
}

std::string nocrib_model() {
  return write("nocrib.json", io::model_to_json(example1::build_target(), example1::perfect_channel(4, 2),
                                                example1::nocrib_witness())
                                  .dump(2));
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);)
    if (!l.empty()) v.push_back(l);
  return v;
}

}  // namespace

TEST_CASE("cli region: witness model re-validates") {
  const auto r = cli("region --model " + crib_model() + " --out " + tmp("region.json"));
  REQUIRE(r.code == 0);
  const auto doc = Json::parse(slurp(tmp("region.json")));
  CHECK(doc["verdict"] == "feasible");
  CHECK(doc["mode"] == "crib");
  CHECK(doc["input_sha256"] == io::sha256_hex(slurp(crib_model())));
  CHECK(doc["match"]["worst"].get<double>() < 1e-12);
  for (const auto& q : doc["perfect_channel_report"]["inequalities"]) CHECK(std::fabs(q["slack"].get<double>()) < 1e-9);

  const auto n = cli("region --model " + nocrib_model() + " --mode nocrib");
  REQUIRE(n.code == 0);
  CHECK(Json::parse(n.out)["report"]["min_r02"] == "unlimited");
}

TEST_CASE("cli region: malformed model and usage errors exit 1") {
  Json doc = Json::parse(slurp(crib_model()));
  doc["factorization"]["kernels"]["enc1"]["table"].erase(0);
  const auto bad = write("bad.json", doc.dump());
  const auto r = cli("region --model " + bad);
  CHECK(r.code == 1);
  CHECK(r.err.find("kernel 'enc1'") != std::string::npos);

  const auto syntax = write("syntax.json", "{\n  \"variables\": [,]\n}\n");
  const auto s = cli("region --model " + syntax);
  CHECK(s.code == 1);
  CHECK(s.err.find(":2:") != std::string::npos);

  CHECK(cli("region").code == 1);
  CHECK(cli("region --model " + crib_model() + " --mode sideways").code == 1);
  CHECK(cli("frobnicate").code == 1);
}

TEST_CASE("cli region: a search witness round-trips with identical slacks") {
  Json doc = Json::parse(slurp(crib_model()));
  doc.erase("factorization");
  const auto target_only = write("target_only.json", doc.dump());
  const auto r = cli("region --model " + target_only + " --restarts 6 --u1 4 --u2 2 --seed 3 --threads 1 --out " +
                     tmp("search.json"));
  REQUIRE(r.code == 0);
  const auto first = Json::parse(slurp(tmp("search.json")));
  REQUIRE(first.contains("witness_model"));
  const auto again = cli("region --model " + tmp("search.json") + " --tol 1e-6 --out " + tmp("again.json"));
  REQUIRE(again.code == 0);
  const auto second = Json::parse(slurp(tmp("again.json")));
  const auto& a = first["report"]["inequalities"];
  const auto& b = second["report"]["inequalities"];
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]["label"] == b[i]["label"]);
    CHECK(std::fabs(a[i]["slack"].get<double>() - b[i]["slack"].get<double>()) < 1e-12);
  }
}

TEST_CASE("cli simulate") {
  const auto r = cli("simulate --model " + crib_model() + " --n 2 --sim exact");
  REQUIRE(r.code == 0);
  const auto doc = Json::parse(r.out);
  CHECK(doc["simulation"]["tv_block"].get<double>() < 1e-12);
  CHECK(doc["simulation"]["decode_error_rate"] == 0.0);

  CHECK(cli("simulate --model " + crib_model() + " --n 2 --trials 0").code == 1);
  CHECK(cli("simulate --model " + crib_model() + " --rates 1,2").code == 1);

  const auto noisy = write("noisy.json", io::model_to_json(inst::p2p_target(0.0), inst::p2p_channel(0.1),
                                                           inst::p2p_factorization(0.0, 0.1))
                                             .dump());
  const auto empty = cli("simulate --model " + noisy + " --n 2");
  CHECK(empty.code == 2);
  CHECK(Json::parse(empty.out)["verdict"] == "empty rate window");
  const auto forced = cli("simulate --model " + noisy + " --n 4 --rates 0.5,0,0,0 --trials 2000 --seed 9");
  CHECK(forced.code == 0);
  const auto again = cli("simulate --model " + noisy + " --n 4 --rates 0.5,0,0,0 --trials 2000 --seed 9");
  CHECK(forced.out == again.out);
}

TEST_CASE("cli sweep") {
  const auto r = cli("sweep --model " + crib_model() +
                     " --grid 0:1:0.5,0:1:0.5 --restarts 2 --explore 20 --polish 4 --threads 1 --out " + tmp("s.csv"));
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(tmp("s.csv")));
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == "rate_r01,rate_r02,verdict,best_slack,witness_id");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",feasible,") != std::string::npos);
  CHECK(Json::parse(r.out)["rows"] == 9);

  // Links narrower than the no-crib thresholds.
  Json doc = Json::parse(slurp(nocrib_model()));
  doc.erase("factorization");
  doc["channel"]["f1"] = {0, 1, 2, 2};
  doc["channel"]["ytilde1_size"] = 3;
  for (auto& v : doc["variables"])
    if (v["name"] == "Ytilde") v["size"] = 6;
  const auto narrow = write("narrow.json", doc.dump());
  const auto n = cli("sweep --model " + narrow + " --mode nocrib --grid 0:2:1,0:0:1 --restarts 2 --threads 1");
  REQUIRE(n.code == 0);
  const auto nrows = lines(n.out);
  REQUIRE(nrows.size() == 4);
  for (std::size_t i = 1; i < nrows.size(); ++i) CHECK(nrows[i].find(",infeasible,") != std::string::npos);

  CHECK(cli("sweep --model " + crib_model() + " --grid 0:1:0.5").code == 1);
  CHECK(cli("sweep --model " + crib_model() + " --grid 1:0:0.5,0:1:1").code == 1);
}

TEST_CASE("cli example1 is deterministic") {
  const auto a = cli("example1 --restarts 4 --threads 1 --out " + tmp("e1a.json"));
  const auto b = cli("example1 --restarts 4 --threads 2 --out " + tmp("e1b.json"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(tmp("e1a.json")) == slurp(tmp("e1b.json")));
  const auto doc = Json::parse(slurp(tmp("e1a.json")));
  CHECK(doc["crib"]["triple"]["h12"] == 2.0);
  CHECK(doc["nocrib"]["triple"]["h1"] == 2.0);
  CHECK(a.out.find("crib      1.0000  1.0000  2.0000") != std::string::npos);
  CHECK(cli("example1 --skip-converse").code == 0);
}

TEST_CASE("cli info") {
  const auto r = cli("info --model " + crib_model());
  REQUIRE(r.code == 0);
  const auto doc = Json::parse(r.out);
  CHECK(doc["channel"] == "links");
  CHECK(doc["factorization"] == "crib");
  CHECK(doc["cardinality_caps"]["t"] == 3);
}
