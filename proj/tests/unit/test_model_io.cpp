#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include "cribcoord/model_io.hpp"
#include "doctest.h"
#include "support/generators.hpp"

using namespace cribcoord;
using namespace cribcoord::io;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  const auto dir = std::filesystem::temp_directory_path() / "cribcoord_model_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / name).string();
  std::ofstream(path) << body;
  return path;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return {};
}

Json example1_crib_model() {
  return model_to_json(example1::build_target(), example1::perfect_channel(2, 2), example1::crib_witness());
}

void check_same_report(const ConstraintReport& a, const ConstraintReport& b) {
  REQUIRE(a.inequalities.size() == b.inequalities.size());
  for (std::size_t i = 0; i < a.inequalities.size(); ++i) {
    CHECK(a.inequalities[i].label == b.inequalities[i].label);
    CHECK(std::fabs(a.inequalities[i].slack - b.inequalities[i].slack) < 1e-12);
  }
}

}  // namespace

TEST_CASE("probabilities parse as numbers, decimals and fractions") {
  CHECK(parse_probability(Json(0.25), "p") == 0.25);
  CHECK(parse_probability(Json("0.125"), "p") == 0.125);
  CHECK(parse_probability(Json("1/8"), "p") == 0.125);
  CHECK(parse_probability(Json("2/3"), "p") == 2.0 / 3.0);
  for (const char* bad : {"1/0", "x", "0.5x", "1/2/3", "-0.1", ""})
    CHECK(error_of([&] { parse_probability(Json(bad), "target.probs[3]"); }).find("target.probs[3]") == 0);
  CHECK_THROWS_AS(parse_probability(Json(true), "p"), InvalidArgument);
  CHECK_THROWS_AS(parse_probability(Json(-1.0), "p"), InvalidArgument);
}

TEST_CASE("SHA-256 of known strings") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("minimal target-only model") {
  const Json doc = Json::parse(R"({
    "variables": [{"name": "X1", "size": 2}, {"name": "X2", "size": 1}, {"name": "W", "size": 1},
                  {"name": "Y", "size": 2, "labels": ["a", "b"]}],
    "target": {"order": ["Y", "X1", "X2", "W"], "probs": ["1/2", 0, "0", "0.5"]}
  })");
  const auto m = parse_model(doc);
  CHECK_FALSE(m.channel);
  CHECK_FALSE(m.factorization);
  // Stored in (X1, X2, W, Y) order: P(x1 = 1, y = 1) = 1/2.
  const std::vector<std::size_t> a{1, 0, 0, 1};
  CHECK(m.target.joint().at(a) == 0.5);
}

TEST_CASE("round trip keeps every slack") {
  for (const auto& doc : {example1_crib_model(),
                          model_to_json(example1::build_target(), example1::perfect_channel(4, 2),
                                        example1::nocrib_witness())}) {
    const auto m = parse_model(Json::parse(doc.dump()));
    REQUIRE(m.factorization);
    REQUIRE(m.channel);
    CHECK(m.channel->links);
    const auto j = build_joint(m.target, *m.factorization);
    const bool crib = std::holds_alternative<CribFactorization>(*m.factorization);
    const auto ref = crib ? build_cribbing_joint(example1::build_target(), example1::crib_witness())
                          : build_nocrib_joint(example1::build_target(), example1::nocrib_witness());
    if (crib) {
      check_same_report(thm1_evaluate(j), thm1_evaluate(ref));
    } else {
      check_same_report(thm2_evaluate(j, *m.channel->links), thm2_evaluate(ref, DeterministicLinks::identity(4, 2)));
    }
  }
}

TEST_CASE("property: random factorizations round-trip exactly") {
  gen::Rng rng(61);
  for (int it = 0; it < 60; ++it) {
    const auto s = gen::random_sizes(rng, 2048);
    const auto q = gen::random_target(rng, s, false);
    const auto ch = gen::random_channel(rng, s, it % 2 == 0);
    const auto f = gen::random_crib(rng, q, s, ch);
    const auto m = parse_model(Json::parse(model_to_json(q, ch, f).dump()));
    const auto a = build_cribbing_joint(q, f);
    const auto b = build_joint(m.target, *m.factorization);
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::fabs(a[k] - b[k]));
    CHECK(worst < 1e-15);
    check_same_report(thm1_evaluate(a), thm1_evaluate(b));
  }
}

TEST_CASE("schema errors name the offending field") {
  Json doc = example1_crib_model();
  doc["factorization"]["kernels"]["enc1"]["table"].erase(0);
  CHECK(error_of([&] { parse_model(doc); }).find("kernel 'enc1': table has") != std::string::npos);

  doc = example1_crib_model();
  doc["factorization"]["kernels"]["aux1"] = doc["factorization"]["kernels"]["enc1"];
  CHECK(error_of([&] { parse_model(doc); }).find("unknown kernel 'aux1'") != std::string::npos);

  doc = example1_crib_model();
  doc["target"]["probs"][0] = "0.3";
  CHECK(error_of([&] { parse_model(doc); }).find("target.probs") != std::string::npos);

  doc = example1_crib_model();
  doc["channel"]["f1"][0] = 7;
  CHECK(error_of([&] { parse_model(doc); }).find("channel.f1[0]") != std::string::npos);

  doc = example1_crib_model();
  doc["factorization"]["mode"] = "both";
  CHECK(error_of([&] { parse_model(doc); }).find("factorization.mode") != std::string::npos);

  doc = example1_crib_model();
  doc.erase("channel");
  CHECK(error_of([&] { parse_model(doc); }).find("requires a \"channel\"") != std::string::npos);

  doc = example1_crib_model();
  doc["variables"].push_back(doc["variables"][0]);
  CHECK(error_of([&] { parse_model(doc); }).find("duplicate variable") != std::string::npos);
}

TEST_CASE("rows within 1e-9 of stochastic are renormalized") {
  Json doc = example1_crib_model();
  doc["target"]["probs"][0] = doc["target"]["probs"][0].get<double>() + 5e-10;
  const auto m = parse_model(doc);
  double s = 0.0;
  for (std::size_t k = 0; k < m.target.joint().size(); ++k) s += m.target.joint()[k];
  CHECK(std::fabs(s - 1.0) < 1e-15);
}

TEST_CASE("files: syntax errors carry line and column, reports are accepted") {
  const auto bad = temp_file("bad.json", "{\n  \"variables\": [\n    {\"name\": \"X1\" \"size\": 2}\n  ]\n}\n");
  const auto msg = error_of([&] { load_model(bad); });
  CHECK(msg.find(bad + ":3:") == 0);
  CHECK(error_of([&] { load_model("/nonexistent/model.json"); }).find("cannot open") != std::string::npos);

  const std::string body = example1_crib_model().dump(2);
  const auto path = temp_file("model.json", body);
  const auto m = load_model(path);
  CHECK(m.sha256 == sha256_hex(body));
  Json report;
  report["verdict"] = "feasible";
  report["witness_model"] = example1_crib_model();
  const auto from_report = load_model(temp_file("report.json", report.dump()));
  REQUIRE(from_report.factorization);
  CHECK(std::holds_alternative<CribFactorization>(*from_report.factorization));
}

TEST_CASE("report serialization") {
  const auto j = build_nocrib_joint(example1::build_target(), example1::nocrib_witness());
  const auto r = to_json(thm2_evaluate(j, DeterministicLinks::identity(4, 2)));
  CHECK(r["feasible"] == true);
  CHECK(r["min_r02"] == "unlimited");
  const auto w = to_json(osrb::osrb_rate_window(build_cribbing_joint(example1::build_target(), example1::crib_witness())));
  CHECK(w["nonempty"] == true);
  CHECK(to_json(example1::EntropyTriple{1, 1, 2})["h12"] == 2.0);
}
