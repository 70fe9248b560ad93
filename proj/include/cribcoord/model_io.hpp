#pragma once

// JSON model files and reports.
//
// A model file holds the target q(x1,x2,w,y), optionally a channel and a
// factorization:
//
//   {
//     "variables": [{"name": "X1", "size": 4, "labels": [...]}, ...],
//     "target": {"order": ["X1","X2","W","Y"], "probs": ["1/8", "0", ...]},
//     "channel": {"type": "links", "f1": [...], "f2": [...],
//                 "ytilde1_size": 4, "ytilde2_size": 2}
//              | {"type": "table", "table": [...]},          // (Ytilde | Xtilde1, Xtilde2)
//     "factorization": {
//       "mode": "crib" | "nocrib",
//       "p_t": [...],
//       "kernels": {"enc2": {"given": ["X2","T"], "outputs": ["U2","Xtilde2"], "table": [...]}, ...}
//     }
//   }
//
// Tables are flat and row-major with the last listed variable fastest; a
// kernel's rows follow "given", its columns follow "outputs". Probabilities
// are JSON numbers or strings holding a decimal ("0.125") or a fraction
// ("1/8"). Target mass and kernel rows must sum to 1 within 1e-9 and are
// renormalized exactly. Crib kernels: enc2, enc1, decoder. No-crib kernels:
// aux1, input1, aux2, input2, decoder. The channel kernel comes from "channel".

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cribcoord/example1.hpp"
#include "cribcoord/osrb.hpp"
#include "cribcoord/regions.hpp"
#include "json.hpp"

namespace cribcoord::io {

using Json = nlohmann::ordered_json;

struct Model {
  TargetSpec target;
  std::optional<MacChannel> channel;
  std::optional<Factorization> factorization;
  std::string sha256;  // of the file bytes the model was read from
};

/// Hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// Number, decimal string or "a/b" fraction. Throws InvalidArgument naming `field`.
double parse_probability(const Json& v, const std::string& field);

/// Throws InvalidArgument with a field path on any schema violation.
Model parse_model(const Json& doc, std::string sha256 = {});

/// Reads and parses a file. Parse errors report line and column. A report
/// carrying a "witness_model" object is accepted and that model is used.
Model load_model(const std::string& path);

Json model_to_json(const TargetSpec& target, const MacChannel& channel, const Factorization& f);

Json to_json(const ConstraintReport& r);
Json to_json(const MarginalMatch& m);
Json to_json(const RatePoint& p);
Json to_json(const osrb::Rates& r);
Json to_json(const osrb::RateWindow& w);
Json to_json(const osrb::SimulationReport& r);
Json to_json(const example1::EntropyTriple& t);
Json to_json(const example1::ConverseEvidence& e);

/// Writes `doc` (2-space indent, trailing newline) to `path`, or stdout if empty.
void write_json(const Json& doc, const std::string& path);

}  // namespace cribcoord::io
