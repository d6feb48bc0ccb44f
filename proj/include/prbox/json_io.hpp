#pragma once

#include "prbox/box.hpp"
#include "prbox/circuit.hpp"
#include "prbox/cluster.hpp"
#include "prbox/construct.hpp"
#include "prbox/polytope.hpp"
#include "prbox/wiring.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace prbox::json_io {

/// Keys keep insertion order so output is byte-stable.
using Json = nlohmann::ordered_json;

/// Parses text; throws ParseError.
Json parse(const std::string& text);
/// Two-space indented with a trailing newline.
std::string dump(const Json& j);

Json rational(const Rational& r);
Rational rational_from(const Json& j);

/// {"parties","inputs","outputs","table":[{"x","a","p"}]}, zero cells omitted.
Json box_to_json(const Box& box);
Box box_from_json(const Json& j);

Json distribution_to_json(const OutcomeDistribution& d, std::span<const int> x);
Json sample_to_json(const SampleCounts& s, std::span<const int> x, std::uint64_t seed);

/// {"inputs":[{"name","party","bit"}],"gates":[{"l","r"}],"output","constants"};
/// parties counted from 1 as in the input names.
Json circuit_to_json(const NandCircuit& c);
NandCircuit circuit_from_json(const Json& j);
Json truth_table_to_json(const TruthTable& t);

/// Strategies are written as decision tables keyed "lambda:x:history" (the
/// history lists observed outputs, comma separated) while the table stays
/// within `table_cap` entries, and as shared node graphs beyond that.
Json protocol_to_json(const WiringProtocol& p, std::uint64_t table_cap = 100'000);
WiringProtocol protocol_from_json(const Json& j);

Json verdict_to_json(const ValidationVerdict& v);
Json locality_to_json(const Box& box, const LocalityVerdict& v);
Json signaling_to_json(const NoSignalingVerdict& v);

Json relabeling_to_json(const Relabeling& r);
Json vertex_report_to_json(const VertexReport& r);

Json constraints_to_json(const ConstraintSet& s);
ConstraintSet constraints_from_json(const Json& j);
Json ghz_to_json(const GhzVerdict& v);
Json search_report_to_json(const SearchReport& r, bool timing);

Json cc_to_json(const CcResult& r);

} // namespace prbox::json_io
