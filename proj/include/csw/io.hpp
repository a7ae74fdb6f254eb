#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <variant>

#include "csw/field.hpp"
#include "csw/order.hpp"
#include "csw/stg.hpp"
#include "csw/system.hpp"
#include "csw/tiles.hpp"

namespace csw {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "conley-switch/1";
inline constexpr const char* kToolVersion = "1.0.0";

// Numeric run parameters a spec file may embed and the CLI may override.
struct RunSettings {
  std::optional<Rat> delta;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double horizon = 50.0;
  int trajectories = 1000;
  int samples_per_edge = 100;
};

struct SpecFile {
  RawSystem raw;
  RunSettings settings;
};

// Strict spec-file reader. Syntax errors report line/column; structural
// errors (unknown key, malformed value) report the JSON path. Both come
// back as ParseError.
std::variant<SpecFile, Violation> parse_spec(const std::string& text);
std::variant<SpecFile, Violation> load_spec(const std::string& path);

// Canonical serialization; parse_spec(dump_spec(s)) reproduces s exactly
// (rationals go through their canonical string form).
Json spec_json(const SpecFile& spec);
std::string dump_spec(const SpecFile& spec);

// Morse graph in DOT: one box per Morse set listing its faces, Hasse edges
// drawn from the upper set to the one it covers.
std::string morse_graph_dot(const TransitionGraph& stg, const MorseGraph& mg);

// Report blocks. All use ordered keys and canonical rational strings so a
// rerun with the same inputs is byte-identical.
Json violations_json(const std::vector<Violation>& vs);
Json constants_json(const SystemConstants& c);
Json system_json(const SwitchingSystem& sys);
Json stg_json(const TransitionGraph& stg);
Json morse_json(const TransitionGraph& stg, const MorseGraph& mg);
Json lattice_json(const TransitionGraph& stg, const AttractorLattice& att);
Json regions_json(const TileComplex& tiles, const RegionLattice& rl);
Json verification_json(const VerificationReport& vr);

// Whole-figure SVG: a grid layer plus one layer per lattice element holding
// its tiles, chips, and boundary loops. Geometry is written in model
// coordinates under a single affine transform on the root group, so the
// figure numbers match the JSON rationals digit for digit.
std::string render_svg(const TileComplex& tiles, const RegionLattice& rl);

std::string read_file(const std::string& path);   // throws on failure
void write_file(const std::string& path, const std::string& content);

}  // namespace csw
