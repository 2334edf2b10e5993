#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "nlirls/problems.hpp"

namespace nlirls {

// Plain-text instance record, one item per line:
//
//   # comment
//   format=nlirls-instance/1
//   family=PhaseRetrieval            (optional)
//   seed=42
//   noiseless=true
//   meta.<key>=<value>               (any number)
//   map.kind=simple_1d | linear | perturbed_rip | phase_retrieval
//   map.rho=<real>                   (perturbed_rip)
//   @matrix <name> <rows> <cols>     followed by <rows> comma-separated lines
//   @vector <name> <size>            followed by one comma-separated line (none if size is 0)
//   @indices <name> <size>           likewise, zero-based integers
//
// Blocks: map.matrix (linear), map.a1 and map.z_ref (perturbed_rip), map.a
// (phase_retrieval), y, x_star (optional), support (optional). Reals are
// written with 17 significant digits so a round trip is exact.

void write_instance(std::ostream& out, const ProblemInstance& inst);
std::string instance_to_string(const ProblemInstance& inst);

/// Throws ParseError naming the offending line.
ProblemInstance read_instance(std::istream& in);
ProblemInstance parse_instance(std::string_view text);

ProblemInstance load_instance(const std::string& path);
void save_instance(const std::string& path, const ProblemInstance& inst);

}  // namespace nlirls
