#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nlirls/errors.hpp"
#include "nlirls/model.hpp"

namespace nlirls::cli {

enum ExitCode : int { kExitOk = 0, kExitSolverFailure = 1, kExitInputError = 2 };

/// Entry point of the `nlirls` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Input errors map to 2, everything else to 1.
int exit_code_for(ErrorCode code) noexcept;

/// "0.5" -> one start; "0,1;2,3" -> two starts in R^2. Points are separated by
/// ';', coordinates by ','. A single scalar is broadcast to every coordinate.
std::vector<Vector> parse_starts(const std::string& text, Index dim);

/// Columns n, eps, J, lp_residual, step_norm (step_norm is 0 on the first row).
void write_trace_csv(std::ostream& out, const SolveReport& report, const ResidualMap& map,
                     const Vector& y, double p);

}  // namespace nlirls::cli
