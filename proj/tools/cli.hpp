#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gimbal/engine.hpp"

namespace gimbal::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kInternalError = 3 };

/// Runs the `gimbal` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Throws std::logic_error when a record breaks a structural guarantee of the
/// estimator (weights off the simplex, eta outside its clip range, ...).
void check_record_invariants(std::span<const LocationRecord> records, const GimbalConfig& config);

/// Lower-case file stem for a variant name ("n0=6" -> "n0_6").
std::string variant_file_stem(const std::string& name);

}  // namespace gimbal::cli
