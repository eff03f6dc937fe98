#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causex/error.hpp"
#include "causex/oracle.hpp"
#include "causex/query.hpp"

namespace causex {

/// Exit status for an engine error: 2 identifiability, 3 infeasible
/// recourse, 1 for everything else.
int exit_code(ErrorCode code);

struct BoundsCheck {
  std::size_t trials = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t violations = 0;
  double max_violation = 0.0;
  std::vector<std::string> failures;  // first few violating queries
};

/// Random single-attribute queries on the exhaustive joint of `m`; every
/// ground-truth score must lie within the estimated bounds. Queries with a
/// null conditioning event are skipped.
BoundsCheck validate_bounds(const Scm& m, const OutcomeSpec& outcome, std::size_t trials, std::uint64_t seed,
                            double tolerance = 1e-9);

nlohmann::ordered_json to_json(const BoundsCheck& c);

/// Runs the command line; returns the exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace causex
