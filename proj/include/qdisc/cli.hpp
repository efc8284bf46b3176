#pragma once

// Command-line front end. Files are JSON:
//   problem: {"states": [[x,y,z], ...] | "kets": [[[re,im],[re,im]], ...],
//             "priors": [...], "tolerance": optional}
//   povm:    {"elements": [{"omega": w, "gamma": [x,y,z]}, ...]}
// A problem may also be nested under "problem" and a POVM under "povm", so
// the output of `inverse` and `solve` loads directly.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qdisc/core.hpp"
#include "qdisc/oracle_sim.hpp"
#include "qdisc/solver_direct.hpp"

namespace qdisc::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInvalidInput = 1,
  kSolverFailure = 2,
  kVerificationFailed = 3,
};

/// Malformed input, anchored at `source:line:column`.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct LoadOptions {
  std::optional<double> tolerance;
  bool subproblem = false;
};

Problem parse_problem(const std::string& text, const std::string& source,
                      const LoadOptions& options = {});
Povm parse_povm(const std::string& text, const std::string& source,
                double tol = kDefaultTolerance);

nlohmann::json to_json(const Problem& problem);
nlohmann::json to_json(const Povm& povm);
nlohmann::json to_json(const Certificate& certificate);
nlohmann::json to_json(const Solution& solution);
nlohmann::json to_json(const SimReport& report);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qdisc::cli
