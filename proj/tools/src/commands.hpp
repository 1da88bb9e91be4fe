#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dphase::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalid = 1,
  kParseError = 2,
  kNewtonDiverged = 3,
  kStalled = 4,
  kIncompleteCheckpoints = 5,
};

struct RunOptions {
  std::string config;
  std::string out;
  /// Cells per axis; a comma list for `mms`.
  std::string mesh;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  /// `report` only.
  std::string checkpoints;
  std::optional<double> r;
  std::vector<double> s_list;
};

int cmd_validate(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_solve(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep_eps(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_mms(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_stability(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_report(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dphase::cli
