#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dphase/grid.hpp"
#include "dphase/harness.hpp"
#include "dphase/problem.hpp"
#include "dphase/solver.hpp"

namespace dphase {

/// Missing, truncated or inconsistent checkpoint files.
class IncompleteCheckpoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that round-trips.
std::string format_number(double v);

// JSON documents end with a newline and have sorted keys, so equal inputs
// give byte-identical text.
std::string to_json(const ValidationReport& report);
std::string to_json(const RegularityReport& report);
std::string to_json(const RInterval& interval);
std::string newton_failure_json(const NewtonDiverged& error, double eps);

// CSV tables start with "# schema=1" and a header row.
std::string regularity_csv(const RegularityReport& report);
std::string diagnostics_csv(const std::vector<StepDiagnostics>& steps);
std::string continuation_csv(const ContinuationTrace& trace);
std::string mms_csv(const std::vector<MMSRow>& rows);
std::string stability_csv(const StabilityTable& table);

struct LongRow {
  std::string experiment;
  std::string mesh;
  std::string quantity;
  double value = 0.0;
};

/// Plot-ready table with columns experiment,mesh,quantity,value.
std::string long_format_csv(const std::vector<LongRow>& rows);
std::vector<LongRow> long_rows(const std::string& experiment, const std::string& mesh,
                               const RegularityReport& report);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Checkpoint directory layout:
///   manifest.json     grid, level count, file names
///   problem.cfg       canonical copy of the configuration
///   u_NNNNN.bin       one JSON header line, then `count` little-endian doubles
void write_checkpoints(const std::filesystem::path& dir, const Trajectory& u, const ProblemConfig& config,
                       double eps);

struct CheckpointSet {
  ProblemConfig config;
  double eps = 0.0;
  Trajectory u;
};

/// Throws IncompleteCheckpoints unless every level listed in the manifest is
/// present with the right size and header.
CheckpointSet read_checkpoints(const std::filesystem::path& dir);

}  // namespace dphase
