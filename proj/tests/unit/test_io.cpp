#include <filesystem>

#include <gtest/gtest.h>

#include "dphase/io.hpp"

using namespace dphase;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dphase_io_" + name);
  fs::remove_all(dir);
  return dir;
}

struct Solved {
  ProblemConfig config;
  ProblemSpec spec;
  EvolutionResult result;
};

Solved solve_fixture() {
  ProblemConfig cfg = load_problem_config(std::string(DPHASE_FIXTURES) + "/heat1d.cfg").with_mesh(16, 8);
  ProblemSpec spec = build_problem(cfg);
  EvolutionResult res = solve_evolution(spec, 0.0, NewtonConfig{});
  return {cfg, spec, std::move(res)};
}

}  // namespace

TEST(Io, NumbersRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1e-300), "1e-300");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Io, ValidationJsonHasOneEntryPerCheck) {
  const ProblemSpec spec = build_problem(load_problem_config(std::string(DPHASE_FIXTURES) + "/balance_violation.cfg"));
  const ValidationReport rep = validate(spec);
  const std::string json = to_json(rep);
  EXPECT_NE(json.find("\"assumption\": \"balance_condition\""), std::string::npos);
  EXPECT_NE(json.find("\"accepted\": false"), std::string::npos);
  EXPECT_NE(json.find("\"location\": null"), std::string::npos);
  EXPECT_EQ(json, to_json(validate(spec)));
}

TEST(Io, CsvTablesCarrySchemaLine) {
  const Solved s = solve_fixture();
  const std::string diag = diagnostics_csv(s.result.steps);
  EXPECT_EQ(diag.rfind("# schema=1\nstep,time,eps,newton_iters,residual,energy_residual\n", 0), 0u);
  EXPECT_EQ(std::count(diag.begin(), diag.end(), '\n'), 2 + 8);
  const RegularityReport rep = regularity_report(s.result.u, s.spec, 0.0, 2.0, {0.2, 0.5});
  EXPECT_EQ(regularity_csv(rep).rfind("# schema=1\nquantity,s,value\n", 0), 0u);
  const std::string lf = long_format_csv(long_rows("heat", "16x8", rep));
  EXPECT_EQ(lf.rfind("# schema=1\nexperiment,mesh,quantity,value\nheat,16x8,sup_r_norm,", 0), 0u);
  EXPECT_EQ(mms_csv({}).rfind("# schema=1\ncells,h,tau,l2_error,grad_error,l2_order,grad_order\n", 0), 0u);
}

TEST(Io, CheckpointsRoundTripExactly) {
  const Solved s = solve_fixture();
  const fs::path dir = scratch("roundtrip");
  write_checkpoints(dir, s.result.u, s.config, 0.25);
  const CheckpointSet back = read_checkpoints(dir);
  EXPECT_EQ(back.eps, 0.25);
  EXPECT_EQ(back.u.grid, s.result.u.grid);
  ASSERT_EQ(back.u.levels(), s.result.u.levels());
  for (int n = 0; n < back.u.levels(); ++n) EXPECT_EQ(back.u.slices[n], s.result.u.slices[n]);
  EXPECT_EQ(to_config_text(back.config), to_config_text(s.config));
  fs::remove_all(dir);
}

TEST(Io, DamagedCheckpointsAreIncomplete) {
  const Solved s = solve_fixture();
  const fs::path dir = scratch("damaged");
  write_checkpoints(dir, s.result.u, s.config, 0.0);
  fs::resize_file(dir / "u_00005.bin", fs::file_size(dir / "u_00005.bin") - 8);
  EXPECT_THROW(read_checkpoints(dir), IncompleteCheckpoints);
  write_checkpoints(dir, s.result.u, s.config, 0.0);
  fs::remove(dir / "u_00008.bin");
  EXPECT_THROW(read_checkpoints(dir), IncompleteCheckpoints);
  write_checkpoints(dir, s.result.u, s.config, 0.0);
  fs::remove(dir / "manifest.json");
  EXPECT_THROW(read_checkpoints(dir), IncompleteCheckpoints);
  EXPECT_THROW(read_checkpoints(dir / "nowhere"), IncompleteCheckpoints);
  fs::remove_all(dir);
}
