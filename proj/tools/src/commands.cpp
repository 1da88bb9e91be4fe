#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include "dphase/expression.hpp"
#include "dphase/flux.hpp"
#include "dphase/harness.hpp"
#include "dphase/io.hpp"
#include "dphase/problem.hpp"
#include "dphase/solver.hpp"

namespace dphase::cli {

namespace fs = std::filesystem;

namespace {

std::vector<int> parse_mesh(const std::string& text) {
  std::vector<int> cells;
  for (const double v : parse_number_list(text)) {
    if (v != std::floor(v) || v < 1) throw ConfigError("--mesh: expected positive integers, got '" + text + "'");
    cells.push_back(static_cast<int>(v));
  }
  return cells;
}

ProblemConfig load(const RunOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config is required");
  ProblemConfig cfg = load_problem_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.mesh.empty()) {
    const auto cells = parse_mesh(opts.mesh);
    if (cells.size() == 1) cfg = cfg.with_mesh(cells.front(), cfg.nt);
  }
  return cfg;
}

double solve_eps(const RunOptions& opts, const ProblemSpec& spec) {
  if (opts.eps) return *opts.eps;
  return spec.epsilon_schedule.empty() ? 0.0 : spec.epsilon_schedule.back();
}

fs::path out_dir(const RunOptions& opts) {
  fs::path dir = opts.out.empty() ? fs::path("out") : fs::path(opts.out);
  fs::create_directories(dir);
  return dir;
}

/// Runs the validation gate; prints violations and returns false on failure.
bool gate(const ProblemSpec& spec, std::ostream& err) {
  const ValidationReport report = validate(spec);
  if (report.accepted()) return true;
  for (const auto& name : report.violations()) {
    const auto* c = report.find(name);
    err << "assumption violated: " << name << " (margin " << format_number(c->margin) << ")";
    if (c->location) err << " at " << *c->location;
    err << '\n';
  }
  return false;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const NewtonDiverged& e) {
    err << newton_failure_json(e, std::nan(""));
    return kNewtonDiverged;
  } catch (const LinearSolveFailed& e) {
    err << "{\"error\":\"LinearSolveFailed\",\"message\":\"" << e.what() << "\"}\n";
    return kNewtonDiverged;
  } catch (const IncompleteCheckpoints& e) {
    err << "incomplete checkpoints: " << e.what() << '\n';
    return kIncompleteCheckpoints;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kParseError;
  } catch (const ExpressionError& e) {
    err << "expression error: " << e.what() << '\n';
    return kParseError;
  } catch (const InadmissibleR& e) {
    err << "inadmissible r: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalid;
  }
}

MMSCase mms_from_config(const ProblemConfig& cfg) {
  const auto text = cfg.get("mms.u");
  if (!text) throw ConfigError("mms: missing key 'mms.u'");
  Expression u;
  try {
    u = Expression::parse(*text);
  } catch (const ExpressionError& e) {
    throw ConfigError(std::string("key 'mms.u': ") + e.what());
  }
  // Derivatives of u* by centred differences of the expression.
  const double h = 1e-5;
  MMSCase mms;
  mms.name = cfg.get("mms.name").value_or("mms");
  mms.base = cfg;
  mms.fine_step = cfg.get_double("mms.fine_step", mms.fine_step);
  mms.solution = [u](Point x, double t) { return u(x.x, x.y, t); };
  mms.gradient = [u, h](Point x, double t) {
    return Eigen::Vector2d((u(x.x + h, x.y, t) - u(x.x - h, x.y, t)) / (2 * h),
                           (u(x.x, x.y + h, t) - u(x.x, x.y - h, t)) / (2 * h));
  };
  mms.time_derivative = [u, h](Point x, double t) { return (u(x.x, x.y, t + h) - u(x.x, x.y, t - h)) / (2 * h); };
  return mms;
}

}  // namespace

int cmd_validate(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const ProblemConfig cfg = load(opts);
        const ProblemSpec spec = build_problem(cfg);
        const ValidationReport report = validate(spec);
        const std::string json = to_json(report);
        out << json;
        if (!opts.out.empty()) write_text(out_dir(opts) / "validation.json", json);
        for (const auto& name : report.violations()) err << "assumption violated: " << name << '\n';
        return report.accepted() ? kOk : kInvalid;
      },
      err);
}

int cmd_solve(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const ProblemConfig cfg = load(opts);
        const ProblemSpec spec = build_problem(cfg);
        if (!gate(spec, err)) return kInvalid;
        const double eps = solve_eps(opts, spec);
        const NewtonConfig newton = NewtonConfig::from_config(cfg);
        std::optional<EvolutionResult> solved;
        try {
          solved.emplace(solve_evolution(spec, eps, newton));
        } catch (const NewtonDiverged& e) {
          err << newton_failure_json(e, eps);
          return kNewtonDiverged;
        }
        const EvolutionResult& result = *solved;
        const fs::path dir = out_dir(opts);
        write_checkpoints(dir / "checkpoints", result.u, cfg, eps);
        write_text(dir / "diagnostics.csv", diagnostics_csv(result.steps));
        const auto s_list = opts.s_list.empty() ? cfg.get_list("report.s", default_s_list(cfg.dim)) : opts.s_list;
        const RegularityReport rep = regularity_report(result.u, spec, eps, opts.r.value_or(cfg.r), s_list);
        write_text(dir / "report.json", to_json(rep));
        write_text(dir / "report.csv", regularity_csv(rep));
        const std::string mesh = std::to_string(cfg.nx) + "x" + std::to_string(cfg.nt);
        write_text(dir / "report_long.csv", long_format_csv(long_rows("solve", mesh, rep)));
        out << to_json(rep);
        return kOk;
      },
      err);
}

int cmd_sweep_eps(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const ProblemConfig cfg = load(opts);
        const ProblemSpec spec = build_problem(cfg);
        if (!gate(spec, err)) return kInvalid;
        const NewtonConfig newton = NewtonConfig::from_config(cfg);
        const ContinuationOptions copts = ContinuationOptions::from_config(cfg);
        const fs::path dir = out_dir(opts);
        try {
          const ContinuationTrace trace = epsilon_continuation(spec, newton, copts);
          const std::string csv = continuation_csv(trace);
          write_text(dir / "continuation.csv", csv);
          out << csv;
          if (!trace.certified) err << "warning: final G_eps is not below the certification threshold\n";
          return kOk;
        } catch (const ContinuationStalled& e) {
          write_text(dir / "continuation.csv", continuation_csv(e.partial()));
          err << "{\"error\":\"ContinuationStalled\",\"level\":" << e.level() << ",\"message\":\"" << e.what()
              << "\"}\n";
          return kStalled;
        }
      },
      err);
}

int cmd_mms(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        RunOptions o = opts;
        const std::string mesh = o.mesh;
        o.mesh.clear();
        const ProblemConfig cfg = load(o);
        const MMSCase mms = mms_from_config(cfg);
        const std::vector<int> cells =
            mesh.empty() ? parse_mesh(cfg.get("mms.cells").value_or("16,32,64")) : parse_mesh(mesh);
        const double c = cfg.get_double("mms.c", 1.0);
        const double eps = opts.eps.value_or(cfg.get_double("mms.eps", 0.0));
        const auto rows = mms_convergence(mms, parabolic_chain(cfg, cells, c), eps, NewtonConfig::from_config(cfg));
        const std::string csv = mms_csv(rows);
        write_text(out_dir(opts) / "mms.csv", csv);
        out << csv;
        return kOk;
      },
      err);
}

int cmd_stability(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        const ProblemConfig cfg = load(opts);
        const ProblemSpec spec = build_problem(cfg);
        if (!gate(spec, err)) return kInvalid;
        const auto widths = cfg.get_list("stability.widths", {0.2, 0.1, 0.05});
        const StabilityTable table =
            mollification_stability(spec, widths, solve_eps(opts, spec), NewtonConfig::from_config(cfg));
        const std::string csv = stability_csv(table);
        write_text(out_dir(opts) / "stability.csv", csv);
        out << csv;
        if (!table.monotone) err << "warning: differences do not decrease monotonically with the width\n";
        return kOk;
      },
      err);
}

int cmd_report(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        if (opts.checkpoints.empty()) throw ConfigError("--checkpoints is required");
        const CheckpointSet set = read_checkpoints(opts.checkpoints);
        const ProblemSpec spec = build_problem(set.config);
        const double eps = opts.eps.value_or(set.eps);
        const auto s_list =
            opts.s_list.empty() ? set.config.get_list("report.s", default_s_list(set.config.dim)) : opts.s_list;
        const RegularityReport rep = regularity_report(set.u, spec, eps, opts.r.value_or(set.config.r), s_list);
        const std::string json = to_json(rep);
        out << json;
        if (!opts.out.empty()) {
          const fs::path dir = out_dir(opts);
          write_text(dir / "report.json", json);
          write_text(dir / "report.csv", regularity_csv(rep));
        }
        return kOk;
      },
      err);
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regularized double-phase parabolic solver and verification harness"};
  app.require_subcommand(1);
  RunOptions opts;
  std::string s_text;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Problem configuration file");
    sub->add_option("--out", opts.out, "Output directory");
    sub->add_option("--mesh", opts.mesh, "Cells per axis (comma list for mms)");
    sub->add_option("--eps", opts.eps, "Regularization parameter");
    sub->add_option("--seed", opts.seed, "RNG seed recorded with the outputs");
  };
  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const RunOptions&, std::ostream&, std::ostream&);
  };
  const Entry entries[] = {
      {"validate", "Check the structural assumptions", cmd_validate},
      {"solve", "Solve one regularized evolution", cmd_solve},
      {"sweep-eps", "Continuation over the eps schedule", cmd_sweep_eps},
      {"mms", "Manufactured-solution convergence table", cmd_mms},
      {"stability", "Mollification stability table", cmd_stability},
      {"report", "Regularity report from checkpoints", cmd_report},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    common(sub);
    if (std::string(e.name) == "report" || std::string(e.name) == "solve") {
      sub->add_option("--r", opts.r, "Gradient integrability order");
      sub->add_option("--s", s_text, "Comma list of higher-integrability gains");
    }
    if (std::string(e.name) == "report") sub->add_option("--checkpoints", opts.checkpoints, "Checkpoint directory");
    subs.emplace_back(sub, &e);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseError;
  }
  try {
    if (!s_text.empty()) opts.s_list = parse_number_list(s_text);
  } catch (const ConfigError& e) {
    err << "--s: " << e.what() << '\n';
    return kParseError;
  }
  for (const auto& [sub, entry] : subs) {
    if (sub->parsed()) return entry->fn(opts, out, err);
  }
  return kParseError;
}

}  // namespace dphase::cli
