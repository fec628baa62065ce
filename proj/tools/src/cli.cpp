#include "acbem_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "acbem/error.hpp"
#include "acbem/harness.hpp"
#include "acbem/io.hpp"
#include "acbem/total.hpp"

namespace acbem::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config = "default";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  bool plot = false;

  std::optional<double> K, N;
  int M = 128;
  int count = 20;
};

/// Rows of named values, rendered as CSV (fixed column order) or JSON.
struct Table {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<json> rows;
  json summary = json::object();
};

std::string cell(const json& v) {
  if (v.is_null()) return {};
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void render(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    json doc = {{"format_version", kReportFormatVersion}, {"kind", t.kind}, {"rows", t.rows}};
    for (auto it = t.summary.begin(); it != t.summary.end(); ++it) doc[it.key()] = it.value();
    os << doc.dump(2) << '\n';
    return;
  }
  os << "format_version";
  for (const auto& c : t.columns) os << ',' << c;
  os << '\n';
  for (const json& r : t.rows) {
    os << kReportFormatVersion;
    for (const auto& c : t.columns) os << ',' << cell(r.contains(c) ? r.at(c) : json());
    os << '\n';
  }
}

void emit(const Table& t, const Options& o, std::ostream& out) {
  render(out, t, o.format);
  if (o.out.empty()) return;
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / (t.kind + (o.format == "json" ? ".json" : ".csv")));
  render(f, t, o.format);
}

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  validate(cfg);
  return cfg;
}

int cmd_solve(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const double K = o.K.value_or(cfg.K.front());
  const double N = o.N.value_or(cfg.N_for(K));
  const auto t0 = std::chrono::steady_clock::now();
  auto mesh = std::make_shared<const FemMesh>(build_mesh(K, N));
  const TotalProblem prob(default_potential(cfg.beta, cfg.delta), mesh, default_defect(cfg.alpha));
  SolverOptions so;
  so.tol = cfg.solver_tol;
  so.max_iterations = cfg.max_iterations;
  const SolveResult res = minimize_total(prob, so);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Table t{"solve", {"K", "N", "dofs", "boundary_nodes", "iterations", "objective", "gradient_norm", "dual_residual"}, {}, {}};
  t.rows.push_back({{"K", K},
                    {"N", N},
                    {"dofs", prob.dofs()},
                    {"boundary_nodes", mesh->boundary().size()},
                    {"iterations", res.iterations},
                    {"objective", res.objective.back()},
                    {"gradient_norm", res.gradient_norm},
                    {"dual_residual", res.dual_residual}});
  t.summary["objective_history"] = res.objective;
  t.summary["wall_time"] = wall;
  emit(t, o, out);
  if (!o.out.empty()) {
    char name[64];
    std::snprintf(name, sizeof name, "solution_K%g_N%g.txt", K, N);
    write_solution((fs::path(o.out) / name).string(), prob, res);
  }
  return kExitOk;
}

int cmd_study(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const StudyResult res = convergence_study(cfg);
  fs::create_directories(cfg.out_dir);
  if (o.format == "json") {
    const json doc = study_json(res);
    out << doc.dump(2) << '\n';
    std::ofstream(fs::path(cfg.out_dir) / "study.json") << doc.dump(2) << '\n';
  } else {
    write_study_csv(out, res);
    std::ofstream f(fs::path(cfg.out_dir) / "study.csv");
    write_study_csv(f, res);
    if (res.fit.available) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "# slope %.6f residual %.3e over %zu points\n", res.fit.slope,
                    res.fit.residual, res.fit.points);
      out << buf;
    } else {
      out << "# slope n/a (fewer than two successful rows)\n";
    }
    if (res.guard_checked)
      out << "# reference guard " << (res.contaminated ? "CONTAMINATED" : "ok") << ": max difference "
          << res.guard_max_difference << " vs threshold " << res.guard_threshold << '\n';
  }
  if (o.plot) {
    std::ofstream f(fs::path(cfg.out_dir) / "study.svg");
    write_study_svg(f, res);
  }
  const bool failed = std::any_of(res.rows.begin(), res.rows.end(), [](const StudyRow& r) { return !r.ok; });
  return failed ? kExitSolver : kExitOk;
}

int cmd_patch(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const double K = o.K.value_or(cfg.K.front());
  auto mesh = std::make_shared<const FemMesh>(build_mesh(K, o.N.value_or(cfg.N_for(K))));
  const AcEnergy e(default_potential(cfg.beta, cfg.delta), mesh);
  const auto samples = patch_test_sweep(e, static_cast<std::size_t>(o.count), cfg.seed);
  Table t{"patch_test", {"F1", "F2", "energy_residual", "force_residual"}, {}, {}};
  double worst = 0.0;
  for (const auto& s : samples) {
    t.rows.push_back({{"F1", s.F.x()}, {"F2", s.F.y()}, {"energy_residual", s.energy_residual},
                      {"force_residual", s.force_residual}});
    worst = std::max({worst, s.energy_residual, s.force_residual});
  }
  t.summary["max_residual"] = worst;
  emit(t, o, out);
  return worst <= 1e-10 ? kExitOk : kExitValidation;
}

int cmd_bem(const Options& o, std::ostream& out) {
  if (o.M < 8) throw ConfigError("--M must be at least 8");
  Table t{"bem_oracles", {"oracle", "M", "k", "exact", "value", "rel_error", "value_interp", "rel_error_interp"}, {}, {}};
  bool ok = true;
  for (const auto& c : circle_steklov_oracles(o.M, 4)) {
    t.rows.push_back({{"oracle", "steklov"}, {"M", c.M}, {"k", c.k}, {"exact", c.exact}, {"value", c.value},
                      {"rel_error", c.rel_error}, {"value_interp", c.value_interp},
                      {"rel_error_interp", c.rel_error_interp}});
    ok = ok && c.rel_error <= 0.01;
  }
  for (const auto& c : circle_gagliardo_oracles(o.M, 3)) {
    t.rows.push_back({{"oracle", "gagliardo"}, {"M", c.M}, {"k", c.k}, {"exact", c.exact}, {"value", c.value},
                      {"rel_error", c.rel_error}});
    ok = ok && c.rel_error <= 0.02;
  }
  emit(t, o, out);
  return ok ? kExitOk : kExitValidation;
}

int cmd_stability(const Options& o, std::ostream& out) {
  ExperimentConfig cfg = resolve(o);
  if (o.K) cfg.K = {*o.K};
  Table t{"stability", {"K", "N", "dofs", "certificate", "iterations", "converged"}, {}, {}};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : stability_sweep(cfg)) {
    t.rows.push_back({{"K", r.K}, {"N", r.N}, {"dofs", r.dofs}, {"certificate", r.certificate},
                      {"iterations", r.iterations}, {"converged", r.converged}});
    lo = std::min(lo, r.certificate);
    hi = std::max(hi, r.certificate);
  }
  t.summary["spread"] = (hi - lo) / hi;
  emit(t, o, out);
  return lo > 0.0 ? kExitOk : kExitValidation;
}

int cmd_reference(const Options& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o);
  const std::string cache = cfg.cache_dir.empty() ? (fs::path(cfg.out_dir) / "cache").string() : cfg.cache_dir;
  Table t{"reference", {"R_ref", "sites", "newton_iterations", "gradient_norm", "decay_exponent", "from_cache", "wall_time", "file"}, {}, {}};
  std::vector<double> radii{cfg.R_ref};
  if (cfg.contamination_guard) radii.push_back(2.0 * cfg.R_ref);
  for (double R : radii) {
    ReferenceKey key;
    key.beta = cfg.beta;
    key.delta = cfg.delta;
    key.alpha = cfg.alpha;
    key.R_ref = R;
    key.tol = cfg.reference_tol;
    const auto t0 = std::chrono::steady_clock::now();
    bool hit = false;
    const ReferenceSolution ref = cached_reference(key, cache, &hit);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    t.rows.push_back({{"R_ref", R},
                      {"sites", ref.domain.size()},
                      {"newton_iterations", ref.newton_iterations},
                      {"gradient_norm", ref.gradient_norm},
                      {"decay_exponent", fit_decay(ref, R / 8.0, R / 2.0).exponent},
                      {"from_cache", hit},
                      {"wall_time", wall},
                      {"file", (fs::path(cache) / (key.file_stem() + ".bin")).string()}});
  }
  emit(t, o, out);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Atomistic/continuum/boundary-element coupling for anti-plane point defects", "acbem"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config file, or 'default' for the built-in one");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "RNG seed for randomised checks");
    sub->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--plot", o.plot, "Write a static SVG plot (study)");
  };
  auto* solve = app.add_subcommand("solve", "Solve the coupled problem for one (K, N)");
  auto* study = app.add_subcommand("study", "Convergence sweep over the configured K list");
  auto* patch = app.add_subcommand("patch-test", "Ghost-force patch test at random homogeneous strains");
  auto* bem = app.add_subcommand("bem-oracles", "Circle Fourier checks of the boundary operators");
  auto* stab = app.add_subcommand("stability", "Stability certificates of the total Hessian");
  auto* ref = app.add_subcommand("reference", "Build and cache the atomistic reference solution");
  for (auto* s : {solve, study, patch, bem, stab, ref}) common(s);
  for (auto* s : {solve, patch, stab}) s->add_option("--K", o.K, "Atomistic radius parameter K");
  for (auto* s : {solve, patch}) s->add_option("--N", o.N, "Computational domain parameter N");
  bem->add_option("--M", o.M, "Number of panels on the circle");
  patch->add_option("--count", o.count, "Number of random deformations")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (solve->parsed()) return cmd_solve(o, out);
    if (study->parsed()) return cmd_study(o, out);
    if (patch->parsed()) return cmd_patch(o, out);
    if (bem->parsed()) return cmd_bem(o, out);
    if (stab->parsed()) return cmd_stability(o, out);
    if (ref->parsed()) return cmd_reference(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const MeshError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitValidation;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args, out, err);
}

}  // namespace acbem::cli
