#include "acbem/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "acbem/error.hpp"
#include "acbem/total.hpp"

namespace acbem {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

ReferenceKey key_for(const ExperimentConfig& cfg, double R_ref) {
  ReferenceKey k;
  k.beta = cfg.beta;
  k.delta = cfg.delta;
  k.alpha = cfg.alpha;
  k.R_ref = R_ref;
  k.tol = cfg.reference_tol;
  return k;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ErrorParts energy_norm_error(const Eigen::VectorXd& u_h, const Eigen::VectorXd& u_ref, const FemMesh& mesh,
                             const BemOperators& ops) {
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  if (u_h.size() != n || u_ref.size() != n) throw DomainError("energy_norm_error: field size does not match mesh");
  const Eigen::VectorXd& c = ops.gauge();
  if (std::abs(c.sum() - 1.0) > kGaugeTolerance)
    throw GaugeError("energy_norm_error: gauge functional is not normalised");
  const auto& bd = mesh.boundary();
  auto gauge_of = [&](const Eigen::VectorXd& u) {
    double g = 0.0;
    for (std::size_t b = 0; b < bd.size(); ++b) g += c[static_cast<Eigen::Index>(b)] * u[bd[b]];
    return g;
  };
  const Eigen::VectorXd e = (u_h.array() - gauge_of(u_h)) - (u_ref.array() - gauge_of(u_ref));

  ErrorParts p;
  p.gradient = std::sqrt(std::max(0.0, e.dot(fem_stiffness(mesh) * e)));
  Eigen::VectorXd tr(static_cast<Eigen::Index>(bd.size()));
  for (std::size_t b = 0; b < bd.size(); ++b) tr[static_cast<Eigen::Index>(b)] = e[bd[b]];
  p.boundary = fractional_half_norm(tr, ops.mesh());
  p.total = std::hypot(p.gradient, p.boundary);
  return p;
}

Eigen::VectorXd sample_reference(const ReferenceSolution& ref, const FemMesh& mesh) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(mesh.node_count()));
  for (std::size_t k = 0; k < mesh.node_count(); ++k) u[static_cast<Eigen::Index>(k)] = ref.value_at(mesh.nodes()[k]);
  return u;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit f;
  f.points = std::min(x.size(), y.size());
  if (f.points < 2) return f;
  const auto m = static_cast<Eigen::Index>(f.points);
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    A(i, 0) = std::log(x[static_cast<std::size_t>(i)]);
    A(i, 1) = 1.0;
    b[i] = std::log(y[static_cast<std::size_t>(i)]);
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  f.available = true;
  f.slope = c[0];
  f.intercept = c[1];
  f.residual = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(m));
  return f;
}

StudyResult convergence_study(const ExperimentConfig& cfg, const ReferenceProvider& provider) {
  validate(cfg);
  StudyResult res;
  res.config = cfg;
  const ReferenceProvider get = provider ? provider : ReferenceProvider([&cfg](const ReferenceKey& k) {
    return cached_reference(k, cfg.cache_dir);
  });

  auto t0 = std::chrono::steady_clock::now();
  const ReferenceSolution ref = get(key_for(cfg, cfg.R_ref));
  ReferenceSolution guard;
  if (cfg.contamination_guard) guard = get(key_for(cfg, 2.0 * cfg.R_ref));
  res.reference_time = seconds_since(t0);

  const auto v = default_potential(cfg.beta, cfg.delta);
  SolverOptions opts;
  opts.tol = cfg.solver_tol;
  opts.max_iterations = cfg.max_iterations;

  for (double K : cfg.K) {
    StudyRow row;
    row.record.K = K;
    row.record.N = cfg.N_for(K);
    const auto ts = std::chrono::steady_clock::now();
    try {
      auto mesh = std::make_shared<const FemMesh>(build_mesh(K, row.record.N));
      const TotalProblem prob(v, mesh, default_defect(cfg.alpha));
      const SolveResult sol = minimize_total(prob, opts);
      const ErrorParts e = energy_norm_error(sol.u, sample_reference(ref, *mesh), *mesh, prob.bem());
      row.record.dofs = prob.dofs();
      row.record.error = e.total;
      row.record.gradient_part = e.gradient;
      row.record.boundary_part = e.boundary;
      row.record.newton_iterations = sol.iterations;
      if (cfg.contamination_guard)
        row.guard_error = energy_norm_error(sol.u, sample_reference(guard, *mesh), *mesh, prob.bem()).total;
    } catch (const Error& ex) {
      row.ok = false;
      row.message = ex.what();
    }
    row.record.wall_time = seconds_since(ts);
    res.rows.push_back(std::move(row));
  }

  std::vector<double> ks, es;
  double smallest = std::numeric_limits<double>::infinity();
  for (const StudyRow& r : res.rows) {
    if (!r.ok) continue;
    ks.push_back(r.record.K);
    es.push_back(r.record.error);
    smallest = std::min(smallest, r.record.error);
  }
  res.fit = fit_loglog(ks, es);
  if (cfg.contamination_guard && !es.empty()) {
    res.guard_checked = true;
    res.guard_threshold = 0.2 * smallest;
    for (const StudyRow& r : res.rows)
      if (r.ok) res.guard_max_difference = std::max(res.guard_max_difference, std::abs(r.record.error - r.guard_error));
    res.contaminated = !(res.guard_max_difference < res.guard_threshold);
  }
  return res;
}

void write_study_csv(std::ostream& os, const StudyResult& res) {
  os << "format_version,K,N,dofs,error,gradient_part,boundary_part,newton_iterations,guard_error,status,message\n";
  for (const StudyRow& r : res.rows) {
    const ErrorRecord& e = r.record;
    os << kReportFormatVersion << ',' << num(e.K) << ',' << num(e.N) << ',' << e.dofs << ',' << num(e.error) << ','
       << num(e.gradient_part) << ',' << num(e.boundary_part) << ',' << e.newton_iterations << ','
       << (std::isnan(r.guard_error) ? std::string() : num(r.guard_error)) << ',' << (r.ok ? "ok" : "failed") << ','
       << csv_field(r.message) << '\n';
  }
}

nlohmann::json study_json(const StudyResult& res) {
  nlohmann::json rows = nlohmann::json::array();
  for (const StudyRow& r : res.rows) {
    const ErrorRecord& e = r.record;
    nlohmann::json j = {{"K", e.K},
                        {"N", e.N},
                        {"dofs", e.dofs},
                        {"error", e.error},
                        {"gradient_part", e.gradient_part},
                        {"boundary_part", e.boundary_part},
                        {"wall_time", e.wall_time},
                        {"newton_iterations", e.newton_iterations},
                        {"status", r.ok ? "ok" : "failed"}};
    if (!std::isnan(r.guard_error)) j["guard_error"] = r.guard_error;
    if (!r.ok) j["message"] = r.message;
    rows.push_back(std::move(j));
  }
  nlohmann::json fit = nullptr;
  if (res.fit.available)
    fit = {{"slope", res.fit.slope}, {"intercept", res.fit.intercept}, {"residual", res.fit.residual},
           {"points", res.fit.points}};
  return {{"format_version", kReportFormatVersion},
          {"kind", "acbem-study"},
          {"config", to_json(res.config)},
          {"rows", rows},
          {"fit", fit},
          {"guard",
           {{"checked", res.guard_checked},
            {"contaminated", res.contaminated},
            {"max_difference", res.guard_max_difference},
            {"threshold", res.guard_threshold}}},
          {"reference_time", res.reference_time}};
}

void write_study_svg(std::ostream& os, const StudyResult& res) {
  constexpr double W = 480, H = 360, L = 70, R = 20, T = 30, B = 50;
  std::vector<std::pair<double, double>> pts;
  for (const StudyRow& r : res.rows)
    if (r.ok && r.record.error > 0.0) pts.emplace_back(std::log10(r.record.K), std::log10(r.record.error));

  double x0 = 0.0, x1 = 1.0, y0 = -6.0, y1 = -3.0;
  if (!pts.empty()) {
    x0 = x1 = pts.front().first;
    y0 = y1 = pts.front().second;
    for (auto [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  x0 = std::floor(x0 * 10.0 - 1.0) / 10.0;
  x1 = std::ceil(x1 * 10.0 + 1.0) / 10.0;
  y0 = std::floor(y0 - 0.25);
  y1 = std::ceil(y1 + 0.25);
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" data-format-version=\"" << kReportFormatVersion << "\">\n";
  os << "<!-- format_version: " << kReportFormatVersion << " -->\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    os << "<line x1=\"" << L << "\" y1=\"" << sy(e) << "\" x2=\"" << W - R << "\" y2=\"" << sy(e)
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << sy(e) + 4 << "\" font-size=\"12\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (const StudyRow& r : res.rows) {
    if (!r.ok) continue;
    const double x = sx(std::log10(r.record.K));
    os << "<text x=\"" << x << "\" y=\"" << H - B + 18 << "\" font-size=\"12\" text-anchor=\"middle\">"
       << r.record.K << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"13\" text-anchor=\"middle\">K</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + H - B) / 2 << ")\">energy-norm error</text>\n";
  if (!pts.empty()) {
    const auto [gx, gy] = pts.front();
    const double ex = x1 - 0.05;
    os << "<line x1=\"" << sx(gx) << "\" y1=\"" << sy(gy) << "\" x2=\"" << sx(ex) << "\" y2=\""
       << sy(gy - 2.5 * (ex - gx)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    os << "<text x=\"" << sx(ex) - 4 << "\" y=\"" << sy(gy - 2.5 * (ex - gx)) - 6
       << "\" font-size=\"11\" text-anchor=\"end\" fill=\"gray\">K^-2.5</text>\n";
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) os << sx(x) << ',' << sy(y) << ' ';
    os << "\"/>\n";
    for (auto [x, y] : pts) os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
  }
  if (res.fit.available) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "slope %.3f", res.fit.slope);
    os << "<text x=\"" << W - R - 8 << "\" y=\"" << T + 18 << "\" font-size=\"13\" text-anchor=\"end\">" << buf
       << "</text>\n";
  }
  os << "</svg>\n";
}

std::vector<PatchSample> patch_test_sweep(const AcEnergy& e, std::size_t count, std::uint64_t seed, double radius) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PatchSample> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double r = radius * std::sqrt(unit(rng));
    const double th = 2.0 * std::numbers::pi * unit(rng);
    PatchSample s;
    s.F = Vec2(r * std::cos(th), r * std::sin(th));
    const PatchTestResult p = patch_test(s.F, e);
    s.energy_residual = p.energy_residual;
    s.force_residual = p.force_residual;
    out.push_back(s);
  }
  return out;
}

Eigen::VectorXd l2_projection(const std::function<double(const Vec2&)>& f, const BoundaryMesh& bm) {
  static constexpr double gx[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
  static constexpr double gw[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};
  const auto P = static_cast<Eigen::Index>(bm.size());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(P);
  for (Eigen::Index k = 0; k < P; ++k) {
    const Panel& p = bm.panel(static_cast<std::size_t>(k));
    for (int q = 0; q < 4; ++q) {
      const double fv = f(p.a + gx[q] * (p.b - p.a)) * gw[q] * p.length;
      b[k] += (1.0 - gx[q]) * fv;
      b[(k + 1) % P] += gx[q] * fv;
    }
  }
  return boundary_l2_mass(bm).ldlt().solve(b);
}

std::vector<CircleOracle> circle_steklov_oracles(int M, int k_max) {
  const BemOperators ops(BoundaryMesh::regular_polygon(M));
  const BoundaryMesh& bm = ops.mesh();
  std::vector<CircleOracle> out;
  for (int k = 1; k <= k_max; ++k) {
    CircleOracle o;
    o.M = M;
    o.k = k;
    o.exact = std::numbers::pi * k;
    const Eigen::VectorXd up = l2_projection([k](const Vec2& x) { return std::cos(k * std::atan2(x.y(), x.x())); }, bm);
    Eigen::VectorXd ui(M);
    for (int i = 0; i < M; ++i) ui[i] = std::cos(k * 2.0 * std::numbers::pi * i / M);
    o.value = ops.quadratic_form(up);
    o.rel_error = std::abs(o.value - o.exact) / o.exact;
    o.value_interp = ops.quadratic_form(ui);
    o.rel_error_interp = std::abs(o.value_interp - o.exact) / o.exact;
    out.push_back(o);
  }
  return out;
}

std::vector<CircleOracle> circle_gagliardo_oracles(int M, int k_max) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(M);
  const Eigen::MatrixXd G = gagliardo_matrix(bm);
  std::vector<CircleOracle> out;
  for (int k = 1; k <= k_max; ++k) {
    CircleOracle o;
    o.M = M;
    o.k = k;
    o.exact = 2.0 * std::numbers::pi * std::numbers::pi * k;
    Eigen::VectorXd ui(M);
    for (int i = 0; i < M; ++i) ui[i] = std::cos(k * 2.0 * std::numbers::pi * i / M);
    o.value = o.value_interp = ui.dot(G * ui);
    o.rel_error = o.rel_error_interp = std::abs(o.value - o.exact) / o.exact;
    out.push_back(o);
  }
  return out;
}

std::vector<StabilityRow> stability_sweep(const ExperimentConfig& cfg) {
  const auto v = default_potential(cfg.beta, cfg.delta);
  std::vector<StabilityRow> out;
  for (double K : cfg.K) {
    StabilityRow row;
    row.K = K;
    row.N = cfg.N_for(K);
    auto mesh = std::make_shared<const FemMesh>(build_mesh(K, row.N));
    const TotalProblem prob(v, mesh, default_defect(cfg.alpha));
    const Certificate c = stability_certificate(prob);
    row.dofs = prob.dofs();
    row.certificate = c.value;
    row.iterations = c.iterations;
    row.converged = c.converged;
    out.push_back(row);
  }
  return out;
}

}  // namespace acbem
