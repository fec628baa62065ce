#pragma once

// Error norms, convergence studies, oracle sweeps and report writers.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "acbem/bem.hpp"
#include "acbem/config.hpp"
#include "acbem/coupling.hpp"
#include "acbem/io.hpp"
#include "acbem/mesh.hpp"

namespace acbem {

inline constexpr int kReportFormatVersion = 1;

struct ErrorParts {
  double gradient = 0.0;  ///< ‖∇e‖_{L²(Ω_h)}
  double boundary = 0.0;  ///< rescaled H^{1/2} norm of the trace of e
  double total = 0.0;     ///< (gradient² + boundary²)^{1/2}
};

/// ‖u_h − Πu_ref‖_E. Both fields are star-projected with the same gauge
/// before differencing, so the boundary part measures the trace in H^{1/2}_*.
/// Throws GaugeError when the gauge functional is not normalised (⟨1, w_eq⟩ ≠ 1).
ErrorParts energy_norm_error(const Eigen::VectorXd& u_h, const Eigen::VectorXd& u_ref, const FemMesh& mesh,
                             const BemOperators& ops);

/// Reference values at the mesh nodes (far-field predictor beyond the stored domain).
Eigen::VectorXd sample_reference(const ReferenceSolution& ref, const FemMesh& mesh);

struct ErrorRecord {
  double K = 0.0;
  double N = 0.0;
  std::size_t dofs = 0;
  double error = 0.0;
  double gradient_part = 0.0;
  double boundary_part = 0.0;
  double wall_time = 0.0;
  int newton_iterations = 0;
};

struct StudyRow {
  ErrorRecord record;
  bool ok = true;
  std::string message;
  /// Error against the doubled reference (NaN when not computed).
  double guard_error = std::numeric_limits<double>::quiet_NaN();
};

struct SlopeFit {
  bool available = false;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< RMS residual of log error
  std::size_t points = 0;
};

/// Least-squares slope of log y against log x; not available below two points.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct StudyResult {
  ExperimentConfig config;
  std::vector<StudyRow> rows;
  SlopeFit fit;
  bool guard_checked = false;
  bool contaminated = false;
  double guard_max_difference = 0.0;
  double guard_threshold = 0.0;
  double reference_time = 0.0;
};

using ReferenceProvider = std::function<ReferenceSolution(const ReferenceKey&)>;

/// Solve and measure every K of the config. Solver errors abort a row, not the study.
/// Without a provider, references come from cached_reference(config.cache_dir).
StudyResult convergence_study(const ExperimentConfig& cfg, const ReferenceProvider& provider = {});

/// Fixed column order, no timings (identical config gives identical bytes).
void write_study_csv(std::ostream& os, const StudyResult& res);
nlohmann::json study_json(const StudyResult& res);
/// Static log-log plot of error against K with a K^{-5/2} guide line.
void write_study_svg(std::ostream& os, const StudyResult& res);

struct PatchSample {
  Vec2 F;
  double energy_residual = 0.0;
  double force_residual = 0.0;
};

/// Patch test at `count` deformations drawn uniformly from |F| ≤ radius.
std::vector<PatchSample> patch_test_sweep(const AcEnergy& e, std::size_t count, std::uint64_t seed,
                                          double radius = 0.3);

/// L²(Γ) projection of f onto P1 traces.
Eigen::VectorXd l2_projection(const std::function<double(const Vec2&)>& f, const BoundaryMesh& bm);

struct CircleOracle {
  int M = 0;
  int k = 0;
  double exact = 0.0;
  double value = 0.0;         ///< from L²-projected data
  double rel_error = 0.0;
  double value_interp = 0.0;  ///< from nodal interpolation of the data
  double rel_error_interp = 0.0;
};

/// ⟨g_h^{-1} cos kθ, cos kθ⟩ on the regular M-gon in the unit circle against πk.
std::vector<CircleOracle> circle_steklov_oracles(int M, int k_max = 4);
/// Gagliardo seminorm of cos kθ on the regular M-gon against 2π²k.
std::vector<CircleOracle> circle_gagliardo_oracles(int M, int k_max = 3);

struct StabilityRow {
  double K = 0.0;
  double N = 0.0;
  std::size_t dofs = 0;
  double certificate = 0.0;
  int iterations = 0;
  bool converged = false;
};

std::vector<StabilityRow> stability_sweep(const ExperimentConfig& cfg);

}  // namespace acbem
