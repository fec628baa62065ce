#pragma once

// Reference-solution cache and solution snapshots.

#include <iosfwd>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "acbem/atomistic.hpp"
#include "acbem/potential.hpp"

namespace acbem {

class TotalProblem;
struct SolveResult;

/// Identity of a cached reference: potential, defect and solver settings.
struct ReferenceKey {
  double beta = 0.3;
  double delta = 0.2;
  double alpha = 0.1;
  double R_ref = 64.0;
  double tol = 1e-10;
  FarFieldClamp clamp = FarFieldClamp::DipolePredictor;

  nlohmann::json to_json() const;
  /// Stable file stem, e.g. "ref-1a2b3c4d5e6f7081".
  std::string file_stem() const;
  bool operator==(const ReferenceKey&) const = default;
};

/// One JSON header line, then the displacement as little-endian float64 in domain order.
void write_reference(std::ostream& os, const ReferenceKey& key, const ReferenceSolution& ref);
void write_reference(const std::string& path, const ReferenceKey& key, const ReferenceSolution& ref);
/// Throws Error on a malformed file or when the stored key differs from `key`.
ReferenceSolution read_reference(std::istream& is, const ReferenceKey& key);
ReferenceSolution read_reference(const std::string& path, const ReferenceKey& key);

/// Load from `cache_dir` when present, otherwise solve and store. An empty
/// cache_dir always solves. `from_cache` reports which path was taken.
ReferenceSolution cached_reference(const ReferenceKey& key, const std::string& cache_dir,
                                   bool* from_cache = nullptr);

/// Mesh text dump with the solution as a fifth node column.
void write_solution(const std::string& path, const TotalProblem& prob, const SolveResult& res);

}  // namespace acbem
