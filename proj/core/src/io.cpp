#include "acbem/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "acbem/error.hpp"
#include "acbem/total.hpp"

namespace acbem {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

const char* clamp_name(FarFieldClamp c) { return c == FarFieldClamp::Zero ? "zero" : "dipole"; }

}  // namespace

nlohmann::json ReferenceKey::to_json() const {
  return {{"beta", beta}, {"delta", delta}, {"alpha", alpha}, {"R_ref", R_ref}, {"tol", tol},
          {"clamp", clamp_name(clamp)}};
}

std::string ReferenceKey::file_stem() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ref-%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

void write_reference(std::ostream& os, const ReferenceKey& key, const ReferenceSolution& ref) {
  nlohmann::json header = {
      {"format_version", 1},
      {"kind", "acbem-reference"},
      {"key", key.to_json()},
      {"sites", ref.domain.size()},
      {"mu", ref.mu},
      {"dipole", {ref.dipole.x(), ref.dipole.y()}},
      {"newton_iterations", ref.newton_iterations},
      {"gradient_norm", ref.gradient_norm},
  };
  os << header.dump() << '\n';
  os.write(reinterpret_cast<const char*>(ref.u.data()), static_cast<std::streamsize>(sizeof(double) * ref.u.size()));
  if (!os) throw Error("write_reference: write failed");
}

void write_reference(const std::string& path, const ReferenceKey& key, const ReferenceSolution& ref) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_reference: cannot open '" + path + "'");
  write_reference(os, key, ref);
}

ReferenceSolution read_reference(std::istream& is, const ReferenceKey& key) {
  std::string line;
  if (!std::getline(is, line)) throw Error("read_reference: missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("read_reference: bad header: ") + e.what());
  }
  if (header.value("format_version", 0) != 1 || header.value("kind", "") != "acbem-reference")
    throw Error("read_reference: unsupported format");
  if (header.at("key") != key.to_json()) throw Error("read_reference: cached key does not match request");

  ReferenceSolution ref;
  ref.R_ref = key.R_ref;
  ref.clamp = key.clamp;
  ref.mu = header.at("mu").get<double>();
  ref.dipole = Vec2(header.at("dipole")[0].get<double>(), header.at("dipole")[1].get<double>());
  ref.newton_iterations = header.at("newton_iterations").get<int>();
  ref.gradient_norm = header.at("gradient_norm").get<double>();
  ref.domain = generate_sites(key.R_ref + 2.0);
  if (header.at("sites").get<std::size_t>() != ref.domain.size())
    throw Error("read_reference: site count does not match the domain");
  ref.u.resize(static_cast<Eigen::Index>(ref.domain.size()));
  is.read(reinterpret_cast<char*>(ref.u.data()), static_cast<std::streamsize>(sizeof(double) * ref.u.size()));
  if (!is) throw Error("read_reference: truncated payload");
  const double r_free2 = key.R_ref * key.R_ref * (1.0 + 1e-12);
  ref.free.resize(ref.domain.size());
  for (std::size_t k = 0; k < ref.domain.size(); ++k) ref.free[k] = position(ref.domain[k]).squaredNorm() <= r_free2;
  return ref;
}

ReferenceSolution read_reference(const std::string& path, const ReferenceKey& key) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_reference: cannot open '" + path + "'");
  return read_reference(is, key);
}

ReferenceSolution cached_reference(const ReferenceKey& key, const std::string& cache_dir, bool* from_cache) {
  namespace fs = std::filesystem;
  const fs::path path = cache_dir.empty() ? fs::path() : fs::path(cache_dir) / (key.file_stem() + ".bin");
  if (!cache_dir.empty() && fs::exists(path)) {
    try {
      ReferenceSolution ref = read_reference(path.string(), key);
      if (from_cache) *from_cache = true;
      return ref;
    } catch (const Error&) {
      // Stale or damaged entry: fall through and rebuild it.
    }
  }
  ReferenceOptions opts;
  opts.R_ref = key.R_ref;
  opts.tol = key.tol;
  opts.clamp = key.clamp;
  ReferenceSolution ref = solve_reference(default_potential(key.beta, key.delta), default_defect(key.alpha), opts);
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    const fs::path tmp = path.string() + ".tmp";
    write_reference(tmp.string(), key, ref);
    fs::rename(tmp, path);
  }
  if (from_cache) *from_cache = false;
  return ref;
}

void write_solution(const std::string& path, const TotalProblem& prob, const SolveResult& res) {
  write_mesh(path, prob.mesh(), &res.u);
}

}  // namespace acbem
