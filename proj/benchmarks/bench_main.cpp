#include <benchmark/benchmark.h>

#include <random>

#include "acbem/bem.hpp"
#include "acbem/total.hpp"

using namespace acbem;

namespace {

Eigen::VectorXd noise(Eigen::Index n) {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

void BM_SingleLayer(benchmark::State& st) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_single_layer(bm));
  st.SetComplexityN(st.range(0));
}
BENCHMARK(BM_SingleLayer)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNSquared);

void BM_DoubleLayer(benchmark::State& st) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_double_layer(bm));
}
BENCHMARK(BM_DoubleLayer)->RangeMultiplier(2)->Range(32, 256);

void BM_BemOperators(benchmark::State& st) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(BemOperators(bm).steklov_form().sum());
}
BENCHMARK(BM_BemOperators)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_Gagliardo(benchmark::State& st) {
  const BoundaryMesh bm = BoundaryMesh::regular_polygon(static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(gagliardo_matrix(bm));
}
BENCHMARK(BM_Gagliardo)->RangeMultiplier(2)->Range(32, 128)->Unit(benchmark::kMillisecond);

void BM_BuildMesh(benchmark::State& st) {
  const double K = static_cast<double>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(build_mesh(K, K + 1).node_count());
}
BENCHMARK(BM_BuildMesh)->Arg(4)->Arg(8)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_AcGradient(benchmark::State& st) {
  const double K = static_cast<double>(st.range(0));
  const AcEnergy e(default_potential(0.3, 0.2), std::make_shared<const FemMesh>(build_mesh(K, K + 1)));
  const Eigen::VectorXd u = noise(static_cast<Eigen::Index>(e.dofs()));
  for (auto _ : st) benchmark::DoNotOptimize(e.gradient(u));
  st.counters["dofs"] = static_cast<double>(e.dofs());
}
BENCHMARK(BM_AcGradient)->Arg(4)->Arg(8)->Arg(16);

void BM_AcHessian(benchmark::State& st) {
  const double K = static_cast<double>(st.range(0));
  const AcEnergy e(default_potential(0.3, 0.2), std::make_shared<const FemMesh>(build_mesh(K, K + 1)));
  const Eigen::VectorXd u = noise(static_cast<Eigen::Index>(e.dofs()));
  for (auto _ : st) benchmark::DoNotOptimize(e.hessian(u).nonZeros());
}
BENCHMARK(BM_AcHessian)->Arg(4)->Arg(8)->Arg(16);

void BM_TotalSolve(benchmark::State& st) {
  const double K = static_cast<double>(st.range(0));
  const TotalProblem p(default_potential(0.3, 0.2), std::make_shared<const FemMesh>(build_mesh(K, K + 1)),
                       default_defect(0.1));
  for (auto _ : st) benchmark::DoNotOptimize(minimize_total(p).iterations);
}
BENCHMARK(BM_TotalSolve)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ReferenceNewton(benchmark::State& st) {
  ReferenceOptions o;
  o.R_ref = static_cast<double>(st.range(0));
  const auto v = default_potential(0.3, 0.2);
  for (auto _ : st) benchmark::DoNotOptimize(solve_reference(v, default_defect(0.1), o).newton_iterations);
}
BENCHMARK(BM_ReferenceNewton)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
