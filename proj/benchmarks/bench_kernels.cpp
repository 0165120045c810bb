#include "ocpfem/driver.hpp"
#include "ocpfem/fem.hpp"
#include "ocpfem/krylov.hpp"
#include "ocpfem/ocp.hpp"
#include "ocpfem/parallel.hpp"
#include "ocpfem/vector_ops.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

using namespace ocpfem;

namespace {

// Spaces of the uniform 3D hierarchy from a 16^3 Kuhn mesh, cached per level.
std::shared_ptr<const fem::FeSpace> level_space(int level) {
  static std::map<int, std::shared_ptr<const fem::FeSpace>> cache;
  auto& s = cache[level];
  if (!s) {
    driver::StudyConfig c;
    s = std::make_shared<const fem::FeSpace>(
        std::make_shared<const mesh::Mesh>(driver::uniform_level_mesh(c, level)));
  }
  return s;
}

void BM_Spmv(benchmark::State& state) {
  par::ThreadScope threads(static_cast<int>(state.range(1)));
  const auto s = level_space(static_cast<int>(state.range(0)));
  const auto k = fem::assemble_stiffness(*s);
  la::Vector x(k.size(), 1.0), y(k.size());
  for (auto _ : state) {
    k.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * k.nnz()));
  state.counters["rows"] = static_cast<double>(k.size());
}
BENCHMARK(BM_Spmv)->ArgsProduct({{1, 2, 3}, {1, 2, 4}})->Unit(benchmark::kMicrosecond);

void BM_Dot(benchmark::State& state) {
  par::set_strict_deterministic(state.range(1) != 0);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  la::Vector a(n, 1.0), b(n, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(la::dot(a, b));
  par::set_strict_deterministic(false);
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * sizeof(double)));
}
BENCHMARK(BM_Dot)->ArgsProduct({{1 << 16, 1 << 20, 1 << 22}, {0, 1}});

void BM_AssemblePrimal(benchmark::State& state) {
  const auto s = level_space(static_cast<int>(state.range(0)));
  const auto t = fem::BoxTarget::centered(3);
  for (auto _ : state) {
    auto sys = ocp::build_primal_system(s, ocp::Regularization::energy_adapted(), t);
    benchmark::DoNotOptimize(sys.rhs.data());
  }
}
BENCHMARK(BM_AssemblePrimal)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_PcgPrimal(benchmark::State& state) {
  const auto s = level_space(static_cast<int>(state.range(0)));
  const auto sys = ocp::build_primal_system(s, ocp::Regularization::energy_adapted(), fem::BoxTarget::centered(3));
  la::KrylovOptions o;
  std::size_t its = 0;
  for (auto _ : state) {
    const auto out = ocp::solve(sys, {}, o);
    its = out.report.iterations;
    benchmark::DoNotOptimize(out.y.data());
  }
  state.counters["its"] = static_cast<double>(its);
}
BENCHMARK(BM_PcgPrimal)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_SchurApplyEnergy(benchmark::State& state) {
  const auto s = level_space(1);
  const auto sys = ocp::build_schur_operator(s, ocp::Regularization::energy_adapted(), fem::BoxTarget::centered(3));
  la::Vector x(sys.size(), 1.0), y(sys.size());
  for (auto _ : state) {
    sys.op.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_SchurApplyEnergy)->Unit(benchmark::kMillisecond);

void BM_RefineUniform(benchmark::State& state) {
  const auto m = mesh::build_unit_cube_mesh(16, 3);
  for (auto _ : state) {
    auto r = mesh::refine_uniform(m);
    benchmark::DoNotOptimize(r.mesh.num_elements());
  }
}
BENCHMARK(BM_RefineUniform)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
