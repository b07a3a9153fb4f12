// Serial reference vs OpenMP kernels on a synthetic field.

#include <benchmark/benchmark.h>

#include "gevtrend/gof.hpp"
#include "gevtrend/pipeline.hpp"
#include "gevtrend/synth.hpp"

namespace {

using namespace gevtrend;

std::vector<CellSeries> field_cells(int side) {
  SyntheticFieldSpec spec;
  spec.nlon = side;
  spec.nlat = side;
  spec.seed = 11;
  spec.time_slope.assign(spec.cell_count(), 0.0);
  for (std::size_t i = 0; i < spec.cell_count(); i += 5) spec.time_slope[i] = 5.0;
  const auto field = generate_maxima_field(spec, Execution::Serial);
  std::vector<CellSeries> cells;
  for (const auto& s : field.series) {
    CellSeries c;
    c.cell = s.cell;
    c.years = s.years;
    c.maxima = s.maxima;
    for (int y : s.years) c.covariate.push_back(y - spec.first_year + 1);
    cells.push_back(std::move(c));
  }
  return cells;
}

void BM_TestCells(benchmark::State& state, Execution exec) {
  const auto cells = field_cells(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto out = test_cells(cells, Variable::Prod, 4, Covariate::Time, exec);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * cells.size()));
}

void BM_Envelope(benchmark::State& state, Execution exec) {
  const int side = static_cast<int>(state.range(0));
  std::vector<CellId> cells;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) cells.push_back({-100 + i, 35 + j});
  }
  const std::vector<GevParams> params(cells.size(), GevParams(1000.0, 300.0, 0.1));
  const std::vector<std::size_t> sizes(cells.size(), 37);
  const auto nb = nearest_neighbors(cells);
  for (auto _ : state) {
    auto env = simulate_envelope(params, sizes, nb, 20, 3, exec);
    benchmark::DoNotOptimize(env);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_TestCells, serial, Execution::Serial)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TestCells, parallel, Execution::Parallel)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Envelope, serial, Execution::Serial)->Arg(5)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Envelope, parallel, Execution::Parallel)->Arg(5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
