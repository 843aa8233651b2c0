// Microbenchmarks on the planted dataset: walk sampling, one training epoch
// and KVar scoring, at a few start-relation sizes.
#include <benchmark/benchmark.h>

#include "relembed/evaluation.hpp"
#include "relembed/kernels.hpp"
#include "relembed/random.hpp"
#include "relembed/selection.hpp"
#include "relembed/synthetic.hpp"
#include "relembed/trainer.hpp"
#include "relembed/walks.hpp"

namespace {

using namespace relembed;

struct Fixture {
  TaskData task;
  std::vector<TargetedWalkScheme> schemes;
  KernelSet kernels;
};

Fixture make_fixture(std::size_t n_start) {
  PlantedParams p;
  p.n_start = n_start;
  Fixture fx{prepare_task(make_planted_dataset(p).db, TaskSpec{"P", "y"}), {}, {}};
  fx.schemes = enumerate_targeted(fx.task.db.schema(), fx.task.relation, 1);
  fx.kernels = KernelSet::defaults(fx.task.db);
  return fx;
}

void BM_SampleDestination(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<std::size_t>(state.range(0)));
  const auto& db = fx.task.db;
  const auto facts = db.facts_of(fx.task.relation);
  Rng rng = make_rng(1, "bench");
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& s = fx.schemes[i % fx.schemes.size()].scheme;
    benchmark::DoNotOptimize(sample_destination(db, facts[i % facts.size()], s, rng));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SampleDestination)->Arg(200)->Arg(2000);

void BM_TrainEpoch(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<std::size_t>(state.range(0)));
  TrainConfig cfg;
  cfg.dim = 16;
  Trainer trainer(fx.task.db, fx.kernels, cfg, init_model(fx.task.db, fx.task.relation, fx.schemes, cfg));
  for (auto _ : state) {
    auto stats = trainer.run_epoch();
    benchmark::DoNotOptimize(stats.epoch);
  }
}
BENCHMARK(BM_TrainEpoch)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ScoreKVar(benchmark::State& state) {
  const auto fx = make_fixture(static_cast<std::size_t>(state.range(0)));
  const std::size_t budget = default_kvar_budget(fx.task.db, fx.task.relation, TrainConfig{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_kvar(fx.task.db, fx.schemes, fx.kernels, budget, 7));
  }
}
BENCHMARK(BM_ScoreKVar)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
