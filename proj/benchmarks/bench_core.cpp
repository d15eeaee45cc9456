#include <benchmark/benchmark.h>

#include "exitrl/config.hpp"
#include "exitrl/curriculum.hpp"
#include "exitrl/diversity.hpp"
#include "exitrl/grpo.hpp"
#include "exitrl/policy.hpp"
#include "exitrl/rollout.hpp"

using namespace exitrl;

namespace {

config::RunConfig bench_config() {
  config::RunConfig cfg;
  cfg.env.kind = sidp::EnvKind::BitstringRepair;
  cfg.env.length = 12;
  cfg.env.corruption_prob = 0.25;
  cfg.env.num_base_tasks = 64;
  cfg.grpo.group_size = 8;
  cfg.harness.master_seed = 17;
  return cfg;
}

curriculum::TaskInstance base_instance(const config::RunConfig& cfg) {
  curriculum::TaskInstance inst;
  inst.id = 1;
  inst.base = cfg.make_base_tasks()[0];
  inst.mode = sidp::IterationMode::Base;
  return inst;
}

}  // namespace

static void BM_PolicySample(benchmark::State& state) {
  auto cfg = bench_config();
  auto featurizer = cfg.make_featurizer();
  policy::ParamVector theta;
  theta.values.assign(featurizer.spec().dim(), 0.1);
  auto obs = sidp::reset(base_instance(cfg).base, {}, sidp::IterationMode::Base, 0,
                         cfg.env_options());
  Rng rng(1);
  for (auto _ : state) {
    auto resp = policy::sample_response(theta, obs, featurizer, rng);
    benchmark::DoNotOptimize(resp);
  }
}
BENCHMARK(BM_PolicySample);

static void BM_RolloutGroup(benchmark::State& state) {
  auto cfg = bench_config();
  cfg.grpo.group_size = static_cast<std::uint32_t>(state.range(0));
  auto featurizer = cfg.make_featurizer();
  policy::ParamVector theta;
  theta.values.assign(featurizer.spec().dim(), 0.0);
  auto inst = base_instance(cfg);
  std::uint64_t iter = 0;
  for (auto _ : state) {
    auto set = harness::run_group(inst, theta, featurizer, cfg, ++iter, 0);
    benchmark::DoNotOptimize(set);
  }
}
BENCHMARK(BM_RolloutGroup)->Arg(4)->Arg(8)->Arg(16);

static void BM_SurrogateGrad(benchmark::State& state) {
  auto cfg = bench_config();
  auto featurizer = cfg.make_featurizer();
  policy::ParamVector theta;
  theta.values.assign(featurizer.spec().dim(), 0.05);
  auto inst = base_instance(cfg);
  auto set = harness::run_group(inst, theta, featurizer, cfg, 1, 0);
  auto adv = grpo::compute_group_advantages(set.group);
  for (auto _ : state) {
    auto res = grpo::surrogate_loss_and_grad(set.group, adv, theta, theta, featurizer, 0.2,
                                             0.001);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_SurrogateGrad);

static void BM_BufferInsertSample(benchmark::State& state) {
  curriculum::IdAllocator ids;
  curriculum::TaskBuffer buffer(
      curriculum::BufferConfig{static_cast<std::size_t>(state.range(0)), 4, 0.5, 0.2, 1.0});
  auto cfg = bench_config();
  auto tasks = cfg.make_base_tasks();
  Rng rng(3);
  for (auto _ : state) {
    curriculum::TaskInstance inst;
    inst.id = ids.next();
    inst.base = tasks[rng.uniform_int(tasks.size())];
    buffer.insert(std::move(inst), rng.uniform() * 0.25);
    if (buffer.size() > 4) benchmark::DoNotOptimize(buffer.sample(rng));
  }
}
BENCHMARK(BM_BufferInsertSample)->Arg(128)->Arg(1024);

static void BM_DiversityScores(benchmark::State& state) {
  Rng rng(5);
  std::vector<std::vector<double>> embeddings(8, std::vector<double>(12));
  for (auto& e : embeddings)
    for (auto& v : e) v = rng.uniform();
  for (auto _ : state) {
    auto d = diversity::diversity_scores(embeddings);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_DiversityScores);

BENCHMARK_MAIN();
