// Micro-benchmarks for the hot paths: text round-trips, validation, search,
// plan simulation, scoring, and scene naming. Inputs come from the built-in
// procedural generators so the numbers are reproducible anywhere.

#include <benchmark/benchmark.h>

#include <string>

#include "pdgen/dataset.hpp"
#include "pdgen/metrics.hpp"
#include "pdgen/planner.hpp"
#include "pdgen/scene.hpp"
#include "pdgen/validate.hpp"

using namespace pdgen;

namespace {

ProblemCase blocks_case(std::int64_t size) {
  return generate_blocksworld_case(static_cast<std::size_t>(size), 7);
}

ProblemCase hanoi_case(std::int64_t size) {
  return generate_hanoi_case(static_cast<std::size_t>(size), 0);
}

void BM_ParseDomain(benchmark::State& state) {
  const std::string& text = blocksworld_domain_text();
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_domain(text));
  }
}
BENCHMARK(BM_ParseDomain);

void BM_ParseProblem(benchmark::State& state) {
  const std::string text = print_problem(blocks_case(state.range(0)).problem);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_problem(text));
  }
}
BENCHMARK(BM_ParseProblem)->DenseRange(3, 7, 2);

void BM_PrintProblem(benchmark::State& state) {
  const Problem problem = blocks_case(state.range(0)).problem;
  for (auto _ : state) {
    benchmark::DoNotOptimize(print_problem(problem));
  }
}
BENCHMARK(BM_PrintProblem)->DenseRange(3, 7, 2);

void BM_Validate(benchmark::State& state) {
  const Domain domain = blocksworld_domain();
  const Problem problem = blocks_case(7).problem;
  for (auto _ : state) {
    benchmark::DoNotOptimize(validate(domain, problem));
  }
}
BENCHMARK(BM_Validate);

void BM_SolveBlocksGreedy(benchmark::State& state) {
  const Domain domain = blocksworld_domain();
  const Problem problem = blocks_case(state.range(0)).problem;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(domain, problem));
  }
}
BENCHMARK(BM_SolveBlocksGreedy)->DenseRange(3, 7, 1)->Unit(benchmark::kMillisecond);

void BM_SolveBlocksOptimal(benchmark::State& state) {
  const Domain domain = blocksworld_domain();
  const Problem problem = blocks_case(state.range(0)).problem;
  SearchConfig config;
  config.algorithm = Algorithm::AStar;
  config.heuristic = Heuristic::HMax;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(domain, problem, config));
  }
}
BENCHMARK(BM_SolveBlocksOptimal)->DenseRange(3, 5, 1)->Unit(benchmark::kMillisecond);

void BM_SolveHanoiGreedy(benchmark::State& state) {
  const Domain domain = hanoi_domain();
  const Problem problem = hanoi_case(state.range(0)).problem;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(domain, problem));
  }
}
BENCHMARK(BM_SolveHanoiGreedy)->DenseRange(4, 10, 3)->Unit(benchmark::kMillisecond);

void BM_SimulatePlan(benchmark::State& state) {
  const Domain domain = hanoi_domain();
  const Problem problem = hanoi_case(8).problem;
  const Plan plan = solve(domain, problem).plan;
  for (auto _ : state) {
    benchmark::DoNotOptimize(validate_plan(domain, problem, plan));
  }
}
BENCHMARK(BM_SimulatePlan);

void BM_ScoreItem(benchmark::State& state) {
  const Domain domain = blocksworld_domain();
  const std::string text = print_problem(blocks_case(5).problem);
  const EvalItem item{"bench", text, text};
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_item(domain, item));
  }
}
BENCHMARK(BM_ScoreItem)->Unit(benchmark::kMillisecond);

void BM_NameSceneObjects(benchmark::State& state) {
  const SceneAnnotation scene = hanoi_case(10).scene;
  const DomainKnowledge knowledge = hanoi_knowledge();
  for (auto _ : state) {
    benchmark::DoNotOptimize(detections_to_objects(scene.detections, knowledge));
  }
}
BENCHMARK(BM_NameSceneObjects);

void BM_GenerateCase(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_blocksworld_case(6, seed++));
  }
}
BENCHMARK(BM_GenerateCase);

}  // namespace

BENCHMARK_MAIN();
