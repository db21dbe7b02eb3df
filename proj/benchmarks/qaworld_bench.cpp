#include <benchmark/benchmark.h>

#include "qaworld/eval.hpp"
#include "qaworld/memnn.hpp"
#include "qaworld/ngram.hpp"
#include "qaworld/splits.hpp"
#include "qaworld/tasks.hpp"

using namespace qaworld;

namespace {

const TaskData& task_data(int task) {
    static std::map<int, TaskData> cache;
    auto it = cache.find(task);
    if (it == cache.end()) it = cache.emplace(task, make_task_data(task, 1000, 200, 7)).first;
    return it->second;
}

void BM_GenerateStory(benchmark::State& state) {
    const int task = static_cast<int>(state.range(0));
    const TaskConfig cfg = TaskConfig::defaults(task);
    Rng rng(1);
    for (auto _ : state) benchmark::DoNotOptimize(generate_story(task, cfg, rng));
}
BENCHMARK(BM_GenerateStory)->Arg(1)->Arg(3)->Arg(5)->Arg(19)->Arg(20);

void BM_EmitParse(benchmark::State& state) {
    SplitData d = make_split(default_split_spec(2, 7));
    const std::string text = emit_babi(d.train);
    for (auto _ : state) benchmark::DoNotOptimize(parse_babi(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_EmitParse)->Unit(benchmark::kMillisecond);

void BM_NgramTrain(benchmark::State& state) {
    const auto& d = task_data(1);
    for (auto _ : state) benchmark::DoNotOptimize(NgramModel::train(d.train, NgramConfig{}));
}
BENCHMARK(BM_NgramTrain)->Unit(benchmark::kMillisecond);

// One training epoch over 1000 examples.
void BM_MemNNEpoch(benchmark::State& state) {
    const int task = static_cast<int>(state.range(0));
    const auto& d = task_data(task);
    MemNNConfig c = MemNNConfig::from_extensions("am,ng,nl");
    c.epochs = 1;
    for (auto _ : state) {
        MemNN m(c);
        m.train(d.train);
        benchmark::DoNotOptimize(m.parameters().match.data());
    }
}
BENCHMARK(BM_MemNNEpoch)->Arg(1)->Arg(3)->Arg(19)->Unit(benchmark::kMillisecond);

void BM_MemNNPredict(benchmark::State& state) {
    const auto& d = task_data(2);
    MemNNConfig c = MemNNConfig::from_extensions("am,ng,nl");
    c.epochs = 5;
    MemNN m(c);
    m.train(d.train);
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(m.predict(d.test[i++ % d.test.size()]));
}
BENCHMARK(BM_MemNNPredict)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
