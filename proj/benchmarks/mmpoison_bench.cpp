#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mmpoison/attacks.hpp"
#include "mmpoison/pipeline.hpp"
#include "mmpoison/toy_backend.hpp"

namespace {

using namespace mmpoison;

std::shared_ptr<const ToyEncoder> encoder() {
  static const auto enc = std::make_shared<const ToyEncoder>();
  return enc;
}

ImageTensor noise(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> px(32 * 32 * 3);
  for (double& p : px) p = unit(rng);
  return ImageTensor::from_doubles(32, 32, 3, px);
}

KnowledgeBase random_kb(int n) {
  KnowledgeBase kb;
  for (int i = 0; i < n; ++i) {
    kb.insert(KnowledgeEntry::benign("e" + std::to_string(i), noise(static_cast<std::uint64_t>(i)),
                                     "caption " + std::to_string(i)));
  }
  return kb;
}

void BM_TextEmbed(benchmark::State& state) {
  const auto enc = encoder();
  const std::string q = "what is the answer for lorem ipsum dolor?";
  for (auto _ : state) benchmark::DoNotOptimize(enc->text_embed(q));
}
BENCHMARK(BM_TextEmbed);

void BM_ImageEmbed(benchmark::State& state) {
  const auto enc = encoder();
  const auto img = noise(1);
  for (auto _ : state) benchmark::DoNotOptimize(enc->image_embed(img));
}
BENCHMARK(BM_ImageEmbed);

void BM_ImageEmbedVjp(benchmark::State& state) {
  const auto enc = encoder();
  const auto img = noise(2);
  const auto cot = enc->text_embed("a question").values;
  for (auto _ : state) benchmark::DoNotOptimize(enc->image_embed_grad(img, cot));
}
BENCHMARK(BM_ImageEmbedVjp);

void BM_RetrieveCached(benchmark::State& state) {
  const auto enc = encoder();
  const auto kb = random_kb(static_cast<int>(state.range(0)));
  const auto cache = KbEmbeddings::build(kb, *enc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieve("what is the answer for abc?", kb, cache, *enc, 5));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RetrieveCached)->Arg(60)->Arg(1000)->Arg(10000);

void BM_LpaRtStep(benchmark::State& state) {
  const auto enc = encoder();
  QueryRecord q;
  q.query_id = "q";
  q.question = "what is the answer for abc def ghi?";
  AttackArtifact init;
  init.entry = KnowledgeEntry::poisoned("lpa_bb-q", noise(3), "c", AttackKind::kLpaBb);
  LPAConfig cfg;
  cfg.steps = 1;
  for (auto _ : state) benchmark::DoNotOptimize(lpa_rt_optimize(init, q, *enc, cfg));
}
BENCHMARK(BM_LpaRtStep);

void BM_GpaTotalEvaluate(benchmark::State& state) {
  const auto enc = encoder();
  const ToyReranker rr(enc);
  const ToyGenerator gen(enc);
  std::vector<QueryRecord> queries;
  for (int i = 0; i < state.range(0); ++i) {
    QueryRecord q;
    q.query_id = "q" + std::to_string(i);
    q.question = "what is the answer for token" + std::to_string(i) + "?";
    queries.push_back(q);
  }
  const auto kb = random_kb(60);
  GPAConfig cfg;
  cfg.num_entries = 1;
  const GpaTotalObjective objective(queries, kb, GpaBackends{enc.get(), &rr, &gen}, cfg);
  const auto img = noise(4);
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(img));
}
BENCHMARK(BM_GpaTotalEvaluate)->Arg(1)->Arg(50);

}  // namespace
BENCHMARK_MAIN();
