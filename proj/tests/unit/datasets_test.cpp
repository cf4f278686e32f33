#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mmpoison/datasets.hpp"
#include "mmpoison/error.hpp"
#include "mmpoison/image_io.hpp"
#include "mmpoison/pipeline.hpp"
#include "test_support.hpp"

using namespace mmpoison;
using mmpoison::testing::benchmark;
using mmpoison::testing::random_image;
using mmpoison::testing::scratch_dir;
using mmpoison::testing::toy_encoder;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Three WebQA-style questions over four contexts (one distractor), PPM images.
fs::path small_dataset(const std::string& name) {
  const auto dir = scratch_dir(name);
  fs::create_directories(dir / "img");
  for (int i = 0; i < 4; ++i) {
    write_file_bytes(dir / "img" / ("c" + std::to_string(i) + ".ppm"),
                     encode_netpbm(random_image(static_cast<std::uint64_t>(i), 6, 5, 3)));
  }
  write_text(dir / "contexts.jsonl",
             "{\"id\": \"c0\", \"caption\": \"a red barn\", \"image\": \"img/c0.ppm\"}\n"
             "{\"id\": \"c1\", \"caption\": \"a tall tower\", \"image\": \"img/c1.ppm\"}\n"
             "\n"
             "{\"id\": \"c2\", \"caption\": \"a blue lake\", \"image\": \"img/c2.ppm\"}\n"
             "{\"id\": \"c3\", \"caption\": \"unrelated\", \"image\": \"img/c3.ppm\"}\n");
  write_text(dir / "questions.jsonl",
             "{\"id\": \"q1\", \"question\": \"What colour is the barn?\", \"answer\": \"red\", "
             "\"context_ids\": [\"c0\"]}\n"
             "{\"id\": \"q2\", \"question\": \"Which is taller?\", \"answer\": \"the tower\", "
             "\"context_ids\": [\"c1\", \"c2\"], \"entities\": [\"tower\"]}\n"
             "{\"id\": \"q3\", \"question\": \"What colour is the lake?\", \"answer\": \"blue\", "
             "\"context_ids\": [\"c2\"]}\n");
  return dir;
}

}  // namespace

TEST(Ingest, ReadsQuestionsContextsAndImages) {
  const auto dir = small_dataset("ingest_ok");
  const auto m = ingest(dir, DatasetSchema::kWebqaLike);
  EXPECT_EQ(m.contexts_m, 2);
  ASSERT_EQ(m.queries.size(), 3u);
  EXPECT_EQ(m.queries[1].gold_context_ids, (std::vector<std::string>{"c1", "c2"}));
  EXPECT_EQ(m.queries[1].entities(), std::vector<std::string>{"tower"});
  EXPECT_EQ(m.queries[0].entities(), std::vector<std::string>{"red"});
  EXPECT_EQ(m.kb.size(), 4u);
  EXPECT_EQ(m.distractor_count(), 1u);
  EXPECT_EQ(m.kb.get("c1").caption, "a tall tower");
  EXPECT_EQ(m.kb.get("c3").image, decode_netpbm(encode_netpbm(random_image(3, 6, 5, 3))));
}

TEST(Ingest, SchemaAndReferenceErrors) {
  const auto dir = small_dataset("ingest_schema");
  EXPECT_THROW((void)ingest(dir, DatasetSchema::kMmqaLike), SchemaError);

  write_text(dir / "questions.jsonl",
             "{\"id\": \"q1\", \"question\": \"?\", \"answer\": \"x\", \"context_ids\": [\"nope\"]}\n");
  EXPECT_THROW((void)ingest(dir, DatasetSchema::kWebqaLike), DataError);

  write_text(dir / "questions.jsonl", "{\"id\": \"q1\", \"question\": \"?\"}\n");
  EXPECT_THROW((void)ingest(dir, DatasetSchema::kWebqaLike), FormatError);

  const auto dir2 = small_dataset("ingest_image");
  fs::remove(dir2 / "img" / "c2.ppm");
  EXPECT_THROW((void)ingest(dir2, DatasetSchema::kWebqaLike), DataError);

  EXPECT_THROW((void)ingest(scratch_dir("ingest_empty"), DatasetSchema::kWebqaLike),
               MissingFileError);
}

TEST(Ingest, WriteThenIngestIsLossless) {
  const auto& m = benchmark();
  const auto dir = scratch_dir("roundtrip");
  write_dataset(m, dir);
  const auto back = ingest(dir, m.schema);
  EXPECT_EQ(back.queries, m.queries);
  EXPECT_EQ(back.kb, m.kb);
  EXPECT_EQ(back.contexts_m, m.contexts_m);
}

TEST(Synth, DeterministicPerSeed) {
  auto enc = toy_encoder();
  SynthConfig cfg;
  cfg.num_queries = 4;
  cfg.kb_size = 6;
  const auto a = synth_generate(cfg, *enc);
  const auto b = synth_generate(cfg, *enc);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.kb, b.kb);
  cfg.seed = 1;
  const auto c = synth_generate(cfg, *enc);
  EXPECT_NE(a.queries, c.queries);
}

TEST(Synth, GeometryHoldsForTheBenchmark) {
  auto enc = toy_encoder();
  const auto& m = benchmark();
  const SynthConfig cfg;
  ASSERT_EQ(m.queries.size(), 50u);
  ASSERT_EQ(m.kb.size(), 60u);
  EXPECT_EQ(m.distractor_count(), 10u);
  EXPECT_NO_THROW(m.validate());
  std::vector<Embedding> qe;
  for (const auto& q : m.queries) qe.push_back(enc->text_embed(q.question));
  for (const auto& e : m.kb.entries()) {
    const auto ie = enc->image_embed(e.image);
    for (std::size_t j = 0; j < m.queries.size(); ++j) {
      const double c = cosine(ie, qe[j]);
      if (m.queries[j].gold_context_ids.front() == e.entry_id) {
        EXPECT_GE(c, cfg.benign_min_cos);
        EXPECT_LE(c, cfg.benign_max_cos);
      } else {
        EXPECT_LT(c, cfg.benign_min_cos);
      }
    }
  }
}

TEST(Synth, CleanPipelineAnswersEverything) {
  auto enc = toy_encoder();
  const Backends b{enc, std::make_shared<ToyReranker>(enc), std::make_shared<ToyGenerator>(enc)};
  const auto& m = benchmark();
  const PipelineConfig cfg;
  for (const auto& q : m.queries) {
    const auto t = run_pipeline(q, m.kb, cfg, b);
    EXPECT_EQ(t.contexts_used, q.gold_context_ids);
    EXPECT_EQ(t.answer, q.gold_answer);
  }
}

TEST(Synth, ImpossibleGeometryRaises) {
  auto enc = toy_encoder();
  SynthConfig cfg;
  cfg.num_queries = 2;
  cfg.kb_size = 2;
  cfg.benign_min_cos = 0.98;
  cfg.benign_max_cos = 0.99;
  cfg.steer_steps = 1;
  cfg.max_resamples = 3;
  EXPECT_THROW((void)synth_generate(cfg, *enc), GenerationError);
  cfg.kb_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
