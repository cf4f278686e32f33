#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/backends.hpp"
#include "mmpoison/knowledge_base.hpp"
#include "mmpoison/types.hpp"

namespace mmpoison {

enum class DatasetSchema {
  kMmqaLike,   // exactly one gold context per query
  kWebqaLike,  // one or two gold contexts per query
};

std::string_view to_string(DatasetSchema s);
DatasetSchema parse_dataset_schema(std::string_view s);

struct DatasetManifest {
  std::string name;
  DatasetSchema schema = DatasetSchema::kMmqaLike;
  std::vector<QueryRecord> queries;
  KnowledgeBase kb;
  int contexts_m = 1;  // 1 for MMQA-like, 2 for WebQA-like

  /// Unique query ids, valid records, gold ids resolving in kb, |C_i| per schema.
  /// Throws DataError / SchemaError.
  void validate() const;

  /// kb entries that are nobody's gold context.
  [[nodiscard]] std::size_t distractor_count() const;
};

/// Reads `dir/questions.jsonl` and `dir/contexts.jsonl`.
///
///   questions.jsonl: {"id", "question", "answer", "context_ids": [...],
///                     "entities": [...] (optional)}
///   contexts.jsonl:  {"id", "caption", "image": path relative to dir}
///
/// Images may be .mmpt sidecars or binary PPM/PGM.
DatasetManifest ingest(const std::filesystem::path& dir, DatasetSchema schema);

/// Writes the two JSONL files plus `images/<n>.mmpt`; ingest() of the result
/// reproduces the manifest exactly.
void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir);

/// Desk-scale synthetic benchmark.
struct SynthConfig {
  int num_queries = 50;
  int kb_size = 60;
  std::uint64_t seed = 0;
  /// Gold images satisfy benign_min_cos <= cos(image, own question) <= benign_max_cos
  /// and cos(image, any other question) < benign_min_cos. Distractors stay
  /// below benign_min_cos for every question.
  double benign_max_cos = 0.5;
  double benign_min_cos = 0.35;
  int max_resamples = 10000;
  int tokens_per_question = 3;
  std::uint32_t height = 32;
  std::uint32_t width = 32;
  std::uint32_t channels = 3;
  double steer_step = 0.5;
  int steer_steps = 200;

  void validate() const;
};

/// Generates questions "what is the answer for <t1> <t2> <t3>?" with random
/// tokens, one gold context per query whose caption carries "ANSWER:<token>",
/// and kb_size - num_queries distractors. Images are seeded noise steered
/// toward the query's distinctive embedding direction, then rejection-checked
/// against the geometry. Throws GenerationError when a draw fails
/// max_resamples times.
DatasetManifest synth_generate(const SynthConfig& config, const EncoderBackend& encoder);

}  // namespace mmpoison
