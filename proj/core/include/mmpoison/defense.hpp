#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/backends.hpp"
#include "mmpoison/knowledge_base.hpp"
#include "mmpoison/pipeline.hpp"

namespace mmpoison {

enum class ParaphraseSelection {
  kRandom,  // uniform pick, seeded by (seed, question)
  kIndex,   // always the paraphrase at `index`
};

std::string_view to_string(ParaphraseSelection s);
ParaphraseSelection parse_paraphrase_selection(std::string_view s);

/// Query-paraphrasing defense: the retriever sees a paraphrase of the
/// question; the reranker and generator still see the original.
struct DefenseConfig {
  bool enabled = false;
  int num_paraphrases = 5;
  ParaphraseSelection selection = ParaphraseSelection::kRandom;
  int index = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Exactly `num_paraphrases` paraphrases from the caption LLM. Throws
/// DefenseError on malformed output or a wrong count.
std::vector<std::string> paraphrase_query(std::string_view question,
                                          const CaptionLLMAdapter& caption_llm,
                                          const DefenseConfig& config);

struct DefendedRetrieval {
  RetrievalResult result;
  /// The paraphrase used for retrieval; absent when the original was used.
  std::optional<std::string> retrieval_query;
  std::vector<std::string> events;
};

/// Retrieval on one selected paraphrase. With the defense disabled this is
/// plain retrieve(); when paraphrasing fails it falls back to the original
/// question and logs an event (fail open).
DefendedRetrieval defended_retrieve(std::string_view question, const KnowledgeBase& kb,
                                    const EncoderBackend& encoder, int top_n,
                                    const DefenseConfig& config,
                                    const CaptionLLMAdapter* caption_llm,
                                    const KbEmbeddings* embeddings = nullptr,
                                    const RetrievalOptions& options = {});

/// run_pipeline with the defense in front of the retriever.
PipelineTrace run_defended_pipeline(const QueryRecord& query, const KnowledgeBase& kb,
                                    const PipelineConfig& config, const Backends& backends,
                                    const DefenseConfig& defense,
                                    const CaptionLLMAdapter* caption_llm,
                                    const KbEmbeddings* embeddings = nullptr);

}  // namespace mmpoison
