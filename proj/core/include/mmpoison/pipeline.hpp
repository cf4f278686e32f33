#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/backends.hpp"
#include "mmpoison/embedding.hpp"
#include "mmpoison/knowledge_base.hpp"
#include "mmpoison/types.hpp"

namespace mmpoison {

/// Top-N retrieval, best first. Scores are non-increasing; equal scores are
/// ordered by ascending entry id.
struct RetrievalResult {
  std::string query_id;
  std::vector<std::string> ranked_entry_ids;
  std::vector<double> scores;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Top-K after reranking by P("Yes"), same ordering rules as RetrievalResult.
struct RerankResult {
  std::string query_id;
  std::vector<std::string> ranked_entry_ids;
  std::vector<double> yes_probs;

  friend bool operator==(const RerankResult&, const RerankResult&) = default;
};

struct RetrievalOptions {
  /// Ablation: score = mean(cos(image, q), cos(caption, q)). Off by default.
  bool score_captions = false;
};

/// Cached per-entry embeddings of a knowledge base under one encoder.
class KbEmbeddings {
 public:
  static KbEmbeddings build(const KnowledgeBase& kb, const EncoderBackend& encoder,
                            bool with_captions = false);

  [[nodiscard]] std::size_t size() const noexcept { return image_.size(); }
  [[nodiscard]] const Embedding& image(std::size_t i) const { return image_.at(i); }
  [[nodiscard]] bool has_captions() const noexcept { return !caption_.empty(); }
  [[nodiscard]] const Embedding& caption(std::size_t i) const { return caption_.at(i); }

 private:
  std::vector<Embedding> image_;
  std::vector<Embedding> caption_;
};

/// Scores every entry by cos(f_I(image), f_T(question)) and keeps the top N.
/// Throws ConfigError if N < 1 or N > |kb|.
RetrievalResult retrieve(std::string_view question, const KnowledgeBase& kb,
                         const EncoderBackend& encoder, int top_n,
                         const RetrievalOptions& options = {});

/// Same, reusing precomputed entry embeddings (must match `kb` and `encoder`).
RetrievalResult retrieve(std::string_view question, const KnowledgeBase& kb,
                         const KbEmbeddings& embeddings, const EncoderBackend& encoder,
                         int top_n, const RetrievalOptions& options = {});

/// Reranks candidates by yes_prob and keeps the top K. `mode` must not be none.
RerankResult rerank(std::string_view question, std::span<const KnowledgeEntry* const> candidates,
                    const RerankBackend& reranker, int top_k, RerankMode mode);

struct Backends {
  std::shared_ptr<const EncoderBackend> retriever;
  std::shared_ptr<const RerankBackend> reranker;  // may be null when rerank_mode = none
  std::shared_ptr<const GeneratorBackend> generator;

  [[nodiscard]] bool thread_safe() const;
};

/// Full record of one query's trip through the pipeline.
struct PipelineTrace {
  std::string query_id;
  RetrievalResult retrieval;
  std::optional<RerankResult> rerank;
  std::vector<std::string> contexts_used;  // ids fed to the generator, in order
  std::string answer;
  /// Query actually sent to the retriever when it differs from the question.
  std::optional<std::string> retrieval_query;
  std::vector<std::string> events;

  friend bool operator==(const PipelineTrace&, const PipelineTrace&) = default;
};

/// retrieve -> (rerank) -> generate.
PipelineTrace run_pipeline(const QueryRecord& query, const KnowledgeBase& kb,
                           const PipelineConfig& config, const Backends& backends,
                           const KbEmbeddings* embeddings = nullptr);

/// The rerank + generate half, for callers that produced the retrieval
/// themselves (e.g. the paraphrasing defense).
PipelineTrace continue_pipeline(const QueryRecord& query, RetrievalResult retrieval,
                                const KnowledgeBase& kb, const PipelineConfig& config,
                                const Backends& backends);

/// One JSON object per trace (keys sorted, so the bytes are deterministic).
std::string trace_to_json(const PipelineTrace& trace);
PipelineTrace trace_from_json(std::string_view line);

}  // namespace mmpoison
