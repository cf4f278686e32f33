#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/image.hpp"

namespace mmpoison {

enum class Provenance { kBenign, kPoisoned };

enum class AttackKind { kLpaBb, kLpaRt, kGpaRt, kGpaRtRrGen };

enum class RerankMode { kNone, kImageOnly, kImageCaption };

std::string_view to_string(Provenance p);
std::string_view to_string(AttackKind k);
std::string_view to_string(RerankMode m);

Provenance parse_provenance(std::string_view s);
AttackKind parse_attack_kind(std::string_view s);
RerankMode parse_rerank_mode(std::string_view s);

/// One image-caption pair of the knowledge base.
struct KnowledgeEntry {
  std::string entry_id;
  ImageTensor image;
  std::string caption;
  Provenance provenance = Provenance::kBenign;
  std::optional<AttackKind> attack_kind;  // present iff poisoned

  static KnowledgeEntry benign(std::string id, ImageTensor image, std::string caption);
  static KnowledgeEntry poisoned(std::string id, ImageTensor image, std::string caption,
                                 AttackKind kind);

  /// Throws ContractError when provenance and attack_kind disagree.
  void validate() const;

  friend bool operator==(const KnowledgeEntry&, const KnowledgeEntry&) = default;
};

/// A QA item: question, gold answer and the ids of its gold contexts.
struct QueryRecord {
  std::string query_id;
  std::string question;
  std::string gold_answer;
  std::vector<std::string> gold_context_ids;
  /// Key entities for WebQA-style scoring; empty means {gold_answer}.
  std::vector<std::string> gold_entities;
  std::optional<std::string> adversarial_answer;
  std::vector<std::string> adversarial_entry_ids;

  /// Checks the record-local invariants (non-empty C_i, A_adv != A).
  void validate() const;

  [[nodiscard]] std::vector<std::string> entities() const;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

/// Retrieval / rerank / generation knobs: N, K, m and the rerank mode.
struct PipelineConfig {
  int top_n = 1;
  int top_k = 1;
  int contexts_m = 1;
  RerankMode rerank_mode = RerankMode::kNone;
  /// Ablation: retrieval score = mean(image cos, caption cos) instead of image cos.
  bool score_captions = false;

  /// none => N == m; otherwise N >= K == m. Throws ConfigError.
  void validate() const;

  /// The reranker prompt; real backends must send it verbatim.
  std::string rerank_prompt =
      "Based on the image and its caption, is the image relevant to the question? "
      "Answer 'Yes' or 'No'.";
};

}  // namespace mmpoison
