#include "mmpoison/types.hpp"

#include "mmpoison/error.hpp"

namespace mmpoison {

std::string_view to_string(Provenance p) {
  return p == Provenance::kBenign ? "benign" : "poisoned";
}

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kLpaBb: return "lpa_bb";
    case AttackKind::kLpaRt: return "lpa_rt";
    case AttackKind::kGpaRt: return "gpa_rt";
    case AttackKind::kGpaRtRrGen: return "gpa_rtrrgen";
  }
  return "unknown";
}

std::string_view to_string(RerankMode m) {
  switch (m) {
    case RerankMode::kNone: return "none";
    case RerankMode::kImageOnly: return "image_only";
    case RerankMode::kImageCaption: return "image_caption";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "benign") return Provenance::kBenign;
  if (s == "poisoned") return Provenance::kPoisoned;
  throw FormatError("unknown provenance '" + std::string(s) + "'");
}

AttackKind parse_attack_kind(std::string_view s) {
  if (s == "lpa_bb") return AttackKind::kLpaBb;
  if (s == "lpa_rt") return AttackKind::kLpaRt;
  if (s == "gpa_rt") return AttackKind::kGpaRt;
  if (s == "gpa_rtrrgen") return AttackKind::kGpaRtRrGen;
  throw FormatError("unknown attack kind '" + std::string(s) + "'");
}

RerankMode parse_rerank_mode(std::string_view s) {
  if (s == "none") return RerankMode::kNone;
  if (s == "image_only") return RerankMode::kImageOnly;
  if (s == "image_caption") return RerankMode::kImageCaption;
  throw ConfigError("unknown rerank mode '" + std::string(s) + "'");
}

KnowledgeEntry KnowledgeEntry::benign(std::string id, ImageTensor image, std::string caption) {
  return KnowledgeEntry{std::move(id), std::move(image), std::move(caption),
                        Provenance::kBenign, std::nullopt};
}

KnowledgeEntry KnowledgeEntry::poisoned(std::string id, ImageTensor image, std::string caption,
                                        AttackKind kind) {
  return KnowledgeEntry{std::move(id), std::move(image), std::move(caption),
                        Provenance::kPoisoned, kind};
}

void KnowledgeEntry::validate() const {
  if (entry_id.empty()) {
    throw ContractError("knowledge entry id must not be empty");
  }
  if (image.empty()) {
    throw ContractError("knowledge entry '" + entry_id + "' has no image");
  }
  const bool poisoned = provenance == Provenance::kPoisoned;
  if (poisoned != attack_kind.has_value()) {
    throw ContractError("knowledge entry '" + entry_id +
                        "': attack_kind must be present iff provenance is poisoned");
  }
}

void QueryRecord::validate() const {
  if (query_id.empty()) {
    throw ContractError("query id must not be empty");
  }
  if (gold_context_ids.empty()) {
    throw ContractError("query '" + query_id + "' has no gold context");
  }
  if (adversarial_answer && *adversarial_answer == gold_answer) {
    throw ContractError("query '" + query_id + "': adversarial answer equals gold answer");
  }
}

std::vector<std::string> QueryRecord::entities() const {
  if (!gold_entities.empty()) return gold_entities;
  return {gold_answer};
}

void PipelineConfig::validate() const {
  if (top_n < 1 || top_k < 1 || contexts_m < 1) {
    throw ConfigError("pipeline: N, K and m must all be >= 1");
  }
  if (rerank_mode == RerankMode::kNone) {
    if (top_n != contexts_m) {
      throw ConfigError("pipeline: without reranking N must equal m");
    }
  } else if (top_k != contexts_m || top_n < top_k) {
    throw ConfigError("pipeline: with reranking require N >= K == m");
  }
}

}  // namespace mmpoison
