#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/backends.hpp"
#include "mmpoison/knowledge_base.hpp"
#include "mmpoison/pipeline.hpp"
#include "mmpoison/types.hpp"

namespace mmpoison {

enum class EvalMode {
  kEm,         // exact match after normalisation (MMQA-style)
  kKeyEntity,  // fraction of key entities present (WebQA-style)
};

std::string_view to_string(EvalMode mode);
EvalMode parse_eval_mode(std::string_view s);

/// Open-domain QA normalisation: lowercase, strip punctuation, drop the
/// articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

/// 1 iff the normalised strings are equal.
int eval_em(std::string_view gold, std::string_view generated);

/// Fraction of gold entities that occur in `generated` as case-insensitive
/// whole-word substrings. Throws ContractError on an empty entity list.
double eval_key_entity(std::span<const std::string> gold_entities, std::string_view generated);

/// Eval(A, Â) under `mode`, with `entities` used for key-entity scoring.
double eval_answer(std::span<const std::string> entities, std::string_view generated,
                   EvalMode mode);

struct RecallPair {
  double r_orig = 0.0;
  std::optional<double> r_pois;  // absent when no query has poisoned entries
};

/// Micro-averaged recall of gold (C_i) and poisoned (P_i) ids in the final
/// context sets R_i. Throws DataError for ids missing from `kb`.
RecallPair recall_pair(std::span<const std::vector<std::string>> final_sets,
                       std::span<const QueryRecord> queries, const KnowledgeBase& kb);

struct AccuracyPair {
  double acc_orig = 0.0;
  std::optional<double> acc_pois;
};

/// acc_orig = mean Eval(A_i, Â_i). acc_pois = mean Eval(A_i^adv, Â_i) over
/// queries with an adversarial answer, or, when `gpa_target` is given, the
/// rate of emitting the target string over all queries.
AccuracyPair accuracy_pair(std::span<const QueryRecord> queries,
                           std::span<const std::string> answers, EvalMode mode,
                           const std::optional<std::string>& gpa_target = std::nullopt);

/// Keeps a query iff every answerer, asked without context, fails to reach a
/// full Eval score against the gold answer. Throws ContractError if empty.
std::vector<QueryRecord> filter_queries(std::span<const QueryRecord> queries,
                                        std::span<const GeneratorBackend* const> answerers,
                                        EvalMode mode);

/// One query's row in a report.
struct QueryRow {
  std::string query_id;
  std::vector<std::string> retrieved_ids;  // R_i, in generator order
  std::vector<bool> gold_hits;             // per retrieved id: in C_i
  std::vector<bool> poison_hits;           // per retrieved id: in P_i
  int gold_total = 0;                      // |C_i|
  int poison_total = 0;                    // |P_i|
  std::string answer;
  double eval_orig = 0.0;
  std::optional<double> eval_pois;
  /// Binary variant: 1 iff every key entity is present (equals eval_orig for EM).
  double eval_orig_all = 0.0;

  friend bool operator==(const QueryRow&, const QueryRow&) = default;
};

struct Aggregates {
  double r_orig = 0.0;
  std::optional<double> r_pois;
  double acc_orig = 0.0;
  std::optional<double> acc_pois;
  double acc_orig_all = 0.0;

  friend bool operator==(const Aggregates&, const Aggregates&) = default;
};

struct EvalReport {
  std::string setup;        // row label, e.g. "lpa_rt N=1 K=1"
  EvalMode eval_mode = EvalMode::kEm;
  std::string image_mode = "float";  // "float" or "quantized"
  Aggregates aggregates;
  std::vector<QueryRow> per_query;
  std::map<std::string, std::string> config;  // echo of the experiment settings
  std::vector<std::string> events;

  /// Aggregates recomputed from the rows alone.
  [[nodiscard]] Aggregates recompute() const;
  [[nodiscard]] bool consistent() const;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Builds a report from pipeline traces (R_i = contexts_used).
EvalReport build_report(std::span<const QueryRecord> queries,
                        std::span<const PipelineTrace> traces, const KnowledgeBase& kb,
                        EvalMode mode, const std::optional<std::string>& gpa_target = std::nullopt);

/// Deterministic JSON (sorted keys, round-trip precision).
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);

}  // namespace mmpoison
