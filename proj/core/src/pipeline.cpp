#include "mmpoison/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "mmpoison/error.hpp"

namespace mmpoison {
using nlohmann::json;

KbEmbeddings KbEmbeddings::build(const KnowledgeBase& kb, const EncoderBackend& encoder,
                                 bool with_captions) {
  KbEmbeddings out;
  out.image_.reserve(kb.size());
  for (const auto& e : kb.entries()) out.image_.push_back(encoder.image_embed(e.image));
  if (with_captions) {
    out.caption_.reserve(kb.size());
    for (const auto& e : kb.entries()) out.caption_.push_back(encoder.text_embed(e.caption));
  }
  return out;
}

namespace {

// Indices of the top `n` scores: descending score, ascending id on ties.
std::vector<std::size_t> top_indices(std::span<const double> scores,
                                     const std::vector<const std::string*>& ids, std::size_t n) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return *ids[a] < *ids[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    better);
  order.resize(n);
  return order;
}

void check_top_n(const KnowledgeBase& kb, int top_n) {
  if (kb.empty()) throw ConfigError("retrieve: knowledge base is empty");
  if (top_n < 1 || static_cast<std::size_t>(top_n) > kb.size()) {
    throw ConfigError("retrieve: N = " + std::to_string(top_n) + " but |kb| = " +
                      std::to_string(kb.size()));
  }
}

}  // namespace

RetrievalResult retrieve(std::string_view question, const KnowledgeBase& kb,
                         const EncoderBackend& encoder, int top_n,
                         const RetrievalOptions& options) {
  check_top_n(kb, top_n);
  const auto embeddings = KbEmbeddings::build(kb, encoder, options.score_captions);
  return retrieve(question, kb, embeddings, encoder, top_n, options);
}

RetrievalResult retrieve(std::string_view question, const KnowledgeBase& kb,
                         const KbEmbeddings& embeddings, const EncoderBackend& encoder,
                         int top_n, const RetrievalOptions& options) {
  check_top_n(kb, top_n);
  if (embeddings.size() != kb.size()) {
    throw ContractError("retrieve: embedding cache does not match the knowledge base");
  }
  if (options.score_captions && !embeddings.has_captions()) {
    throw ContractError("retrieve: caption scoring needs caption embeddings");
  }
  const Embedding q = encoder.text_embed(question);
  std::vector<double> scores(kb.size());
  std::vector<const std::string*> ids(kb.size());
  for (std::size_t i = 0; i < kb.size(); ++i) {
    double s = cosine(embeddings.image(i), q);
    if (options.score_captions) s = 0.5 * (s + cosine(embeddings.caption(i), q));
    scores[i] = s;
    ids[i] = &kb.at(i).entry_id;
  }
  RetrievalResult result;
  for (const std::size_t i : top_indices(scores, ids, static_cast<std::size_t>(top_n))) {
    result.ranked_entry_ids.push_back(*ids[i]);
    result.scores.push_back(scores[i]);
  }
  return result;
}

RerankResult rerank(std::string_view question, std::span<const KnowledgeEntry* const> candidates,
                    const RerankBackend& reranker, int top_k, RerankMode mode) {
  if (mode == RerankMode::kNone) {
    throw ContractError("rerank: mode 'none' means the rerank stage is skipped");
  }
  if (top_k < 1 || static_cast<std::size_t>(top_k) > candidates.size()) {
    throw ContractError("rerank: K = " + std::to_string(top_k) + " with " +
                        std::to_string(candidates.size()) + " candidates");
  }
  std::vector<double> probs(candidates.size());
  std::vector<const std::string*> ids(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    probs[i] = reranker.yes_prob(question, candidates[i]->image, candidates[i]->caption, mode);
    ids[i] = &candidates[i]->entry_id;
  }
  RerankResult result;
  for (const std::size_t i : top_indices(probs, ids, static_cast<std::size_t>(top_k))) {
    result.ranked_entry_ids.push_back(*ids[i]);
    result.yes_probs.push_back(probs[i]);
  }
  return result;
}

bool Backends::thread_safe() const {
  return (!retriever || retriever->thread_safe()) && (!reranker || reranker->thread_safe()) &&
         (!generator || generator->thread_safe());
}

PipelineTrace continue_pipeline(const QueryRecord& query, RetrievalResult retrieval,
                                const KnowledgeBase& kb, const PipelineConfig& config,
                                const Backends& backends) {
  config.validate();
  if (!backends.generator) throw ConfigError("pipeline: no generator backend");
  PipelineTrace trace;
  trace.query_id = query.query_id;
  retrieval.query_id = query.query_id;

  std::vector<const KnowledgeEntry*> contexts;
  if (config.rerank_mode == RerankMode::kNone) {
    for (const auto& id : retrieval.ranked_entry_ids) {
      if (contexts.size() == static_cast<std::size_t>(config.contexts_m)) break;
      contexts.push_back(&kb.get(id));
    }
  } else {
    if (!backends.reranker) throw ConfigError("pipeline: reranking enabled but no reranker");
    std::vector<const KnowledgeEntry*> candidates;
    for (const auto& id : retrieval.ranked_entry_ids) candidates.push_back(&kb.get(id));
    RerankResult rr =
        rerank(query.question, candidates, *backends.reranker, config.top_k, config.rerank_mode);
    rr.query_id = query.query_id;
    for (const auto& id : rr.ranked_entry_ids) contexts.push_back(&kb.get(id));
    trace.rerank = std::move(rr);
  }
  for (const auto* c : contexts) trace.contexts_used.push_back(c->entry_id);
  trace.answer = backends.generator->generate(query.question, contexts);
  trace.retrieval = std::move(retrieval);
  return trace;
}

PipelineTrace run_pipeline(const QueryRecord& query, const KnowledgeBase& kb,
                           const PipelineConfig& config, const Backends& backends,
                           const KbEmbeddings* embeddings) {
  config.validate();
  if (kb.empty()) throw ConfigError("pipeline: knowledge base is empty");
  if (!backends.retriever) throw ConfigError("pipeline: no retriever backend");
  const RetrievalOptions options{config.score_captions};
  RetrievalResult retrieval =
      embeddings ? retrieve(query.question, kb, *embeddings, *backends.retriever, config.top_n,
                            options)
                 : retrieve(query.question, kb, *backends.retriever, config.top_n, options);
  return continue_pipeline(query, std::move(retrieval), kb, config, backends);
}

std::string trace_to_json(const PipelineTrace& trace) {
  json j;
  j["query_id"] = trace.query_id;
  j["ranked_ids"] = trace.retrieval.ranked_entry_ids;
  j["scores"] = trace.retrieval.scores;
  if (trace.rerank) {
    j["rerank_ids"] = trace.rerank->ranked_entry_ids;
    j["yes_probs"] = trace.rerank->yes_probs;
  } else {
    j["rerank_ids"] = nullptr;
    j["yes_probs"] = nullptr;
  }
  j["contexts_used"] = trace.contexts_used;
  j["answer"] = trace.answer;
  j["retrieval_query"] = trace.retrieval_query ? json(*trace.retrieval_query) : json(nullptr);
  j["events"] = trace.events;
  return j.dump();
}

PipelineTrace trace_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    PipelineTrace t;
    t.query_id = j.at("query_id").get<std::string>();
    t.retrieval.query_id = t.query_id;
    t.retrieval.ranked_entry_ids = j.at("ranked_ids").get<std::vector<std::string>>();
    t.retrieval.scores = j.at("scores").get<std::vector<double>>();
    if (!j.at("rerank_ids").is_null()) {
      RerankResult rr;
      rr.query_id = t.query_id;
      rr.ranked_entry_ids = j.at("rerank_ids").get<std::vector<std::string>>();
      rr.yes_probs = j.at("yes_probs").get<std::vector<double>>();
      t.rerank = std::move(rr);
    }
    t.contexts_used = j.at("contexts_used").get<std::vector<std::string>>();
    t.answer = j.at("answer").get<std::string>();
    if (j.contains("retrieval_query") && !j["retrieval_query"].is_null()) {
      t.retrieval_query = j["retrieval_query"].get<std::string>();
    }
    if (j.contains("events")) t.events = j["events"].get<std::vector<std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("trace line: ") + e.what());
  }
}

}  // namespace mmpoison
