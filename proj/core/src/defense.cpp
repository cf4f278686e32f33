#include "mmpoison/defense.hpp"

#include <random>

#include "mmpoison/error.hpp"
#include "mmpoison/seeding.hpp"

namespace mmpoison {

std::string_view to_string(ParaphraseSelection s) {
  return s == ParaphraseSelection::kRandom ? "random" : "index";
}

ParaphraseSelection parse_paraphrase_selection(std::string_view s) {
  if (s == "random") return ParaphraseSelection::kRandom;
  if (s == "index") return ParaphraseSelection::kIndex;
  throw ConfigError("unknown paraphrase selection '" + std::string(s) +
                    "' (expected random or index)");
}

void DefenseConfig::validate() const {
  if (num_paraphrases < 1) throw ConfigError("defense num_paraphrases must be at least 1");
  if (selection == ParaphraseSelection::kIndex && (index < 0 || index >= num_paraphrases)) {
    throw ConfigError("defense index must lie in [0, num_paraphrases)");
  }
}

std::vector<std::string> paraphrase_query(std::string_view question,
                                          const CaptionLLMAdapter& caption_llm,
                                          const DefenseConfig& config) {
  config.validate();
  std::vector<std::string> out;
  try {
    out = caption_llm.paraphrase(question);
  } catch (const ParseError& e) {
    throw DefenseError(std::string("paraphrase response is malformed: ") + e.what());
  }
  if (static_cast<int>(out.size()) != config.num_paraphrases) {
    throw DefenseError("expected " + std::to_string(config.num_paraphrases) +
                       " paraphrases, got " + std::to_string(out.size()));
  }
  return out;
}

DefendedRetrieval defended_retrieve(std::string_view question, const KnowledgeBase& kb,
                                    const EncoderBackend& encoder, int top_n,
                                    const DefenseConfig& config,
                                    const CaptionLLMAdapter* caption_llm,
                                    const KbEmbeddings* embeddings,
                                    const RetrievalOptions& options) {
  auto run = [&](std::string_view q) {
    return embeddings ? retrieve(q, kb, *embeddings, encoder, top_n, options)
                      : retrieve(q, kb, encoder, top_n, options);
  };
  DefendedRetrieval out;
  if (!config.enabled) {
    out.result = run(question);
    return out;
  }
  if (caption_llm == nullptr) throw ConfigError("defense enabled without a caption LLM");
  std::vector<std::string> paraphrases;
  try {
    paraphrases = paraphrase_query(question, *caption_llm, config);
  } catch (const DefenseError& e) {
    out.events.push_back(std::string("defense_fallback: ") + e.what());
    out.result = run(question);
    return out;
  }
  std::size_t pick = static_cast<std::size_t>(config.index);
  if (config.selection == ParaphraseSelection::kRandom) {
    std::mt19937_64 rng(derive_seed(config.seed, question));
    pick = std::uniform_int_distribution<std::size_t>(0, paraphrases.size() - 1)(rng);
  }
  out.retrieval_query = paraphrases[pick];
  out.events.push_back("defense_paraphrase: index " + std::to_string(pick));
  out.result = run(*out.retrieval_query);
  return out;
}

PipelineTrace run_defended_pipeline(const QueryRecord& query, const KnowledgeBase& kb,
                                    const PipelineConfig& config, const Backends& backends,
                                    const DefenseConfig& defense,
                                    const CaptionLLMAdapter* caption_llm,
                                    const KbEmbeddings* embeddings) {
  if (!defense.enabled) return run_pipeline(query, kb, config, backends, embeddings);
  config.validate();
  if (kb.empty()) throw ConfigError("pipeline: knowledge base is empty");
  if (!backends.retriever) throw ConfigError("pipeline: no retriever backend");
  DefendedRetrieval dr =
      defended_retrieve(query.question, kb, *backends.retriever, config.top_n, defense,
                        caption_llm, embeddings, RetrievalOptions{config.score_captions});
  PipelineTrace trace = continue_pipeline(query, std::move(dr.result), kb, config, backends);
  trace.retrieval_query = std::move(dr.retrieval_query);
  trace.events.insert(trace.events.begin(), dr.events.begin(), dr.events.end());
  return trace;
}

}  // namespace mmpoison
