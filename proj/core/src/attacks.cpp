#include "mmpoison/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mmpoison/error.hpp"
#include "mmpoison/metrics.hpp"

namespace mmpoison {

namespace {

double sign_of(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

// x + alpha * step(g), clamped to the valid pixel range.
ImageTensor ascent_step(const ImageTensor& image, std::span<const double> grad, double alpha,
                        StepRule rule) {
  auto pixels = image.to_doubles();
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] += alpha * (rule == StepRule::kSign ? sign_of(grad[i]) : grad[i]);
  }
  return ImageTensor::from_doubles(image.height(), image.width(), image.channels(), pixels);
}

// Rounds v to a float inside [lo, hi]; lo <= v <= hi must already hold.
float float_within(double v, double lo, double hi) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) > hi) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  if (static_cast<double>(f) < lo) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

ImageTensor project_values(std::span<const double> values, const ImageTensor& center,
                           double epsilon) {
  const auto c = center.data();
  std::vector<float> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double ci = c[i];
    const double lo = std::max(0.0, ci - epsilon);
    const double hi = std::min(1.0, ci + epsilon);
    out[i] = float_within(std::clamp(values[i], lo, hi), lo, hi);
  }
  return ImageTensor(center.height(), center.width(), center.channels(), std::move(out));
}

// Query indices sorted by (question, id): the order every sum runs in.
std::vector<std::size_t> canonical_order(std::span<const QueryRecord> queries) {
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (queries[a].question != queries[b].question) {
      return queries[a].question < queries[b].question;
    }
    return queries[a].query_id < queries[b].query_id;
  });
  return order;
}

std::vector<std::string> query_ids(std::span<const QueryRecord> queries) {
  std::vector<std::string> ids;
  ids.reserve(queries.size());
  for (const auto& q : queries) ids.push_back(q.query_id);
  return ids;
}

void require_grad(const EncoderBackend& encoder) {
  if (!encoder.supports_grad()) {
    throw CapabilityError("encoder '" + encoder.name() + "' does not provide image gradients");
  }
}

const EncoderBackend& checked_retriever(const GpaBackends& backends, const GPAConfig& config) {
  config.validate();
  if (backends.retriever == nullptr || backends.reranker == nullptr ||
      backends.generator == nullptr) {
    throw ContractError("gpa-rtrrgen needs retriever, reranker and generator backends");
  }
  if (!backends.retriever->supports_grad() || !backends.reranker->supports_grad() ||
      !backends.generator->supports_grad()) {
    throw CapabilityError("gpa-rtrrgen needs gradient-capable backends");
  }
  return *backends.retriever;
}

}  // namespace

std::string_view to_string(StepRule rule) {
  return rule == StepRule::kSign ? "sign" : "gradient";
}

StepRule parse_step_rule(std::string_view s) {
  if (s == "sign") return StepRule::kSign;
  if (s == "gradient") return StepRule::kGradient;
  throw ConfigError("unknown step rule '" + std::string(s) + "' (expected sign or gradient)");
}

std::string_view to_string(GpaObjectiveForm form) {
  return form == GpaObjectiveForm::kSumCos ? "sum_cos" : "mean_embedding";
}

GpaObjectiveForm parse_objective_form(std::string_view s) {
  if (s == "sum_cos") return GpaObjectiveForm::kSumCos;
  if (s == "mean_embedding") return GpaObjectiveForm::kMeanEmbedding;
  throw ConfigError("unknown objective form '" + std::string(s) +
                    "' (expected sum_cos or mean_embedding)");
}

void LPAConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("lpa epsilon must lie in [0, 1]");
  if (!(alpha > 0.0)) throw ConfigError("lpa alpha must be positive");
  if (epsilon > 0.0 && alpha > epsilon) throw ConfigError("lpa alpha must not exceed epsilon");
  if (steps < 0) throw ConfigError("lpa steps must be non-negative");
}

void GPAConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("gpa alpha must be positive");
  if (steps < 0) throw ConfigError("gpa steps must be non-negative");
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda1 + lambda2 <= 1.0)) {
    throw ConfigError("gpa lambdas must satisfy lambda1, lambda2 >= 0 and lambda1 + lambda2 <= 1");
  }
  if (num_entries < 1) throw ConfigError("gpa num_entries must be at least 1");
  if (contexts_m < 1) throw ConfigError("gpa contexts_m must be at least 1");
  if (rerank_mode == RerankMode::kNone) throw ConfigError("gpa rerank_mode must not be none");
  if (height == 0 || width == 0 || (channels != 1 && channels != 3)) {
    throw ConfigError("gpa image shape is invalid");
  }
}

AttackArtifact lpa_bb_craft(const QueryRecord& query, const CaptionLLMAdapter& caption_llm,
                            const ImageSynthAdapter& image_synth, int max_retries) {
  const std::string gold = normalize_answer(query.gold_answer);
  PoisonPair pair = caption_llm.poison_pair(query.question, query.gold_answer);
  for (int retry = 0; normalize_answer(pair.wrong_answer) == gold; ++retry) {
    if (retry >= max_retries) {
      throw CraftingError("caption LLM kept returning the gold answer for query '" +
                          query.query_id + "'");
    }
    pair = caption_llm.poison_pair(query.question, query.gold_answer);
  }
  ImageTensor image = image_synth.synthesize(pair.poison_image_caption);
  AttackArtifact artifact;
  artifact.entry = KnowledgeEntry::poisoned("lpa_bb-" + query.query_id, std::move(image),
                                            std::move(pair.poison_image_caption),
                                            AttackKind::kLpaBb);
  artifact.target_query_ids = {query.query_id};
  artifact.adversarial_answer = std::move(pair.wrong_answer);
  return artifact;
}

ImageTensor project_epsilon_ball(const ImageTensor& image, const ImageTensor& center,
                                 double epsilon) {
  if (!image.same_shape(center)) throw ContractError("projection needs equally shaped images");
  if (!(epsilon >= 0.0)) throw ContractError("projection radius must be non-negative");
  const auto values = image.to_doubles();
  return project_values(values, center, epsilon);
}

AttackArtifact lpa_rt_optimize(const AttackArtifact& init, const QueryRecord& query,
                               const EncoderBackend& encoder, const LPAConfig& config) {
  config.validate();
  require_grad(encoder);
  const Embedding target = encoder.text_embed(query.question);
  const ImageTensor& center = init.entry.image;

  AttackArtifact out = init;
  out.entry.entry_id = init.entry.entry_id.starts_with("lpa_bb-")
                           ? "lpa_rt-" + init.entry.entry_id.substr(7)
                           : init.entry.entry_id;
  out.entry.attack_kind = AttackKind::kLpaRt;
  out.target_query_ids = {query.query_id};
  out.trace = OptimTrace{};

  ImageTensor image = center;
  auto record = [&](const ImageTensor& x) {
    out.trace.losses.push_back(cosine(encoder.image_embed(x), target));
    out.trace.max_perturbation.push_back(max_abs_diff(x, center));
    const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
    out.trace.pixel_min.push_back(*lo);
    out.trace.pixel_max.push_back(*hi);
  };
  record(image);
  for (int t = 0; t < config.steps; ++t) {
    const auto grad = encoder.image_embed_grad(image, target.values);
    auto pixels = image.to_doubles();
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] += config.alpha *
                   (config.step_rule == StepRule::kSign ? sign_of(grad[i]) : grad[i]);
    }
    image = project_values(pixels, center, config.epsilon);
    record(image);
  }
  out.entry.image = std::move(image);
  return out;
}

RetrievalObjective::RetrievalObjective(std::span<const QueryRecord> queries,
                                       const EncoderBackend& encoder, GpaObjectiveForm form)
    : encoder_(encoder) {
  if (queries.empty()) throw ContractError("retrieval objective needs at least one query");
  for (std::size_t idx : canonical_order(queries)) {
    const Embedding e = encoder.text_embed(queries[idx].question);
    if (cotangent_.empty()) cotangent_.assign(e.dim(), 0.0);
    for (std::size_t k = 0; k < e.dim(); ++k) cotangent_[k] += e.values[k];
  }
  if (form == GpaObjectiveForm::kMeanEmbedding) cotangent_ = normalized(cotangent_).values;
}

double RetrievalObjective::value(const ImageTensor& image) const {
  return dot(encoder_.image_embed(image).values, cotangent_);
}

ValueGrad RetrievalObjective::evaluate(const ImageTensor& image) const {
  return ValueGrad{value(image), encoder_.image_embed_grad(image, cotangent_)};
}

ImageTensor gaussian_init(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> pixels(static_cast<std::size_t>(height) * width * channels);
  for (double& p : pixels) p = normal(rng);
  return ImageTensor::from_doubles(height, width, channels, pixels);
}

std::vector<AttackArtifact> gpa_rt_optimize(std::span<const QueryRecord> queries,
                                            const EncoderBackend& encoder,
                                            const GPAConfig& config) {
  config.validate();
  if (queries.empty()) throw ContractError("gpa needs at least one query");
  require_grad(encoder);
  const RetrievalObjective objective(queries, encoder, config.objective_form);
  const auto ids = query_ids(queries);

  const int distinct = config.share_image ? 1 : config.num_entries;
  std::vector<AttackArtifact> artifacts;
  for (int index = 0; index < config.num_entries; ++index) {
    AttackArtifact artifact;
    if (index < distinct) {
      ImageTensor image = gaussian_init(config.height, config.width, config.channels,
                                        config.seed + static_cast<std::uint64_t>(index));
      for (int t = 0; t < config.steps; ++t) {
        const ValueGrad vg = objective.evaluate(image);
        artifact.trace.losses.push_back(vg.value);
        image = ascent_step(image, vg.grad, config.alpha, config.step_rule);
      }
      artifact.trace.losses.push_back(objective.value(image));
      artifact.entry = KnowledgeEntry::poisoned("", std::move(image), config.trigger_caption,
                                                AttackKind::kGpaRt);
    } else {
      artifact = artifacts.front();
    }
    artifact.entry.entry_id = "gpa_rt-" + std::to_string(index);
    artifact.target_query_ids = ids;
    artifacts.push_back(std::move(artifact));
  }
  return artifacts;
}

GpaTotalObjective::GpaTotalObjective(std::span<const QueryRecord> queries,
                                     const KnowledgeBase& kb, const GpaBackends& backends,
                                     const GPAConfig& config)
    : backends_(backends),
      config_(config),
      retrieval_(queries, checked_retriever(backends, config), GpaObjectiveForm::kSumCos) {

  KnowledgeBase benign;
  for (const auto& entry : kb.entries()) {
    if (entry.provenance == Provenance::kBenign) benign.insert(entry);
  }
  const int extra = config.contexts_m - 1;
  std::optional<KbEmbeddings> embeddings;
  if (extra > 0 && !benign.empty()) embeddings = KbEmbeddings::build(benign, *backends.retriever);

  for (std::size_t idx : canonical_order(queries)) {
    questions_.push_back(queries[idx].question);
    std::vector<std::string> ids;
    std::vector<const KnowledgeEntry*> ctx;
    if (embeddings) {
      const int n = std::min<int>(extra, static_cast<int>(benign.size()));
      const auto result =
          retrieve(queries[idx].question, benign, *embeddings, *backends.retriever, n);
      for (const auto& id : result.ranked_entry_ids) {
        ids.push_back(id);
        ctx.push_back(kb.find(id));
      }
    }
    context_ids_.push_back(std::move(ids));
    contexts_.push_back(std::move(ctx));
  }
}

GpaEvaluation GpaTotalObjective::evaluate(const ImageTensor& image) const {
  const double w_rt = config_.lambda1;
  const double w_rr = config_.lambda2;
  const double w_gen = 1.0 - config_.lambda1 - config_.lambda2;

  GpaEvaluation out;
  const ValueGrad rt = retrieval_.evaluate(image);
  const ValueGrad rr = backends_.reranker->sum_log_yes_prob(questions_, image,
                                                            config_.trigger_caption,
                                                            config_.rerank_mode);
  std::vector<GenerationQuery> gen_queries;
  gen_queries.reserve(questions_.size());
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    gen_queries.push_back(GenerationQuery{questions_[i], contexts_[i]});
  }
  const ValueGrad gen = backends_.generator->sum_target_logprob(
      gen_queries, image, config_.trigger_caption, config_.target_string);

  out.rt = rt.value;
  out.rr = rr.value;
  out.gen = gen.value;
  out.total = w_rt * rt.value + w_rr * rr.value + w_gen * gen.value;
  // Zero-weight terms are skipped so that lambda1 = 1 reproduces the GPA-Rt
  // gradient bit for bit.
  out.grad.assign(image.size(), 0.0);
  const std::pair<double, const ValueGrad*> parts[] = {{w_rt, &rt}, {w_rr, &rr}, {w_gen, &gen}};
  for (const auto& [weight, part] : parts) {
    if (weight == 0.0) continue;
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] += weight * part->grad[i];
  }
  return out;
}

AttackArtifact gpa_rtrrgen_optimize(std::span<const QueryRecord> queries, const KnowledgeBase& kb,
                                    const GpaBackends& backends, const GPAConfig& config) {
  config.validate();
  if (queries.empty()) throw ContractError("gpa needs at least one query");
  if (config.num_entries != 1) throw ConfigError("gpa-rtrrgen injects exactly one entry");
  const GpaTotalObjective objective(queries, kb, backends, config);

  AttackArtifact artifact;
  auto record = [&](const GpaEvaluation& ev) {
    artifact.trace.losses.push_back(ev.total);
    artifact.trace.loss_rt.push_back(ev.rt);
    artifact.trace.loss_rr.push_back(ev.rr);
    artifact.trace.loss_gen.push_back(ev.gen);
  };
  ImageTensor image = gaussian_init(config.height, config.width, config.channels, config.seed);
  for (int t = 0; t < config.steps; ++t) {
    GpaEvaluation ev = objective.evaluate(image);
    record(ev);
    image = ascent_step(image, ev.grad, config.alpha, config.step_rule);
  }
  record(objective.evaluate(image));

  artifact.entry = KnowledgeEntry::poisoned("gpa_rtrrgen-0", std::move(image),
                                            config.trigger_caption, AttackKind::kGpaRtRrGen);
  artifact.target_query_ids = query_ids(queries);
  // Frozen contexts are stored in canonical query order; map them back.
  const auto order = canonical_order(queries);
  artifact.trace.generation_contexts.resize(queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    artifact.trace.generation_contexts[order[i]] = objective.frozen_context_ids()[i];
  }
  return artifact;
}

}  // namespace mmpoison
