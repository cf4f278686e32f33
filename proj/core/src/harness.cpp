#include "mmpoison/harness.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/toy_backend.hpp"

namespace mmpoison {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string spec_name(const BackendSpec& s) { return s.kind + "/" + std::to_string(s.seed); }

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to pre-sized slots, so the output never depends on scheduling.
// The exception of the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::shared_ptr<const ToyEncoder> toy_encoder(std::uint64_t seed) {
  ToyEncoderConfig c;
  c.seed = seed;
  return std::make_shared<const ToyEncoder>(c);
}

std::string setup_label(const ExperimentConfig& c) {
  std::string label = c.attack ? std::string(to_string(*c.attack)) : "clean";
  label += " N=" + std::to_string(c.pipeline.top_n) + " K=" + std::to_string(c.pipeline.top_k) +
           " m=" + std::to_string(c.pipeline.contexts_m) +
           " rerank=" + std::string(to_string(c.pipeline.rerank_mode)) +
           " retriever=" + spec_name(c.retriever);
  if (c.defense.enabled) label += " +defense";
  if (c.image_mode == ImageMode::kQuantized) label += " quantized";
  return label;
}

}  // namespace

std::string_view to_string(ImageMode mode) {
  return mode == ImageMode::kFloat ? "float" : "quantized";
}

ImageMode parse_image_mode(std::string_view s) {
  if (s == "float") return ImageMode::kFloat;
  if (s == "quantized") return ImageMode::kQuantized;
  throw ConfigError("unknown image mode '" + std::string(s) + "' (expected float or quantized)");
}

void ExperimentConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  pipeline.validate();
  lpa.validate();
  gpa.validate();
  defense.validate();
  if (dataset_source == "synthetic") synth.validate();
  if (attack == AttackKind::kGpaRtRrGen && gpa.num_entries != 1) {
    throw ConfigError("gpa_rtrrgen injects a single entry; set [gpa] num_entries = 1");
  }
  const bool needs_reranker =
      pipeline.rerank_mode != RerankMode::kNone || attack == AttackKind::kGpaRtRrGen;
  if (needs_reranker && reranker.kind == "none") {
    throw ConfigError("a reranker backend is required for this configuration");
  }
  if (schema == DatasetSchema::kMmqaLike && eval_mode != EvalMode::kEm) {
    throw ConfigError("mmqa_like datasets are scored with eval_mode = em");
  }
  if (schema == DatasetSchema::kWebqaLike && eval_mode != EvalMode::kKeyEntity) {
    throw ConfigError("webqa_like datasets are scored with eval_mode = key_entity");
  }
  if (retriever.kind != "toy") throw ConfigError("unknown retriever '" + retriever.kind + "'");
  if (generator.kind != "toy") throw ConfigError("unknown generator '" + generator.kind + "'");
  if (reranker.kind != "toy" && reranker.kind != "none") {
    throw ConfigError("unknown reranker '" + reranker.kind + "' (expected toy or none)");
  }
  if (caption_llm != "stub" && caption_llm != "command") {
    throw ConfigError("unknown caption_llm '" + caption_llm + "' (expected stub or command)");
  }
  if (image_synth != "toy_render" && image_synth != "hash" && image_synth != "command") {
    throw ConfigError("unknown image_synth '" + image_synth +
                      "' (expected toy_render, hash or command)");
  }
}

ExperimentConfig experiment_from_config(const ConfigFile& f) {
  f.require_known({
      {"experiment", {"name", "seed", "workers", "out", "eval_mode", "image_mode", "filter"}},
      {"dataset",
       {"source", "schema", "num_queries", "kb_size", "seed", "benign_max_cos", "benign_min_cos",
        "max_resamples"}},
      {"backends",
       {"retriever", "retriever_seed", "reranker", "reranker_seed", "generator",
        "generator_seed", "caption_llm", "caption_llm_command", "caption_llm_endpoint",
        "caption_llm_model", "identity_paraphrases", "image_synth", "image_synth_command",
        "image_synth_endpoint", "image_synth_model", "guidance_scale", "denoise_steps",
        "image_height", "image_width", "image_channels"}},
      {"pipeline", {"top_n", "top_k", "contexts_m", "rerank_mode", "score_captions"}},
      {"attack", {"kind"}},
      {"lpa", {"epsilon", "alpha", "steps", "step_rule"}},
      {"gpa",
       {"alpha", "steps", "lambda1", "lambda2", "target", "trigger_caption", "num_entries",
        "objective_form", "step_rule", "share_image", "rerank_mode", "contexts_m", "seed"}},
      {"defense", {"enabled", "num_paraphrases", "selection", "index", "seed"}},
  });

  ExperimentConfig c;
  c.name = f.get_string("experiment", "name", c.name);
  c.seed = f.get_uint64("experiment", "seed", c.seed);
  c.workers = f.get_int("experiment", "workers", c.workers);
  c.out_dir = f.get_string("experiment", "out", "");
  c.eval_mode = parse_eval_mode(f.get_string("experiment", "eval_mode", "em"));
  c.image_mode = parse_image_mode(f.get_string("experiment", "image_mode", "float"));
  c.filter = f.get_bool("experiment", "filter", c.filter);

  c.dataset_source = f.get_string("dataset", "source", c.dataset_source);
  c.schema = parse_dataset_schema(f.get_string("dataset", "schema", "mmqa_like"));
  c.synth.num_queries = f.get_int("dataset", "num_queries", c.synth.num_queries);
  c.synth.kb_size = f.get_int("dataset", "kb_size", c.synth.kb_size);
  c.synth.seed = f.get_uint64("dataset", "seed", c.seed);
  c.synth.benign_max_cos = f.get_double("dataset", "benign_max_cos", c.synth.benign_max_cos);
  c.synth.benign_min_cos = f.get_double("dataset", "benign_min_cos", c.synth.benign_min_cos);
  c.synth.max_resamples = f.get_int("dataset", "max_resamples", c.synth.max_resamples);

  c.retriever = {f.get_string("backends", "retriever", "toy"),
                 f.get_uint64("backends", "retriever_seed", 0)};
  c.reranker = {f.get_string("backends", "reranker", "toy"),
                f.get_uint64("backends", "reranker_seed", c.retriever.seed)};
  c.generator = {f.get_string("backends", "generator", "toy"),
                 f.get_uint64("backends", "generator_seed", c.retriever.seed)};
  c.caption_llm = f.get_string("backends", "caption_llm", c.caption_llm);
  c.caption_llm_spec = {f.get_string("backends", "caption_llm_command", ""),
                        f.get_string("backends", "caption_llm_endpoint", ""),
                        f.get_string("backends", "caption_llm_model", "")};
  c.identity_paraphrases = f.get_bool("backends", "identity_paraphrases", false);
  c.image_synth = f.get_string("backends", "image_synth", c.image_synth);
  c.image_synth_spec = {f.get_string("backends", "image_synth_command", ""),
                        f.get_string("backends", "image_synth_endpoint", ""),
                        f.get_string("backends", "image_synth_model", "")};
  auto& isc = c.image_synth_config;
  isc.guidance_scale = f.get_double("backends", "guidance_scale", isc.guidance_scale);
  isc.denoise_steps = f.get_int("backends", "denoise_steps", isc.denoise_steps);
  isc.height = static_cast<std::uint32_t>(f.get_int("backends", "image_height", 32));
  isc.width = static_cast<std::uint32_t>(f.get_int("backends", "image_width", 32));
  isc.channels = static_cast<std::uint32_t>(f.get_int("backends", "image_channels", 3));
  isc.seed = c.seed;
  c.synth.height = isc.height;
  c.synth.width = isc.width;
  c.synth.channels = isc.channels;

  auto& p = c.pipeline;
  p.top_n = f.get_int("pipeline", "top_n", p.top_n);
  p.contexts_m = f.get_int("pipeline", "contexts_m", p.contexts_m);
  p.top_k = f.get_int("pipeline", "top_k", p.contexts_m);
  p.rerank_mode = parse_rerank_mode(f.get_string("pipeline", "rerank_mode", "none"));
  p.score_captions = f.get_bool("pipeline", "score_captions", false);

  const auto kind = f.get_string("attack", "kind", "none");
  if (kind != "none") c.attack = parse_attack_kind(kind);

  c.lpa.epsilon = f.get_double("lpa", "epsilon", c.lpa.epsilon);
  c.lpa.alpha = f.get_double("lpa", "alpha", c.lpa.alpha);
  c.lpa.steps = f.get_int("lpa", "steps", c.lpa.steps);
  c.lpa.step_rule = parse_step_rule(f.get_string("lpa", "step_rule", "sign"));
  c.lpa.seed = c.seed;

  auto& g = c.gpa;
  g.alpha = f.get_double("gpa", "alpha", g.alpha);
  g.steps = f.get_int("gpa", "steps", g.steps);
  g.lambda1 = f.get_double("gpa", "lambda1", g.lambda1);
  g.lambda2 = f.get_double("gpa", "lambda2", g.lambda2);
  g.target_string = f.get_string("gpa", "target", g.target_string);
  g.trigger_caption = f.get_string("gpa", "trigger_caption", g.trigger_caption);
  const int default_entries = c.attack == AttackKind::kGpaRtRrGen ? 1 : g.num_entries;
  g.num_entries = f.get_int("gpa", "num_entries", default_entries);
  g.objective_form = parse_objective_form(f.get_string("gpa", "objective_form", "sum_cos"));
  g.step_rule = parse_step_rule(f.get_string("gpa", "step_rule", "gradient"));
  g.share_image = f.get_bool("gpa", "share_image", g.share_image);
  g.rerank_mode = parse_rerank_mode(f.get_string("gpa", "rerank_mode", "image_only"));
  g.contexts_m = f.get_int("gpa", "contexts_m", p.contexts_m);
  g.height = isc.height;
  g.width = isc.width;
  g.channels = isc.channels;
  g.seed = f.get_uint64("gpa", "seed", c.seed);

  auto& d = c.defense;
  d.enabled = f.get_bool("defense", "enabled", d.enabled);
  d.num_paraphrases = f.get_int("defense", "num_paraphrases", d.num_paraphrases);
  d.selection = parse_paraphrase_selection(f.get_string("defense", "selection", "random"));
  d.index = f.get_int("defense", "index", d.index);
  d.seed = f.get_uint64("defense", "seed", c.seed);

  c.validate();
  return c;
}

std::map<std::string, std::string> config_echo(const ExperimentConfig& c) {
  std::map<std::string, std::string> e;
  e["experiment.name"] = c.name;
  e["experiment.seed"] = std::to_string(c.seed);
  e["experiment.eval_mode"] = std::string(to_string(c.eval_mode));
  e["experiment.image_mode"] = std::string(to_string(c.image_mode));
  e["experiment.filter"] = c.filter ? "true" : "false";
  e["dataset.source"] = c.dataset_source;
  e["dataset.schema"] = std::string(to_string(c.schema));
  if (c.dataset_source == "synthetic") {
    e["dataset.num_queries"] = std::to_string(c.synth.num_queries);
    e["dataset.kb_size"] = std::to_string(c.synth.kb_size);
    e["dataset.seed"] = std::to_string(c.synth.seed);
    e["dataset.benign_max_cos"] = num(c.synth.benign_max_cos);
    e["dataset.benign_min_cos"] = num(c.synth.benign_min_cos);
  }
  e["backends.retriever"] = spec_name(c.retriever);
  e["backends.reranker"] = spec_name(c.reranker);
  e["backends.generator"] = spec_name(c.generator);
  e["backends.caption_llm"] = c.caption_llm;
  e["backends.image_synth"] = c.image_synth;
  e["pipeline.top_n"] = std::to_string(c.pipeline.top_n);
  e["pipeline.top_k"] = std::to_string(c.pipeline.top_k);
  e["pipeline.contexts_m"] = std::to_string(c.pipeline.contexts_m);
  e["pipeline.rerank_mode"] = std::string(to_string(c.pipeline.rerank_mode));
  e["pipeline.score_captions"] = c.pipeline.score_captions ? "true" : "false";
  e["attack.kind"] = c.attack ? std::string(to_string(*c.attack)) : "none";
  if (c.attack == AttackKind::kLpaRt) {
    e["lpa.epsilon"] = num(c.lpa.epsilon);
    e["lpa.alpha"] = num(c.lpa.alpha);
    e["lpa.steps"] = std::to_string(c.lpa.steps);
    e["lpa.step_rule"] = std::string(to_string(c.lpa.step_rule));
  }
  if (c.attack == AttackKind::kGpaRt || c.attack == AttackKind::kGpaRtRrGen) {
    e["gpa.alpha"] = num(c.gpa.alpha);
    e["gpa.steps"] = std::to_string(c.gpa.steps);
    e["gpa.num_entries"] = std::to_string(c.gpa.num_entries);
    e["gpa.objective_form"] = std::string(to_string(c.gpa.objective_form));
    e["gpa.step_rule"] = std::string(to_string(c.gpa.step_rule));
    e["gpa.share_image"] = c.gpa.share_image ? "true" : "false";
    e["gpa.target"] = c.gpa.target_string;
    e["gpa.seed"] = std::to_string(c.gpa.seed);
    if (c.attack == AttackKind::kGpaRtRrGen) {
      e["gpa.lambda1"] = num(c.gpa.lambda1);
      e["gpa.lambda2"] = num(c.gpa.lambda2);
      e["gpa.rerank_mode"] = std::string(to_string(c.gpa.rerank_mode));
      e["gpa.contexts_m"] = std::to_string(c.gpa.contexts_m);
    }
  }
  e["defense.enabled"] = c.defense.enabled ? "true" : "false";
  if (c.defense.enabled) {
    e["defense.num_paraphrases"] = std::to_string(c.defense.num_paraphrases);
    e["defense.selection"] = std::string(to_string(c.defense.selection));
    e["defense.seed"] = std::to_string(c.defense.seed);
  }
  return e;
}

std::shared_ptr<const EncoderBackend> make_encoder(const BackendSpec& spec) {
  if (spec.kind == "toy") return toy_encoder(spec.seed);
  throw ConfigError("unknown encoder backend '" + spec.kind + "'");
}

BackendSet make_backends(const ExperimentConfig& c) {
  std::map<std::uint64_t, std::shared_ptr<const ToyEncoder>> encoders;
  auto encoder_for = [&](const BackendSpec& spec) {
    if (spec.kind != "toy") throw ConfigError("unknown backend '" + spec.kind + "'");
    auto& slot = encoders[spec.seed];
    if (!slot) slot = toy_encoder(spec.seed);
    return slot;
  };
  BackendSet set;
  const auto retriever = encoder_for(c.retriever);
  set.pipeline.retriever = retriever;
  if (c.reranker.kind != "none") {
    set.pipeline.reranker = std::make_shared<const ToyReranker>(encoder_for(c.reranker));
  }
  set.pipeline.generator = std::make_shared<const ToyGenerator>(encoder_for(c.generator));

  if (c.caption_llm == "stub") {
    set.caption_llm = std::make_shared<const StubCaptionLLM>(c.identity_paraphrases);
  } else if (c.caption_llm == "command") {
    set.caption_llm = std::make_shared<const CommandCaptionLLM>(c.caption_llm_spec);
  } else {
    throw ConfigError("unknown caption_llm '" + c.caption_llm + "'");
  }
  if (c.image_synth == "toy_render") {
    set.image_synth = std::make_shared<const ToyRenderImageSynth>(retriever, c.image_synth_config);
  } else if (c.image_synth == "hash") {
    set.image_synth = std::make_shared<const HashFieldImageSynth>(c.image_synth_config);
  } else if (c.image_synth == "command") {
    set.image_synth =
        std::make_shared<const CommandImageSynth>(c.image_synth_spec, c.image_synth_config);
  } else {
    throw ConfigError("unknown image_synth '" + c.image_synth + "'");
  }
  return set;
}

DatasetManifest load_dataset(const ExperimentConfig& c, const BackendSet& backends) {
  DatasetManifest m = c.dataset_source == "synthetic"
                          ? synth_generate(c.synth, *backends.pipeline.retriever)
                          : ingest(c.dataset_source, c.schema);
  if (c.filter) {
    const GeneratorBackend* answerers[] = {backends.pipeline.generator.get()};
    m.queries = filter_queries(m.queries, answerers, c.eval_mode);
  }
  return m;
}

CraftResult craft_attack(const ExperimentConfig& c, const DatasetManifest& dataset,
                         const BackendSet& backends) {
  CraftResult out;
  out.queries = dataset.queries;
  if (!c.attack) return out;
  const auto& encoder = *backends.pipeline.retriever;
  const int workers = backends.pipeline.thread_safe() ? c.workers : 1;

  switch (*c.attack) {
    case AttackKind::kLpaBb:
    case AttackKind::kLpaRt: {
      out.artifacts.resize(out.queries.size());
      parallel_for(out.queries.size(), workers, [&](std::size_t i) {
        AttackArtifact a =
            lpa_bb_craft(out.queries[i], *backends.caption_llm, *backends.image_synth);
        if (*c.attack == AttackKind::kLpaRt) a = lpa_rt_optimize(a, out.queries[i], encoder, c.lpa);
        out.artifacts[i] = std::move(a);
      });
      for (std::size_t i = 0; i < out.queries.size(); ++i) {
        out.queries[i].adversarial_answer = out.artifacts[i].adversarial_answer;
        out.queries[i].adversarial_entry_ids = {out.artifacts[i].entry.entry_id};
      }
      break;
    }
    case AttackKind::kGpaRt:
    case AttackKind::kGpaRtRrGen: {
      if (out.queries.empty()) throw ContractError("no queries left to attack");
      if (*c.attack == AttackKind::kGpaRt) {
        out.artifacts = gpa_rt_optimize(out.queries, encoder, c.gpa);
      } else {
        if (!backends.pipeline.reranker) throw ConfigError("gpa_rtrrgen needs a reranker");
        const GpaBackends gb{backends.pipeline.retriever.get(), backends.pipeline.reranker.get(),
                             backends.pipeline.generator.get()};
        out.artifacts = {gpa_rtrrgen_optimize(out.queries, dataset.kb, gb, c.gpa)};
      }
      std::vector<std::string> ids;
      for (const auto& a : out.artifacts) ids.push_back(a.entry.entry_id);
      for (auto& q : out.queries) q.adversarial_entry_ids = ids;
      out.gpa_target = c.gpa.target_string;
      break;
    }
  }
  return out;
}

ExperimentResult evaluate_attack(const ExperimentConfig& c, const DatasetManifest& dataset,
                                 const BackendSet& backends, CraftResult craft) {
  KnowledgeBase kb = dataset.kb;
  for (const auto& a : craft.artifacts) {
    KnowledgeEntry e = a.entry;
    if (c.image_mode == ImageMode::kQuantized) e.image = quantize_8bit(e.image);
    kb.insert(std::move(e));
  }
  const auto embeddings =
      KbEmbeddings::build(kb, *backends.pipeline.retriever, c.pipeline.score_captions);
  const int workers = backends.pipeline.thread_safe() ? c.workers : 1;

  ExperimentResult result;
  result.traces.resize(craft.queries.size());
  parallel_for(craft.queries.size(), workers, [&](std::size_t i) {
    result.traces[i] = run_defended_pipeline(craft.queries[i], kb, c.pipeline, backends.pipeline,
                                             c.defense, backends.caption_llm.get(), &embeddings);
  });
  result.report = build_report(craft.queries, result.traces, kb, c.eval_mode, craft.gpa_target);
  result.report.setup = setup_label(c);
  result.report.image_mode = std::string(to_string(c.image_mode));
  result.report.config = config_echo(c);
  result.report.events.push_back("queries: " + std::to_string(craft.queries.size()) + " of " +
                                 std::to_string(dataset.queries.size()) + " evaluated");
  std::size_t fallbacks = 0;
  for (const auto& t : result.traces) {
    for (const auto& ev : t.events) fallbacks += ev.starts_with("defense_fallback") ? 1 : 0;
  }
  if (fallbacks > 0) {
    result.report.events.push_back("defense fallbacks: " + std::to_string(fallbacks));
  }
  result.craft = std::move(craft);
  return result;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

std::string optim_trace_json(const AttackArtifact& a) {
  json j{{"entry_id", a.entry.entry_id},
         {"attack_kind", std::string(to_string(*a.entry.attack_kind))},
         {"target_query_ids", a.target_query_ids},
         {"losses", a.trace.losses}};
  if (a.adversarial_answer) j["adversarial_answer"] = *a.adversarial_answer;
  if (!a.trace.max_perturbation.empty()) {
    j["max_perturbation"] = a.trace.max_perturbation;
    j["pixel_min"] = a.trace.pixel_min;
    j["pixel_max"] = a.trace.pixel_max;
  }
  if (!a.trace.loss_rt.empty()) {
    j["loss_rt"] = a.trace.loss_rt;
    j["loss_rr"] = a.trace.loss_rr;
    j["loss_gen"] = a.trace.loss_gen;
    j["generation_contexts"] = a.trace.generation_contexts;
  }
  return j.dump();
}

}  // namespace

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::span<const EvalReport> one(&result.report, 1);
  write_text(dir / "report.json", report_to_json(result.report));
  write_text(dir / "report.csv", render_report(one, ReportFormat::kCsv));
  write_text(dir / "table.txt", render_report(one, ReportFormat::kTable));
  std::string traces;
  for (const auto& t : result.traces) traces += trace_to_json(t) + "\n";
  write_text(dir / "trace.jsonl", traces);
  if (!result.craft.artifacts.empty()) {
    KnowledgeBase poisoned;
    std::string optim;
    for (const auto& a : result.craft.artifacts) {
      poisoned.insert(a.entry);
      optim += optim_trace_json(a) + "\n";
    }
    kb_save(poisoned, dir / "artifacts");
    write_text(dir / "artifacts" / "optim_trace.jsonl", optim);
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  try {
    const BackendSet backends = make_backends(config);
    const DatasetManifest dataset = load_dataset(config, backends);
    CraftResult craft = craft_attack(config, dataset, backends);
    ExperimentResult result = evaluate_attack(config, dataset, backends, std::move(craft));
    if (!config.out_dir.empty()) write_outputs(result, config.out_dir);
    return result;
  } catch (const std::exception& e) {
    if (!config.out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(config.out_dir, ec);
      std::ofstream(config.out_dir / "FAILED") << e.what() << "\n";
    }
    throw;
  }
}

std::vector<ExperimentResult> run_transfer(const ExperimentConfig& craft_config,
                                           const std::vector<BackendSpec>& eval_retrievers) {
  craft_config.validate();
  if (eval_retrievers.empty()) throw ConfigError("transfer needs at least one eval backend");
  const BackendSet craft_backends = make_backends(craft_config);
  const DatasetManifest dataset = load_dataset(craft_config, craft_backends);
  const CraftResult craft = craft_attack(craft_config, dataset, craft_backends);

  std::vector<ExperimentResult> results;
  for (const auto& spec : eval_retrievers) {
    ExperimentConfig eval = craft_config;
    eval.retriever = spec;
    BackendSet backends = craft_backends;
    backends.pipeline.retriever = make_encoder(spec);
    results.push_back(evaluate_attack(eval, dataset, backends, craft));
    if (!craft_config.out_dir.empty()) {
      write_outputs(results.back(),
                    craft_config.out_dir / ("eval-" + spec.kind + "-" + std::to_string(spec.seed)));
    }
  }
  return results;
}

}  // namespace mmpoison
