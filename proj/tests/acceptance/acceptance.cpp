// End-to-end acceptance checks on the toy backend and the 50-query / 60-entry
// synthetic benchmark. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmpoison/harness.hpp"
#include "mmpoison/image_io.hpp"
#include "mmpoison/seeding.hpp"
#include "mmpoison/toy_backend.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace mmpoison;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

const fs::path& work_dir() {
  static const fs::path dir = mmpoison::testing::scratch_dir("acceptance");
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig load_config(const std::string& name,
                             const std::vector<std::array<std::string, 3>>& overrides = {}) {
  ConfigFile file = ConfigFile::load(fs::path(MMPOISON_SOURCE_DIR) / "configs" / name);
  for (const auto& [section, key, value] : overrides) file.set(section, key, value);
  return experiment_from_config(file);
}

// Acceptance configurations, each run once and written under work_dir()/<tag>.
struct Named {
  std::string tag;
  ExperimentConfig config;
};

std::vector<Named> acceptance_configs() {
  return {
      {"clean", load_config("clean.conf")},
      {"lpa_rt", load_config("lpa_rt.conf")},
      {"gpa_rt_single", load_config("gpa_rt.conf", {{"gpa", "num_entries", "1"}})},
      {"gpa_rtrrgen", load_config("gpa_rtrrgen.conf")},
  };
}

std::map<std::string, ExperimentResult>& results() {
  static std::map<std::string, ExperimentResult> cache;
  return cache;
}

const ExperimentResult& run_named(const std::string& tag) {
  auto& cache = results();
  if (const auto it = cache.find(tag); it != cache.end()) return it->second;
  for (auto& [name, cfg] : acceptance_configs()) {
    if (name != tag) continue;
    cfg.out_dir = work_dir() / "run1" / tag;
    return cache.emplace(tag, run_experiment(cfg)).first->second;
  }
  throw std::runtime_error("unknown acceptance config " + tag);
}

const DatasetManifest& bench() { return mmpoison::testing::benchmark(); }

// ---------------------------------------------------------------------------
// 1. Metric oracle equivalence

Outcome metric_oracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n_benign = 8 + static_cast<int>(rng() % 10);
    const int n_poison = 1 + static_cast<int>(rng() % 4);
    const int n_queries = 1 + static_cast<int>(rng() % 12);
    const EvalMode mode = trial % 2 ? EvalMode::kKeyEntity : EvalMode::kEm;
    const bool gpa = trial % 5 == 0;

    KnowledgeBase kb;
    const auto img = mmpoison::testing::random_image(static_cast<std::uint64_t>(trial), 2, 2, 3);
    std::vector<std::string> benign, poison;
    for (int i = 0; i < n_benign; ++i) {
      benign.push_back("b" + std::to_string(i));
      kb.insert(KnowledgeEntry::benign(benign.back(), img, "c"));
    }
    for (int i = 0; i < n_poison; ++i) {
      poison.push_back("p" + std::to_string(i));
      kb.insert(KnowledgeEntry::poisoned(poison.back(), img, "c", AttackKind::kGpaRt));
    }
    std::vector<std::string> all = benign;
    all.insert(all.end(), poison.begin(), poison.end());

    std::vector<QueryRecord> queries;
    std::vector<PipelineTrace> traces;
    for (int i = 0; i < n_queries; ++i) {
      QueryRecord q;
      q.query_id = "q" + std::to_string(i);
      q.question = "question " + q.query_id;
      q.gold_answer = "gold" + std::to_string(i);
      std::set<std::string> gold;
      const int n_gold = 1 + static_cast<int>(rng() % 2);
      while (static_cast<int>(gold.size()) < n_gold) gold.insert(benign[rng() % benign.size()]);
      q.gold_context_ids.assign(gold.begin(), gold.end());
      if (rng() % 4 != 0) {
        q.adversarial_answer = "adv" + std::to_string(i);
        std::set<std::string> pois;
        const int n_p = 1 + static_cast<int>(rng() % poison.size());
        while (static_cast<int>(pois.size()) < n_p) pois.insert(poison[rng() % poison.size()]);
        q.adversarial_entry_ids.assign(pois.begin(), pois.end());
      }
      queries.push_back(q);

      PipelineTrace t;
      t.query_id = q.query_id;
      std::set<std::string> picked;
      const int m = 1 + static_cast<int>(rng() % 4);
      while (static_cast<int>(picked.size()) < m) picked.insert(all[rng() % all.size()]);
      t.contexts_used.assign(picked.begin(), picked.end());
      const std::string choices[] = {q.gold_answer, "adv" + std::to_string(i), "sorry", "junk"};
      t.answer = choices[rng() % 4];
      traces.push_back(t);
    }

    // Brute force from the raw traces: micro-averaged recall and mean scores.
    double gold_hits = 0, gold_total = 0, pois_hits = 0, pois_total = 0;
    double acc = 0, adv_hits = 0, adv_count = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& q = queries[i];
      for (const auto& id : traces[i].contexts_used) {
        for (const auto& g : q.gold_context_ids) gold_hits += id == g;
        for (const auto& p : q.adversarial_entry_ids) pois_hits += id == p;
      }
      gold_total += static_cast<double>(q.gold_context_ids.size());
      pois_total += static_cast<double>(q.adversarial_entry_ids.size());
      acc += traces[i].answer == q.gold_answer;
      if (gpa) {
        adv_hits += traces[i].answer == "sorry";
        adv_count += 1;
      } else if (q.adversarial_answer) {
        adv_hits += traces[i].answer == *q.adversarial_answer;
        adv_count += 1;
      }
    }
    const std::optional<std::string> target = gpa ? std::optional<std::string>("sorry") : std::nullopt;
    std::vector<std::vector<std::string>> sets;
    std::vector<std::string> answers;
    for (const auto& t : traces) {
      sets.push_back(t.contexts_used);
      answers.push_back(t.answer);
    }
    const RecallPair r = recall_pair(sets, queries, kb);
    const AccuracyPair a = accuracy_pair(queries, answers, mode, target);
    const EvalReport report = build_report(queries, traces, kb, mode, target);

    auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
    auto check_opt = [&](const std::optional<double>& got, double hits, double total) {
      if (total == 0) {
        if (got) worst = 1.0;
      } else if (!got) {
        worst = 1.0;
      } else {
        check(*got, hits / total);
      }
    };
    check(r.r_orig, gold_hits / gold_total);
    check_opt(r.r_pois, pois_hits, pois_total);
    check(a.acc_orig, acc / static_cast<double>(n_queries));
    check_opt(a.acc_pois, adv_hits, adv_count);
    check(report.aggregates.r_orig, gold_hits / gold_total);
    check_opt(report.aggregates.r_pois, pois_hits, pois_total);
    check(report.aggregates.acc_orig, acc / static_cast<double>(n_queries));
    check_opt(report.aggregates.acc_pois, adv_hits, adv_count);
    if (!report.consistent()) worst = 1.0;
  }
  return {worst <= 1e-12, fmt("100 random reports, max deviation %.3g", worst)};
}

// ---------------------------------------------------------------------------
// 2. Gradient correctness (central differences, h = 1e-4, realized float step)

template <typename F>
double fd_pixel(const ImageTensor& img, std::size_t i, double h, F f) {
  std::vector<float> data(img.data().begin(), img.data().end());
  const float x = data[i];
  const float xp = static_cast<float>(x + h);
  const float xm = static_cast<float>(x - h);
  data[i] = xp;
  const double fp = f(ImageTensor(img.height(), img.width(), img.channels(), data));
  data[i] = xm;
  const double fm = f(ImageTensor(img.height(), img.width(), img.channels(), data));
  return (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
}

std::vector<std::size_t> probes(const std::vector<double>& grad, std::mt19937_64& rng) {
  std::vector<std::size_t> idx{static_cast<std::size_t>(
      std::max_element(grad.begin(), grad.end(),
                       [](double a, double b) { return std::abs(a) < std::abs(b); }) -
      grad.begin())};
  for (int k = 0; k < 3; ++k) idx.push_back(rng() % grad.size());
  return idx;
}

Outcome gradient_correctness() {
  auto enc = mmpoison::testing::toy_encoder(0);
  const ToyReranker rr(enc);
  const ToyGenerator gen(enc);
  const auto& m = bench();
  std::vector<QueryRecord> queries(m.queries.begin(), m.queries.begin() + 5);
  GPAConfig gcfg;
  gcfg.num_entries = 1;
  gcfg.contexts_m = 2;
  const GpaTotalObjective total(queries, m.kb, GpaBackends{enc.get(), &rr, &gen}, gcfg);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst[4] = {0, 0, 0, 0};
  auto track = [&](int k, double analytic, double fd) {
    worst[k] = std::max(worst[k], mmpoison::testing::rel_err(analytic, fd, 1e-6));
  };
  for (int point = 0; point < 20; ++point) {
    const auto x = mmpoison::testing::random_image(9000 + static_cast<std::uint64_t>(point), 32,
                                                   32, 3, 0.1, 0.9);
    const auto& q = m.queries[static_cast<std::size_t>(point)].question;

    std::vector<double> cot(enc->config().dim);
    for (double& v : cot) v = normal(rng);
    const auto g_enc = enc->image_embed_grad(x, cot);
    for (auto i : probes(g_enc, rng)) {
      track(0, g_enc[i], fd_pixel(x, i, 1e-4, [&](const ImageTensor& y) {
              return dot(enc->image_embed(y).values, cot);
            }));
    }

    const auto mode = point % 2 ? RerankMode::kImageOnly : RerankMode::kImageCaption;
    const auto g_rr = rr.log_yes_prob_grad(q, x, "a caption", mode);
    for (auto i : probes(g_rr, rng)) {
      track(1, g_rr[i], fd_pixel(x, i, 1e-4, [&](const ImageTensor& y) {
              return std::log(rr.yes_prob(q, y, "a caption", mode));
            }));
    }

    const std::vector<const KnowledgeEntry*> ctx{&m.kb.at(static_cast<std::size_t>(point))};
    const auto g_gen = gen.target_logprob_grad(q, x, "cap", ctx, "sorry");
    for (auto i : probes(g_gen, rng)) {
      track(2, g_gen[i], fd_pixel(x, i, 1e-4, [&](const ImageTensor& y) {
              return gen.target_logprob(q, y, "cap", ctx, "sorry");
            }));
    }

    const auto ev = total.evaluate(x);
    for (auto i : probes(ev.grad, rng)) {
      track(3, ev.grad[i], fd_pixel(x, i, 1e-4, [&](const ImageTensor& y) {
              return total.evaluate(y).total;
            }));
    }
  }
  const double max_err = *std::max_element(std::begin(worst), std::end(worst));
  return {max_err <= 1e-4, fmt("max rel err: encoder %.2g, reranker %.2g, generator %.2g, "
                               "L_Total %.2g",
                               worst[0], worst[1], worst[2], worst[3])};
}

// ---------------------------------------------------------------------------
// 3. Epsilon-ball invariant

Outcome epsilon_ball() {
  auto enc = mmpoison::testing::toy_encoder(0);
  const StubCaptionLLM llm;
  const ToyRenderImageSynth synth(enc);
  LPAConfig cfg;  // eps = 8/255, T = 200
  double worst_excess = -1.0;
  bool bounds = true;
  std::size_t iterates = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& q = bench().queries[i];
    const auto init = lpa_bb_craft(q, llm, synth);
    const auto out = lpa_rt_optimize(init, q, *enc, cfg);
    if (out.trace.max_perturbation.size() != static_cast<std::size_t>(cfg.steps) + 1) return {};
    for (std::size_t t = 0; t < out.trace.max_perturbation.size(); ++t) {
      worst_excess = std::max(worst_excess, out.trace.max_perturbation[t] - cfg.epsilon);
      bounds = bounds && out.trace.pixel_min[t] >= 0.0 && out.trace.pixel_max[t] <= 1.0;
      ++iterates;
    }
    // Re-measure the final image independently.
    const auto a = out.entry.image.to_doubles();
    const auto c = init.entry.image.to_doubles();
    for (std::size_t k = 0; k < a.size(); ++k) {
      worst_excess = std::max(worst_excess, std::abs(a[k] - c[k]) - cfg.epsilon);
    }
  }
  return {worst_excess <= 1e-9 && bounds,
          fmt("%.0f iterates, max(||I_t - I_0|| - eps) = %.3g, pixel bounds ok = %.0f",
              static_cast<double>(iterates), worst_excess, bounds ? 1.0 : 0.0)};
}

// ---------------------------------------------------------------------------
// Brute-force top-1 over the attacked knowledge base.

KnowledgeBase attacked_kb(const ExperimentResult& r) {
  KnowledgeBase kb = bench().kb;
  for (const auto& a : r.craft.artifacts) kb.insert(a.entry);
  return kb;
}

std::string brute_top1(const std::string& question, const KnowledgeBase& kb,
                       const EncoderBackend& enc) {
  const Embedding q = enc.text_embed(question);
  std::string best;
  double best_score = -2.0;
  for (const auto& e : kb.entries()) {
    const double s = cosine(enc.image_embed(e.image), q);
    if (s > best_score || (s == best_score && e.entry_id < best)) {
      best_score = s;
      best = e.entry_id;
    }
  }
  return best;
}

// 4. LPA dominance

Outcome lpa_dominance() {
  const auto& r = run_named("lpa_rt");
  const auto& a = r.report.aggregates;
  auto enc = mmpoison::testing::toy_encoder(0);
  const KnowledgeBase kb = attacked_kb(r);
  int agree = 0;
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    agree += r.traces[i].contexts_used.front() ==
             brute_top1(r.craft.queries[i].question, kb, *enc);
  }
  const bool ok = a.r_pois && *a.r_pois >= 0.9 && a.r_orig <= 0.1 && a.acc_pois &&
                  *a.acc_pois >= 0.9 && agree == static_cast<int>(r.traces.size()) &&
                  r.traces.size() == 50;
  return {ok, fmt("r_pois %.3f, r_orig %.3f, acc_pois %.3f, brute-force agreement %.0f/50",
                  a.r_pois.value_or(-1), a.r_orig, a.acc_pois.value_or(-1), agree)};
}

// 5. GPA collapse

Outcome gpa_collapse() {
  const auto& r = run_named("gpa_rt_single");
  const auto& a = r.report.aggregates;
  auto enc = mmpoison::testing::toy_encoder(0);
  const KnowledgeBase kb = attacked_kb(r);
  int top1 = 0;
  int agree = 0;
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    top1 += r.traces[i].contexts_used.front() == "gpa_rt-0";
    agree += r.traces[i].contexts_used.front() ==
             brute_top1(r.craft.queries[i].question, kb, *enc);
  }
  const double rate = static_cast<double>(top1) / static_cast<double>(r.traces.size());
  const bool ok = r.craft.artifacts.size() == 1 && rate >= 0.95 && a.r_orig <= 0.05 &&
                  a.acc_orig <= 0.05 && agree == static_cast<int>(r.traces.size());
  return {ok, fmt("GPA top-1 on %.1f%% of queries, r_orig %.3f, acc_orig %.3f", 100.0 * rate,
                  a.r_orig, a.acc_orig)};
}

// 6. GPA-RtRrGen reduction identities

Outcome gpa_reductions() {
  auto enc = mmpoison::testing::toy_encoder(0);
  const ToyReranker rr(enc);
  const ToyGenerator gen(enc);
  const GpaBackends backends{enc.get(), &rr, &gen};
  const auto& queries = bench().queries;

  GPAConfig cfg;
  cfg.num_entries = 1;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.0;
  const auto joint = gpa_rtrrgen_optimize(queries, bench().kb, backends, cfg);
  const auto rt = gpa_rt_optimize(queries, *enc, cfg);
  const bool identical = joint.entry.image == rt[0].entry.image &&
                         joint.trace.loss_rt == rt[0].trace.losses &&
                         joint.trace.losses == rt[0].trace.losses;

  cfg.lambda1 = 0.4;
  cfg.lambda2 = 0.3;
  const auto mixed = gpa_rtrrgen_optimize(queries, bench().kb, backends, cfg);
  const auto& t = mixed.trace;
  const bool improves = t.loss_rt.back() > t.loss_rt.front() &&
                        t.loss_rr.back() > t.loss_rr.front() &&
                        t.loss_gen.back() > t.loss_gen.front();
  return {identical && improves,
          std::string(identical ? "lambda1=1 bit-exact" : "lambda1=1 DIFFERS") +
              fmt("; (0.4, 0.3): rt %.3g -> %.3g, rr %.3g -> %.3g", t.loss_rt.front(),
                  t.loss_rt.back(), t.loss_rr.front(), t.loss_rr.back()) +
              fmt(", gen %.3g -> %.3g", t.loss_gen.front(), t.loss_gen.back())};
}

// 7. Reranker trigger

Outcome reranker_trigger() {
  const auto& r = run_named("gpa_rtrrgen");
  const std::string id = r.craft.artifacts.at(0).entry.entry_id;
  const bool verbatim = r.craft.artifacts[0].entry.caption == std::string(kGpaTriggerCaption);
  int survived = 0;
  int sorry = 0;
  for (const auto& t : r.traces) {
    if (std::find(t.contexts_used.begin(), t.contexts_used.end(), id) == t.contexts_used.end()) {
      continue;
    }
    ++survived;
    sorry += t.answer == "sorry";
  }
  const double rate = static_cast<double>(survived) / static_cast<double>(r.traces.size());
  const bool ok = verbatim && r.report.setup.find("rerank=image_caption") != std::string::npos &&
                  rate >= 0.95 && sorry == survived;
  return {ok, fmt("survived reranking on %.1f%% of queries; 'sorry' on %.0f of %.0f survivors",
                  100.0 * rate, sorry, survived)};
}

// 8. Transfer asymmetry

Outcome transfer_asymmetry() {
  std::string detail;
  bool ok = true;
  for (std::uint64_t seed_a : {0u, 1u, 2u}) {
    auto cfg = load_config("lpa_rt.conf", {{"experiment", "seed", std::to_string(seed_a)},
                                           {"backends", "retriever_seed", std::to_string(seed_a)}});
    const BackendSpec a = cfg.retriever;
    const BackendSpec b{"toy", seed_a + 1000};
    const auto direct = run_experiment(cfg);
    const auto transfer = run_transfer(cfg, {a, b});
    const double ra = transfer[0].report.aggregates.r_pois.value_or(-1);
    const double rb = transfer[1].report.aggregates.r_pois.value_or(-1);
    const bool self = report_to_json(transfer[0].report) == report_to_json(direct.report);
    ok = ok && rb <= ra && self;
    detail += fmt("[A=%.0f: r_pois(A) %.2f, r_pois(B) %.2f, self-identical %.0f] ",
                  static_cast<double>(seed_a), ra, rb, self ? 1.0 : 0.0);
  }
  return {ok, detail};
}

// 9. Defense ineffectiveness

std::set<std::string> trigrams(const std::string& text) {
  const std::string t = ToyEncoder::normalize_text(text);
  std::set<std::string> out;
  for (std::size_t i = 0; i + 3 <= t.size(); ++i) out.insert(t.substr(i, 3));
  return out;
}

Outcome defense_ineffective() {
  // Paraphraser quality: share of question trigrams kept.
  const StubCaptionLLM llm;
  double worst_keep = 1.0;
  for (const auto& q : bench().queries) {
    const auto original = trigrams(q.question);
    for (const auto& p : llm.paraphrase(q.question)) {
      const auto kept = trigrams(p);
      double n = 0;
      for (const auto& g : original) n += kept.count(g);
      worst_keep = std::min(worst_keep, n / static_cast<double>(original.size()));
    }
  }

  const auto& undefended = run_named("gpa_rt_single");
  auto cfg = load_config("gpa_rt.conf", {{"gpa", "num_entries", "1"}, {"defense", "enabled", "true"}});
  const auto defended = run_experiment(cfg);
  const double u = undefended.report.aggregates.r_pois.value_or(-1);
  const double d = defended.report.aggregates.r_pois.value_or(-1);

  // Disabled defense: trace-identical to the plain pipeline.
  const auto backends = make_backends(load_config("gpa_rt.conf", {{"gpa", "num_entries", "1"}}));
  const KnowledgeBase kb = attacked_kb(undefended);
  const DefenseConfig off;
  bool identical = true;
  for (std::size_t i = 0; i < undefended.craft.queries.size(); ++i) {
    const auto& q = undefended.craft.queries[i];
    const auto plain = run_pipeline(q, kb, PipelineConfig{}, backends.pipeline);
    const auto guarded = run_defended_pipeline(q, kb, PipelineConfig{}, backends.pipeline, off,
                                               backends.caption_llm.get());
    identical = identical && plain == guarded && plain == undefended.traces[i];
  }
  const bool ok = worst_keep >= 0.8 && std::abs(u - d) <= 0.1 && identical;
  return {ok, fmt("trigram retention >= %.2f; r_pois undefended %.3f vs defended %.3f; "
                  "disabled path identical %.0f",
                  worst_keep, u, d, identical ? 1.0 : 0.0)};
}

// 10. Determinism

Outcome determinism() {
  bool ok = true;
  std::string detail;
  for (auto& [tag, cfg] : acceptance_configs()) {
    run_named(tag);
    cfg.out_dir = work_dir() / "run2" / tag;
    run_experiment(cfg);
    const bool same = slurp(work_dir() / "run1" / tag / "report.json") ==
                      slurp(work_dir() / "run2" / tag / "report.json");
    ok = ok && same;
    detail += tag + (same ? " identical; " : " DIFFERS; ");
  }
  return {ok, detail};
}

// 11. Persistence fidelity

Outcome persistence() {
  const auto& r = run_named("lpa_rt");
  const auto loaded = kb_load(work_dir() / "run1" / "lpa_rt" / "artifacts");
  double worst = 0.0;
  bool all_found = loaded.size() == r.craft.artifacts.size();
  for (const auto& a : r.craft.artifacts) {
    const auto* e = loaded.find(a.entry.entry_id);
    if (!e || !(*e == a.entry)) {
      all_found = false;
      continue;
    }
    worst = std::max(worst, max_abs_diff(e->image, a.entry.image));
  }

  auto cfg = load_config("lpa_rt.conf", {{"experiment", "image_mode", "quantized"}});
  const auto q = run_experiment(cfg);
  const bool separate = q.report.image_mode == "quantized" && r.report.image_mode == "float" &&
                        q.report.setup != r.report.setup &&
                        q.report.setup.find("quantized") != std::string::npos;
  const double f_pois = r.report.aggregates.r_pois.value_or(-1);
  const double q_pois = q.report.aggregates.r_pois.value_or(-1);
  const bool ok = all_found && worst == 0.0 && separate;
  return {ok, fmt("save/load max error %.3g over %.0f artifacts; r_pois float %.3f vs "
                  "quantized %.3f",
                  worst, static_cast<double>(r.craft.artifacts.size()), f_pois, q_pois)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle},
      {"gradient correctness", gradient_correctness},
      {"epsilon-ball invariant", epsilon_ball},
      {"LPA dominance", lpa_dominance},
      {"GPA collapse", gpa_collapse},
      {"GPA-RtRrGen reduction identities", gpa_reductions},
      {"reranker trigger", reranker_trigger},
      {"transfer asymmetry", transfer_asymmetry},
      {"defense ineffectiveness", defense_ineffective},
      {"determinism", determinism},
      {"persistence fidelity", persistence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
