#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "mmpoison/error.hpp"
#include "mmpoison/metrics.hpp"
#include "test_support.hpp"

using namespace mmpoison;
using mmpoison::testing::random_image;

namespace {

QueryRecord query(std::string id, std::string answer, std::vector<std::string> gold,
                  std::optional<std::string> adv = std::nullopt,
                  std::vector<std::string> poison = {}) {
  QueryRecord q;
  q.query_id = std::move(id);
  q.question = "question " + q.query_id;
  q.gold_answer = std::move(answer);
  q.gold_context_ids = std::move(gold);
  q.adversarial_answer = std::move(adv);
  q.adversarial_entry_ids = std::move(poison);
  return q;
}

KnowledgeBase kb_with(const std::vector<std::string>& benign, const std::vector<std::string>& poison) {
  KnowledgeBase kb;
  const auto img = random_image(1, 4, 4, 3);
  for (const auto& id : benign) kb.insert(KnowledgeEntry::benign(id, img, "c"));
  for (const auto& id : poison) {
    kb.insert(KnowledgeEntry::poisoned(id, img, "c", AttackKind::kLpaBb));
  }
  return kb;
}

// Answers questions closed-book from a fixed table.
class TableGenerator final : public GeneratorBackend {
 public:
  explicit TableGenerator(std::map<std::string, std::string> table) : table_(std::move(table)) {}
  std::string name() const override { return "table"; }
  std::string generate(std::string_view, ContextList) const override { return ""; }
  std::string answer_without_context(std::string_view q) const override {
    const auto it = table_.find(std::string(q));
    return it == table_.end() ? "no idea" : it->second;
  }
  double target_logprob(std::string_view, const ImageTensor&, std::string_view, ContextList,
                        std::string_view) const override {
    return 0.0;
  }

 private:
  std::map<std::string, std::string> table_;
};

}  // namespace

TEST(Normalize, OpenDomainQaRules) {
  EXPECT_EQ(normalize_answer("  The Eiffel   Tower! "), "eiffel tower");
  EXPECT_EQ(normalize_answer("An apple, a day"), "apple day");
  EXPECT_EQ(normalize_answer("theatre"), "theatre");
  EXPECT_EQ(eval_em("Eiffel Tower", "the eiffel tower."), 1);
  EXPECT_EQ(eval_em("Eiffel Tower", "eiffel towers"), 0);
}

TEST(KeyEntity, FractionOfWholeWordMatches) {
  const std::vector<std::string> ents{"Barack Obama", "Hawaii", "1961", "president"};
  EXPECT_DOUBLE_EQ(eval_key_entity(ents, "Obama was born in HAWAII in 1961."), 0.5);
  const std::vector<std::string> cat{"cat"};
  EXPECT_DOUBLE_EQ(eval_key_entity(cat, "concatenate"), 0.0);
  EXPECT_DOUBLE_EQ(eval_key_entity(cat, "The Cat sat"), 1.0);
  EXPECT_THROW((void)eval_key_entity(std::vector<std::string>{}, "x"), ContractError);
  EXPECT_DOUBLE_EQ(eval_answer(cat, "a cat", EvalMode::kKeyEntity), 1.0);
  EXPECT_DOUBLE_EQ(eval_answer(cat, "a cat", EvalMode::kEm), 1.0);
}

TEST(Recall, MicroAveragedHandExample) {
  // q1: gold {a, b} both retrieved, poison {p1} retrieved.
  // q2: gold {c, d, e}, only c retrieved, poison {p2} missed.
  // r_orig = 3 / 5 (a per-query mean would give 2 / 3); r_pois = 1 / 2.
  const auto kb = kb_with({"a", "b", "c", "d", "e", "x"}, {"p1", "p2"});
  const std::vector<QueryRecord> qs{query("q1", "y", {"a", "b"}, "z", {"p1"}),
                                    query("q2", "y", {"c", "d", "e"}, "z", {"p2"})};
  const std::vector<std::vector<std::string>> sets{{"a", "b", "p1"}, {"c", "x"}};
  const auto r = recall_pair(sets, qs, kb);
  EXPECT_DOUBLE_EQ(r.r_orig, 0.6);
  ASSERT_TRUE(r.r_pois.has_value());
  EXPECT_DOUBLE_EQ(*r.r_pois, 0.5);

  const std::vector<QueryRecord> clean{query("q1", "y", {"a", "b"})};
  EXPECT_FALSE(recall_pair(std::vector<std::vector<std::string>>{{"a"}}, clean, kb).r_pois);

  const std::vector<std::vector<std::string>> dangling{{"a", "ghost"}};
  EXPECT_THROW((void)recall_pair(dangling, clean, kb), DataError);
}

TEST(Accuracy, HandExample) {
  const std::vector<QueryRecord> qs{query("q1", "red", {"a"}, "blue"), query("q2", "cat", {"a"}, "dog"),
                                    query("q3", "one", {"a"}, "two"),
                                    query("q4", "sun", {"a"}, "moon")};
  const std::vector<std::string> answers{"Red", "dog", "three", "sun"};
  const auto a = accuracy_pair(qs, answers, EvalMode::kEm);
  EXPECT_DOUBLE_EQ(a.acc_orig, 0.5);
  ASSERT_TRUE(a.acc_pois.has_value());
  EXPECT_DOUBLE_EQ(*a.acc_pois, 0.25);

  const std::vector<std::string> refusals{"Sorry.", "sorry", "red", "no"};
  const auto g = accuracy_pair(qs, refusals, EvalMode::kEm, std::string("sorry"));
  EXPECT_DOUBLE_EQ(*g.acc_pois, 0.5);

  const std::vector<QueryRecord> clean{query("q1", "red", {"a"})};
  EXPECT_FALSE(accuracy_pair(clean, std::vector<std::string>{"red"}, EvalMode::kEm).acc_pois);
}

TEST(Filter, KeepsQueriesNoAnswererCanSolve) {
  const std::vector<QueryRecord> qs{query("q1", "red", {"a"}), query("q2", "cat", {"a"}),
                                    query("q3", "one", {"a"})};
  const TableGenerator g1(std::map<std::string, std::string>{{"question q1", "The red."}});
  const TableGenerator g2(std::map<std::string, std::string>{{"question q2", "cat"}, {"question q3", "two"}});
  const std::vector<const GeneratorBackend*> both{&g1, &g2};
  const auto kept = filter_queries(qs, both, EvalMode::kEm);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].query_id, "q3");
  EXPECT_THROW((void)filter_queries(qs, std::vector<const GeneratorBackend*>{}, EvalMode::kEm),
               ContractError);
}

TEST(Report, AggregatesMatchIndependentCounts) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> benign;
    for (int i = 0; i < 12; ++i) benign.push_back("b" + std::to_string(i));
    const auto kb = kb_with(benign, {"p0", "p1", "p2"});
    std::vector<std::string> all = benign;
    all.insert(all.end(), {"p0", "p1", "p2"});

    std::vector<QueryRecord> qs;
    std::vector<PipelineTrace> traces;
    std::uniform_int_distribution<int> pick(0, static_cast<int>(all.size()) - 1);
    std::bernoulli_distribution coin(0.5);
    long gold_hits = 0, gold_total = 0, pois_hits = 0, pois_total = 0;
    double acc = 0.0, acc_pois = 0.0;
    const int n = 6;
    for (int i = 0; i < n; ++i) {
      std::set<std::string> gold{benign[static_cast<std::size_t>(pick(rng)) % benign.size()]};
      if (coin(rng)) gold.insert(benign[static_cast<std::size_t>(pick(rng)) % benign.size()]);
      const std::set<std::string> poison{"p" + std::to_string(i % 3)};
      qs.push_back(query("q" + std::to_string(i), "gold" + std::to_string(i),
                         {gold.begin(), gold.end()}, "adv" + std::to_string(i),
                         {poison.begin(), poison.end()}));
      std::set<std::string> retrieved;
      while (retrieved.size() < 3) retrieved.insert(all[static_cast<std::size_t>(pick(rng))]);
      PipelineTrace t;
      t.query_id = qs.back().query_id;
      t.contexts_used = {retrieved.begin(), retrieved.end()};
      const int roll = pick(rng) % 3;
      t.answer = roll == 0 ? qs.back().gold_answer : roll == 1 ? *qs.back().adversarial_answer : "x";
      traces.push_back(t);
      for (const auto& id : retrieved) {
        gold_hits += static_cast<long>(gold.count(id));
        pois_hits += static_cast<long>(poison.count(id));
      }
      gold_total += static_cast<long>(gold.size());
      pois_total += 1;
      acc += roll == 0;
      acc_pois += roll == 1;
    }
    const auto report = build_report(qs, traces, kb, EvalMode::kEm);
    EXPECT_NEAR(report.aggregates.r_orig, static_cast<double>(gold_hits) / gold_total, 1e-15);
    EXPECT_NEAR(*report.aggregates.r_pois, static_cast<double>(pois_hits) / pois_total, 1e-15);
    EXPECT_NEAR(report.aggregates.acc_orig, acc / n, 1e-15);
    EXPECT_NEAR(*report.aggregates.acc_pois, acc_pois / n, 1e-15);
    EXPECT_DOUBLE_EQ(report.aggregates.acc_orig_all, report.aggregates.acc_orig);
    EXPECT_TRUE(report.consistent());
  }
}

TEST(Report, JsonRoundTripAndTamperDetection) {
  const auto kb = kb_with({"a", "b", "c"}, {"p"});
  const std::vector<QueryRecord> qs{query("q1", "red", {"a"}, "blue", {"p"}),
                                    query("q2", "cat", {"b", "c"}, "dog", {"p"})};
  std::vector<PipelineTrace> traces(2);
  traces[0].contexts_used = {"p"};
  traces[0].answer = "blue";
  traces[1].contexts_used = {"b"};
  traces[1].answer = "cat";
  auto report = build_report(qs, traces, kb, EvalMode::kEm);
  report.setup = "lpa_rt N=1";
  report.config = {{"seed", "0"}};
  report.events = {"queries: 2 of 2 evaluated"};
  EXPECT_DOUBLE_EQ(report.aggregates.r_orig, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*report.aggregates.r_pois, 0.5);

  const auto text = report_to_json(report);
  const auto back = report_from_json(text);
  EXPECT_EQ(back, report);
  EXPECT_EQ(report_to_json(back), text);

  auto tampered = report;
  tampered.aggregates.acc_orig = 0.9;
  EXPECT_FALSE(tampered.consistent());
  EXPECT_THROW((void)report_from_json("{not json"), FormatError);
}

TEST(EvalModes, ParseRoundTrip) {
  for (auto m : {EvalMode::kEm, EvalMode::kKeyEntity}) EXPECT_EQ(parse_eval_mode(to_string(m)), m);
  EXPECT_THROW((void)parse_eval_mode("bleu"), ConfigError);
}
