#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/harness.hpp"

namespace fs = std::filesystem;
using namespace mmpoison;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required) {
  cmd->add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override [experiment] seed");
  auto* out = cmd->add_option("--out", o.out, "Output directory");
  if (out_required) out->required();
}

ConfigFile load_config(const CommonOptions& o) {
  ConfigFile file = o.config.empty() ? ConfigFile{} : ConfigFile::load(o.config);
  if (o.seed) file.set("experiment", "seed", std::to_string(*o.seed));
  if (!o.out.empty()) file.set("experiment", "out", o.out);
  return file;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void print_table(const EvalReport& report) {
  std::cout << render_report(std::span<const EvalReport>(&report, 1), ReportFormat::kTable);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmpoison: knowledge-poisoning attacks and evaluation for multimodal RAG"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string source;
  std::string schema = "mmqa_like";
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a JSONL dataset and re-serialise it");
  ingest_cmd->add_option("--source", source, "Directory with questions.jsonl and contexts.jsonl")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--schema", schema, "mmqa_like or webqa_like");
  ingest_cmd->add_option("--out", common.out, "Output directory")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic desk-scale benchmark");
  add_common(synth_cmd, common, true);

  auto* filter_cmd =
      app.add_subcommand("filter", "Keep only queries the generator cannot answer closed-book");
  add_common(filter_cmd, common, true);

  auto* attack_cmd = app.add_subcommand("attack", "Craft poisoned entries without evaluating");
  add_common(attack_cmd, common, true);

  auto* run_cmd = app.add_subcommand("run", "Run an end-to-end attack experiment");
  add_common(run_cmd, common, false);

  auto* defend_cmd = app.add_subcommand("defend", "Run an experiment with query paraphrasing");
  add_common(defend_cmd, common, false);

  std::vector<std::uint64_t> eval_seeds;
  auto* transfer_cmd =
      app.add_subcommand("transfer", "Craft once, evaluate under other toy retriever seeds");
  add_common(transfer_cmd, common, false);
  transfer_cmd->add_option("--eval-seed", eval_seeds, "Retriever seed to evaluate under")
      ->required();

  std::vector<std::string> inputs;
  std::string format = "table";
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Render report.json files as csv/table/json");
  report_cmd->add_option("--in", inputs, "report.json files")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", format, "csv, table or json");
  report_cmd->add_option("--out", report_out, "Output file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest_cmd->parsed()) {
      const auto m = ingest(source, parse_dataset_schema(schema));
      write_dataset(m, common.out);
      std::cout << "ingested " << m.queries.size() << " queries, " << m.kb.size()
                << " contexts (" << m.distractor_count() << " unreferenced) -> " << common.out
                << "\n";
    } else if (synth_cmd->parsed() || filter_cmd->parsed()) {
      const auto cfg = experiment_from_config(load_config(common));
      const auto backends = make_backends(cfg);
      auto m = load_dataset(cfg, backends);
      if (filter_cmd->parsed() && !cfg.filter) {
        const GeneratorBackend* answerers[] = {backends.pipeline.generator.get()};
        m.queries = filter_queries(m.queries, answerers, cfg.eval_mode);
      }
      write_dataset(m, cfg.out_dir);
      std::cout << "wrote " << m.queries.size() << " queries, " << m.kb.size() << " entries -> "
                << cfg.out_dir.string() << "\n";
    } else if (attack_cmd->parsed()) {
      const auto cfg = experiment_from_config(load_config(common));
      if (!cfg.attack) throw ConfigError("[attack] kind must be set for the attack verb");
      const auto backends = make_backends(cfg);
      const auto dataset = load_dataset(cfg, backends);
      ExperimentResult result;
      result.craft = craft_attack(cfg, dataset, backends);
      KnowledgeBase poisoned;
      for (const auto& a : result.craft.artifacts) poisoned.insert(a.entry);
      kb_save(poisoned, cfg.out_dir / "artifacts");
      std::cout << "crafted " << result.craft.artifacts.size() << " poisoned entries -> "
                << (cfg.out_dir / "artifacts").string() << "\n";
    } else if (run_cmd->parsed() || defend_cmd->parsed()) {
      ConfigFile file = load_config(common);
      if (defend_cmd->parsed()) file.set("defense", "enabled", "true");
      const auto cfg = experiment_from_config(file);
      const auto result = run_experiment(cfg);
      print_table(result.report);
    } else if (transfer_cmd->parsed()) {
      const auto cfg = experiment_from_config(load_config(common));
      std::vector<BackendSpec> specs;
      for (auto s : eval_seeds) specs.push_back(BackendSpec{cfg.retriever.kind, s});
      const auto results = run_transfer(cfg, specs);
      std::vector<EvalReport> reports;
      for (const auto& r : results) reports.push_back(r.report);
      std::cout << render_report(reports, ReportFormat::kTable);
    } else if (report_cmd->parsed()) {
      std::vector<EvalReport> reports;
      for (const auto& in : inputs) reports.push_back(report_from_json(read_text(in)));
      const auto fmt = parse_report_format(format);
      if (report_out.empty()) {
        std::cout << render_report(reports, fmt);
      } else {
        emit_report(reports, fmt, report_out);
      }
    }
  } catch (const Error& e) {
    std::cerr << "mmpoison: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
