#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/adapters.hpp"
#include "mmpoison/attacks.hpp"
#include "mmpoison/config_file.hpp"
#include "mmpoison/datasets.hpp"
#include "mmpoison/defense.hpp"
#include "mmpoison/metrics.hpp"
#include "mmpoison/pipeline.hpp"

namespace mmpoison {

/// A model backend by registry name. "toy" is built in; the seed selects an
/// independent random toy encoder.
struct BackendSpec {
  std::string kind = "toy";
  std::uint64_t seed = 0;

  friend bool operator==(const BackendSpec&, const BackendSpec&) = default;
};

enum class ImageMode {
  kFloat,      // poisoned images evaluated exactly as optimised
  kQuantized,  // poisoned images rounded to 8-bit before injection
};

std::string_view to_string(ImageMode mode);
ImageMode parse_image_mode(std::string_view s);

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out_dir;  // empty: nothing is written

  /// "synthetic" or a directory for ingest().
  std::string dataset_source = "synthetic";
  DatasetSchema schema = DatasetSchema::kMmqaLike;
  SynthConfig synth;
  bool filter = false;

  BackendSpec retriever;
  BackendSpec reranker;
  BackendSpec generator;
  std::string caption_llm = "stub";  // stub | command
  bool identity_paraphrases = false;
  ExternalModelSpec caption_llm_spec;
  std::string image_synth = "toy_render";  // toy_render | hash | command
  ExternalModelSpec image_synth_spec;
  ImageSynthConfig image_synth_config;

  PipelineConfig pipeline;
  std::optional<AttackKind> attack;  // nullopt: clean control run
  LPAConfig lpa;
  GPAConfig gpa;
  DefenseConfig defense;
  EvalMode eval_mode = EvalMode::kEm;
  ImageMode image_mode = ImageMode::kFloat;

  /// Throws ConfigError.
  void validate() const;
};

/// Reads an experiment from a config file (see README for the keys).
ExperimentConfig experiment_from_config(const ConfigFile& file);

/// Flat "section.key" echo stored in every report.
std::map<std::string, std::string> config_echo(const ExperimentConfig& config);

/// Instantiated models for one experiment.
struct BackendSet {
  Backends pipeline;
  std::shared_ptr<const CaptionLLMAdapter> caption_llm;
  std::shared_ptr<const ImageSynthAdapter> image_synth;
};

/// Registry lookup. Throws ConfigError for unknown kinds.
BackendSet make_backends(const ExperimentConfig& config);
std::shared_ptr<const EncoderBackend> make_encoder(const BackendSpec& spec);

/// Loads or generates the dataset, then applies the answerability filter if
/// enabled.
DatasetManifest load_dataset(const ExperimentConfig& config, const BackendSet& backends);

/// Crafted poison plus the queries annotated with A^adv and P_i.
struct CraftResult {
  std::vector<QueryRecord> queries;
  std::vector<AttackArtifact> artifacts;
  std::optional<std::string> gpa_target;
};

CraftResult craft_attack(const ExperimentConfig& config, const DatasetManifest& dataset,
                         const BackendSet& backends);

/// Everything produced by an evaluation.
struct ExperimentResult {
  EvalReport report;
  std::vector<PipelineTrace> traces;
  CraftResult craft;
};

/// Injects `craft` into a copy of the dataset's kb and evaluates every query.
ExperimentResult evaluate_attack(const ExperimentConfig& config, const DatasetManifest& dataset,
                                 const BackendSet& backends, CraftResult craft);

/// load -> craft -> inject (copy) -> pipeline -> report; writes report.json,
/// report.csv, table.txt, trace.jsonl and artifacts/ under out_dir when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Crafts once with the configured backends, then evaluates the same
/// artifact bytes with each retriever in `eval_retrievers`.
std::vector<ExperimentResult> run_transfer(const ExperimentConfig& craft_config,
                                           const std::vector<BackendSpec>& eval_retrievers);

/// Writes the standard output files for one result into `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

enum class ReportFormat { kCsv, kTable, kJson };

ReportFormat parse_report_format(std::string_view s);

/// Renders aggregate rows: setup x (R_Orig, R_Pois, ACC_Orig, ACC_Pois).
std::string render_report(std::span<const EvalReport> reports, ReportFormat format);

/// Parses render_report(..., kCsv) back into aggregate-only reports.
std::vector<EvalReport> reports_from_csv(std::string_view csv);

/// Writes render_report output to `path`.
void emit_report(std::span<const EvalReport> reports, ReportFormat format,
                 const std::filesystem::path& path);

}  // namespace mmpoison
