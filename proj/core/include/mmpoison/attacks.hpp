#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmpoison/backends.hpp"
#include "mmpoison/knowledge_base.hpp"
#include "mmpoison/pipeline.hpp"
#include "mmpoison/prompts.hpp"
#include "mmpoison/types.hpp"

namespace mmpoison {

/// How an ascent step uses the gradient: x += alpha * g, or x += alpha * sign(g).
enum class StepRule { kSign, kGradient };

std::string_view to_string(StepRule rule);
StepRule parse_step_rule(std::string_view s);

/// LPA-Rt: projected ascent inside an L-inf ball around the LPA-BB image.
struct LPAConfig {
  double epsilon = 8.0 / 255.0;
  double alpha = 1.0 / 255.0;
  int steps = 200;
  StepRule step_rule = StepRule::kSign;
  std::uint64_t seed = 0;

  /// epsilon in [0, 1], alpha > 0, alpha <= epsilon when epsilon > 0, steps >= 0.
  void validate() const;
};

enum class GpaObjectiveForm {
  kSumCos,         // sum_i cos(f_I(x), f_T(Q_i))
  kMeanEmbedding,  // cos(f_I(x), normalize(mean_i f_T(Q_i)))
};

std::string_view to_string(GpaObjectiveForm form);
GpaObjectiveForm parse_objective_form(std::string_view s);

/// GPA-Rt and GPA-RtRrGen settings.
struct GPAConfig {
  double alpha = 0.01;
  int steps = 500;
  /// L_Total = lambda1 L_Rt + lambda2 L_Rr + (1 - lambda1 - lambda2) L_Gen.
  double lambda1 = 0.4;
  double lambda2 = 0.3;
  std::string target_string = "sorry";
  std::string trigger_caption{kGpaTriggerCaption};
  int num_entries = 5;
  GpaObjectiveForm objective_form = GpaObjectiveForm::kSumCos;
  StepRule step_rule = StepRule::kGradient;
  /// Optimise once and copy into every entry instead of independent inits.
  bool share_image = false;
  /// Mode used for L_Rr during GPA-RtRrGen optimisation.
  RerankMode rerank_mode = RerankMode::kImageOnly;
  /// m: X_i holds the poisoned pair plus the top (m - 1) benign contexts.
  int contexts_m = 1;
  std::uint32_t height = 32;
  std::uint32_t width = 32;
  std::uint32_t channels = 3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OptimTrace {
  std::vector<double> losses;            // objective at t = 0..T
  std::vector<double> max_perturbation;  // ||I_t - I_0||_inf (LPA-Rt only)
  std::vector<double> pixel_min;         // min / max pixel of I_t (LPA-Rt only)
  std::vector<double> pixel_max;
  std::vector<double> loss_rt;           // GPA-RtRrGen components per step
  std::vector<double> loss_rr;
  std::vector<double> loss_gen;
  /// GPA-RtRrGen: ids of the frozen benign part of X_i, parallel to the
  /// artifact's target_query_ids.
  std::vector<std::vector<std::string>> generation_contexts;
};

/// A crafted poisoned entry and how it was made.
struct AttackArtifact {
  KnowledgeEntry entry;
  std::vector<std::string> target_query_ids;
  std::optional<std::string> adversarial_answer;
  OptimTrace trace;
};

/// LPA-BB: ask the caption LLM for (wrong answer, poisoned caption), then
/// synthesize the image. A wrong answer equal to the gold one (after EM
/// normalisation) is re-requested up to `max_retries` times, then CraftingError.
AttackArtifact lpa_bb_craft(const QueryRecord& query, const CaptionLLMAdapter& caption_llm,
                            const ImageSynthAdapter& image_synth, int max_retries = 3);

/// Element-wise clamp into [center - eps, center + eps] intersected with [0, 1].
/// The float result never leaves the ball, even after rounding.
ImageTensor project_epsilon_ball(const ImageTensor& image, const ImageTensor& center,
                                 double epsilon);

/// LPA-Rt: I_{t+1} = Proj(I_t + alpha * step(grad cos(f_I(I_t), f_T(Q)))).
/// Throws CapabilityError if the encoder has no gradients.
AttackArtifact lpa_rt_optimize(const AttackArtifact& init, const QueryRecord& query,
                               const EncoderBackend& encoder, const LPAConfig& config);

/// Retrieval objective over a query set; query embeddings are accumulated in a
/// canonical order (question text, then id), so input order never matters.
class RetrievalObjective {
 public:
  RetrievalObjective(std::span<const QueryRecord> queries, const EncoderBackend& encoder,
                     GpaObjectiveForm form);

  [[nodiscard]] ValueGrad evaluate(const ImageTensor& image) const;
  [[nodiscard]] double value(const ImageTensor& image) const;

 private:
  const EncoderBackend& encoder_;
  std::vector<double> cotangent_;
};

/// GPA-Rt: `num_entries` unconstrained ascents from clamped N(0, 1) noise
/// (seed + index), caption fixed to the trigger sentence.
std::vector<AttackArtifact> gpa_rt_optimize(std::span<const QueryRecord> queries,
                                            const EncoderBackend& encoder,
                                            const GPAConfig& config);

struct GpaBackends {
  const EncoderBackend* retriever = nullptr;
  const RerankBackend* reranker = nullptr;
  const GeneratorBackend* generator = nullptr;
};

/// L_Total and its pieces at one image.
struct GpaEvaluation {
  double total = 0.0;
  double rt = 0.0;
  double rr = 0.0;
  double gen = 0.0;
  std::vector<double> grad;  // d L_Total / d pixels
};

/// The joint GPA-RtRrGen objective with X_i frozen at construction.
class GpaTotalObjective {
 public:
  GpaTotalObjective(std::span<const QueryRecord> queries, const KnowledgeBase& kb,
                    const GpaBackends& backends, const GPAConfig& config);

  [[nodiscard]] GpaEvaluation evaluate(const ImageTensor& image) const;

  [[nodiscard]] const std::vector<std::vector<std::string>>& frozen_context_ids() const {
    return context_ids_;
  }

 private:
  GpaBackends backends_;
  GPAConfig config_;
  RetrievalObjective retrieval_;
  std::vector<std::string> questions_;
  std::vector<std::vector<std::string>> context_ids_;
  std::vector<std::vector<const KnowledgeEntry*>> contexts_;
};

/// GPA-RtRrGen: one entry ascending L_Total. Requires num_entries == 1 and
/// gradient-capable backends; (lambda1, lambda2) must lie in the simplex.
AttackArtifact gpa_rtrrgen_optimize(std::span<const QueryRecord> queries, const KnowledgeBase& kb,
                                    const GpaBackends& backends, const GPAConfig& config);

/// Clamped N(0, 1) noise image from `seed`.
ImageTensor gaussian_init(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                          std::uint64_t seed);

}  // namespace mmpoison
