#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/embedding.hpp"
#include "mmpoison/image.hpp"
#include "mmpoison/types.hpp"

namespace mmpoison {

/// Ordered generator context, best-ranked first. Pointers are non-owning.
using ContextList = std::span<const KnowledgeEntry* const>;

/// A scalar objective together with its gradient w.r.t. the image pixels.
struct ValueGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Retriever encoder pair: f_T for text, f_I for images, both unit-normalised.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Embedding text_embed(std::string_view text) const = 0;
  [[nodiscard]] virtual Embedding image_embed(const ImageTensor& image) const = 0;

  [[nodiscard]] virtual bool supports_grad() const { return false; }

  /// Vector-Jacobian product: d/dx [cotangent . image_embed(x)], one value per
  /// pixel of `image`. Throws CapabilityError unless supports_grad().
  [[nodiscard]] virtual std::vector<double> image_embed_grad(
      const ImageTensor& image, std::span<const double> cotangent) const;

  /// False if concurrent calls are unsafe; the harness then runs single-threaded.
  [[nodiscard]] virtual bool thread_safe() const { return true; }
};

/// MLLM reranker scoring P("Yes") for the relevance prompt.
class RerankBackend {
 public:
  virtual ~RerankBackend() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual double yes_prob(std::string_view question, const ImageTensor& image,
                                        std::string_view caption, RerankMode mode) const = 0;

  [[nodiscard]] virtual bool supports_grad() const { return false; }

  /// Image gradient of log yes_prob.
  [[nodiscard]] virtual std::vector<double> log_yes_prob_grad(std::string_view question,
                                                              const ImageTensor& image,
                                                              std::string_view caption,
                                                              RerankMode mode) const;

  /// sum_i log yes_prob(q_i, image, caption) with gradient. The default loops
  /// over the single-query calls; backends may batch.
  [[nodiscard]] virtual ValueGrad sum_log_yes_prob(std::span<const std::string> questions,
                                                   const ImageTensor& image,
                                                   std::string_view caption,
                                                   RerankMode mode) const;

  [[nodiscard]] virtual bool thread_safe() const { return true; }
};

/// One query's slot in a batched generator objective.
struct GenerationQuery {
  std::string_view question;
  ContextList contexts;  // X_i without the optimised pair itself
};

/// MLLM generator.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::string generate(std::string_view question,
                                             ContextList contexts) const = 0;

  /// Closed-book answer, used by the answerability filter.
  [[nodiscard]] virtual std::string answer_without_context(std::string_view question) const;

  /// log P(target | question, image, caption, contexts) <= 0.
  [[nodiscard]] virtual double target_logprob(std::string_view question, const ImageTensor& image,
                                              std::string_view caption, ContextList contexts,
                                              std::string_view target) const = 0;

  [[nodiscard]] virtual bool supports_grad() const { return false; }

  [[nodiscard]] virtual std::vector<double> target_logprob_grad(std::string_view question,
                                                                const ImageTensor& image,
                                                                std::string_view caption,
                                                                ContextList contexts,
                                                                std::string_view target) const;

  [[nodiscard]] virtual ValueGrad sum_target_logprob(std::span<const GenerationQuery> queries,
                                                     const ImageTensor& image,
                                                     std::string_view caption,
                                                     std::string_view target) const;

  [[nodiscard]] virtual bool thread_safe() const { return true; }
};

struct PoisonPair {
  std::string wrong_answer;
  std::string poison_image_caption;
};

/// Text LLM used for LPA-BB crafting and for the paraphrasing defense.
class CaptionLLMAdapter {
 public:
  virtual ~CaptionLLMAdapter() = default;
  [[nodiscard]] virtual PoisonPair poison_pair(std::string_view question,
                                               std::string_view correct_answer) const = 0;
  [[nodiscard]] virtual std::vector<std::string> paraphrase(std::string_view question) const = 0;
};

struct ImageSynthConfig {
  double guidance_scale = 3.5;
  int denoise_steps = 28;
  std::uint32_t height = 32;
  std::uint32_t width = 32;
  std::uint32_t channels = 3;
  std::uint64_t seed = 0;
};

/// Text-to-image model (a diffusion service in real deployments).
class ImageSynthAdapter {
 public:
  virtual ~ImageSynthAdapter() = default;
  [[nodiscard]] virtual ImageTensor synthesize(std::string_view caption) const = 0;
  [[nodiscard]] virtual const ImageSynthConfig& config() const = 0;
};

}  // namespace mmpoison
