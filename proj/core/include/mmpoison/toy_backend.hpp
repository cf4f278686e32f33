#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpoison/backends.hpp"

namespace mmpoison {

// Deterministic, analytically differentiable stand-ins for CLIP-style
// encoders, MLLM rerankers and generators.
//
// Text:  f_T(t) = normalize(W_T phi(t)); phi = 4096-bin hashed character
//        trigram counts of the lowercased, whitespace-collapsed text
//        (bin = fnv1a64(trigram) % bins). Empty features map to column 0 of W_T.
// Image: f_I(x) = normalize(W_I x + b), x the 32x32x3 pixels (bilinear
//        resample first if needed).
// W_T (D x bins), W_I (D x 3072) and b are i.i.d. N(0, 1/4096), drawn
// row-major with std::mt19937_64 seeded by derive_seed(seed, tag) for the tags
// "toy/text_weights", "toy/image_weights" and "toy/image_bias".

struct ToyEncoderConfig {
  std::uint64_t seed = 0;
  std::uint32_t dim = 64;
  std::uint32_t resolution = 32;
  std::uint32_t hash_bins = 4096;
};

class ToyEncoder final : public EncoderBackend {
 public:
  explicit ToyEncoder(ToyEncoderConfig config = {});

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] Embedding text_embed(std::string_view text) const override;
  [[nodiscard]] Embedding image_embed(const ImageTensor& image) const override;
  [[nodiscard]] bool supports_grad() const override { return true; }
  [[nodiscard]] std::vector<double> image_embed_grad(
      const ImageTensor& image, std::span<const double> cotangent) const override;

  /// Forward pass on raw double pixels of shape (height, width, channels).
  [[nodiscard]] Embedding embed_pixels(std::span<const double> pixels, std::uint32_t height,
                                       std::uint32_t width, std::uint32_t channels) const;

  /// Sparse hashed trigram counts.
  [[nodiscard]] std::map<std::uint32_t, double> text_features(std::string_view text) const;

  [[nodiscard]] const ToyEncoderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(config_.resolution) * config_.resolution * 3;
  }

  /// Lowercase + collapse whitespace runs to one space + trim.
  static std::string normalize_text(std::string_view text);

 private:
  // Pre-normalisation activation u = W_I x + b for canonical-resolution pixels.
  std::vector<double> activation(std::span<const double> canonical) const;
  std::vector<double> canonical_pixels(std::span<const double> pixels, std::uint32_t height,
                                       std::uint32_t width, std::uint32_t channels) const;

  ToyEncoderConfig config_;
  std::vector<double> text_weights_t_;  // bins x D (column j of W_T is contiguous)
  std::vector<double> image_weights_;   // D x pixels, row-major
  std::vector<double> image_bias_;      // D
};

/// P("Yes") = sigmoid(beta * s), s the relevance score:
///   image_only:    s = cos(f_I(image), f_T(question))
///   image_caption: s = (cos(f_I(image), f_T(q)) + cos(f_T(caption), f_T(q))) / 2,
///                  raised to max(s, trigger_floor) when the caption contains
///                  the GPA trigger sentence.
struct ToyRerankConfig {
  double beta = 10.0;
  double trigger_floor = 0.99;
};

class ToyReranker final : public RerankBackend {
 public:
  explicit ToyReranker(std::shared_ptr<const ToyEncoder> encoder, ToyRerankConfig config = {});

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] double yes_prob(std::string_view question, const ImageTensor& image,
                                std::string_view caption, RerankMode mode) const override;
  [[nodiscard]] bool supports_grad() const override { return true; }
  [[nodiscard]] std::vector<double> log_yes_prob_grad(std::string_view question,
                                                      const ImageTensor& image,
                                                      std::string_view caption,
                                                      RerankMode mode) const override;
  [[nodiscard]] ValueGrad sum_log_yes_prob(std::span<const std::string> questions,
                                           const ImageTensor& image, std::string_view caption,
                                           RerankMode mode) const override;

  /// Relevance score s before the sigmoid.
  [[nodiscard]] double relevance(std::string_view question, const ImageTensor& image,
                                 std::string_view caption, RerankMode mode) const;

 private:
  struct Score {
    double s;
    double image_weight;  // ds / d cos(f_I, f_T(q)); 0 when the trigger floor is active
  };
  Score score(const Embedding& image_emb, const Embedding& question_emb,
              std::string_view caption, RerankMode mode) const;

  std::shared_ptr<const ToyEncoder> encoder_;
  ToyRerankConfig config_;
};

/// Rule-based generator:
///   1. the first context (rank order) whose caption holds "ANSWER:<token>"
///      yields <token>;
///   2. else, if cos(f_I(top image), f_T(refusal)) > refusal_threshold, the
///      refusal string;
///   3. else the last whitespace token of the top caption.
/// target_logprob = log sigmoid(beta_g * cos(f_I(image), f_T(target))).
struct ToyGeneratorConfig {
  double beta_g = 10.0;
  std::string refusal = "sorry";
  double refusal_threshold = 0.8;
  std::string closed_book_answer;  // answer_without_context(); empty = "no idea"
};

class ToyGenerator final : public GeneratorBackend {
 public:
  explicit ToyGenerator(std::shared_ptr<const ToyEncoder> encoder, ToyGeneratorConfig config = {});

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] std::string generate(std::string_view question,
                                     ContextList contexts) const override;
  [[nodiscard]] std::string answer_without_context(std::string_view question) const override;
  [[nodiscard]] double target_logprob(std::string_view question, const ImageTensor& image,
                                      std::string_view caption, ContextList contexts,
                                      std::string_view target) const override;
  [[nodiscard]] bool supports_grad() const override { return true; }
  [[nodiscard]] std::vector<double> target_logprob_grad(std::string_view question,
                                                        const ImageTensor& image,
                                                        std::string_view caption,
                                                        ContextList contexts,
                                                        std::string_view target) const override;
  [[nodiscard]] ValueGrad sum_target_logprob(std::span<const GenerationQuery> queries,
                                             const ImageTensor& image, std::string_view caption,
                                             std::string_view target) const override;

 private:
  std::shared_ptr<const ToyEncoder> encoder_;
  ToyGeneratorConfig config_;
};

/// Token following "ANSWER:" in `caption`, if any.
std::optional<std::string> find_answer_marker(std::string_view caption);

/// Numerically stable log(sigmoid(z)).
double log_sigmoid(double z) noexcept;
double sigmoid(double z) noexcept;

/// Template-engine caption LLM for tests and desk-scale runs.
///   poison_pair(q, a) = ("NOT-" + a, "an image of <q> ANSWER:NOT-<a>")
///   paraphrase(q)     = five light rewrites that keep every original trigram
///                       (or five copies of q when `identity_paraphrases`).
class StubCaptionLLM final : public CaptionLLMAdapter {
 public:
  explicit StubCaptionLLM(bool identity_paraphrases = false)
      : identity_paraphrases_(identity_paraphrases) {}

  [[nodiscard]] PoisonPair poison_pair(std::string_view question,
                                       std::string_view correct_answer) const override;
  [[nodiscard]] std::vector<std::string> paraphrase(std::string_view question) const override;

 private:
  bool identity_paraphrases_;
};

/// Deterministic "diffusion" stub: pixels are a uniform hash field seeded by
/// derive_seed(config.seed, caption).
class HashFieldImageSynth final : public ImageSynthAdapter {
 public:
  explicit HashFieldImageSynth(ImageSynthConfig config = {}) : config_(config) {}
  [[nodiscard]] ImageTensor synthesize(std::string_view caption) const override;
  [[nodiscard]] const ImageSynthConfig& config() const override { return config_; }

 private:
  ImageSynthConfig config_;
};

/// Caption-consistent synthesis against a differentiable encoder: starts from
/// the hash field and takes `denoise_steps` raw gradient-ascent steps of size
/// `render_step` on cos(f_I(x), f_T(caption)).
class ToyRenderImageSynth final : public ImageSynthAdapter {
 public:
  ToyRenderImageSynth(std::shared_ptr<const EncoderBackend> encoder, ImageSynthConfig config = {},
                      double render_step = 0.5);
  [[nodiscard]] ImageTensor synthesize(std::string_view caption) const override;
  [[nodiscard]] const ImageSynthConfig& config() const override { return config_; }

 private:
  std::shared_ptr<const EncoderBackend> encoder_;
  ImageSynthConfig config_;
  double render_step_;
};

}  // namespace mmpoison
