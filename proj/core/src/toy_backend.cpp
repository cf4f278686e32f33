#include "mmpoison/toy_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "mmpoison/error.hpp"
#include "mmpoison/prompts.hpp"
#include "mmpoison/seeding.hpp"

namespace mmpoison {
namespace {

std::vector<double> gaussian_block(std::uint64_t seed, std::string_view tag, std::size_t count,
                                   double stddev) {
  std::mt19937_64 engine(derive_seed(seed, tag));
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> out(count);
  for (double& v : out) v = dist(engine);
  return out;
}

// (c - (e.c) e) / n : cotangent pulled back through u -> u / ||u||.
std::vector<double> normalize_vjp(std::span<const double> u, std::span<const double> cotangent) {
  const double n = l2_norm(u);
  std::vector<double> g(u.size());
  if (n == 0.0) return g;
  double ec = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) ec += (u[i] / n) * cotangent[i];
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = (cotangent[i] - ec * u[i] / n) / n;
  return g;
}

}  // namespace

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double ez = std::exp(z);
  return ez / (1.0 + ez);
}

double log_sigmoid(double z) noexcept {
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

// ---------------------------------------------------------------------------
// ToyEncoder

ToyEncoder::ToyEncoder(ToyEncoderConfig config) : config_(config) {
  if (config_.dim == 0 || config_.resolution == 0 || config_.hash_bins == 0) {
    throw ConfigError("toy encoder: dim, resolution and hash_bins must be positive");
  }
  const std::size_t d = config_.dim;
  const std::size_t bins = config_.hash_bins;
  const double stddev = 1.0 / 64.0;  // N(0, 1/4096)

  const auto w_t = gaussian_block(config_.seed, "toy/text_weights", d * bins, stddev);
  text_weights_t_.resize(d * bins);
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t j = 0; j < bins; ++j) text_weights_t_[j * d + r] = w_t[r * bins + j];
  }
  image_weights_ = gaussian_block(config_.seed, "toy/image_weights", d * pixel_count(), stddev);
  image_bias_ = gaussian_block(config_.seed, "toy/image_bias", d, stddev);
}

std::string ToyEncoder::name() const {
  return "toy(seed=" + std::to_string(config_.seed) + ",dim=" + std::to_string(config_.dim) +
         ",res=" + std::to_string(config_.resolution) + ")";
}

std::string ToyEncoder::normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::map<std::uint32_t, double> ToyEncoder::text_features(std::string_view text) const {
  const std::string norm = normalize_text(text);
  std::map<std::uint32_t, double> features;
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    const auto bin = static_cast<std::uint32_t>(fnv1a64(std::string_view(norm).substr(i, 3)) %
                                                config_.hash_bins);
    features[bin] += 1.0;
  }
  return features;
}

Embedding ToyEncoder::text_embed(std::string_view text) const {
  const std::size_t d = config_.dim;
  std::vector<double> u(d, 0.0);
  const auto features = text_features(text);
  if (features.empty()) {
    std::copy_n(text_weights_t_.begin(), d, u.begin());
  } else {
    for (const auto& [bin, count] : features) {
      const double* column = &text_weights_t_[static_cast<std::size_t>(bin) * d];
      for (std::size_t r = 0; r < d; ++r) u[r] += count * column[r];
    }
  }
  return normalized(std::move(u));
}

std::vector<double> ToyEncoder::canonical_pixels(std::span<const double> pixels,
                                                 std::uint32_t height, std::uint32_t width,
                                                 std::uint32_t channels) const {
  const std::uint32_t res = config_.resolution;
  if (height == res && width == res && channels == 3) {
    if (pixels.size() != pixel_count()) throw ContractError("toy encoder: pixel buffer size");
    return std::vector<double>(pixels.begin(), pixels.end());
  }
  const BilinearResampler resampler(height, width, channels, res, res, 3);
  std::vector<double> out(resampler.output_size());
  resampler.apply(pixels, out);
  return out;
}

std::vector<double> ToyEncoder::activation(std::span<const double> canonical) const {
  const std::size_t d = config_.dim;
  const std::size_t p = pixel_count();
  std::vector<double> u(image_bias_);
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = &image_weights_[r * p];
    double acc = 0.0;
    for (std::size_t j = 0; j < p; ++j) acc += row[j] * canonical[j];
    u[r] += acc;
  }
  return u;
}

Embedding ToyEncoder::embed_pixels(std::span<const double> pixels, std::uint32_t height,
                                   std::uint32_t width, std::uint32_t channels) const {
  return normalized(activation(canonical_pixels(pixels, height, width, channels)));
}

Embedding ToyEncoder::image_embed(const ImageTensor& image) const {
  const auto pixels = image.to_doubles();
  return embed_pixels(pixels, image.height(), image.width(), image.channels());
}

std::vector<double> ToyEncoder::image_embed_grad(const ImageTensor& image,
                                                 std::span<const double> cotangent) const {
  const std::size_t d = config_.dim;
  if (cotangent.size() != d) {
    throw ContractError("toy encoder: cotangent has length " + std::to_string(cotangent.size()) +
                        ", expected " + std::to_string(d));
  }
  const auto pixels = image.to_doubles();
  const auto canonical = canonical_pixels(pixels, image.height(), image.width(), image.channels());
  const auto u = activation(canonical);
  const auto g_u = normalize_vjp(u, cotangent);

  const std::size_t p = pixel_count();
  std::vector<double> g_x(p, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    const double coef = g_u[r];
    if (coef == 0.0) continue;
    const double* row = &image_weights_[r * p];
    for (std::size_t j = 0; j < p; ++j) g_x[j] += coef * row[j];
  }

  const std::uint32_t res = config_.resolution;
  if (image.height() == res && image.width() == res && image.channels() == 3) return g_x;
  const BilinearResampler resampler(image.height(), image.width(), image.channels(), res, res, 3);
  std::vector<double> g_in(image.size(), 0.0);
  resampler.apply_transpose(g_x, g_in);
  return g_in;
}

// ---------------------------------------------------------------------------
// ToyReranker

ToyReranker::ToyReranker(std::shared_ptr<const ToyEncoder> encoder, ToyRerankConfig config)
    : encoder_(std::move(encoder)), config_(config) {
  if (!encoder_) throw ConfigError("toy reranker needs an encoder");
}

std::string ToyReranker::name() const { return "toy_reranker[" + encoder_->name() + "]"; }

ToyReranker::Score ToyReranker::score(const Embedding& image_emb, const Embedding& question_emb,
                                      std::string_view caption, RerankMode mode) const {
  const double image_cos = cosine(image_emb, question_emb);
  switch (mode) {
    case RerankMode::kImageOnly:
      return Score{image_cos, 1.0};
    case RerankMode::kImageCaption: {
      const double caption_cos = cosine(encoder_->text_embed(caption), question_emb);
      const double s = 0.5 * (image_cos + caption_cos);
      if (caption.find(kGpaTriggerCaption) != std::string_view::npos && s < config_.trigger_floor) {
        return Score{config_.trigger_floor, 0.0};
      }
      return Score{s, 0.5};
    }
    case RerankMode::kNone:
      break;
  }
  throw ContractError("toy reranker: rerank mode 'none' cannot be scored");
}

double ToyReranker::relevance(std::string_view question, const ImageTensor& image,
                              std::string_view caption, RerankMode mode) const {
  return score(encoder_->image_embed(image), encoder_->text_embed(question), caption, mode).s;
}

double ToyReranker::yes_prob(std::string_view question, const ImageTensor& image,
                             std::string_view caption, RerankMode mode) const {
  return sigmoid(config_.beta * relevance(question, image, caption, mode));
}

std::vector<double> ToyReranker::log_yes_prob_grad(std::string_view question,
                                                   const ImageTensor& image,
                                                   std::string_view caption,
                                                   RerankMode mode) const {
  const std::string q(question);
  return sum_log_yes_prob(std::span<const std::string>(&q, 1), image, caption, mode).grad;
}

ValueGrad ToyReranker::sum_log_yes_prob(std::span<const std::string> questions,
                                        const ImageTensor& image, std::string_view caption,
                                        RerankMode mode) const {
  const Embedding e = encoder_->image_embed(image);
  std::vector<double> cotangent(e.dim(), 0.0);
  ValueGrad out;
  for (const auto& question : questions) {
    const Embedding q = encoder_->text_embed(question);
    const Score sc = score(e, q, caption, mode);
    const double z = config_.beta * sc.s;
    out.value += log_sigmoid(z);
    // d log sigmoid(z) / ds = beta * (1 - sigmoid(z))
    const double coef = config_.beta * (1.0 - sigmoid(z)) * sc.image_weight;
    if (coef != 0.0) {
      for (std::size_t r = 0; r < cotangent.size(); ++r) cotangent[r] += coef * q.values[r];
    }
  }
  out.grad = encoder_->image_embed_grad(image, cotangent);
  return out;
}

// ---------------------------------------------------------------------------
// ToyGenerator

std::optional<std::string> find_answer_marker(std::string_view caption) {
  static constexpr std::string_view kMarker = "ANSWER:";
  const auto pos = caption.find(kMarker);
  if (pos == std::string_view::npos) return std::nullopt;
  std::size_t end = pos + kMarker.size();
  while (end < caption.size() && !std::isspace(static_cast<unsigned char>(caption[end]))) ++end;
  const auto token = caption.substr(pos + kMarker.size(), end - pos - kMarker.size());
  if (token.empty()) return std::nullopt;
  return std::string(token);
}

ToyGenerator::ToyGenerator(std::shared_ptr<const ToyEncoder> encoder, ToyGeneratorConfig config)
    : encoder_(std::move(encoder)), config_(std::move(config)) {
  if (!encoder_) throw ConfigError("toy generator needs an encoder");
}

std::string ToyGenerator::name() const { return "toy_generator[" + encoder_->name() + "]"; }

std::string ToyGenerator::generate(std::string_view, ContextList contexts) const {
  if (contexts.empty()) {
    throw ContractError("toy generator: context list must not be empty");
  }
  for (const KnowledgeEntry* ctx : contexts) {
    if (auto token = find_answer_marker(ctx->caption)) return *token;
  }
  const KnowledgeEntry& top = *contexts.front();
  const double refusal_cos =
      cosine(encoder_->image_embed(top.image), encoder_->text_embed(config_.refusal));
  if (refusal_cos > config_.refusal_threshold) return config_.refusal;

  const std::string_view caption = top.caption;
  std::size_t end = caption.find_last_not_of(" \t\r\n");
  if (end == std::string_view::npos) return {};
  std::size_t begin = caption.find_last_of(" \t\r\n", end);
  begin = begin == std::string_view::npos ? 0 : begin + 1;
  return std::string(caption.substr(begin, end - begin + 1));
}

std::string ToyGenerator::answer_without_context(std::string_view) const {
  return config_.closed_book_answer;
}

double ToyGenerator::target_logprob(std::string_view, const ImageTensor& image,
                                    std::string_view, ContextList, std::string_view target) const {
  if (target.empty()) throw ContractError("toy generator: target must not be empty");
  const double c = cosine(encoder_->image_embed(image), encoder_->text_embed(target));
  return log_sigmoid(config_.beta_g * c);
}

std::vector<double> ToyGenerator::target_logprob_grad(std::string_view question,
                                                      const ImageTensor& image,
                                                      std::string_view caption,
                                                      ContextList contexts,
                                                      std::string_view target) const {
  const GenerationQuery q{question, contexts};
  return sum_target_logprob(std::span<const GenerationQuery>(&q, 1), image, caption, target).grad;
}

ValueGrad ToyGenerator::sum_target_logprob(std::span<const GenerationQuery> queries,
                                           const ImageTensor& image, std::string_view,
                                           std::string_view target) const {
  if (target.empty()) throw ContractError("toy generator: target must not be empty");
  const Embedding e = encoder_->image_embed(image);
  const Embedding t = encoder_->text_embed(target);
  const double z = config_.beta_g * cosine(e, t);
  const auto n = static_cast<double>(queries.size());
  ValueGrad out;
  out.value = n * log_sigmoid(z);
  const double coef = n * config_.beta_g * (1.0 - sigmoid(z));
  std::vector<double> cotangent(t.values);
  for (double& v : cotangent) v *= coef;
  out.grad = encoder_->image_embed_grad(image, cotangent);
  return out;
}

// ---------------------------------------------------------------------------
// Adapter stubs

PoisonPair StubCaptionLLM::poison_pair(std::string_view question,
                                       std::string_view correct_answer) const {
  const std::string wrong = "NOT-" + std::string(correct_answer);
  return PoisonPair{wrong, "an image of " + std::string(question) + " ANSWER:" + wrong};
}

std::vector<std::string> StubCaptionLLM::paraphrase(std::string_view question) const {
  const std::string q(question);
  if (identity_paraphrases_) return std::vector<std::string>(5, q);
  return {q + " please", "tell me, " + q, q + " exactly", "quick question: " + q,
          "i wonder " + q};
}

ImageTensor HashFieldImageSynth::synthesize(std::string_view caption) const {
  std::mt19937_64 engine(derive_seed(config_.seed, caption));
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> pixels(static_cast<std::size_t>(config_.height) * config_.width *
                             config_.channels);
  for (double& v : pixels) v = dist(engine);
  return ImageTensor::from_doubles(config_.height, config_.width, config_.channels, pixels);
}

ToyRenderImageSynth::ToyRenderImageSynth(std::shared_ptr<const EncoderBackend> encoder,
                                         ImageSynthConfig config, double render_step)
    : encoder_(std::move(encoder)), config_(config), render_step_(render_step) {
  if (!encoder_ || !encoder_->supports_grad()) {
    throw CapabilityError("toy render synth needs a gradient-capable encoder");
  }
}

ImageTensor ToyRenderImageSynth::synthesize(std::string_view caption) const {
  ImageTensor image = HashFieldImageSynth(config_).synthesize(caption);
  const Embedding target = encoder_->text_embed(caption);
  for (int step = 0; step < config_.denoise_steps; ++step) {
    const auto grad = encoder_->image_embed_grad(image, target.values);
    auto pixels = image.to_doubles();
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] += render_step_ * grad[i];
    image = ImageTensor::from_doubles(image.height(), image.width(), image.channels(), pixels);
  }
  return image;
}

}  // namespace mmpoison
