#include "mmpoison/backends.hpp"

#include <cmath>

#include "mmpoison/error.hpp"

namespace mmpoison {

std::vector<double> EncoderBackend::image_embed_grad(const ImageTensor&,
                                                     std::span<const double>) const {
  throw CapabilityError("encoder '" + name() + "' does not provide gradients");
}

std::vector<double> RerankBackend::log_yes_prob_grad(std::string_view, const ImageTensor&,
                                                     std::string_view, RerankMode) const {
  throw CapabilityError("reranker '" + name() + "' does not provide gradients");
}

ValueGrad RerankBackend::sum_log_yes_prob(std::span<const std::string> questions,
                                          const ImageTensor& image, std::string_view caption,
                                          RerankMode mode) const {
  ValueGrad out;
  out.grad.assign(image.size(), 0.0);
  for (const auto& q : questions) {
    const double p = yes_prob(q, image, caption, mode);
    out.value += std::log(p);
    const auto g = log_yes_prob_grad(q, image, caption, mode);
    for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] += g[i];
  }
  return out;
}

std::string GeneratorBackend::answer_without_context(std::string_view question) const {
  return generate(question, {});
}

std::vector<double> GeneratorBackend::target_logprob_grad(std::string_view, const ImageTensor&,
                                                          std::string_view, ContextList,
                                                          std::string_view) const {
  throw CapabilityError("generator '" + name() + "' does not provide gradients");
}

ValueGrad GeneratorBackend::sum_target_logprob(std::span<const GenerationQuery> queries,
                                               const ImageTensor& image,
                                               std::string_view caption,
                                               std::string_view target) const {
  ValueGrad out;
  out.grad.assign(image.size(), 0.0);
  for (const auto& q : queries) {
    out.value += target_logprob(q.question, image, caption, q.contexts, target);
    const auto g = target_logprob_grad(q.question, image, caption, q.contexts, target);
    for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] += g[i];
  }
  return out;
}

}  // namespace mmpoison
