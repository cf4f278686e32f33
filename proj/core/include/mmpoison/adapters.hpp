#pragma once

#include <string>
#include <string_view>

#include "mmpoison/backends.hpp"
#include "mmpoison/prompts.hpp"

namespace mmpoison {

struct PromptTemplates {
  std::string poison_caption{kPoisonCaptionPrompt};
  std::string paraphrase{kParaphrasePrompt};
};

/// Caption LLM driven by prompt templates: renders the template, sends it via
/// complete(), and parses the JSON reply.
class PromptedCaptionLLM : public CaptionLLMAdapter {
 public:
  using Templates = PromptTemplates;

  explicit PromptedCaptionLLM(Templates templates = Templates()) : templates_(std::move(templates)) {}

  [[nodiscard]] PoisonPair poison_pair(std::string_view question,
                                       std::string_view correct_answer) const override;
  [[nodiscard]] std::vector<std::string> paraphrase(std::string_view question) const override;

  /// Sends one prompt and returns the raw model reply.
  [[nodiscard]] virtual std::string complete(const std::string& prompt) const = 0;

  [[nodiscard]] const Templates& templates() const noexcept { return templates_; }

 private:
  Templates templates_;
};

/// Where an external model lives. Exported to adapter commands as
/// MMPOISON_ENDPOINT / MMPOISON_MODEL.
struct ExternalModelSpec {
  std::string command;   // shell command; prompt on stdin, reply on stdout
  std::string endpoint;
  std::string model;
};

/// Runs an external command per prompt (out-of-process model access).
class CommandCaptionLLM final : public PromptedCaptionLLM {
 public:
  CommandCaptionLLM(ExternalModelSpec spec, Templates templates = Templates());
  [[nodiscard]] std::string complete(const std::string& prompt) const override;

 private:
  ExternalModelSpec spec_;
};

/// Runs an external command with the caption on stdin; the command prints the
/// path of the image it wrote (.mmpt/.ppm/.pgm). MMPOISON_GUIDANCE,
/// MMPOISON_STEPS and MMPOISON_SEED carry the synthesis config.
class CommandImageSynth final : public ImageSynthAdapter {
 public:
  CommandImageSynth(ExternalModelSpec spec, ImageSynthConfig config = {});
  [[nodiscard]] ImageTensor synthesize(std::string_view caption) const override;
  [[nodiscard]] const ImageSynthConfig& config() const override { return config_; }

 private:
  ExternalModelSpec spec_;
  ImageSynthConfig config_;
};

/// Runs `command` through /bin/sh with `input` on stdin and returns stdout.
/// Throws Error on a non-zero exit status.
std::string run_command(const std::string& command, std::string_view input,
                        const std::vector<std::pair<std::string, std::string>>& env = {});

}  // namespace mmpoison
