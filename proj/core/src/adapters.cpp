#include "mmpoison/adapters.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/image_io.hpp"

namespace mmpoison {
namespace fs = std::filesystem;
using nlohmann::json;

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    std::string key(tmpl.substr(open + 2, close - open - 2));
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (const auto it = values.find(key); it != values.end()) {
      out.append(it->second);
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(pos));
  return out;
}

std::string extract_json_object(std::string_view reply) {
  const auto start = reply.find('{');
  if (start == std::string_view::npos) throw ParseError("model reply contains no JSON object");
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < reply.size(); ++i) {
    const char c = reply[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}' && --depth == 0) {
      return std::string(reply.substr(start, i - start + 1));
    }
  }
  throw ParseError("model reply has an unterminated JSON object");
}

namespace {

json parse_reply(std::string_view reply) {
  try {
    return json::parse(extract_json_object(reply));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model reply is not valid JSON: ") + e.what());
  }
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

// "[q1, q2, ...]" where items may or may not be quoted.
std::vector<std::string> split_bracketed_list(const std::string& text) {
  std::string body = trim(text);
  if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
    throw ParseError("paraphrased_questions is not a bracketed list");
  }
  try {
    const json arr = json::parse(body);
    if (arr.is_array()) {
      std::vector<std::string> out;
      for (const auto& item : arr) out.push_back(item.get<std::string>());
      return out;
    }
  } catch (const json::exception&) {
    // fall through to the unquoted form
  }
  body = body.substr(1, body.size() - 2);
  std::vector<std::string> out;
  std::string current;
  for (const char c : body) {
    if (c == ',') {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!trim(current).empty() || !out.empty()) out.push_back(trim(current));
  for (auto& item : out) {
    if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') &&
        item.back() == item.front()) {
      item = item.substr(1, item.size() - 2);
    }
  }
  return out;
}

}  // namespace

PoisonPair parse_poison_response(std::string_view reply) {
  const json obj = parse_reply(reply);
  if (!obj.is_object() || !obj.contains("wrong_answer") ||
      !obj.contains("poison_image_caption") || !obj["wrong_answer"].is_string() ||
      !obj["poison_image_caption"].is_string()) {
    throw ParseError("poison reply must hold string fields wrong_answer and poison_image_caption");
  }
  return PoisonPair{obj["wrong_answer"].get<std::string>(),
                    obj["poison_image_caption"].get<std::string>()};
}

std::vector<std::string> parse_paraphrase_response(std::string_view reply) {
  const json obj = parse_reply(reply);
  if (!obj.is_object() || !obj.contains("paraphrased_questions")) {
    throw ParseError("paraphrase reply lacks paraphrased_questions");
  }
  const json& value = obj["paraphrased_questions"];
  std::vector<std::string> out;
  if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_string()) throw ParseError("paraphrased_questions items must be strings");
      out.push_back(item.get<std::string>());
    }
  } else if (value.is_string()) {
    out = split_bracketed_list(value.get<std::string>());
  } else {
    throw ParseError("paraphrased_questions must be an array or a string");
  }
  return out;
}

PoisonPair PromptedCaptionLLM::poison_pair(std::string_view question,
                                           std::string_view correct_answer) const {
  const std::string prompt =
      render_template(templates_.poison_caption, {{"question", std::string(question)},
                                                  {"correct_answer", std::string(correct_answer)}});
  return parse_poison_response(complete(prompt));
}

std::vector<std::string> PromptedCaptionLLM::paraphrase(std::string_view question) const {
  const std::string prompt =
      render_template(templates_.paraphrase, {{"question", std::string(question)}});
  return parse_paraphrase_response(complete(prompt));
}

namespace {

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

fs::path temp_input_path() {
  static thread_local std::mt19937_64 engine(std::random_device{}());
  return fs::temp_directory_path() / ("mmpoison_in_" + std::to_string(engine()) + ".txt");
}

}  // namespace

std::string run_command(const std::string& command, std::string_view input,
                        const std::vector<std::pair<std::string, std::string>>& env) {
  const fs::path input_path = temp_input_path();
  {
    std::ofstream f(input_path, std::ios::binary);
    f.write(input.data(), static_cast<std::streamsize>(input.size()));
  }
  std::string full;
  for (const auto& [key, value] : env) full += key + "=" + shell_quote(value) + " ";
  full += "sh -c " + shell_quote(command) + " < " + shell_quote(input_path.string());

  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) {
    fs::remove(input_path);
    throw Error("failed to start command: " + command);
  }
  std::string output;
  std::array<char, 4096> buffer{};
  std::size_t n = 0;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) output.append(buffer.data(), n);
  const int status = pclose(pipe);
  fs::remove(input_path);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("command failed (status " + std::to_string(status) + "): " + command);
  }
  return output;
}

CommandCaptionLLM::CommandCaptionLLM(ExternalModelSpec spec, Templates templates)
    : PromptedCaptionLLM(std::move(templates)), spec_(std::move(spec)) {
  if (spec_.command.empty()) throw ConfigError("command caption LLM needs a command");
}

std::string CommandCaptionLLM::complete(const std::string& prompt) const {
  return run_command(spec_.command, prompt,
                     {{"MMPOISON_ENDPOINT", spec_.endpoint}, {"MMPOISON_MODEL", spec_.model}});
}

CommandImageSynth::CommandImageSynth(ExternalModelSpec spec, ImageSynthConfig config)
    : spec_(std::move(spec)), config_(config) {
  if (spec_.command.empty()) throw ConfigError("command image synth needs a command");
}

ImageTensor CommandImageSynth::synthesize(std::string_view caption) const {
  std::ostringstream guidance;
  guidance << config_.guidance_scale;
  const std::string out = run_command(
      spec_.command, caption,
      {{"MMPOISON_ENDPOINT", spec_.endpoint},
       {"MMPOISON_MODEL", spec_.model},
       {"MMPOISON_GUIDANCE", guidance.str()},
       {"MMPOISON_STEPS", std::to_string(config_.denoise_steps)},
       {"MMPOISON_SEED", std::to_string(config_.seed)}});
  std::string path = out;
  path.erase(path.find_last_not_of(" \t\r\n") + 1);
  path.erase(0, path.find_first_not_of(" \t\r\n"));
  if (path.empty()) throw ParseError("image synth command printed no path");
  return load_image(path);
}

}  // namespace mmpoison
