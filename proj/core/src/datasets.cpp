#include "mmpoison/datasets.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/image_io.hpp"
#include "mmpoison/seeding.hpp"

namespace mmpoison {

namespace {

using nlohmann::json;

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open '" + path.string() + "'");
  std::vector<json> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

template <typename T>
T field(const json& row, const char* key, const std::filesystem::path& file) {
  try {
    return row.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(file.string() + ": missing or invalid field '" + key + "'");
  }
}

std::string random_token(std::mt19937_64& rng, int length) {
  std::uniform_int_distribution<int> letter(0, 25);
  std::string s;
  for (int i = 0; i < length; ++i) s.push_back(static_cast<char>('a' + letter(rng)));
  return s;
}

ImageTensor noise_image(const SynthConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> pixels(static_cast<std::size_t>(c.height) * c.width * c.channels);
  for (double& p : pixels) p = unit(rng);
  return ImageTensor::from_doubles(c.height, c.width, c.channels, pixels);
}

}  // namespace

std::string_view to_string(DatasetSchema s) {
  return s == DatasetSchema::kMmqaLike ? "mmqa_like" : "webqa_like";
}

DatasetSchema parse_dataset_schema(std::string_view s) {
  if (s == "mmqa_like") return DatasetSchema::kMmqaLike;
  if (s == "webqa_like") return DatasetSchema::kWebqaLike;
  throw ConfigError("unknown dataset schema '" + std::string(s) +
                    "' (expected mmqa_like or webqa_like)");
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& q : queries) {
    if (!ids.insert(q.query_id).second) throw DataError("duplicate query id '" + q.query_id + "'");
    try {
      q.validate();
    } catch (const ContractError& e) {
      throw DataError("query '" + q.query_id + "': " + e.what());
    }
    const auto n = q.gold_context_ids.size();
    if (schema == DatasetSchema::kMmqaLike && n != 1) {
      throw SchemaError("mmqa_like query '" + q.query_id + "' has " + std::to_string(n) +
                        " gold contexts (expected 1)");
    }
    if (schema == DatasetSchema::kWebqaLike && (n < 1 || n > 2)) {
      throw SchemaError("webqa_like query '" + q.query_id + "' has " + std::to_string(n) +
                        " gold contexts (expected 1 or 2)");
    }
    for (const auto& id : q.gold_context_ids) {
      if (!kb.contains(id)) {
        throw DataError("query '" + q.query_id + "' references unknown context '" + id + "'");
      }
    }
  }
}

std::size_t DatasetManifest::distractor_count() const {
  std::set<std::string> gold;
  for (const auto& q : queries) gold.insert(q.gold_context_ids.begin(), q.gold_context_ids.end());
  return kb.size() - gold.size();
}

DatasetManifest ingest(const std::filesystem::path& dir, DatasetSchema schema) {
  const auto questions_path = dir / "questions.jsonl";
  const auto contexts_path = dir / "contexts.jsonl";
  DatasetManifest m;
  m.name = dir.filename().string();
  if (m.name.empty()) m.name = dir.parent_path().filename().string();
  m.schema = schema;
  m.contexts_m = schema == DatasetSchema::kMmqaLike ? 1 : 2;

  for (const auto& row : read_jsonl(contexts_path)) {
    const auto id = field<std::string>(row, "id", contexts_path);
    const auto caption = field<std::string>(row, "caption", contexts_path);
    const auto rel = field<std::string>(row, "image", contexts_path);
    ImageTensor image;
    try {
      image = load_image(dir / rel);
    } catch (const Error& e) {
      throw DataError("context '" + id + "': unreadable image '" + rel + "': " + e.what());
    }
    try {
      m.kb.insert(KnowledgeEntry::benign(id, std::move(image), caption));
    } catch (const DuplicateIdError&) {
      throw DataError("duplicate context id '" + id + "'");
    }
  }
  for (const auto& row : read_jsonl(questions_path)) {
    QueryRecord q;
    q.query_id = field<std::string>(row, "id", questions_path);
    q.question = field<std::string>(row, "question", questions_path);
    q.gold_answer = field<std::string>(row, "answer", questions_path);
    q.gold_context_ids = field<std::vector<std::string>>(row, "context_ids", questions_path);
    if (row.contains("entities")) {
      q.gold_entities = field<std::vector<std::string>>(row, "entities", questions_path);
    }
    m.queries.push_back(std::move(q));
  }
  m.validate();
  return m;
}

void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::ofstream contexts(dir / "contexts.jsonl", std::ios::binary);
  for (std::size_t i = 0; i < manifest.kb.size(); ++i) {
    const auto& e = manifest.kb.at(i);
    std::ostringstream name;
    name << "images/" << std::setw(6) << std::setfill('0') << i << ".mmpt";
    write_file_bytes(dir / name.str(), encode_sidecar(e.image));
    contexts << json{{"id", e.entry_id}, {"caption", e.caption}, {"image", name.str()}}.dump()
             << "\n";
  }
  std::ofstream questions(dir / "questions.jsonl", std::ios::binary);
  for (const auto& q : manifest.queries) {
    json row{{"id", q.query_id},
             {"question", q.question},
             {"answer", q.gold_answer},
             {"context_ids", q.gold_context_ids}};
    if (!q.gold_entities.empty()) row["entities"] = q.gold_entities;
    questions << row.dump() << "\n";
  }
  if (!contexts || !questions) throw Error("failed writing dataset to '" + dir.string() + "'");
}

void SynthConfig::validate() const {
  if (num_queries < 1) throw ConfigError("synth num_queries must be at least 1");
  if (kb_size < num_queries) throw ConfigError("synth kb_size must be >= num_queries");
  if (!(benign_min_cos < benign_max_cos && benign_max_cos <= 1.0 && benign_min_cos > -1.0)) {
    throw ConfigError("synth needs -1 < benign_min_cos < benign_max_cos <= 1");
  }
  if (max_resamples < 1) throw ConfigError("synth max_resamples must be at least 1");
  if (tokens_per_question < 1) throw ConfigError("synth tokens_per_question must be at least 1");
  if (steer_steps < 0 || !(steer_step > 0.0)) throw ConfigError("synth steering is invalid");
}

DatasetManifest synth_generate(const SynthConfig& config, const EncoderBackend& encoder) {
  config.validate();
  if (!encoder.supports_grad()) {
    throw CapabilityError("synthetic generation steers images and needs encoder gradients");
  }
  DatasetManifest m;
  m.name = "synthetic";
  m.schema = DatasetSchema::kMmqaLike;
  m.contexts_m = 1;

  // Questions and answers, all distinct.
  std::mt19937_64 text_rng(derive_seed(config.seed, "synth/text"));
  std::set<std::string> used;
  auto fresh_token = [&] {
    for (;;) {
      auto t = random_token(text_rng, 5);
      if (used.insert(t).second) return t;
    }
  };
  std::vector<std::string> topics;
  for (int i = 0; i < config.num_queries; ++i) {
    std::string topic;
    for (int k = 0; k < config.tokens_per_question; ++k) {
      if (k > 0) topic += ' ';
      topic += fresh_token();
    }
    topics.push_back(std::move(topic));
    QueryRecord q;
    char buf[32];
    std::snprintf(buf, sizeof buf, "q-%03d", i);
    q.query_id = buf;
    q.question = "what is the answer for " + topics.back() + "?";
    q.gold_answer = fresh_token();
    std::snprintf(buf, sizeof buf, "ctx-%03d", i);
    q.gold_context_ids = {buf};
    m.queries.push_back(std::move(q));
  }

  std::vector<Embedding> qe;
  std::vector<double> centroid;
  for (const auto& q : m.queries) {
    qe.push_back(encoder.text_embed(q.question));
    if (centroid.empty()) centroid.assign(qe.back().dim(), 0.0);
    for (std::size_t k = 0; k < centroid.size(); ++k) centroid[k] += qe.back().values[k];
  }
  for (double& c : centroid) c /= static_cast<double>(qe.size());

  auto cos_all = [&](const ImageTensor& image) {
    const Embedding e = encoder.image_embed(image);
    std::vector<double> out;
    for (const auto& q : qe) out.push_back(cosine(e, q));
    return out;
  };

  // Gold contexts: noise steered along the question's distinctive direction.
  for (int i = 0; i < config.num_queries; ++i) {
    std::vector<double> direction(centroid.size());
    for (std::size_t k = 0; k < direction.size(); ++k) direction[k] = qe[i].values[k] - centroid[k];
    direction = normalized(std::move(direction)).values;
    const std::string tag = "synth/gold/" + m.queries[i].query_id;
    std::mt19937_64 level_rng(derive_seed(config.seed, tag + "/level"));
    std::uniform_real_distribution<double> level(config.benign_min_cos, config.benign_max_cos);

    bool accepted = false;
    for (int attempt = 0; attempt < config.max_resamples && !accepted; ++attempt) {
      const double goal = level(level_rng);
      ImageTensor image =
          noise_image(config, derive_seed(config.seed, tag + "/" + std::to_string(attempt)));
      for (int s = 0; s < config.steer_steps; ++s) {
        if (cosine(encoder.image_embed(image), qe[i]) >= goal) break;
        const auto grad = encoder.image_embed_grad(image, direction);
        auto pixels = image.to_doubles();
        for (std::size_t p = 0; p < pixels.size(); ++p) pixels[p] += config.steer_step * grad[p];
        image = ImageTensor::from_doubles(image.height(), image.width(), image.channels(), pixels);
      }
      const auto cs = cos_all(image);
      accepted = cs[i] >= config.benign_min_cos && cs[i] <= config.benign_max_cos;
      for (int j = 0; j < config.num_queries && accepted; ++j) {
        if (j != i && cs[j] >= config.benign_min_cos) accepted = false;
      }
      if (accepted) {
        m.kb.insert(KnowledgeEntry::benign(
            m.queries[i].gold_context_ids.front(), std::move(image),
            "a picture about " + topics[i] + " ANSWER:" + m.queries[i].gold_answer));
      }
    }
    if (!accepted) {
      throw GenerationError("could not satisfy the image geometry for query '" +
                            m.queries[i].query_id + "'");
    }
  }

  // Distractors: plain noise below the band for every question.
  for (int d = config.num_queries; d < config.kb_size; ++d) {
    char id[32];
    std::snprintf(id, sizeof id, "ctx-%03d", d);
    bool accepted = false;
    for (int attempt = 0; attempt < config.max_resamples && !accepted; ++attempt) {
      ImageTensor image = noise_image(
          config, derive_seed(config.seed, std::string("synth/distractor/") + id + "/" +
                                               std::to_string(attempt)));
      const auto cs = cos_all(image);
      accepted = std::all_of(cs.begin(), cs.end(),
                             [&](double c) { return c < config.benign_min_cos; });
      if (accepted) {
        m.kb.insert(KnowledgeEntry::benign(id, std::move(image),
                                           "a picture about " + fresh_token()));
      }
    }
    if (!accepted) {
      throw GenerationError(std::string("could not satisfy the geometry for distractor '") + id +
                            "'");
    }
  }
  m.validate();
  return m;
}

}  // namespace mmpoison
