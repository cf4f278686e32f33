#include "mmpoison/knowledge_base.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/image_io.hpp"

namespace mmpoison {
namespace fs = std::filesystem;
using nlohmann::json;

void KnowledgeBase::insert(KnowledgeEntry entry) {
  entry.validate();
  if (index_.contains(entry.entry_id)) {
    throw DuplicateIdError("knowledge base already contains id '" + entry.entry_id + "'");
  }
  index_.emplace(entry.entry_id, entries_.size());
  entries_.push_back(std::move(entry));
}

bool KnowledgeBase::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

const KnowledgeEntry* KnowledgeBase::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const KnowledgeEntry& KnowledgeBase::get(std::string_view id) const {
  if (const auto* e = find(id)) return *e;
  throw DataError("unknown knowledge entry id '" + std::string(id) + "'");
}

KnowledgeBase kb_insert(const KnowledgeBase& kb, KnowledgeEntry entry) {
  KnowledgeBase out = kb;
  out.insert(std::move(entry));
  return out;
}

namespace {

std::string file_stem_for(std::size_t index, std::string_view id) {
  std::string safe;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    safe.push_back(ok ? c : '_');
  }
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%06zu_", index);
  return prefix + safe;
}

}  // namespace

void kb_save(const KnowledgeBase& kb, const fs::path& dir, const SaveOptions& options) {
  fs::create_directories(dir / "images");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::trunc);
  if (!manifest) throw Error("cannot write manifest in '" + dir.string() + "'");

  for (std::size_t i = 0; i < kb.size(); ++i) {
    const KnowledgeEntry& e = kb.at(i);
    const std::string stem = file_stem_for(i, e.entry_id);
    const std::string image_rel = "images/" + stem + ".mmpt";
    const auto bytes = encode_sidecar(e.image);
    write_file_bytes(dir / image_rel, bytes);

    json line;
    line["id"] = e.entry_id;
    line["caption"] = e.caption;
    line["provenance"] = to_string(e.provenance);
    line["attack_kind"] = e.attack_kind ? json(to_string(*e.attack_kind)) : json(nullptr);
    line["image"] = image_rel;
    line["sha256"] = sha256_hex(bytes);
    if (options.poisoned_previews && e.provenance == Provenance::kPoisoned) {
      const std::string preview_rel =
          "images/" + stem + (e.image.channels() == 1 ? ".pgm" : ".ppm");
      write_file_bytes(dir / preview_rel, encode_netpbm(e.image));
      line["preview"] = preview_rel;
    }
    manifest << line.dump() << '\n';
  }
}

KnowledgeBase kb_load(const fs::path& manifest_or_dir) {
  const fs::path manifest_path = fs::is_directory(manifest_or_dir)
                                     ? manifest_or_dir / "manifest.jsonl"
                                     : manifest_or_dir;
  std::ifstream in(manifest_path);
  if (!in) throw MissingFileError("cannot open manifest '" + manifest_path.string() + "'");
  const fs::path base = manifest_path.parent_path();

  KnowledgeBase kb;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    json line;
    try {
      line = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(where + ": " + e.what());
    }
    KnowledgeEntry entry;
    std::string image_rel;
    std::string checksum;
    try {
      entry.entry_id = line.at("id").get<std::string>();
      entry.caption = line.at("caption").get<std::string>();
      entry.provenance = parse_provenance(line.at("provenance").get<std::string>());
      if (line.contains("attack_kind") && !line["attack_kind"].is_null()) {
        entry.attack_kind = parse_attack_kind(line["attack_kind"].get<std::string>());
      }
      image_rel = line.at("image").get<std::string>();
      checksum = line.value("sha256", std::string());
    } catch (const json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }

    const fs::path image_path = base / image_rel;
    if (!fs::exists(image_path)) {
      throw MissingFileError(where + ": image file '" + image_path.string() + "' is missing");
    }
    const auto bytes = read_file_bytes(image_path);
    if (!checksum.empty() && sha256_hex(bytes) != checksum) {
      throw ChecksumError(where + ": sha256 mismatch for '" + image_path.string() + "'");
    }
    const std::string ext = image_path.extension().string();
    entry.image = ext == ".mmpt" ? decode_sidecar(bytes) : decode_netpbm(bytes);
    try {
      kb.insert(std::move(entry));
    } catch (const ContractError& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return kb;
}

}  // namespace mmpoison
