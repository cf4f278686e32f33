#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmpoison/types.hpp"

namespace mmpoison {

/// Append-only, id-unique collection of knowledge entries.
///
/// Existing entries are never exposed mutably, which is how the toolkit keeps
/// the inject-only threat model: attacks can add entries but never edit them.
/// A fully constructed KnowledgeBase is safe to share read-only across threads.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  /// Throws DuplicateIdError if the id is taken; ContractError if invalid.
  void insert(KnowledgeEntry entry);

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] bool contains(std::string_view id) const;

  [[nodiscard]] const std::vector<KnowledgeEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const KnowledgeEntry& at(std::size_t index) const { return entries_.at(index); }
  /// Throws DataError for unknown ids.
  [[nodiscard]] const KnowledgeEntry& get(std::string_view id) const;
  [[nodiscard]] const KnowledgeEntry* find(std::string_view id) const;

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<KnowledgeEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Functional form: returns a copy of `kb` with `entry` appended.
KnowledgeBase kb_insert(const KnowledgeBase& kb, KnowledgeEntry entry);

struct SaveOptions {
  /// Also write an 8-bit PPM/PGM preview next to each poisoned entry's sidecar.
  bool poisoned_previews = true;
};

/// Writes `dir/manifest.jsonl` plus `dir/images/*`. Every image is stored as a
/// float sidecar so the round trip is exact.
void kb_save(const KnowledgeBase& kb, const std::filesystem::path& dir,
             const SaveOptions& options = {});

/// Loads a manifest (a file, or a directory containing manifest.jsonl).
/// Throws FormatError, MissingFileError or ChecksumError.
KnowledgeBase kb_load(const std::filesystem::path& manifest_or_dir);

}  // namespace mmpoison
