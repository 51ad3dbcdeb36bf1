#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "beliefbench/ids.hpp"

namespace beliefbench {

/// Entity and relation tables: stable key (e.g. "Q42", "P69") plus the
/// surface form used in rendered sentences. Surface forms are unique within
/// each table so sentences can be parsed back.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view key, std::string_view surface = {});
  RelationId add_relation(std::string_view key, std::string_view surface = {});

  std::optional<EntityId> find_entity(std::string_view key) const;
  std::optional<RelationId> find_relation(std::string_view key) const;
  std::optional<EntityId> entity_by_surface(std::string_view surface) const;
  std::optional<RelationId> relation_by_surface(std::string_view surface) const;

  EntityId entity(std::string_view key) const;      // throws if absent
  RelationId relation(std::string_view key) const;  // throws if absent

  const std::string& entity_key(EntityId id) const { return entities_.at(id.value).key; }
  const std::string& entity_surface(EntityId id) const { return entities_.at(id.value).surface; }
  const std::string& relation_key(RelationId id) const { return relations_.at(id.value).key; }
  const std::string& relation_surface(RelationId id) const {
    return relations_.at(id.value).surface;
  }

  /// Rename an entity; the new surface must not collide with another entity.
  void set_entity_surface(EntityId id, std::string_view surface);

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }

  /// Longest entity / relation surface, in whitespace tokens.
  std::size_t max_entity_tokens() const { return max_entity_tokens_; }
  std::size_t max_relation_tokens() const { return max_relation_tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.entities_ == b.entities_ && a.relations_ == b.relations_;
  }

 private:
  struct Entry {
    std::string key;
    std::string surface;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::vector<Entry> entities_;
  std::vector<Entry> relations_;
  std::unordered_map<std::string, std::uint32_t> entity_by_key_;
  std::unordered_map<std::string, std::uint32_t> entity_by_surface_;
  std::unordered_map<std::string, std::uint32_t> relation_by_key_;
  std::unordered_map<std::string, std::uint32_t> relation_by_surface_;
  std::size_t max_entity_tokens_ = 0;
  std::size_t max_relation_tokens_ = 0;
};

/// Normalizes a display name into a valid surface form: collapses
/// whitespace, replaces double quotes, and drops standalone "." tokens.
std::string sanitize_surface(std::string_view raw);

std::size_t count_tokens(std::string_view text);

/// Vocabulary file: `[relations]`, `[entities]` and `[dependencies]`
/// sections, one `key \t surface` (or `upstream \t downstream`) per line.
/// Lines starting with '#' are header/comment lines.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab, const DependencyMap& deps);

struct VocabularyFile {
  Vocabulary vocab;
  DependencyMap deps;
};
VocabularyFile read_vocabulary(std::istream& in);

}  // namespace beliefbench
