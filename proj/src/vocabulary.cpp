#include "beliefbench/vocabulary.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace beliefbench {

DependencyMap::DependencyMap(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (pairs_[i].upstream == pairs_[i].downstream)
      throw Error("dependency pairs a relation with itself");
    for (std::size_t j = 0; j < i; ++j) {
      for (RelationId a : {pairs_[i].upstream, pairs_[i].downstream}) {
        if (a == pairs_[j].upstream || a == pairs_[j].downstream)
          throw Error("dependency pairs are not disjoint");
      }
    }
  }
}

std::optional<RelationId> DependencyMap::upstream_of(RelationId downstream) const {
  for (const auto& p : pairs_)
    if (p.downstream == downstream) return p.upstream;
  return std::nullopt;
}

std::optional<RelationId> DependencyMap::downstream_of(RelationId upstream) const {
  for (const auto& p : pairs_)
    if (p.upstream == upstream) return p.downstream;
  return std::nullopt;
}

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::string sanitize_surface(std::string_view raw) {
  std::string out;
  std::string token;
  auto flush = [&] {
    if (token.empty() || token == ".") {
      token.clear();
      return;
    }
    if (!out.empty()) out.push_back(' ');
    out += token;
    token.clear();
  };
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      flush();
    } else {
      token.push_back(c == '"' ? '\'' : c);
    }
  }
  flush();
  // a leading '#' would read as a header line in artifact files
  if (!out.empty() && out.front() == '#') out.front() = '_';
  return out;
}

namespace {

std::string checked_surface(std::string_view key, std::string_view surface) {
  std::string s = sanitize_surface(surface.empty() ? key : surface);
  if (s.empty()) throw Error("empty surface form for key '" + std::string(key) + "'");
  return s;
}

}  // namespace

EntityId Vocabulary::add_entity(std::string_view key, std::string_view surface) {
  if (key.empty()) throw Error("empty entity key");
  std::string k(key);
  if (auto it = entity_by_key_.find(k); it != entity_by_key_.end()) return EntityId{it->second};
  std::string s = checked_surface(key, surface);
  if (entity_by_surface_.count(s)) {
    // disambiguate duplicate display names with the key
    s += " " + sanitize_surface(key);
    if (entity_by_surface_.count(s))
      throw Error("duplicate entity surface form '" + s + "'");
  }
  const auto idx = static_cast<std::uint32_t>(entities_.size());
  max_entity_tokens_ = std::max(max_entity_tokens_, count_tokens(s));
  entity_by_key_.emplace(k, idx);
  entity_by_surface_.emplace(s, idx);
  entities_.push_back({std::move(k), std::move(s)});
  return EntityId{idx};
}

RelationId Vocabulary::add_relation(std::string_view key, std::string_view surface) {
  if (key.empty()) throw Error("empty relation key");
  std::string k(key);
  if (auto it = relation_by_key_.find(k); it != relation_by_key_.end())
    return RelationId{it->second};
  std::string s = checked_surface(key, surface);
  if (relation_by_surface_.count(s)) throw Error("duplicate relation surface form '" + s + "'");
  const auto idx = static_cast<std::uint32_t>(relations_.size());
  max_relation_tokens_ = std::max(max_relation_tokens_, count_tokens(s));
  relation_by_key_.emplace(k, idx);
  relation_by_surface_.emplace(s, idx);
  relations_.push_back({std::move(k), std::move(s)});
  return RelationId{idx};
}

void Vocabulary::set_entity_surface(EntityId id, std::string_view surface) {
  auto& entry = entities_.at(id.value);
  std::string s = checked_surface(entry.key, surface);
  if (s == entry.surface) return;
  if (entity_by_surface_.count(s)) throw Error("duplicate entity surface form '" + s + "'");
  entity_by_surface_.erase(entry.surface);
  entity_by_surface_.emplace(s, id.value);
  max_entity_tokens_ = std::max(max_entity_tokens_, count_tokens(s));
  entry.surface = std::move(s);
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view key) const {
  if (auto it = entity_by_key_.find(std::string(key)); it != entity_by_key_.end())
    return EntityId{it->second};
  return std::nullopt;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view key) const {
  if (auto it = relation_by_key_.find(std::string(key)); it != relation_by_key_.end())
    return RelationId{it->second};
  return std::nullopt;
}

std::optional<EntityId> Vocabulary::entity_by_surface(std::string_view surface) const {
  if (auto it = entity_by_surface_.find(std::string(surface)); it != entity_by_surface_.end())
    return EntityId{it->second};
  return std::nullopt;
}

std::optional<RelationId> Vocabulary::relation_by_surface(std::string_view surface) const {
  if (auto it = relation_by_surface_.find(std::string(surface));
      it != relation_by_surface_.end())
    return RelationId{it->second};
  return std::nullopt;
}

EntityId Vocabulary::entity(std::string_view key) const {
  if (auto id = find_entity(key)) return *id;
  throw Error("unknown entity key '" + std::string(key) + "'");
}

RelationId Vocabulary::relation(std::string_view key) const {
  if (auto id = find_relation(key)) return *id;
  throw Error("unknown relation key '" + std::string(key) + "'");
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab, const DependencyMap& deps) {
  out << "[relations]\n";
  for (std::uint32_t i = 0; i < vocab.relation_count(); ++i)
    out << vocab.relation_key(RelationId{i}) << '\t' << vocab.relation_surface(RelationId{i})
        << '\n';
  out << "[entities]\n";
  for (std::uint32_t i = 0; i < vocab.entity_count(); ++i)
    out << vocab.entity_key(EntityId{i}) << '\t' << vocab.entity_surface(EntityId{i}) << '\n';
  out << "[dependencies]\n";
  for (const auto& p : deps.pairs())
    out << vocab.relation_key(p.upstream) << '\t' << vocab.relation_key(p.downstream) << '\n';
}

VocabularyFile read_vocabulary(std::istream& in) {
  enum class Section { None, Relations, Entities, Dependencies } section = Section::None;
  VocabularyFile file;
  std::vector<DependencyMap::Pair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (line == "[relations]") {
      section = Section::Relations;
      continue;
    }
    if (line == "[entities]") {
      section = Section::Entities;
      continue;
    }
    if (line == "[dependencies]") {
      section = Section::Dependencies;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || section == Section::None)
      throw Error("vocabulary line " + std::to_string(lineno) + ": malformed");
    const std::string_view left(line.data(), tab);
    const std::string_view right(line.data() + tab + 1, line.size() - tab - 1);
    switch (section) {
      case Section::Relations:
        file.vocab.add_relation(left, right);
        break;
      case Section::Entities:
        file.vocab.add_entity(left, right);
        break;
      case Section::Dependencies:
        pairs.push_back({file.vocab.relation(left), file.vocab.relation(right)});
        break;
      case Section::None:
        break;
    }
  }
  file.deps = DependencyMap(std::move(pairs));
  return file;
}

}  // namespace beliefbench
