#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace beliefbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interned entity handle. Ordering follows interning order, which the
/// vocabulary keeps equal to lexicographic key order once compacted.
struct EntityId {
  std::uint32_t value = 0;
  friend auto operator<=>(const EntityId&, const EntityId&) = default;
};

struct RelationId {
  std::uint32_t value = 0;
  friend auto operator<=>(const RelationId&, const RelationId&) = default;
};

/// (subject, relation) pair keying one fact.
struct FactKey {
  EntityId subject;
  RelationId relation;
  friend auto operator<=>(const FactKey&, const FactKey&) = default;
};

/// FNV-1a, used wherever a stable (platform independent) hash is needed.
constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  // splitmix64 finalizer over the xor keeps low bits well mixed
  std::uint64_t z = seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Upstream -> downstream relation pairing. Each relation takes part in at
/// most one pair.
class DependencyMap {
 public:
  struct Pair {
    RelationId upstream;
    RelationId downstream;
    friend bool operator==(const Pair&, const Pair&) = default;
  };

  DependencyMap() = default;
  explicit DependencyMap(std::vector<Pair> pairs);

  const std::vector<Pair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  std::optional<RelationId> upstream_of(RelationId downstream) const;
  std::optional<RelationId> downstream_of(RelationId upstream) const;
  bool is_downstream(RelationId r) const { return upstream_of(r).has_value(); }

  friend bool operator==(const DependencyMap&, const DependencyMap&) = default;

 private:
  std::vector<Pair> pairs_;
};

}  // namespace beliefbench

template <>
struct std::hash<beliefbench::EntityId> {
  std::size_t operator()(const beliefbench::EntityId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

template <>
struct std::hash<beliefbench::RelationId> {
  std::size_t operator()(const beliefbench::RelationId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

template <>
struct std::hash<beliefbench::FactKey> {
  std::size_t operator()(const beliefbench::FactKey& k) const noexcept {
    return static_cast<std::size_t>(
        beliefbench::hash_combine(k.subject.value, k.relation.value));
  }
};
