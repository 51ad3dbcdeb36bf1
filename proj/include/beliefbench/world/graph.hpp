#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "beliefbench/ids.hpp"
#include "beliefbench/vocabulary.hpp"

namespace beliefbench::world {

struct Triple {
  EntityId subject;
  RelationId relation;
  EntityId object;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Triples over an interned vocabulary. After any of the transforms below
/// the vocabulary holds only entities and relations in use, interned in
/// lexicographic key order.
struct KnowledgeGraph {
  Vocabulary vocab;
  std::vector<Triple> triples;
  std::vector<RelationId> relations;

  std::vector<EntityId> subjects() const;
};

/// Relations and entities removed at ingestion. Defaults are given name,
/// located in the administrative territory of, taxon and human.
struct Denylist {
  std::set<std::string> relations{"P735", "P131"};
  std::set<std::string> entities{"Q16521", "Q5"};
};

struct IngestOptions {
  std::size_t limit = 2'000'000;
  Denylist denylist;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t malformed = 0;
  std::size_t excluded = 0;
  std::vector<std::string> warnings;
};

/// Reads `subject relation object` rows (tab or comma separated). Malformed
/// rows are skipped with a warning. A stream with no rows yields an empty
/// graph; rows that are all unusable raise "no usable triples".
KnowledgeGraph ingest_triples(std::istream& rows, const IngestOptions& options = {},
                              IngestReport* report = nullptr);

/// Applies `key \t display name` rows to entities already in the graph.
void apply_entity_names(KnowledgeGraph& graph, std::istream& names);

/// counts[i][j] = number of triples with relation i whose subject also has a
/// triple with relation j (i != j). Relations are in `graph.relations` order.
std::vector<std::vector<std::size_t>> count_cooccurrence(const KnowledgeGraph& graph);

KnowledgeGraph filter_relations(const KnowledgeGraph& graph, std::size_t min_cooccur = 1000,
                                std::size_t top_k = 10);

/// Keeps one object per (subject, relation), chosen by a hash of the seed
/// and the keys so the choice does not depend on row order.
KnowledgeGraph enforce_one_to_one(const KnowledgeGraph& graph, std::uint64_t seed);

/// Drops unused vocabulary entries and re-interns in key order.
KnowledgeGraph compact(const KnowledgeGraph& graph);

struct CooccurProfile {
  /// Probability that a subject has an uncoupled or upstream relation.
  double presence = 0.5;
  /// Probability of the downstream relation given the upstream one is present.
  double coupled_presence = 0.9;
  /// Probability of the downstream relation when the upstream one is absent.
  /// With presence 0.5, coupled + orphan > 1 makes holders of the upstream
  /// relation hold the downstream one more often than the reverse, which is
  /// how assign_dependencies orients a pair.
  double orphan_presence = 0.3;
  /// Probability that the downstream object is the upstream object's
  /// preferred partner rather than a uniform draw.
  double coupling_strength = 0.75;
  /// Fraction of (subject, relation) slots emitted with extra objects (1:N).
  double multi_object_rate = 0.05;
  /// (upstream, downstream) relation indices; nullopt couples 0-1, 2-3, ...
  std::optional<std::vector<std::pair<std::size_t, std::size_t>>> couplings;
};

/// Synthetic stand-in for a Wikidata extract with named entities and planted
/// relation dependencies. Deterministic given the seed.
KnowledgeGraph synth_graph(std::size_t n_subjects, std::size_t n_relations,
                           std::size_t n_objects, const CooccurProfile& profile,
                           std::uint64_t seed);

}  // namespace beliefbench::world
