#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/ids.hpp"
#include "beliefbench/rng.hpp"
#include "beliefbench/vocabulary.hpp"
#include "beliefbench/world/graph.hpp"

namespace beliefbench::world {

/// Finite distribution over objects, objects sorted by id.
struct Distribution {
  std::vector<EntityId> objects;
  std::vector<double> probs;

  /// Most probable object; ties go to the smallest id.
  EntityId mode() const;
  double prob(EntityId object) const;
  EntityId sample(Rng& rng) const;
  friend bool operator==(const Distribution&, const Distribution&) = default;
};

/// Raises the modal probability to at least `floor`, scaling the remaining
/// mass proportionally.
Distribution enforce_modal_floor(Distribution dist, double floor);

/// Key of a conditional distribution p(o_d | r_d, r_u, o_u).
struct CondKey {
  RelationId downstream;
  RelationId upstream;
  EntityId upstream_object;
  friend auto operator<=>(const CondKey&, const CondKey&) = default;
};

struct Fact {
  EntityId subject;
  RelationId relation;
  EntityId kg_object;     // object in the knowledge graph
  EntityId ground_truth;  // modal object of the sampling distribution
  EntityId distractor;    // fixed non-ground-truth object for this slot
  std::optional<EntityId> upstream_object;

  bool conditioned() const { return upstream_object.has_value(); }
  FactKey key() const { return {subject, relation}; }
  friend bool operator==(const Fact&, const Fact&) = default;
};

/// The hypothetical world: facts plus the distributions sentences are sampled
/// from. Immutable once built.
class WorldModel {
 public:
  const Vocabulary& vocab() const { return vocab_; }
  const DependencyMap& deps() const { return deps_; }
  double floor() const { return floor_; }

  std::span<const Fact> facts() const { return facts_; }
  const Fact* find_fact(EntityId subject, RelationId relation) const;
  const Fact& fact(EntityId subject, RelationId relation) const;
  /// Facts of one subject, ordered by relation.
  std::span<const Fact> facts_of(EntityId subject) const;
  std::vector<EntityId> subjects() const;

  /// Base distribution for unconditioned facts, conditional otherwise.
  const Distribution& distribution(const Fact& fact) const;
  const std::map<FactKey, Distribution>& base_distributions() const { return base_; }
  const std::map<CondKey, Distribution>& conditional_distributions() const { return cond_; }

  /// Objects observed for a relation in the knowledge graph, sorted.
  std::span<const EntityId> object_pool(RelationId relation) const;

  double conditioned_fraction() const;

  /// Versioned text archive: header, relation and entity tables,
  /// dependencies, facts, base and conditional distributions.
  void save(std::ostream& out, const ArtifactHeader& header) const;
  static WorldModel load(std::istream& in);

  friend bool operator==(const WorldModel& a, const WorldModel& b) {
    return a.vocab_ == b.vocab_ && a.deps_ == b.deps_ && a.floor_ == b.floor_ &&
           a.facts_ == b.facts_ && a.base_ == b.base_ && a.cond_ == b.cond_;
  }

 private:
  friend WorldModel build_generative_model(const KnowledgeGraph&, const DependencyMap&, double,
                                           std::uint64_t);
  void index();

  Vocabulary vocab_;
  DependencyMap deps_;
  double floor_ = 0.6;
  std::vector<Fact> facts_;
  std::map<FactKey, Distribution> base_;
  std::map<CondKey, Distribution> cond_;
  std::unordered_map<FactKey, std::size_t> fact_index_;
  std::unordered_map<EntityId, std::pair<std::size_t, std::size_t>> subject_range_;
  std::unordered_map<RelationId, std::vector<EntityId>> pools_;
};

/// Builds sampling distributions from a 1:1 graph. Unconditioned facts get
/// {ground truth: floor, distractor: 1 - floor}; facts whose subject holds
/// the paired upstream relation sample from the empirical conditional over
/// all subjects sharing that upstream property, modal mass raised to floor.
/// floor must lie in (0.5, 1].
WorldModel build_generative_model(const KnowledgeGraph& graph, const DependencyMap& deps,
                                  double floor = 0.6, std::uint64_t seed = 0);

}  // namespace beliefbench::world
