#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/language.hpp"
#include "beliefbench/vocabulary.hpp"
#include "beliefbench/world/world_model.hpp"

namespace beliefbench::oracle {

using lang::Atom;
using lang::Claim;
using lang::Sentence;
using world::CondKey;
using world::Distribution;

/// Exact Dirichlet-Categorical agent. One count vector per (subject,
/// relation) over its registered support, plus one count row per
/// (downstream, upstream, upstream object) over the downstream relation's
/// global support. Posterior predictive is (alpha + c) / sum(alpha + c).
class Oracle {
 public:
  struct Token {
    std::uint64_t id = 0;
  };

  explicit Oracle(Vocabulary vocab, DependencyMap deps, double prior_alpha = 1.0);

  const Vocabulary& vocab() const { return vocab_; }
  const DependencyMap& deps() const { return deps_; }
  double prior_alpha() const { return alpha_; }

  // --- support -----------------------------------------------------------
  /// Adds the atom's object to the (s, r) support and, for downstream
  /// relations, to the relation's conditional support.
  void register_atom(const Atom& atom);
  bool registered(EntityId subject, RelationId relation) const;
  std::span<const EntityId> support(EntityId subject, RelationId relation) const;
  std::span<const EntityId> conditional_support(RelationId downstream) const;
  /// Registered relations of a subject, in id order.
  std::vector<RelationId> relations_of(EntityId subject) const;
  std::vector<EntityId> subjects() const;

  // --- evidence ----------------------------------------------------------
  /// Adds `weight` to the (s, r, o) count. For a downstream relation whose
  /// upstream key is registered, each conditional row (r_d, r_u, o_u) also
  /// gains weight * p(o_u | s, r_u) on o.
  void observe_atomic(const Atom& atom, double weight = 1.0);
  /// "A is false": weight spread uniformly over the support minus A's object.
  void observe_false(const Atom& atom, double weight = 1.0);
  /// Two passes over the corpus. Pass 1 takes atomic and true/false
  /// sentences; pass 2 weights each connective operand by its probability of
  /// being true given the label, computed from the pass-1 state. Conditional
  /// rows are updated at the end of each pass with that pass's upstream
  /// posteriors.
  void observe_corpus(std::span<const std::vector<Sentence>> documents);
  void observe_corpus(std::span<const Sentence> sentences);

  /// Weighted observation of the requested object.
  void apply_edit(const Atom& atom, double weight);

  // --- posteriors --------------------------------------------------------
  Distribution posterior_basic(EntityId subject, RelationId relation) const;
  /// Sum over o_u of p(o_d | r_d, r_u, o_u) p(o_u | s, r_u). When the
  /// subject has no registered upstream key this falls back to the basic
  /// posterior and sets `*fell_back`. Throws for relations with no upstream.
  Distribution posterior_downstream(EntityId subject, RelationId downstream,
                                    bool* fell_back = nullptr) const;
  /// Marginal rule when it applies, basic posterior otherwise.
  Distribution predictive(EntityId subject, RelationId relation) const;
  bool uses_marginal(EntityId subject, RelationId relation) const;

  /// Evidence counts (without the prior) for inspection.
  double count(const Atom& atom) const;
  double conditional_count(const CondKey& key, EntityId object) const;
  /// Posterior predictive of one conditional row over the relation's
  /// conditional support.
  Distribution conditional(const CondKey& key) const;

  /// p(o | "s r"); zero for objects outside the support.
  double probability(const Atom& atom) const;
  /// Independence semantics over atoms: not = 1 - p, and = product,
  /// or = inclusion-exclusion. And/Or over a shared (s, r) is rejected.
  double truth_probability(const Claim& claim) const;

  /// Smallest integer weight w such that p(o | "s r") >= threshold after
  /// apply_edit(atom, w). Zero when already met.
  double min_weight_for(const Atom& atom, double threshold = 0.95);

  // --- snapshots ---------------------------------------------------------
  Token snapshot();
  /// Rolls back to the snapshot. Snapshots taken after it become stale.
  void restore(Token token);
  std::size_t snapshot_depth() const { return marks_.size(); }

  /// Hash of all supports and counts (bitwise on doubles).
  std::uint64_t content_hash() const;

  void save(std::ostream& out, const ArtifactHeader& header) const;
  static Oracle load(std::istream& in);

  friend bool operator==(const Oracle& a, const Oracle& b);

 private:
  struct Cell {
    std::vector<EntityId> support;
    std::vector<double> counts;
    friend bool operator==(const Cell&, const Cell&) = default;
  };
  struct Row {
    std::map<EntityId, double> counts;
    double total = 0.0;
    friend bool operator==(const Row&, const Row&) = default;
  };
  struct Pending {
    Atom atom;
    double weight;
  };

  // undo journal entries
  struct CellCreated {
    FactKey key;
  };
  struct SupportInserted {
    FactKey key;
    std::size_t index;
  };
  struct CountChanged {
    FactKey key;
    std::size_t index;
    double old;
  };
  struct CondSupportInserted {
    RelationId relation;
    std::size_t index;
  };
  struct RowChanged {
    CondKey key;
    EntityId object;
    std::optional<double> old;  // nullopt: entry did not exist
    double old_total;
    bool row_created;
  };
  using JournalEntry =
      std::variant<CellCreated, SupportInserted, CountChanged, CondSupportInserted, RowChanged>;

  const Cell& cell(EntityId subject, RelationId relation) const;
  void add_count(const FactKey& key, EntityId object, double weight);
  void add_row(const CondKey& key, EntityId object, double weight);
  void propagate(const Atom& atom, double weight);
  void add_evidence(const Atom& atom, double weight, std::vector<Pending>* deferred);
  void add_false_evidence(const Atom& atom, double weight, std::vector<Pending>* deferred);
  void flush(std::vector<Pending>& deferred);
  double row_probability(const CondKey& key, EntityId object, std::size_t support_size) const;
  void record(JournalEntry entry);

  Vocabulary vocab_;
  DependencyMap deps_;
  double alpha_;
  std::map<FactKey, Cell> cells_;
  std::map<RelationId, std::vector<EntityId>> cond_support_;
  std::map<CondKey, Row> rows_;

  std::vector<JournalEntry> journal_;
  std::vector<std::pair<std::uint64_t, std::size_t>> marks_;  // token id, journal size
  std::uint64_t next_token_ = 1;
};

}  // namespace beliefbench::oracle
