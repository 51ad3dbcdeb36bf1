#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/language.hpp"
#include "beliefbench/oracle.hpp"
#include "beliefbench/world/world_model.hpp"

namespace beliefbench::bench {

using lang::Atom;
using lang::Claim;

enum class EditKind { counterfactual, error_fixing };

struct EditRequest {
  Atom atom;  // object is the requested object o*
  EditKind kind = EditKind::counterfactual;
  double weight_fixed = 1000;
  double weight_auto = 0;  // smallest weight lifting p(o*) to the threshold
  friend bool operator==(const EditRequest&, const EditRequest&) = default;
};

/// Atom probes, asked as p(o | "s r") and as a generation.
enum class ProbeTag { s1r1, s1r2, s2r1, s2r2 };
inline constexpr std::size_t kProbeCount = 4;
/// Truth probes over the edit sentence A and an unrelated sentence B.
enum class LogicTag { truth_a, not_a, a_and_b, a_or_b, truth_b };
inline constexpr std::size_t kLogicCount = 5;

std::string_view tag_name(ProbeTag tag);
std::string_view tag_name(LogicTag tag);

/// Target probabilities for one oracle state.
struct Targets {
  std::array<double, kProbeCount> probes{};
  std::array<double, kLogicCount> logic{};
  /// All objects within 1e-12 of the maximum of each probe's distribution.
  std::array<std::vector<EntityId>, kProbeCount> argmax;
  friend bool operator==(const Targets&, const Targets&) = default;
};

enum class WeightMode { automatic, fixed };

struct TestCase {
  std::string id;
  EditRequest edit;
  std::array<Atom, kProbeCount> probes;
  Atom partner;  // sentence B, about a subject other than s1
  Targets pre;
  Targets post;        // after the edit with weight_auto
  Targets post_fixed;  // after the edit with weight_fixed
  bool downstream_change = false;  // canonical argmax of the s1r2 probe moved
  bool r2_fallback = false;        // s1r2 is not the downstream partner of r1
  bool s2_fallback = false;        // s2 does not hold both r1 and r2

  bool error_fixing() const { return edit.kind == EditKind::error_fixing; }
  const Targets& post_for(WeightMode mode) const {
    return mode == WeightMode::automatic ? post : post_fixed;
  }
  double weight_for(WeightMode mode) const {
    return mode == WeightMode::automatic ? edit.weight_auto : edit.weight_fixed;
  }
  /// Truth claims of the logic probes, in LogicTag order.
  std::array<Claim, kLogicCount> logic_claims() const;
  friend bool operator==(const TestCase&, const TestCase&) = default;
};

struct BenchOptions {
  std::size_t n_cases = 5000;
  double threshold = 0.95;
  double weight_fixed = 1000;
  double error_fixing_rate = 0.5;
  double downstream_preference = 0.8;
  std::size_t max_flip_draws = 50;
  std::uint64_t seed = 0;
};

/// Probe targets for the current oracle state.
Targets compute_targets(const oracle::Oracle& oracle, const std::array<Atom, kProbeCount>& probes,
                        const std::array<Claim, kLogicCount>& logic);

/// Smallest-id object among those with the highest predictive probability.
EntityId canonical_argmax(const oracle::Oracle& oracle, EntityId subject, RelationId relation);

/// Recomputes pre/post targets of an existing case against `oracle`, which
/// is left unchanged.
void fill_targets(oracle::Oracle& oracle, TestCase& c);

/// Draws edit requests and computes their targets. The oracle is restored
/// after every case.
std::vector<TestCase> gen_cases(const world::WorldModel& world, oracle::Oracle& oracle,
                                const BenchOptions& options);

struct Subsets {
  std::vector<std::size_t> all;
  std::vector<std::size_t> downstream_change;
  std::vector<std::size_t> error_fixing;
};
Subsets split_subsets(std::span<const TestCase> cases);

/// JSON lines: a header record, then one case per line.
void write_bench(std::ostream& out, std::span<const TestCase> cases, const Vocabulary& vocab,
                 const ArtifactHeader& header);
std::vector<TestCase> read_bench(std::istream& in, const Vocabulary& vocab);

}  // namespace beliefbench::bench
