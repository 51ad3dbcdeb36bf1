#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/bench.hpp"
#include "beliefbench/eval/metrics.hpp"
#include "beliefbench/eval/transport.hpp"

namespace beliefbench::eval {

inline constexpr std::size_t kQueriesPerStage = 2 * kProbeCount + bench::kLogicCount;

/// The 13 probe queries of one stage: next_object and generate for each atom
/// probe, then the five truth probes. Ids are `<case>:<stage>:<n>`.
std::vector<ProbeQuery> stage_queries(const bench::TestCase& c, const std::string& stage,
                                      const Vocabulary& vocab);

/// Answers in query order, or nullopt when any query is missing, errored or
/// lacks the requested field.
std::optional<StageAnswers> collect_answers(std::span<const ProbeQuery> queries,
                                            std::span<const ProbeResponse> responses);

struct EvalOptions {
  std::string model_name;
  bench::WeightMode weight_mode = bench::WeightMode::automatic;
  /// Any of "all", "downstream_change", "error_fixing", in report order.
  std::vector<std::string> subsets{"all", "downstream_change", "error_fixing"};
};

/// For each case: probe, edit, probe again, revert. A case whose probes or
/// edit hook fail is excluded and counted as failed.
MetricsReport run_eval(std::span<const bench::TestCase> cases, ProbeClient& client,
                       const Vocabulary& vocab, const EvalOptions& options);

}  // namespace beliefbench::eval
