#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/bench.hpp"

namespace beliefbench::eval {

using bench::kProbeCount;

/// Logical-coherence axioms, in report column order.
enum class Axiom { truth, negation, conjunction, disjunction };
inline constexpr std::size_t kAxiomCount = 4;
std::string_view axiom_name(Axiom a);

/// A model's answers for one case at one stage.
struct StageAnswers {
  std::array<double, kProbeCount> probes{};         // p(o | "s r")
  std::array<std::string, kProbeCount> generated;  // generated object text
  std::array<double, bench::kLogicCount> logic{};   // p(True | claim is)
};

/// Per-case contribution to every metric cell.
struct CaseScores {
  std::array<double, kProbeCount> accuracy{};  // 1 if the generation is a tied target argmax
  std::array<double, kProbeCount> abs_error{};
  std::array<double, kAxiomCount> violation{};
};

CaseScores score_stage(const StageAnswers& answers, const bench::Targets& targets,
                       const Vocabulary& vocab);

/// |p(o|"s r") - p(True|"A" is)|, |p(A) - (1 - p(not A))|,
/// |p(A and B) - p(A)p(B)|, |p(A or B) - (p(A) + p(B) - p(A)p(B))|.
std::array<double, kAxiomCount> logic_violations(double p_next_object, double p_a, double p_not_a,
                                                 double p_and, double p_or, double p_b);

/// NaN marks an empty cell.
struct StageMetrics {
  std::array<double, kProbeCount> gen_accuracy{};
  std::array<double, kProbeCount> prob_mae{};
  std::array<double, kAxiomCount> logic_mae{};
  friend bool operator==(const StageMetrics& a, const StageMetrics& b);
};

struct SubsetMetrics {
  std::string name;
  std::size_t cases = 0;
  StageMetrics pre, post, delta;
  friend bool operator==(const SubsetMetrics&, const SubsetMetrics&) = default;
};

struct MetricsReport {
  std::string model;
  std::string weight_mode;  // "auto" or "fixed"
  std::size_t total = 0;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
  std::vector<std::string> failed_ids;
  std::vector<SubsetMetrics> subsets;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// Means over the given cases; NaN cells when the list is empty.
StageMetrics aggregate(std::span<const CaseScores> scores);
StageMetrics difference(const StageMetrics& post, const StageMetrics& pre);

std::string render_report(const MetricsReport& report, const ArtifactHeader& header);
void write_report_json(std::ostream& out, const MetricsReport& report,
                       const ArtifactHeader& header);
MetricsReport read_report_json(std::istream& in, ArtifactHeader* header = nullptr);

}  // namespace beliefbench::eval
