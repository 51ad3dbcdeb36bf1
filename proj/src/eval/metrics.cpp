#include "beliefbench/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace beliefbench::eval {

using json = nlohmann::json;

std::string_view axiom_name(Axiom a) {
  static constexpr std::string_view names[] = {"TF", "not", "and", "or"};
  return names[static_cast<std::size_t>(a)];
}

std::array<double, kAxiomCount> logic_violations(double p_next_object, double p_a, double p_not_a,
                                                 double p_and, double p_or, double p_b) {
  return {std::abs(p_next_object - p_a), std::abs(p_a - (1.0 - p_not_a)),
          std::abs(p_and - p_a * p_b), std::abs(p_or - (p_a + p_b - p_a * p_b))};
}

CaseScores score_stage(const StageAnswers& answers, const bench::Targets& targets,
                       const Vocabulary& vocab) {
  CaseScores s;
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    const auto generated = vocab.entity_by_surface(answers.generated[i]);
    const auto& best = targets.argmax[i];
    s.accuracy[i] =
        generated && std::find(best.begin(), best.end(), *generated) != best.end() ? 1.0 : 0.0;
    s.abs_error[i] = std::abs(answers.probes[i] - targets.probes[i]);
  }
  using bench::LogicTag;
  auto logic = [&](LogicTag t) { return answers.logic[static_cast<std::size_t>(t)]; };
  s.violation = logic_violations(answers.probes[0], logic(LogicTag::truth_a), logic(LogicTag::not_a),
                                 logic(LogicTag::a_and_b), logic(LogicTag::a_or_b),
                                 logic(LogicTag::truth_b));
  return s;
}

namespace {

template <std::size_t N>
bool same_cells(const std::array<double, N>& a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) {
    if (std::isnan(a[i]) != std::isnan(b[i])) return false;
    if (!std::isnan(a[i]) && a[i] != b[i]) return false;
  }
  return true;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

bool operator==(const StageMetrics& a, const StageMetrics& b) {
  return same_cells(a.gen_accuracy, b.gen_accuracy) && same_cells(a.prob_mae, b.prob_mae) &&
         same_cells(a.logic_mae, b.logic_mae);
}

StageMetrics aggregate(std::span<const CaseScores> scores) {
  StageMetrics m;
  if (scores.empty()) {
    m.gen_accuracy.fill(kNaN);
    m.prob_mae.fill(kNaN);
    m.logic_mae.fill(kNaN);
    return m;
  }
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < kProbeCount; ++i) {
      m.gen_accuracy[i] += s.accuracy[i];
      m.prob_mae[i] += s.abs_error[i];
    }
    for (std::size_t i = 0; i < kAxiomCount; ++i) m.logic_mae[i] += s.violation[i];
  }
  const double n = static_cast<double>(scores.size());
  for (auto& x : m.gen_accuracy) x /= n;
  for (auto& x : m.prob_mae) x /= n;
  for (auto& x : m.logic_mae) x /= n;
  return m;
}

StageMetrics difference(const StageMetrics& post, const StageMetrics& pre) {
  StageMetrics d;
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    d.gen_accuracy[i] = post.gen_accuracy[i] - pre.gen_accuracy[i];
    d.prob_mae[i] = post.prob_mae[i] - pre.prob_mae[i];
  }
  for (std::size_t i = 0; i < kAxiomCount; ++i) d.logic_mae[i] = post.logic_mae[i] - pre.logic_mae[i];
  return d;
}

// ---------------------------------------------------------------------------
// text table

namespace {

std::string subset_title(const std::string& name) {
  if (name == "all") return "All Edit Requests";
  if (name == "downstream_change") return "Edit Requests w/ Downstream Answer Changes";
  if (name == "error_fixing") return "Fixing Errors w.r.t. Pretraining Facts";
  return name;
}

std::string cell(double x, bool signed_value) {
  if (std::isnan(x)) return "n/a";
  char buf[32];
  // values that round to zero print without a minus sign
  std::snprintf(buf, sizeof buf, signed_value ? "%+.4f" : "%.4f", std::abs(x) < 5e-5 ? 0.0 : x);
  return buf;
}

void pad(std::string& line, const std::string& text, std::size_t width) {
  if (text.size() < width) line.append(width - text.size(), ' ');
  line += text;
}

std::string stage_row(const char* label, const StageMetrics& m, bool signed_value) {
  std::string line = label;
  line.resize(11, ' ');
  line += '|';
  for (double x : m.gen_accuracy) pad(line, cell(x, signed_value), 9);
  line += "  |";
  for (double x : m.prob_mae) pad(line, cell(x, signed_value), 9);
  line += "  |";
  for (double x : m.logic_mae) pad(line, cell(x, signed_value), 9);
  return line;
}

}  // namespace

std::string render_report(const MetricsReport& r, const ArtifactHeader& header) {
  std::string out = header.render_comment_block();
  out += "model: " + r.model + "\n";
  out += "edit weight: " + r.weight_mode + "\n";
  out += "cases: " + std::to_string(r.total) + " total, " + std::to_string(r.evaluated) +
         " evaluated, " + std::to_string(r.failed) + " failed\n";
  for (const auto& id : r.failed_ids) out += "failed: " + id + "\n";

  std::string head1 = "           |";
  pad(head1, "Generative Accuracy", 36);
  head1 += "  |";
  pad(head1, "Probabilistic Coherence (MAE)", 36);
  head1 += "  |";
  pad(head1, "Logical Coherence (MAE)", 36);
  std::string head2 = "           |";
  for (std::size_t i = 0; i < kProbeCount; ++i)
    pad(head2, std::string(bench::tag_name(static_cast<bench::ProbeTag>(i))), 9);
  head2 += "  |";
  for (std::size_t i = 0; i < kProbeCount; ++i)
    pad(head2, std::string(bench::tag_name(static_cast<bench::ProbeTag>(i))), 9);
  head2 += "  |";
  for (std::size_t i = 0; i < kAxiomCount; ++i)
    pad(head2, std::string(axiom_name(static_cast<Axiom>(i))), 9);

  for (const auto& s : r.subsets) {
    out += "\n" + subset_title(s.name) + " (" + s.name + ", n=" + std::to_string(s.cases) + ")\n";
    out += head1 + "\n" + head2 + "\n";
    out += std::string(head2.size(), '-') + "\n";
    out += stage_row("Pre-edit", s.pre, false) + "\n";
    out += stage_row("Post-edit", s.post, false) + "\n";
    out += stage_row("Delta", s.delta, true) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON companion

namespace {

template <std::size_t N>
json cells_json(const std::array<double, N>& a) {
  json out = json::array();
  for (double x : a) out.push_back(std::isnan(x) ? json(nullptr) : json(x));
  return out;
}

template <std::size_t N>
std::array<double, N> cells_from(const json& j) {
  if (!j.is_array() || j.size() != N) throw Error("report: malformed metric row");
  std::array<double, N> a{};
  for (std::size_t i = 0; i < N; ++i) a[i] = j[i].is_null() ? kNaN : j[i].get<double>();
  return a;
}

json stage_json(const StageMetrics& m) {
  return {{"gen_accuracy", cells_json(m.gen_accuracy)},
          {"prob_mae", cells_json(m.prob_mae)},
          {"logic_mae", cells_json(m.logic_mae)}};
}

StageMetrics stage_from(const json& j) {
  StageMetrics m;
  m.gen_accuracy = cells_from<kProbeCount>(j.at("gen_accuracy"));
  m.prob_mae = cells_from<kProbeCount>(j.at("prob_mae"));
  m.logic_mae = cells_from<kAxiomCount>(j.at("logic_mae"));
  return m;
}

}  // namespace

void write_report_json(std::ostream& out, const MetricsReport& r, const ArtifactHeader& header) {
  json subsets = json::array();
  for (const auto& s : r.subsets)
    subsets.push_back({{"name", s.name},
                       {"cases", s.cases},
                       {"pre", stage_json(s.pre)},
                       {"post", stage_json(s.post)},
                       {"delta", stage_json(s.delta)}});
  const json j = {{"header",
                   {{"tool", std::string(kToolName)},
                    {"version", std::string(kToolVersion)},
                    {"artifact", "report"},
                    {"config_hash", header.config_hash},
                    {"seed", header.seed},
                    {"config", header.config_text}}},
                  {"model", r.model},
                  {"weight_mode", r.weight_mode},
                  {"total", r.total},
                  {"evaluated", r.evaluated},
                  {"failed", r.failed},
                  {"failed_ids", r.failed_ids},
                  {"columns",
                   {{"probes", {"s1r1", "s1r2", "s2r1", "s2r2"}},
                    {"axioms", {"TF", "not", "and", "or"}}}},
                  {"subsets", subsets}};
  out << j.dump(2) << '\n';
}

MetricsReport read_report_json(std::istream& in, ArtifactHeader* header) {
  json j;
  try {
    j = json::parse(in);
    MetricsReport r;
    r.model = j.at("model").get<std::string>();
    r.weight_mode = j.at("weight_mode").get<std::string>();
    r.total = j.at("total").get<std::size_t>();
    r.evaluated = j.at("evaluated").get<std::size_t>();
    r.failed = j.at("failed").get<std::size_t>();
    r.failed_ids = j.at("failed_ids").get<std::vector<std::string>>();
    for (const auto& s : j.at("subsets")) {
      SubsetMetrics m;
      m.name = s.at("name").get<std::string>();
      m.cases = s.at("cases").get<std::size_t>();
      m.pre = stage_from(s.at("pre"));
      m.post = stage_from(s.at("post"));
      m.delta = stage_from(s.at("delta"));
      r.subsets.push_back(std::move(m));
    }
    if (header) {
      const auto& h = j.at("header");
      header->config_hash = h.at("config_hash").get<std::string>();
      header->seed = h.at("seed").get<std::uint64_t>();
      header->config_text = h.at("config").get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("report: ") + e.what());
  }
}

}  // namespace beliefbench::eval
