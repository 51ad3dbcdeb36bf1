#include "beliefbench/eval/runner.hpp"

#include <algorithm>
#include <unordered_map>

namespace beliefbench::eval {

using bench::TestCase;

std::vector<ProbeQuery> stage_queries(const TestCase& c, const std::string& stage,
                                      const Vocabulary& vocab) {
  std::vector<ProbeQuery> out;
  out.reserve(kQueriesPerStage);
  auto id = [&](std::size_t n) { return c.id + ":" + stage + ":" + std::to_string(n); };
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    const auto& a = c.probes[i];
    const std::string prompt = lang::next_object_prompt(a.subject, a.relation, vocab);
    out.push_back({id(out.size()), QueryKind::next_object, prompt, vocab.entity_surface(a.object),
                   std::nullopt});
    out.push_back({id(out.size()), QueryKind::generate, prompt, std::nullopt, std::nullopt});
  }
  for (const auto& claim : c.logic_claims())
    out.push_back(
        {id(out.size()), QueryKind::truth, lang::truth_prompt(claim, vocab), "true", std::nullopt});
  return out;
}

std::optional<StageAnswers> collect_answers(std::span<const ProbeQuery> queries,
                                            std::span<const ProbeResponse> responses) {
  if (queries.size() != kQueriesPerStage) return std::nullopt;
  std::unordered_map<std::string_view, const ProbeResponse*> by_id;
  for (const auto& r : responses) by_id[r.id] = &r;
  StageAnswers a;
  for (std::size_t n = 0; n < queries.size(); ++n) {
    const auto it = by_id.find(queries[n].id);
    if (it == by_id.end() || it->second->error) return std::nullopt;
    const ProbeResponse& r = *it->second;
    if (n < 2 * kProbeCount) {
      const std::size_t probe = n / 2;
      if (n % 2 == 0) {
        if (!r.probability) return std::nullopt;
        a.probes[probe] = *r.probability;
      } else {
        if (!r.text) return std::nullopt;
        a.generated[probe] = *r.text;
      }
    } else {
      if (!r.probability) return std::nullopt;
      a.logic[n - 2 * kProbeCount] = *r.probability;
    }
  }
  return a;
}

namespace {

bool acknowledged(ProbeClient& client, const ProbeQuery& q) {
  const auto responses = client.exchange(std::span<const ProbeQuery>(&q, 1));
  return responses.size() == 1 && responses[0].id == q.id && !responses[0].error;
}

}  // namespace

MetricsReport run_eval(std::span<const TestCase> cases, ProbeClient& client,
                       const Vocabulary& vocab, const EvalOptions& options) {
  MetricsReport report;
  report.model = options.model_name;
  report.weight_mode = options.weight_mode == bench::WeightMode::automatic ? "auto" : "fixed";
  report.total = cases.size();

  std::vector<CaseScores> pre_scores(cases.size()), post_scores(cases.size());
  std::vector<bool> ok(cases.size(), false);

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const TestCase& c = cases[i];
    const auto pre_q = stage_queries(c, "pre", vocab);
    const auto pre = collect_answers(pre_q, client.exchange(pre_q));
    if (!pre) {
      report.failed_ids.push_back(c.id);
      continue;
    }
    const auto& edit = c.edit.atom;
    const ProbeQuery apply{c.id + ":edit", QueryKind::edit,
                           lang::next_object_prompt(edit.subject, edit.relation, vocab),
                           vocab.entity_surface(edit.object), c.weight_for(options.weight_mode)};
    if (!acknowledged(client, apply)) {
      report.failed_ids.push_back(c.id);
      continue;
    }
    const auto post_q = stage_queries(c, "post", vocab);
    const auto post = collect_answers(post_q, client.exchange(post_q));
    const ProbeQuery revert{c.id + ":revert", QueryKind::revert, "", std::nullopt, std::nullopt};
    const bool reverted = acknowledged(client, revert);
    if (!post || !reverted) {
      report.failed_ids.push_back(c.id);
      continue;
    }
    pre_scores[i] = score_stage(*pre, c.pre, vocab);
    post_scores[i] = score_stage(*post, c.post_for(options.weight_mode), vocab);
    ok[i] = true;
  }
  std::sort(report.failed_ids.begin(), report.failed_ids.end());
  report.failed = report.failed_ids.size();
  report.evaluated = report.total - report.failed;

  const auto split = bench::split_subsets(cases);
  for (const auto& name : options.subsets) {
    const std::vector<std::size_t>* members = nullptr;
    if (name == "all")
      members = &split.all;
    else if (name == "downstream_change")
      members = &split.downstream_change;
    else if (name == "error_fixing")
      members = &split.error_fixing;
    else
      throw Error("unknown subset '" + name + "'");
    // sum in id order so the metrics do not depend on case order
    std::vector<std::size_t> order = *members;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return cases[a].id < cases[b].id; });
    std::vector<CaseScores> pre, post;
    for (std::size_t i : order) {
      if (!ok[i]) continue;
      pre.push_back(pre_scores[i]);
      post.push_back(post_scores[i]);
    }
    SubsetMetrics m;
    m.name = name;
    m.cases = pre.size();
    m.pre = aggregate(pre);
    m.post = aggregate(post);
    m.delta = difference(m.post, m.pre);
    report.subsets.push_back(std::move(m));
  }
  return report;
}

}  // namespace beliefbench::eval
