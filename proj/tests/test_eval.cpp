#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "beliefbench/eval/agents.hpp"
#include "beliefbench/eval/runner.hpp"
#include "support.hpp"

using namespace beliefbench;
using namespace beliefbench::eval;
using bench::TestCase;
using namespace std::chrono_literals;

namespace {

const std::vector<TestCase>& cases() {
  static const std::vector<TestCase> out = [] {
    oracle::Oracle o = bbtest::desk().oracle;
    bench::BenchOptions opts;
    opts.n_cases = 200;
    opts.seed = 42;
    return bench::gen_cases(bbtest::desk().world, o, opts);
  }();
  return out;
}

const Vocabulary& vocab() { return bbtest::desk().world.vocab(); }

MetricsReport run_with(Responder& r, std::span<const TestCase> cs, const std::string& name,
                       bench::WeightMode mode = bench::WeightMode::automatic) {
  LocalClient client(r);
  EvalOptions opts;
  opts.model_name = name;
  opts.weight_mode = mode;
  return run_eval(cs, client, vocab(), opts);
}

const SubsetMetrics& subset(const MetricsReport& r, const std::string& name) {
  for (const auto& s : r.subsets)
    if (s.name == name) return s;
  throw std::runtime_error("no subset " + name);
}

// Targets with a single argmax per probe and a fixed target probability.
bench::Targets targets_with(EntityId best, double p) {
  bench::Targets t;
  t.probes.fill(p);
  for (auto& a : t.argmax) a = {best};
  return t;
}

// Wraps a responder and answers every query of one case with an error.
class FailingCase : public Responder {
 public:
  FailingCase(Responder& inner, std::string case_id) : inner_(inner), id_(std::move(case_id)) {}
  ProbeResponse respond(const ProbeQuery& q) override {
    if (q.id.rfind(id_ + ":", 0) == 0) return {q.id, std::nullopt, std::nullopt, "refused"};
    return inner_.respond(q);
  }

 private:
  Responder& inner_;
  std::string id_;
};

// A client that drops the response to every query whose id contains `tag`.
class DroppingClient : public ProbeClient {
 public:
  DroppingClient(Responder& r, std::string tag) : local_(r), tag_(std::move(tag)) {}
  std::vector<ProbeResponse> exchange(std::span<const ProbeQuery> queries) override {
    auto out = local_.exchange(queries);
    std::erase_if(out, [&](const ProbeResponse& r) { return r.id.find(tag_) != std::string::npos; });
    return out;
  }

 private:
  LocalClient local_;
  std::string tag_;
};

}  // namespace

TEST(Protocol, RoundTripOfEveryKind) {
  for (const auto kind : {QueryKind::next_object, QueryKind::truth, QueryKind::generate,
                          QueryKind::edit, QueryKind::revert}) {
    ProbeQuery q{"q-1", kind, "subj 0 rel 1", "obj 2", std::nullopt};
    if (kind == QueryKind::edit) q.weight = 88;
    EXPECT_EQ(decode_query(encode(q)), q);
    EXPECT_EQ(parse_kind(kind_name(kind)), kind);
  }
  const ProbeResponse r{"q-1", 0.25, "obj 2", std::nullopt};
  EXPECT_EQ(decode_response(encode(r)), r);
  EXPECT_EQ(encode(ProbeQuery{"a", QueryKind::truth, "\"x\" is", "true", std::nullopt}),
            R"({"candidate":"true","id":"a","kind":"truth","prompt":"\"x\" is"})");
  EXPECT_EQ(encode(ProbeResponse{"a", 0.5, std::nullopt, std::nullopt}),
            R"({"id":"a","probability":0.5})");
}

TEST(Protocol, SchemaViolationsAreProtocolErrors) {
  EXPECT_THROW(decode_query("not json"), ProtocolError);
  EXPECT_THROW(decode_query("[1, 2]"), ProtocolError);
  EXPECT_THROW(decode_query(R"({"kind":"truth"})"), ProtocolError);
  EXPECT_THROW(decode_query(R"({"id":"a"})"), ProtocolError);
  EXPECT_THROW(decode_query(R"({"id":"a","kind":"guess"})"), ProtocolError);
  EXPECT_THROW(decode_query(R"({"id":"a","kind":"edit","weight":"many"})"), ProtocolError);
  EXPECT_THROW(decode_response(R"({"id":"a","probability":1.5})"), ProtocolError);
  EXPECT_THROW(decode_response(R"({"id":"a","probability":-0.1})"), ProtocolError);
  EXPECT_THROW(decode_response(R"({"id":7})"), ProtocolError);
  EXPECT_NO_THROW(decode_response(R"({"id":"a","probability":1})"));
}

TEST(Metrics, GenerativeAccuracyOnAFourCaseFixture) {
  const auto& v = vocab();
  const EntityId best{0}, other{1};
  std::vector<CaseScores> scores;
  for (int i = 0; i < 4; ++i) {
    StageAnswers a;
    a.generated.fill(v.entity_surface(i == 3 ? other : best));
    scores.push_back(score_stage(a, targets_with(best, 0.0), v));
  }
  const auto m = aggregate(scores);
  for (double x : m.gen_accuracy) EXPECT_DOUBLE_EQ(x, 0.75);
}

TEST(Metrics, AnyTiedArgmaxCountsAndUnknownTextDoesNot) {
  const auto& v = vocab();
  auto t = targets_with(EntityId{0}, 0.0);
  t.argmax[0] = {EntityId{0}, EntityId{1}};
  StageAnswers a;
  a.generated = {v.entity_surface(EntityId{1}), "no such object", "", v.entity_surface(EntityId{0})};
  const auto s = score_stage(a, t, v);
  EXPECT_EQ(s.accuracy, (std::array<double, 4>{1, 0, 0, 1}));
}

TEST(Metrics, ProbabilisticCoherenceWorkedValueAndOrderInvariance) {
  const auto& v = vocab();
  std::vector<CaseScores> scores;
  for (double target : {0.9, 0.1}) {
    StageAnswers a;
    a.probes.fill(0.5);
    scores.push_back(score_stage(a, targets_with(EntityId{0}, target), v));
  }
  auto m = aggregate(scores);
  for (double x : m.prob_mae) EXPECT_NEAR(x, 0.4, 1e-15);
  std::reverse(scores.begin(), scores.end());
  EXPECT_TRUE(aggregate(scores) == m);
  StageAnswers exact;
  exact.probes.fill(0.3);
  for (double x : score_stage(exact, targets_with(EntityId{0}, 0.3), v).abs_error) EXPECT_EQ(x, 0.0);
}

TEST(Metrics, LogicalCoherenceWorkedValues) {
  // p(A) = 0.8 and p(not A) = 0.8
  EXPECT_NEAR(logic_violations(0.8, 0.8, 0.8, 0.64, 0.96, 0.8)[1], 0.6, 1e-15);
  // p(A) = p(B) = 0.5 and p(A or B) = 0.5
  EXPECT_NEAR(logic_violations(0.5, 0.5, 0.5, 0.25, 0.5, 0.5)[3], 0.25, 1e-15);
  // next-object vs truth of the same atom
  EXPECT_NEAR(logic_violations(0.7, 0.4, 0.6, 0.2, 0.7, 0.5)[0], 0.3, 1e-15);
  for (double x : logic_violations(0.6, 0.6, 0.4, 0.18, 0.72, 0.3)) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(Metrics, DeltaIsPostMinusPreAndEmptyIsNaN) {
  StageMetrics pre, post;
  pre.gen_accuracy = {0.5, 0.25, 1, 0};
  post.gen_accuracy = {1, 0, 1, 0.75};
  pre.prob_mae = {0.1, 0.2, 0.3, 0.4};
  post.prob_mae = {0.4, 0.3, 0.2, 0.1};
  pre.logic_mae = {0, 0.5, 0.25, 0.125};
  post.logic_mae = {0.5, 0, 0.125, 0.25};
  const auto d = difference(post, pre);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(d.gen_accuracy[i], post.gen_accuracy[i] - pre.gen_accuracy[i]);
    EXPECT_EQ(d.prob_mae[i], post.prob_mae[i] - pre.prob_mae[i]);
    EXPECT_EQ(d.logic_mae[i], post.logic_mae[i] - pre.logic_mae[i]);
  }
  const auto empty = aggregate({});
  for (double x : empty.gen_accuracy) EXPECT_TRUE(std::isnan(x));
  for (double x : empty.logic_mae) EXPECT_TRUE(std::isnan(x));
}

TEST(Report, JsonRoundTripAndTextTable) {
  BayesAgent agent(bbtest::desk().oracle);
  const std::vector<TestCase> some(cases().begin(), cases().begin() + 20);
  const auto report = run_with(agent, some, "bayes");
  const auto header = make_header(42, {{"model", "bayes"}});
  std::stringstream buf;
  write_report_json(buf, report, header);
  ArtifactHeader back_header;
  EXPECT_EQ(read_report_json(buf, &back_header), report);
  EXPECT_EQ(back_header.config_hash, header.config_hash);

  const auto text = render_report(report, header);
  EXPECT_NE(text.find("All Edit Requests"), std::string::npos);
  EXPECT_NE(text.find("Pre-edit"), std::string::npos);
  EXPECT_NE(text.find("Post-edit"), std::string::npos);
  EXPECT_NE(text.find("s1r1"), std::string::npos);
  EXPECT_EQ(text.find("-0.0000"), std::string::npos);
}

TEST(Report, EmptyCaseListRendersNa) {
  BayesAgent agent(bbtest::desk().oracle);
  const auto report = run_with(agent, {}, "bayes");
  EXPECT_EQ(report.total, 0u);
  EXPECT_EQ(report.evaluated, 0u);
  const auto text = render_report(report, make_header(1, {}));
  EXPECT_NE(text.find("n/a"), std::string::npos);
  std::stringstream buf;
  write_report_json(buf, report, make_header(1, {}));
  EXPECT_EQ(read_report_json(buf), report);
}

TEST(RunEval, BayesAgentIsAFixedPoint) {
  BayesAgent agent(bbtest::desk().oracle);
  for (const auto mode : {bench::WeightMode::automatic, bench::WeightMode::fixed}) {
    const auto report = run_with(agent, cases(), "bayes", mode);
    EXPECT_EQ(report.evaluated, cases().size());
    EXPECT_EQ(report.failed, 0u);
    for (const auto& s : report.subsets) {
      if (s.cases == 0) continue;
      for (const StageMetrics* m : {&s.pre, &s.post}) {
        for (double x : m->gen_accuracy) EXPECT_EQ(x, 1.0) << s.name;
        for (double x : m->prob_mae) EXPECT_NEAR(x, 0.0, 1e-9) << s.name;
        for (double x : m->logic_mae) EXPECT_NEAR(x, 0.0, 1e-9) << s.name;
      }
    }
  }
  // the agent reverted every edit
  EXPECT_TRUE(agent.oracle() == bbtest::desk().oracle);
}

TEST(RunEval, MemorizerRecallsTheCorpusExactly) {
  const auto docs = bbtest::documents_of(bbtest::desk().corpus);
  MemorizerAgent agent(vocab(), docs);
  const auto report = run_with(agent, cases(), "memorizer");
  EXPECT_EQ(report.failed, 0u);
  EXPECT_EQ(subset(report, "all").pre.gen_accuracy[0], 1.0);
  EXPECT_EQ(subset(report, "all").post.gen_accuracy[0], 1.0);
}

TEST(RunEval, StaleAgentAnswersTheSameBeforeAndAfter) {
  const auto docs = bbtest::documents_of(bbtest::desk().corpus);
  MemorizerAgent agent(vocab(), docs, false);
  LocalClient client(agent);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& c = cases()[i];
    const auto pre_q = stage_queries(c, "pre", vocab());
    const auto pre = collect_answers(pre_q, client.exchange(pre_q));
    agent.respond({c.id + ":edit", QueryKind::edit,
                   lang::next_object_prompt(c.edit.atom.subject, c.edit.atom.relation, vocab()),
                   vocab().entity_surface(c.edit.atom.object), c.edit.weight_auto});
    const auto post_q = stage_queries(c, "post", vocab());
    const auto post = collect_answers(post_q, client.exchange(post_q));
    agent.respond({c.id + ":revert", QueryKind::revert, "", std::nullopt, std::nullopt});
    ASSERT_TRUE(pre && post);
    EXPECT_EQ(pre->probes, post->probes);
    EXPECT_EQ(pre->generated, post->generated);
    EXPECT_EQ(pre->logic, post->logic);
  }
  // counterfactual edits leave a stale model answering the old object
  const auto report = run_with(agent, cases(), "stale");
  std::size_t counterfactual = 0;
  for (const auto& c : cases()) counterfactual += !c.error_fixing();
  const double expected = 1.0 - static_cast<double>(counterfactual) / cases().size();
  EXPECT_NEAR(subset(report, "all").post.gen_accuracy[0], expected, 1e-12);
  EXPECT_EQ(subset(report, "error_fixing").post.gen_accuracy[0], 1.0);
}

TEST(RunEval, FailedCasesAreExcludedAndCounted) {
  BayesAgent bayes(bbtest::desk().oracle);
  const std::vector<TestCase> some(cases().begin(), cases().begin() + 10);
  FailingCase failing(bayes, some[3].id);
  const auto report = run_with(failing, some, "bayes");
  EXPECT_EQ(report.total, 10u);
  EXPECT_EQ(report.failed, 1u);
  EXPECT_EQ(report.evaluated + report.failed, report.total);
  EXPECT_EQ(report.failed_ids, std::vector<std::string>{some[3].id});
  EXPECT_EQ(subset(report, "all").cases, 9u);
  EXPECT_EQ(subset(report, "all").pre.gen_accuracy[0], 1.0);

  DroppingClient dropping(bayes, some[5].id + ":post:7");
  EvalOptions opts;
  opts.model_name = "bayes";
  const auto dropped = run_eval(some, dropping, vocab(), opts);
  EXPECT_EQ(dropped.failed_ids, std::vector<std::string>{some[5].id});
  EXPECT_TRUE(bayes.oracle() == bbtest::desk().oracle);
}

TEST(RunEval, ShufflingCasesChangesNoMetric) {
  BayesAgent bayes(bbtest::desk().oracle);
  const auto docs = bbtest::documents_of(bbtest::desk().corpus);
  MemorizerAgent memo(vocab(), docs);
  std::vector<TestCase> shuffled = cases();
  Rng rng(6);
  rng.shuffle(std::span<TestCase>(shuffled));
  EXPECT_EQ(run_with(memo, shuffled, "m"), run_with(memo, cases(), "m"));
  EXPECT_EQ(run_with(bayes, shuffled, "b"), run_with(bayes, cases(), "b"));
}

TEST(RunEval, SubsetSelectionAndUnknownSubset) {
  BayesAgent bayes(bbtest::desk().oracle);
  LocalClient client(bayes);
  EvalOptions opts;
  opts.subsets = {"error_fixing"};
  const auto r = run_eval(cases(), client, vocab(), opts);
  ASSERT_EQ(r.subsets.size(), 1u);
  EXPECT_EQ(r.subsets[0].cases, bench::split_subsets(cases()).error_fixing.size());
  opts.subsets = {"most"};
  EXPECT_THROW(run_eval(cases(), client, vocab(), opts), Error);
}

namespace {

// Channel over a socketpair whose far end is driven by the test.
class PairClient : public StreamClient {
 public:
  PairClient(int fd, std::size_t window) : StreamClient(window, 2000ms), ch_(fd, fd, true) {}

 protected:
  LineChannel& channel() override { return ch_; }

 private:
  LineChannel ch_;
};

}  // namespace

TEST(Transport, ResponsesAreMatchedByIdWhenOutOfOrder) {
  int fds[2];
  ASSERT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  std::vector<ProbeQuery> queries;
  for (int i = 0; i < 6; ++i)
    queries.push_back({"q" + std::to_string(i), QueryKind::next_object, "p", "c", std::nullopt});
  std::thread peer([fd = fds[1]] {
    LineChannel ch(fd, fd, true);
    std::vector<std::string> ids;
    for (int i = 0; i < 6; ++i) ids.push_back(decode_query(*ch.read_line(2000ms)).id);
    std::reverse(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i)
      ch.write_line(encode(ProbeResponse{ids[i], 0.1 * static_cast<double>(i), std::nullopt,
                                         std::nullopt}));
  });
  PairClient client(fds[0], 8);
  const auto out = client.exchange(queries);
  peer.join();
  ASSERT_EQ(out.size(), 6u);
  for (const auto& r : out) {
    const int n = std::stoi(r.id.substr(1));
    EXPECT_NEAR(*r.probability, 0.1 * (5 - n), 1e-15);
  }
}

TEST(Transport, ExecClientTimesOutOnMissingResponses) {
  // answers every query except those mentioning "skip"
  const std::string script =
      R"sh(sed -u -e '/skip/d' -e 's/.*"id":"\([^"]*\)".*/{"id":"\1","probability":0.5}/')sh";
  ExecClient client(script, 4, 300ms);
  const std::vector<ProbeQuery> queries{
      {"a", QueryKind::truth, "x", std::nullopt, std::nullopt},
      {"skip", QueryKind::truth, "x", std::nullopt, std::nullopt},
      {"c", QueryKind::truth, "x", std::nullopt, std::nullopt}};
  const auto out = client.exchange(queries);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& r : out) EXPECT_NE(r.id, "skip");
}

TEST(Transport, TcpMatchesTheInProcessAgent) {
  const std::vector<TestCase> some(cases().begin(), cases().begin() + 10);
  BayesAgent local(bbtest::desk().oracle);
  const auto expected = run_with(local, some, "bayes");
  EvalOptions opts;
  opts.model_name = "bayes";

  BayesAgent served(bbtest::desk().oracle);
  const auto listener = listen_tcp(0);
  ASSERT_GT(listener.port, 0);
  std::thread server([&] { serve_one_connection(served, listener); });
  MetricsReport over_tcp;
  {
    TcpClient client("127.0.0.1:" + std::to_string(listener.port), 16, 5000ms);
    over_tcp = run_eval(some, client, vocab(), opts);
  }
  server.join();
  ::close(listener.fd);
  EXPECT_EQ(over_tcp, expected);
  EXPECT_THROW(TcpClient("localhost", 1, 100ms), Error);
}
