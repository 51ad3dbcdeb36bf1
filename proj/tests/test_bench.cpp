#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "beliefbench/bench.hpp"
#include "support.hpp"

using namespace beliefbench;
using namespace beliefbench::bench;

namespace {

const std::vector<TestCase>& desk_cases() {
  static const std::vector<TestCase> cases = [] {
    oracle::Oracle o = bbtest::desk().oracle;
    BenchOptions opts;
    opts.n_cases = 200;
    opts.seed = 42;
    return gen_cases(bbtest::desk().world, o, opts);
  }();
  return cases;
}

void expect_targets_near(const Targets& a, const Targets& b, double tol) {
  for (std::size_t i = 0; i < kProbeCount; ++i) EXPECT_NEAR(a.probes[i], b.probes[i], tol);
  for (std::size_t i = 0; i < kLogicCount; ++i) EXPECT_NEAR(a.logic[i], b.logic[i], tol);
  EXPECT_EQ(a.argmax, b.argmax);
}

}  // namespace

TEST(GenCases, OracleIsBitIdenticalAfterGeneration) {
  oracle::Oracle o = bbtest::desk().oracle;
  BenchOptions opts;
  opts.n_cases = 30;
  opts.seed = 3;
  gen_cases(bbtest::desk().world, o, opts);
  EXPECT_TRUE(o == bbtest::desk().oracle);
  EXPECT_EQ(o.snapshot_depth(), 0u);
}

TEST(GenCases, StructureOfEachCase) {
  const auto& d = bbtest::desk();
  oracle::Oracle o = d.oracle;
  for (const auto& c : desk_cases()) {
    const auto& a = c.edit.atom;
    EXPECT_EQ(c.probes[0], a);
    EXPECT_EQ(c.probes[1].subject, a.subject);
    EXPECT_NE(c.probes[1].relation, a.relation);
    EXPECT_EQ(c.probes[2].subject, c.probes[3].subject);
    EXPECT_NE(c.probes[2].subject, a.subject);
    EXPECT_NE(c.partner.subject, a.subject);
    if (!c.r2_fallback) {
      EXPECT_EQ(d.world.deps().downstream_of(a.relation), c.probes[1].relation);
    }
    if (!c.s2_fallback) {
      EXPECT_EQ(c.probes[2].relation, a.relation);
      EXPECT_EQ(c.probes[3].relation, c.probes[1].relation);
    }
    if (c.error_fixing()) {
      EXPECT_EQ(a.object, d.world.fact(a.subject, a.relation).ground_truth);
    } else {
      EXPECT_NE(a.object, d.world.fact(a.subject, a.relation).ground_truth);
    }
    EXPECT_EQ(c.edit.weight_fixed, 1000.0);
    EXPECT_EQ(c.edit.weight_auto, o.min_weight_for(a));
  }
}

TEST(GenCases, AutoWeightLiftsTheEditTargetToThreshold) {
  for (const auto& c : desk_cases()) {
    EXPECT_GE(c.post.probes[0], 0.95) << c.id;
    EXPECT_GE(c.post_fixed.probes[0], c.pre.probes[0]);
  }
}

TEST(GenCases, LogicTargetsObeyTheAxiomsAgainstAtomicTargets) {
  for (const auto& c : desk_cases())
    for (const Targets* t : {&c.pre, &c.post, &c.post_fixed}) {
      const double pa = t->probes[0], pb = t->logic[4];
      EXPECT_NEAR(t->logic[0], pa, 1e-12);
      EXPECT_NEAR(t->logic[1], 1 - pa, 1e-12);
      EXPECT_NEAR(t->logic[2], pa * pb, 1e-12);
      EXPECT_NEAR(t->logic[3], pa + pb - pa * pb, 1e-12);
    }
}

TEST(GenCases, RoughlyHalfAreErrorFixing) {
  const auto n = static_cast<double>(desk_cases().size());
  const auto fixes = static_cast<double>(split_subsets(desk_cases()).error_fixing.size());
  // binomial(200, 0.5): four standard deviations
  EXPECT_NEAR(fixes, n / 2, 4 * std::sqrt(n * 0.25));
}

TEST(GenCases, FiveThousandCasesSplitHalfAndHalf) {
  oracle::Oracle o = bbtest::desk().oracle;
  BenchOptions opts;
  opts.n_cases = 5000;
  opts.downstream_preference = 0;  // only the split is under test here
  opts.seed = 11;
  const auto cases = gen_cases(bbtest::desk().world, o, opts);
  const auto fixes = static_cast<double>(split_subsets(cases).error_fixing.size());
  EXPECT_NEAR(fixes, 2500.0, 4 * std::sqrt(5000 * 0.25));
}

TEST(GenCases, DownstreamFlagMatchesArgmaxMovement) {
  const auto& d = bbtest::desk();
  oracle::Oracle o = d.oracle;
  std::size_t changed = 0;
  for (const auto& c : desk_cases()) {
    const auto& probe = c.probes[1];
    const EntityId before = o.predictive(probe.subject, probe.relation).mode();
    const auto tok = o.snapshot();
    o.apply_edit(c.edit.atom, c.edit.weight_auto);
    const EntityId after = o.predictive(probe.subject, probe.relation).mode();
    o.restore(tok);
    EXPECT_EQ(c.downstream_change, before != after) << c.id;
    EXPECT_EQ(probe.object, after);
    changed += c.downstream_change;
  }
  EXPECT_GT(changed, 0u);
}

TEST(GenCases, SameSeedSameCases) {
  oracle::Oracle o = bbtest::desk().oracle;
  BenchOptions opts;
  opts.n_cases = 200;
  opts.seed = 42;
  EXPECT_EQ(gen_cases(bbtest::desk().world, o, opts), desk_cases());
}

TEST(GenCases, InvalidOptionsAreErrors) {
  oracle::Oracle o = bbtest::desk().oracle;
  BenchOptions opts;
  opts.n_cases = 1;
  opts.threshold = 1.0;
  EXPECT_THROW(gen_cases(bbtest::desk().world, o, opts), Error);
  opts.threshold = 0.95;
  opts.weight_fixed = 0;
  EXPECT_THROW(gen_cases(bbtest::desk().world, o, opts), Error);
}

TEST(Subsets, RecountFromFlags) {
  const auto& cases = desk_cases();
  const auto s = split_subsets(cases);
  EXPECT_EQ(s.all.size(), cases.size());
  std::size_t down = 0, fix = 0, both = 0;
  for (const auto& c : cases) {
    down += c.downstream_change;
    fix += c.error_fixing();
    both += c.downstream_change && c.error_fixing();
  }
  EXPECT_EQ(s.downstream_change.size(), down);
  EXPECT_EQ(s.error_fixing.size(), fix);
  for (std::size_t i : s.downstream_change) EXPECT_TRUE(cases[i].downstream_change);
  for (std::size_t i : s.error_fixing) EXPECT_TRUE(cases[i].error_fixing());
  EXPECT_LE(s.downstream_change.size() + s.error_fixing.size() - both, cases.size());
}

TEST(Subsets, ErrorFixingPreArgmaxIsTheRequestedObject) {
  for (const auto& c : desk_cases()) {
    if (!c.error_fixing()) continue;
    const auto& set = c.pre.argmax[0];
    EXPECT_NE(std::find(set.begin(), set.end(), c.edit.atom.object), set.end()) << c.id;
  }
}

TEST(BenchFile, JsonLinesRoundTrip) {
  const auto& v = bbtest::desk().world.vocab();
  std::stringstream buf;
  write_bench(buf, desk_cases(), v, make_header(42, {{"cases", "200"}}));
  const std::string text = buf.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')),
            desk_cases().size() + 1);
  EXPECT_EQ(read_bench(buf, v), desk_cases());
}

TEST(BenchFile, MalformedInputIsAnError) {
  const auto& v = bbtest::desk().world.vocab();
  std::istringstream no_header("{\"id\": \"case-1\"}\n");
  EXPECT_THROW(read_bench(no_header, v), Error);
  std::istringstream garbage("{\"header\": {}}\nnot json\n");
  EXPECT_THROW(read_bench(garbage, v), Error);
}

TEST(Reproducibility, FreshOracleRecomputesStoredTargets) {
  const auto& v = bbtest::desk().world.vocab();
  std::stringstream buf;
  std::vector<TestCase> first(desk_cases().begin(), desk_cases().begin() + 100);
  write_bench(buf, first, v, make_header(42, {}));
  auto stored = read_bench(buf, v);

  // refit from the same seed, sharing nothing with the cached desk
  auto fresh = bbtest::make_desk(42);
  ASSERT_FALSE(&fresh.oracle == &bbtest::desk().oracle);
  for (auto c : stored) {
    const TestCase original = c;
    fill_targets(fresh.oracle, c);
    expect_targets_near(c.pre, original.pre, 1e-9);
    expect_targets_near(c.post, original.post, 1e-9);
    expect_targets_near(c.post_fixed, original.post_fixed, 1e-9);
  }
}
