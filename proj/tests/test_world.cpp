#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "beliefbench/rng.hpp"
#include "beliefbench/world/dependencies.hpp"
#include "beliefbench/world/graph.hpp"
#include "beliefbench/world/world_model.hpp"
#include "support.hpp"

using namespace beliefbench;
using namespace beliefbench::world;

namespace {

KnowledgeGraph graph_from(const std::string& rows) {
  std::istringstream in(rows);
  return ingest_triples(in);
}

// all perfect-or-partial matchings of {0..n-1}, by recursion on the lowest
// free index
void enumerate(std::size_t n, std::vector<bool>& used,
               std::vector<std::pair<std::size_t, std::size_t>>& cur, const SquareMatrix& m,
               double& best) {
  std::size_t i = 0;
  while (i < n && used[i]) ++i;
  if (i == n) {
    double w = 0;
    for (auto [a, b] : cur) w += std::max(m(a, b), m(b, a));
    best = std::max(best, w);
    return;
  }
  used[i] = true;
  enumerate(n, used, cur, m, best);  // i left unpaired
  for (std::size_t j = i + 1; j < n; ++j) {
    if (used[j]) continue;
    used[j] = true;
    cur.emplace_back(i, j);
    enumerate(n, used, cur, m, best);
    cur.pop_back();
    used[j] = false;
  }
  used[i] = false;
}

double brute_force_pairing(const SquareMatrix& m) {
  std::vector<bool> used(m.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> cur;
  double best = 0;
  enumerate(m.size(), used, cur, m, best);
  return best;
}

}  // namespace

TEST(Ingest, ReadsTabAndCommaRowsAndSkipsMalformed) {
  IngestReport report;
  std::istringstream in("Q1\tP69\tQ10\nQ1,P106,Q11\nbroken row\n# comment\nQ2\tP69\t\n");
  const auto g = ingest_triples(in, {}, &report);
  EXPECT_EQ(g.triples.size(), 2u);
  EXPECT_EQ(report.rows_read, 4u);
  EXPECT_EQ(report.malformed, 2u);
  EXPECT_EQ(report.warnings.size(), 2u);
}

TEST(Ingest, DenylistDropsRowsAndEmptyInputIsEmptyGraph) {
  IngestReport report;
  std::istringstream in("Q1\tP735\tQ10\nQ1\tP69\tQ5\nQ2\tP69\tQ10\n");
  const auto g = ingest_triples(in, {}, &report);
  EXPECT_EQ(g.triples.size(), 1u);
  EXPECT_EQ(report.excluded, 2u);

  std::istringstream empty("");
  EXPECT_TRUE(ingest_triples(empty).triples.empty());
  std::istringstream all_bad("x\ny\n");
  EXPECT_THROW(ingest_triples(all_bad), Error);
}

TEST(Ingest, NamesBecomeSurfacesAndCollisionsAreDisambiguated) {
  auto g = graph_from("Q1\tP69\tQ10\nQ2\tP69\tQ11\n");
  std::istringstream names("Q1\tAda \"Lovelace\"\nQ2\tAda \"Lovelace\"\nQ10\tOxford\n");
  apply_entity_names(g, names);
  const auto& v = g.vocab;
  EXPECT_EQ(v.entity_surface(v.entity("Q10")), "Oxford");
  EXPECT_NE(v.entity_surface(v.entity("Q1")), v.entity_surface(v.entity("Q2")));
  EXPECT_EQ(v.entity_surface(v.entity("Q1")).find('"'), std::string::npos);
}

TEST(Cooccurrence, MatchesDirectCount) {
  const auto g = synth_graph(60, 6, 8, {}, 3);
  const auto counts = count_cooccurrence(g);
  const std::size_t n = g.relations.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t expect = 0;
      if (i != j)
        for (const auto& t : g.triples) {
          if (t.relation != g.relations[i]) continue;
          const bool also = std::any_of(g.triples.begin(), g.triples.end(), [&](const Triple& u) {
            return u.subject == t.subject && u.relation == g.relations[j];
          });
          expect += also;
        }
      EXPECT_EQ(counts[i][j], expect) << i << "," << j;
    }
}

TEST(FilterRelations, KeepsTopKQualifyingRelations) {
  const auto g = synth_graph(200, 8, 10, {}, 5);
  const auto f = filter_relations(g, 10, 4);
  EXPECT_EQ(f.relations.size(), 4u);
  for (const auto& t : f.triples)
    EXPECT_NE(std::find(f.relations.begin(), f.relations.end(), t.relation), f.relations.end());
  EXPECT_THROW(filter_relations(g, 1'000'000, 10), Error);
}

TEST(OneToOne, AlreadyOneToOneIsUnchanged) {
  const auto g = graph_from("Q1\tP1\tQ10\nQ2\tP1\tQ11\nQ1\tP2\tQ12\n");
  const auto o = enforce_one_to_one(g, 7);
  EXPECT_EQ(o.triples, g.triples);
}

TEST(OneToOne, KeepsOneObjectPerSlotDeterministically) {
  const auto g = graph_from("Q1\tP1\tQ10\nQ1\tP1\tQ11\nQ1\tP1\tQ12\n");
  const auto a = enforce_one_to_one(g, 7);
  const auto b = enforce_one_to_one(g, 7);
  ASSERT_EQ(a.triples.size(), 1u);
  EXPECT_EQ(a.vocab.entity_key(a.triples[0].object), b.vocab.entity_key(b.triples[0].object));
}

TEST(OneToOne, FiveOneToManyFactsGiveFiveTriplesIndependentOfRowOrder) {
  std::vector<std::string> rows;
  for (int s = 0; s < 5; ++s)
    for (int o = 0; o < 3; ++o)
      rows.push_back("Q" + std::to_string(s) + "\tP1\tQ" + std::to_string(100 + 3 * s + o));
  std::string forward, backward;
  for (const auto& r : rows) forward += r + "\n";
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) backward += *it + "\n";
  const auto a = enforce_one_to_one(graph_from(forward), 11);
  const auto b = enforce_one_to_one(graph_from(backward), 11);
  ASSERT_EQ(a.triples.size(), 5u);
  std::set<FactKey> slots;
  for (const auto& t : a.triples) slots.insert({t.subject, t.relation});
  EXPECT_EQ(slots.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_EQ(a.vocab.entity_key(a.triples[i].object), b.vocab.entity_key(b.triples[i].object));
}

TEST(Rates, MatchDirectRatio) {
  const auto g = synth_graph(80, 4, 6, {}, 9);
  const auto m = cooccurrence_rates(g);
  for (std::size_t i = 0; i < g.relations.size(); ++i)
    for (std::size_t j = 0; j < g.relations.size(); ++j) {
      std::set<EntityId> hi, both;
      for (const auto& t : g.triples)
        if (t.relation == g.relations[i]) hi.insert(t.subject);
      for (const auto& t : g.triples)
        if (t.relation == g.relations[j] && hi.count(t.subject)) both.insert(t.subject);
      const double expect = i == j || hi.empty() ? 0.0 : double(both.size()) / double(hi.size());
      EXPECT_NEAR(m(i, j), expect, 1e-12);
    }
}

TEST(Balance, ReachesUnitRowAndColumnSums) {
  Rng rng(4);
  SquareMatrix m(5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) m(i, j) = 0.05 + rng.uniform();
  balance_doubly_stochastic(m);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(m.row_sum(i), 1.0, 1e-6);
    EXPECT_NEAR(m.col_sum(i), 1.0, 1e-6);
  }
}

TEST(Pairing, TwoByTwoPicksTheOnlyPairOrientedToTheLargerEntry) {
  const SquareMatrix m{{0.9, 0.1}, {0.2, 0.8}};
  const auto p = max_weight_pairing(m);
  ASSERT_EQ(p.pairs.size(), 1u);
  EXPECT_EQ(p.pairs[0], (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_DOUBLE_EQ(p.weight, brute_force_pairing(m));
}

TEST(Pairing, MatchesExhaustiveEnumerationOnRandomMatrices) {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.index(5);  // 2..6
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && rng.bernoulli(0.8)) m(i, j) = rng.uniform();
    const auto p = max_weight_pairing(m);
    EXPECT_NEAR(p.weight, brute_force_pairing(m), 1e-12);
    double w = 0;
    std::set<std::size_t> seen;
    for (auto [a, b] : p.pairs) {
      EXPECT_NE(a, b);
      EXPECT_TRUE(seen.insert(a).second);
      EXPECT_TRUE(seen.insert(b).second);
      EXPECT_GE(m(a, b), m(b, a));
      w += std::max(m(a, b), m(b, a));
    }
    EXPECT_NEAR(w, p.weight, 1e-12);
  }
}

TEST(Pairing, UniformMatrixTieBreakIsRepeatable) {
  SquareMatrix m(4, 0.25);
  for (std::size_t i = 0; i < 4; ++i) m(i, i) = 0;
  const auto a = max_weight_pairing(m);
  const auto b = max_weight_pairing(m);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0], (std::pair<std::size_t, std::size_t>{0, 1}));
}

TEST(Dependencies, CoupledSyntheticRelationsArePairedWithPlantedDirection) {
  CooccurProfile profile;
  profile.couplings = std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}};
  const auto g = synth_graph(300, 4, 10, profile, 2);
  const auto one = enforce_one_to_one(g, 2);
  const auto deps = assign_dependencies(one);
  ASSERT_GE(deps.size(), 1u);
  const auto up = one.vocab.find_relation("P69");
  const auto down = one.vocab.find_relation("P106");
  ASSERT_TRUE(up && down);
  EXPECT_EQ(deps.upstream_of(*down), up);
}

TEST(Synth, DeterministicAndBounded) {
  const auto a = synth_graph(100, 4, 10, {}, 1);
  const auto b = synth_graph(100, 4, 10, {}, 1);
  EXPECT_EQ(a.triples, b.triples);
  EXPECT_EQ(a.vocab, b.vocab);
  const auto one = enforce_one_to_one(a, 1);
  EXPECT_LE(one.triples.size(), 400u);
  std::set<FactKey> slots;
  for (const auto& t : one.triples) EXPECT_TRUE(slots.insert({t.subject, t.relation}).second);
}

TEST(ModalFloor, RaisesModeAndRescalesRest) {
  Distribution d{{EntityId{1}, EntityId{2}, EntityId{3}}, {0.5, 0.3, 0.2}};
  const auto f = enforce_modal_floor(d, 0.6);
  EXPECT_NEAR(f.probs[0], 0.6, 1e-12);
  EXPECT_NEAR(f.probs[1], 0.24, 1e-12);
  EXPECT_NEAR(f.probs[2], 0.16, 1e-12);
  EXPECT_NEAR(f.probs[0] + f.probs[1] + f.probs[2], 1.0, 1e-12);

  Distribution g{{EntityId{1}, EntityId{2}}, {0.9, 0.1}};
  EXPECT_EQ(enforce_modal_floor(g, 0.6), g);
}

TEST(Distribution, SamplingFrequenciesWithinOnePercent) {
  Distribution d{{EntityId{4}, EntityId{9}}, {0.6, 0.4}};
  Rng rng(123);
  std::size_t first = 0;
  const std::size_t n = 100'000;
  for (std::size_t i = 0; i < n; ++i) first += d.sample(rng) == EntityId{4};
  EXPECT_NEAR(double(first) / n, 0.6, 0.01);

  Distribution point{{EntityId{7}}, {1.0}};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(point.sample(rng), EntityId{7});
}

TEST(Distribution, ModeBreaksTiesTowardsSmallestId) {
  Distribution d{{EntityId{2}, EntityId{5}, EntityId{8}}, {0.4, 0.4, 0.2}};
  EXPECT_EQ(d.mode(), EntityId{2});
}

TEST(WorldModel, DistributionsRespectFloorAndDistractorRule) {
  const auto& w = bbtest::desk().world;
  ASSERT_GE(w.facts().size(), 1000u);
  std::size_t conditioned = 0;
  for (const auto& f : w.facts()) {
    EXPECT_NE(f.distractor, f.ground_truth);
    const auto& d = w.distribution(f);
    double sum = 0;
    for (double p : d.probs) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(d.mode(), f.ground_truth);
    EXPECT_GE(d.prob(f.ground_truth), w.floor() - 1e-12);
    if (f.conditioned()) {
      ++conditioned;
      EXPECT_TRUE(w.deps().is_downstream(f.relation));
    } else {
      EXPECT_NEAR(d.prob(f.ground_truth), w.floor(), 1e-12);
      EXPECT_NEAR(d.prob(f.distractor), 1 - w.floor(), 1e-12);
    }
  }
  EXPECT_GT(conditioned, 0u);
  EXPECT_NEAR(w.conditioned_fraction(), double(conditioned) / w.facts().size(), 1e-12);
}

TEST(WorldModel, ConditionedSamplesStayInConditionalSupport) {
  const auto& w = bbtest::desk().world;
  Rng rng(5);
  int checked = 0;
  for (const auto& f : w.facts()) {
    if (!f.conditioned() || checked++ > 50) continue;
    const auto& d = w.distribution(f);
    for (int i = 0; i < 50; ++i) {
      const EntityId o = d.sample(rng);
      EXPECT_GT(d.prob(o), 0.0);
    }
  }
}

TEST(WorldModel, RejectsBadFloorAndNonOneToOneGraphs) {
  const auto g = synth_graph(60, 4, 6, {}, 1);
  const auto one = enforce_one_to_one(g, 1);
  const auto deps = assign_dependencies(one);
  EXPECT_THROW(build_generative_model(one, deps, 0.5, 1), Error);
  EXPECT_THROW(build_generative_model(one, deps, 1.2, 1), Error);
  CooccurProfile multi;
  multi.multi_object_rate = 0.5;
  const auto many = synth_graph(60, 4, 6, multi, 1);
  EXPECT_THROW(build_generative_model(many, deps, 0.6, 1), Error);
}

TEST(WorldModel, ArchiveRoundTrip) {
  const auto& w = bbtest::desk().world;
  std::stringstream buf;
  w.save(buf, make_header(42, {{"k", "v"}}));
  const auto back = WorldModel::load(buf);
  EXPECT_EQ(back, w);
  EXPECT_EQ(back.facts().size(), w.facts().size());

  std::istringstream bad("beliefbench-world\t99\n");
  EXPECT_THROW(WorldModel::load(bad), Error);
}
