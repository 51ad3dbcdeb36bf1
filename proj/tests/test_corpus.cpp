#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "beliefbench/corpus.hpp"
#include "beliefbench/rng.hpp"
#include "oracles.hpp"

using namespace beliefbench;
using namespace beliefbench::corpus;

namespace {

// world ground truth decides every atom
bool world_truth(const world::WorldModel& w, const lang::Atom& a) {
  return w.fact(a.subject, a.relation).ground_truth == a.object;
}

bool claim_truth(const world::WorldModel& w, const lang::Claim& c) {
  if (const auto* a = std::get_if<lang::Atom>(&c)) return world_truth(w, *a);
  if (const auto* n = std::get_if<lang::Not>(&c)) return !world_truth(w, n->atom);
  if (const auto* x = std::get_if<lang::And>(&c))
    return world_truth(w, x->lhs) && world_truth(w, x->rhs);
  const auto& o = std::get<lang::Or>(c);
  return world_truth(w, o.lhs) || world_truth(w, o.rhs);
}

std::string render_text(const Corpus& c, const world::WorldModel& w, std::uint64_t seed) {
  std::ostringstream out;
  write_corpus(out, c, w.vocab(), make_header(seed, {}));
  return out.str();
}

}  // namespace

TEST(FactBlock, AtLeastSixGroundTruthSamplesAndMatchingLabels) {
  const auto& w = bbtest::desk().world;
  Rng rng(99);
  std::size_t min_hits = kSamplesPerFact;
  const auto facts = w.facts();
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& f = facts[i % facts.size()];
    const auto block = gen_fact_block(w, f.subject, f.relation, rng);
    ASSERT_EQ(block.atomic_samples.size(), kSamplesPerFact);
    ASSERT_EQ(block.tf_sentences.size(), kSamplesPerFact);
    std::size_t hits = 0, true_labels = 0;
    for (std::size_t k = 0; k < kSamplesPerFact; ++k) {
      const auto& a = block.atomic_samples[k];
      hits += a.object == f.ground_truth;
      EXPECT_GT(w.distribution(f).prob(a.object), 0.0);
      const auto& t = block.tf_sentences[k];
      EXPECT_EQ(t.claim, lang::Claim(a));
      EXPECT_EQ(*t.label, a.object == f.ground_truth);
      true_labels += *t.label;
    }
    EXPECT_EQ(true_labels, hits);
    min_hits = std::min(min_hits, hits);
  }
  EXPECT_GE(min_hits, kMinGroundTruthSamples);
}

TEST(FactBlock, DeterministicDistributionGivesAllGroundTruth) {
  auto options = bbtest::desk_world_options(3);
  options.floor = 1.0;
  pipeline::SynthOptions synth;
  synth.subjects = 60;
  const auto w = pipeline::synth_world(synth, options);
  Rng rng(1);
  for (const auto& f : w.facts()) {
    if (f.conditioned()) continue;
    const auto block = gen_fact_block(w, f.subject, f.relation, rng);
    for (const auto& t : block.tf_sentences) EXPECT_TRUE(*t.label);
  }
}

TEST(Connectives, LabelsAgreeWithIndependentTruthAndKindsAreBalanced) {
  const auto& d = bbtest::desk();
  std::map<lang::SentenceKind, std::size_t> kinds;
  Rng rng(5);
  std::size_t checked = 0;
  for (EntityId s : d.world.subjects()) {
    if (checked++ == 40) break;
    std::vector<FactKey> own;
    for (const auto& f : d.world.facts_of(s)) own.push_back(f.key());
    const auto out = gen_connective_sentences(d.world, s, own, 21, d.corpus.facts, rng);
    ASSERT_EQ(out.size(), 21u);
    std::map<lang::SentenceKind, std::size_t> local;
    for (const auto& sentence : out) {
      ASSERT_TRUE(sentence.label.has_value());
      EXPECT_EQ(*sentence.label, claim_truth(d.world, sentence.claim));
      const auto atoms = lang::atoms_of(sentence.claim);
      EXPECT_EQ(atoms[0].subject, s);
      if (atoms.size() == 2) {
        EXPECT_NE(atoms[1].subject, s);
      }
      for (const auto& a : atoms) {
        const auto& f = d.world.fact(a.subject, a.relation);
        EXPECT_TRUE(a.object == f.ground_truth || a.object == f.distractor);
      }
      ++local[sentence.kind()];
      ++kinds[sentence.kind()];
    }
    EXPECT_EQ(local[lang::SentenceKind::negation], 7u);
    EXPECT_EQ(local[lang::SentenceKind::conjunction], 7u);
    EXPECT_EQ(local[lang::SentenceKind::disjunction], 7u);
  }
}

TEST(Connectives, NegatedGroundTruthIsFalse) {
  const auto& w = bbtest::desk().world;
  const auto& f = w.facts()[0];
  const std::vector<FactKey> own{f.key()};
  Rng rng(8);
  // no partners available: every connective is a negation
  const auto out = gen_connective_sentences(w, f.subject, own, 30, {}, rng);
  for (const auto& s : out) {
    const auto& n = std::get<lang::Not>(s.claim);
    EXPECT_EQ(*s.label, n.atom.object != f.ground_truth);
  }
}

TEST(Assemble, ChunksShufflesAndConserves) {
  std::vector<lang::Sentence> sentences;
  for (std::uint32_t i = 0; i < 25; ++i)
    sentences.push_back(lang::Sentence::atomic({EntityId{1}, RelationId{0}, EntityId{i}}));
  Rng rng(3);
  const auto docs = assemble_documents(EntityId{1}, sentences, 10, rng);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(docs[0].sentences.size(), 10u);
  EXPECT_EQ(docs[1].sentences.size(), 10u);
  EXPECT_EQ(docs[2].sentences.size(), 5u);
  std::multiset<std::uint32_t> seen;
  for (const auto& d : docs) {
    EXPECT_EQ(d.topic, EntityId{1});
    for (const auto& s : d.sentences) seen.insert(std::get<lang::Atom>(s.claim).object.value);
  }
  EXPECT_EQ(seen.size(), 25u);
  EXPECT_EQ(std::set<std::uint32_t>(seen.begin(), seen.end()).size(), 25u);
}

TEST(Corpus, TenAtomicAndTenTruthSentencesPerFact) {
  const auto& d = bbtest::desk();
  const auto& s = d.corpus.stats;
  EXPECT_EQ(d.corpus.facts.size(), 1000u);
  EXPECT_EQ(s.true_atomic_facts, 1000u);
  EXPECT_EQ(s.atomic_sentences, 10'000u);
  EXPECT_EQ(s.tf_sentences, 10'000u);
  EXPECT_EQ(s.connective_sentences, 20 * s.subjects);
  EXPECT_EQ(s.total_sentences, s.atomic_sentences + s.tf_sentences + s.connective_sentences);
  // same ratio as a 100k-fact corpus: 1m atomic and 1m T/F sentences
  EXPECT_EQ(s.atomic_sentences * 100, 1'000'000u);
  EXPECT_EQ(s.tf_sentences * 100, 1'000'000u);
}

TEST(Corpus, StatsMatchIndependentRecountOfEmittedText) {
  const auto& d = bbtest::desk();
  const std::string text = render_text(d.corpus, d.world, 42);
  const auto c = bbtest::count_text(text);
  const auto& s = d.corpus.stats;
  EXPECT_EQ(c.documents, s.documents);
  EXPECT_EQ(c.tokens, s.tokens);
  EXPECT_EQ(c.atomic, s.atomic_sentences);
  EXPECT_EQ(c.tf, s.tf_sentences);
  EXPECT_EQ(c.connective, s.connective_sentences);

  std::set<EntityId> topics;
  for (const auto& doc : d.corpus.documents) {
    EXPECT_LE(doc.sentences.size(), 10u);
    topics.insert(doc.topic);
    for (const auto& sentence : doc.sentences)
      EXPECT_EQ(lang::atoms_of(sentence.claim)[0].subject, doc.topic);
  }
  EXPECT_EQ(topics.size(), s.subjects);
}

TEST(Corpus, EverySentenceParsesBack) {
  const auto& d = bbtest::desk();
  std::istringstream in(render_text(d.corpus, d.world, 42));
  const auto docs = read_corpus(in, d.world.vocab());
  EXPECT_EQ(docs, bbtest::documents_of(d.corpus));
  EXPECT_EQ(recount(docs, d.world.vocab()), d.corpus.stats);
}

TEST(Corpus, SameSeedSameBytesDifferentSeedDifferentText) {
  const auto& w = bbtest::desk().world;
  CorpusOptions o;
  o.seed = 42;
  const auto a = render_text(generate_corpus(w, o), w, 42);
  const auto b = render_text(generate_corpus(w, o), w, 42);
  EXPECT_EQ(a, b);
  o.seed = 43;
  EXPECT_NE(render_text(generate_corpus(w, o), w, 42), a);
}

TEST(Corpus, TooFewFactsIsAnError) {
  const auto& w = bbtest::desk().world;
  CorpusOptions o;
  o.target_facts = w.facts().size() + 1;
  EXPECT_THROW(generate_corpus(w, o), Error);
}

TEST(Corpus, EmitWritesThreeFilesWithHeaders) {
  const auto& d = bbtest::desk();
  const auto dir = std::filesystem::temp_directory_path() / "bb_corpus_emit";
  std::filesystem::remove_all(dir);
  const auto paths = emit_corpus(d.world, d.corpus, dir, make_header(42, {{"facts", "1000"}}));
  for (const auto& p : {paths.corpus, paths.stats, paths.vocabulary}) {
    const auto text = read_file(p);
    EXPECT_EQ(text.rfind("# beliefbench ", 0), 0u) << p;
    EXPECT_NE(text.find("# config-hash: "), std::string::npos);
    EXPECT_NE(text.find("# seed: 42"), std::string::npos);
  }
  std::ifstream stats(paths.stats);
  EXPECT_EQ(read_stats(stats), d.corpus.stats);
  std::ifstream vocab(paths.vocabulary);
  const auto vf = read_vocabulary(vocab);
  EXPECT_EQ(vf.vocab, d.world.vocab());
  EXPECT_EQ(vf.deps, d.world.deps());
  std::filesystem::remove_all(dir);
}
