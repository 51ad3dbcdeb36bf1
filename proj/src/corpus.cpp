#include "beliefbench/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace beliefbench::corpus {

using world::WorldModel;

EntityId sample_object(const WorldModel& world, EntityId subject, RelationId relation, Rng& rng) {
  return world.distribution(world.fact(subject, relation)).sample(rng);
}

FactBlock gen_fact_block(const WorldModel& world, EntityId subject, RelationId relation,
                         Rng& rng) {
  const auto& fact = world.fact(subject, relation);
  const auto& dist = world.distribution(fact);
  FactBlock block{fact.key(), {}, {}};
  for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
    block.atomic_samples.clear();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < kSamplesPerFact; ++i) {
      const EntityId o = dist.sample(rng);
      hits += o == fact.ground_truth;
      block.atomic_samples.push_back({subject, relation, o});
    }
    if (hits < kMinGroundTruthSamples) continue;
    for (const auto& a : block.atomic_samples)
      block.tf_sentences.push_back(Sentence::truth(a, a.object == fact.ground_truth));
    return block;
  }
  throw Error("could not draw " + std::to_string(kMinGroundTruthSamples) +
              " ground-truth samples for (" + world.vocab().entity_key(subject) + ", " +
              world.vocab().relation_key(relation) + ") in " + std::to_string(kMaxRejections) +
              " attempts");
}

namespace {

Atom operand(const WorldModel& world, const FactKey& key, bool truthful) {
  const auto& f = world.fact(key.subject, key.relation);
  return {key.subject, key.relation, truthful ? f.ground_truth : f.distractor};
}

std::optional<FactKey> draw_partner(EntityId subject, std::span<const FactKey> pool, Rng& rng) {
  if (pool.empty()) return std::nullopt;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const auto& k = pool[rng.index(pool.size())];
    if (k.subject != subject) return k;
  }
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (pool[i].subject != subject) others.push_back(i);
  if (others.empty()) return std::nullopt;
  return pool[others[rng.index(others.size())]];
}

}  // namespace

std::vector<Sentence> gen_connective_sentences(const WorldModel& world, EntityId subject,
                                               std::span<const FactKey> own, std::size_t count,
                                               std::span<const FactKey> partner_pool, Rng& rng) {
  std::vector<Sentence> out;
  if (own.empty() || count == 0) return out;
  const std::size_t offset = rng.index(3);
  for (std::size_t i = 0; i < count; ++i) {
    const FactKey& key = own[rng.index(own.size())];
    const bool a_true = rng.bernoulli(0.5);
    const Atom a = operand(world, key, a_true);
    const std::size_t kind = (i + offset) % 3;
    std::optional<FactKey> partner;
    if (kind != 0) partner = draw_partner(subject, partner_pool, rng);
    if (!partner) {
      // with no other subject in the corpus every connective is a negation
      out.push_back(Sentence::truth(lang::Not{a}, !a_true));
      continue;
    }
    const bool b_true = rng.bernoulli(0.5);
    const Atom b = operand(world, *partner, b_true);
    if (kind == 1)
      out.push_back(Sentence::truth(lang::And{a, b}, a_true && b_true));
    else
      out.push_back(Sentence::truth(lang::Or{a, b}, a_true || b_true));
  }
  return out;
}

std::vector<Document> assemble_documents(EntityId topic, std::vector<Sentence> sentences,
                                         std::size_t max_per_doc, Rng& rng) {
  if (max_per_doc == 0) throw Error("max_per_doc must be positive");
  rng.shuffle(std::span<Sentence>(sentences));
  std::vector<Document> docs;
  for (std::size_t i = 0; i < sentences.size(); i += max_per_doc) {
    const std::size_t end = std::min(sentences.size(), i + max_per_doc);
    docs.push_back({topic, {sentences.begin() + static_cast<std::ptrdiff_t>(i),
                            sentences.begin() + static_cast<std::ptrdiff_t>(end)}});
  }
  return docs;
}

// ---------------------------------------------------------------------------
// statistics

namespace {

struct StatField {
  const char* name;
  std::size_t CorpusStats::*member;
};

constexpr StatField kStatFields[] = {
    {"true_atomic_facts", &CorpusStats::true_atomic_facts},
    {"atomic_sentences", &CorpusStats::atomic_sentences},
    {"tf_sentences", &CorpusStats::tf_sentences},
    {"connective_sentences", &CorpusStats::connective_sentences},
    {"total_sentences", &CorpusStats::total_sentences},
    {"documents", &CorpusStats::documents},
    {"tokens", &CorpusStats::tokens},
    {"subjects", &CorpusStats::subjects},
    {"relations", &CorpusStats::relations},
    {"objects", &CorpusStats::objects},
};

void tally(CorpusStats& stats, std::set<FactKey>& facts, std::set<EntityId>& subjects,
           std::set<RelationId>& relations, std::set<EntityId>& objects, const Sentence& s) {
  switch (s.kind()) {
    case lang::SentenceKind::atomic: {
      const auto& a = std::get<Atom>(s.claim);
      ++stats.atomic_sentences;
      facts.insert(a.key());
      subjects.insert(a.subject);
      relations.insert(a.relation);
      break;
    }
    case lang::SentenceKind::truth:
      ++stats.tf_sentences;
      break;
    default:
      ++stats.connective_sentences;
  }
  for (const auto& a : lang::atoms_of(s.claim)) objects.insert(a.object);
  ++stats.total_sentences;
}

}  // namespace

void write_stats(std::ostream& out, const CorpusStats& stats, const ArtifactHeader& header) {
  out << header.render_comment_block();
  for (const auto& f : kStatFields) out << f.name << '=' << stats.*f.member << '\n';
}

CorpusStats read_stats(std::istream& in) {
  CorpusStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("stats file: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const auto* field = std::find_if(std::begin(kStatFields), std::end(kStatFields),
                                     [&](const StatField& f) { return key == f.name; });
    if (field == std::end(kStatFields)) throw Error("stats file: unknown key '" + key + "'");
    stats.*field->member = std::stoull(line.substr(eq + 1));
  }
  return stats;
}

CorpusStats recount(std::span<const std::vector<Sentence>> documents, const Vocabulary& vocab) {
  CorpusStats stats;
  std::set<FactKey> facts;
  std::set<EntityId> subjects, objects;
  std::set<RelationId> relations;
  for (const auto& doc : documents) {
    ++stats.documents;
    stats.tokens += count_tokens(lang::render_document(doc, vocab));
    for (const auto& s : doc) tally(stats, facts, subjects, relations, objects, s);
  }
  stats.true_atomic_facts = facts.size();
  stats.subjects = subjects.size();
  stats.relations = relations.size();
  stats.objects = objects.size();
  return stats;
}

// ---------------------------------------------------------------------------
// whole corpus

Corpus generate_corpus(const WorldModel& world, const CorpusOptions& options) {
  if (options.target_facts > world.facts().size())
    throw Error("world has " + std::to_string(world.facts().size()) +
                " facts, fewer than the requested " + std::to_string(options.target_facts));
  if (options.max_per_doc == 0) throw Error("max_per_doc must be positive");

  Rng order = Rng::stream(options.seed, "corpus/order");
  std::vector<EntityId> subjects = world.subjects();
  order.shuffle(std::span<EntityId>(subjects));

  Corpus corpus;
  std::vector<std::pair<EntityId, std::size_t>> chosen;  // subject, facts taken
  std::size_t remaining = options.target_facts;
  for (EntityId s : subjects) {
    if (remaining == 0) break;
    const auto facts = world.facts_of(s);
    const std::size_t take = std::min(remaining, facts.size());
    for (std::size_t i = 0; i < take; ++i) corpus.facts.push_back(facts[i].key());
    chosen.emplace_back(s, take);
    remaining -= take;
  }

  const auto& vocab = world.vocab();
  std::set<FactKey> fact_set;
  std::set<EntityId> subject_set, objects;
  std::set<RelationId> relations;
  CorpusStats& stats = corpus.stats;

  std::size_t cursor = 0;
  for (const auto& [s, take] : chosen) {
    Rng rng = Rng::stream(options.seed, "corpus/subject", fnv1a(vocab.entity_key(s)));
    const std::span<const FactKey> own(corpus.facts.data() + cursor, take);
    cursor += take;
    std::vector<Sentence> sentences;
    for (const auto& key : own) {
      FactBlock block = gen_fact_block(world, key.subject, key.relation, rng);
      for (const auto& a : block.atomic_samples) sentences.push_back(Sentence::atomic(a));
      for (auto& t : block.tf_sentences) sentences.push_back(std::move(t));
    }
    auto connectives = gen_connective_sentences(world, s, own, options.connectives_per_subject,
                                                corpus.facts, rng);
    for (auto& c : connectives) sentences.push_back(std::move(c));
    for (auto& doc : assemble_documents(s, std::move(sentences), options.max_per_doc, rng)) {
      ++stats.documents;
      stats.tokens += count_tokens(lang::render_document(doc.sentences, vocab));
      for (const auto& sentence : doc.sentences)
        tally(stats, fact_set, subject_set, relations, objects, sentence);
      corpus.documents.push_back(std::move(doc));
    }
  }
  stats.true_atomic_facts = fact_set.size();
  stats.subjects = subject_set.size();
  stats.relations = relations.size();
  stats.objects = objects.size();
  return corpus;
}

void write_corpus(std::ostream& out, const Corpus& corpus, const Vocabulary& vocab,
                  const ArtifactHeader& header) {
  out << header.render_comment_block();
  for (const auto& doc : corpus.documents)
    out << lang::render_document(doc.sentences, vocab) << '\n';
}

std::vector<std::vector<Sentence>> read_corpus(std::istream& in, const Vocabulary& vocab) {
  std::vector<std::vector<Sentence>> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    try {
      docs.push_back(lang::parse_document(line, vocab));
    } catch (const lang::ParseError& e) {
      throw Error("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

CorpusPaths corpus_paths(const std::filesystem::path& dir) {
  return {dir / "corpus.txt", dir / "corpus_stats.txt", dir / "vocab.txt"};
}

CorpusPaths emit_corpus(const WorldModel& world, const Corpus& corpus,
                        const std::filesystem::path& dir, const ArtifactHeader& header) {
  std::filesystem::create_directories(dir);
  const CorpusPaths paths = corpus_paths(dir);
  std::vector<std::filesystem::path> written;
  try {
    write_file_atomically(paths.vocabulary, [&](std::ostream& out) {
      out << header.render_comment_block();
      write_vocabulary(out, world.vocab(), world.deps());
    });
    written.push_back(paths.vocabulary);
    write_file_atomically(paths.corpus, [&](std::ostream& out) {
      write_corpus(out, corpus, world.vocab(), header);
    });
    written.push_back(paths.corpus);
    write_file_atomically(paths.stats,
                          [&](std::ostream& out) { write_stats(out, corpus.stats, header); });
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
  return paths;
}

}  // namespace beliefbench::corpus
