#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/language.hpp"
#include "beliefbench/rng.hpp"
#include "beliefbench/world/world_model.hpp"

namespace beliefbench::corpus {

using lang::Atom;
using lang::Sentence;

/// Draws an object for (s, r) from the fact's sampling distribution.
EntityId sample_object(const world::WorldModel& world, EntityId subject, RelationId relation,
                       Rng& rng);

struct FactBlock {
  FactKey key;
  std::vector<Atom> atomic_samples;     // 10 draws, at least 6 of them the ground truth
  std::vector<Sentence> tf_sentences;   // one per draw, labeled by whether it is the ground truth
};

inline constexpr std::size_t kSamplesPerFact = 10;
inline constexpr std::size_t kMinGroundTruthSamples = 6;
inline constexpr std::size_t kMaxRejections = 10'000;

FactBlock gen_fact_block(const world::WorldModel& world, EntityId subject, RelationId relation,
                         Rng& rng);

/// Connective claims about `subject`: equal thirds of not / and / or with a
/// random rotation offset. Operand A is a fact of the subject from `own`;
/// And/Or partners come from `partner_pool` restricted to other subjects.
/// Each operand asserts the ground truth or the distractor with equal odds,
/// and every label is the true value of the claim.
std::vector<Sentence> gen_connective_sentences(const world::WorldModel& world, EntityId subject,
                                               std::span<const FactKey> own, std::size_t count,
                                               std::span<const FactKey> partner_pool, Rng& rng);

struct Document {
  EntityId topic;
  std::vector<Sentence> sentences;
};

/// Shuffles one subject's sentences and cuts them into documents of at most
/// `max_per_doc` sentences.
std::vector<Document> assemble_documents(EntityId topic, std::vector<Sentence> sentences,
                                         std::size_t max_per_doc, Rng& rng);

struct CorpusStats {
  std::size_t true_atomic_facts = 0;
  std::size_t atomic_sentences = 0;
  std::size_t tf_sentences = 0;
  std::size_t connective_sentences = 0;
  std::size_t total_sentences = 0;
  std::size_t documents = 0;
  std::size_t tokens = 0;
  std::size_t subjects = 0;
  std::size_t relations = 0;
  std::size_t objects = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

void write_stats(std::ostream& out, const CorpusStats& stats, const ArtifactHeader& header);
CorpusStats read_stats(std::istream& in);

/// Counts everything from parsed documents alone. Tokens are whitespace
/// tokens of the rendered document lines.
CorpusStats recount(std::span<const std::vector<Sentence>> documents, const Vocabulary& vocab);

struct CorpusOptions {
  std::size_t target_facts = 1000;
  std::size_t connectives_per_subject = 20;
  std::size_t max_per_doc = 10;
  std::uint64_t seed = 0;
};

struct Corpus {
  std::vector<FactKey> facts;  // facts used, in emission order
  std::vector<Document> documents;
  CorpusStats stats;
};

/// Draws subjects in random order and consumes their facts until
/// `target_facts` facts are used (the last subject may be cut short).
Corpus generate_corpus(const world::WorldModel& world, const CorpusOptions& options);

/// One document per line after the header comment block.
void write_corpus(std::ostream& out, const Corpus& corpus, const Vocabulary& vocab,
                  const ArtifactHeader& header);
std::vector<std::vector<Sentence>> read_corpus(std::istream& in, const Vocabulary& vocab);

struct CorpusPaths {
  std::filesystem::path corpus;
  std::filesystem::path stats;
  std::filesystem::path vocabulary;
};

CorpusPaths corpus_paths(const std::filesystem::path& dir);

/// Writes corpus, stats and vocabulary files into `dir`. Each file goes
/// through a temporary that is removed if writing fails.
CorpusPaths emit_corpus(const world::WorldModel& world, const Corpus& corpus,
                        const std::filesystem::path& dir, const ArtifactHeader& header);

}  // namespace beliefbench::corpus
