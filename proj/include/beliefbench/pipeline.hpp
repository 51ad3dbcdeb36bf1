#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/artifact.hpp"
#include "beliefbench/bench.hpp"
#include "beliefbench/corpus.hpp"
#include "beliefbench/oracle.hpp"
#include "beliefbench/world/graph.hpp"
#include "beliefbench/world/world_model.hpp"

namespace beliefbench::pipeline {

struct WorldOptions {
  std::size_t min_cooccur = 1000;
  std::size_t top_k = 10;
  double floor = 0.6;
  std::uint64_t seed = 0;
};

struct SynthOptions {
  std::size_t subjects = 400;
  std::size_t relations = 10;
  std::size_t objects = 20;
  world::CooccurProfile profile;
};

/// What the world stages did, for logging.
struct WorldSummary {
  std::size_t triples_in = 0;
  std::size_t relations_kept = 0;
  std::size_t facts = 0;
  std::size_t dependency_pairs = 0;
  double conditioned_fraction = 0;
  world::IngestReport ingest;
};

/// filter_relations -> enforce_one_to_one -> assign_dependencies ->
/// build_generative_model.
world::WorldModel finish_world(const world::KnowledgeGraph& graph, const WorldOptions& options,
                               WorldSummary* summary = nullptr);

world::WorldModel synth_world(const SynthOptions& synth, const WorldOptions& options,
                              WorldSummary* summary = nullptr);

world::WorldModel build_world(std::istream& triples, std::istream* names,
                              const world::IngestOptions& ingest, const WorldOptions& options,
                              WorldSummary* summary = nullptr);

/// Fresh oracle over the vocabulary and dependencies, fitted to the corpus.
oracle::Oracle fit_oracle(const Vocabulary& vocab, const DependencyMap& deps,
                          std::span<const std::vector<lang::Sentence>> documents);

// file helpers; every loader names the missing file in its error
world::WorldModel load_world(const std::filesystem::path& path);
oracle::Oracle load_oracle(const std::filesystem::path& path);
VocabularyFile load_vocabulary(const std::filesystem::path& path);
std::vector<std::vector<lang::Sentence>> load_corpus(const std::filesystem::path& path,
                                                     const Vocabulary& vocab);
std::vector<bench::TestCase> load_bench(const std::filesystem::path& path,
                                        const Vocabulary& vocab);

void save_world(const std::filesystem::path& path, const world::WorldModel& world,
                const ArtifactHeader& header);
void save_oracle(const std::filesystem::path& path, const oracle::Oracle& oracle,
                 const ArtifactHeader& header);
void save_bench(const std::filesystem::path& path, std::span<const bench::TestCase> cases,
                const Vocabulary& vocab, const ArtifactHeader& header);

}  // namespace beliefbench::pipeline
