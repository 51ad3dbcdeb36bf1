#include "beliefbench/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "beliefbench/world/dependencies.hpp"

namespace beliefbench::pipeline {

namespace {

std::ifstream open_input(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(std::string(what) + " file not found: '" + path.string() + "'");
  return in;
}

// Re-throws a parse failure with the file name in front.
template <typename F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace

world::WorldModel finish_world(const world::KnowledgeGraph& graph, const WorldOptions& options,
                               WorldSummary* summary) {
  const auto filtered = world::filter_relations(graph, options.min_cooccur, options.top_k);
  if (filtered.relations.size() < 2)
    throw Error("fewer than two relations pass the co-occurrence filter (min_cooccur=" +
                std::to_string(options.min_cooccur) + ")");
  const auto one = world::enforce_one_to_one(filtered, options.seed);
  const auto deps = world::assign_dependencies(one);
  auto model = world::build_generative_model(one, deps, options.floor, options.seed);
  if (summary) {
    summary->triples_in = graph.triples.size();
    summary->relations_kept = one.relations.size();
    summary->facts = model.facts().size();
    summary->dependency_pairs = deps.size();
    summary->conditioned_fraction = model.conditioned_fraction();
  }
  return model;
}

world::WorldModel synth_world(const SynthOptions& synth, const WorldOptions& options,
                              WorldSummary* summary) {
  const auto graph =
      world::synth_graph(synth.subjects, synth.relations, synth.objects, synth.profile, options.seed);
  return finish_world(graph, options, summary);
}

world::WorldModel build_world(std::istream& triples, std::istream* names,
                              const world::IngestOptions& ingest, const WorldOptions& options,
                              WorldSummary* summary) {
  world::IngestReport report;
  auto graph = world::ingest_triples(triples, ingest, &report);
  if (graph.triples.empty()) throw Error("no triples to build a world from");
  if (names) world::apply_entity_names(graph, *names);
  auto model = finish_world(graph, options, summary);
  if (summary) summary->ingest = std::move(report);
  return model;
}

oracle::Oracle fit_oracle(const Vocabulary& vocab, const DependencyMap& deps,
                          std::span<const std::vector<lang::Sentence>> documents) {
  oracle::Oracle o(vocab, deps);
  o.observe_corpus(documents);
  return o;
}

world::WorldModel load_world(const std::filesystem::path& path) {
  auto in = open_input(path, "world");
  return with_path(path, [&] { return world::WorldModel::load(in); });
}

oracle::Oracle load_oracle(const std::filesystem::path& path) {
  auto in = open_input(path, "oracle");
  return with_path(path, [&] { return oracle::Oracle::load(in); });
}

VocabularyFile load_vocabulary(const std::filesystem::path& path) {
  auto in = open_input(path, "vocabulary");
  return with_path(path, [&] { return read_vocabulary(in); });
}

std::vector<std::vector<lang::Sentence>> load_corpus(const std::filesystem::path& path,
                                                     const Vocabulary& vocab) {
  auto in = open_input(path, "corpus");
  return with_path(path, [&] { return corpus::read_corpus(in, vocab); });
}

std::vector<bench::TestCase> load_bench(const std::filesystem::path& path,
                                        const Vocabulary& vocab) {
  auto in = open_input(path, "bench");
  return with_path(path, [&] { return bench::read_bench(in, vocab); });
}

void save_world(const std::filesystem::path& path, const world::WorldModel& world,
                const ArtifactHeader& header) {
  write_file_atomically(path, [&](std::ostream& out) { world.save(out, header); });
}

void save_oracle(const std::filesystem::path& path, const oracle::Oracle& oracle,
                 const ArtifactHeader& header) {
  write_file_atomically(path, [&](std::ostream& out) { oracle.save(out, header); });
}

void save_bench(const std::filesystem::path& path, std::span<const bench::TestCase> cases,
                const Vocabulary& vocab, const ArtifactHeader& header) {
  write_file_atomically(path,
                        [&](std::ostream& out) { bench::write_bench(out, cases, vocab, header); });
}

}  // namespace beliefbench::pipeline
