#pragma once

#include <string>
#include <vector>

#include "beliefbench/corpus.hpp"
#include "beliefbench/oracle.hpp"
#include "beliefbench/pipeline.hpp"

namespace bbtest {

using namespace beliefbench;

/// The desk pipeline every integration test shares: synthetic world,
/// 1000-fact corpus, oracle fitted to it.
struct Desk {
  world::WorldModel world;
  corpus::Corpus corpus;
  oracle::Oracle oracle;
};

inline pipeline::WorldOptions desk_world_options(std::uint64_t seed = 42) {
  pipeline::WorldOptions w;
  w.min_cooccur = 10;
  w.seed = seed;
  return w;
}

inline Desk make_desk(std::uint64_t seed = 42) {
  auto w = pipeline::synth_world({}, desk_world_options(seed));
  corpus::CorpusOptions co;
  co.seed = seed;
  auto c = corpus::generate_corpus(w, co);
  std::vector<std::vector<lang::Sentence>> docs;
  for (const auto& d : c.documents) docs.push_back(d.sentences);
  auto o = pipeline::fit_oracle(w.vocab(), w.deps(), docs);
  return {std::move(w), std::move(c), std::move(o)};
}

inline const Desk& desk() {
  static const Desk d = make_desk();
  return d;
}

inline std::vector<std::vector<lang::Sentence>> documents_of(const corpus::Corpus& c) {
  std::vector<std::vector<lang::Sentence>> docs;
  for (const auto& d : c.documents) docs.push_back(d.sentences);
  return docs;
}

/// Vocabulary with subjects s0.., relations r0.. and objects o0.., surfaces
/// "subj N", "rel N", "obj N".
inline Vocabulary small_vocab(std::size_t subjects, std::size_t relations, std::size_t objects) {
  Vocabulary v;
  for (std::size_t i = 0; i < relations; ++i)
    v.add_relation("P" + std::to_string(100 + i), "rel " + std::to_string(i));
  for (std::size_t i = 0; i < subjects; ++i)
    v.add_entity("S" + std::to_string(100 + i), "subj " + std::to_string(i));
  for (std::size_t i = 0; i < objects; ++i)
    v.add_entity("O" + std::to_string(100 + i), "obj " + std::to_string(i));
  return v;
}

inline EntityId subj(const Vocabulary& v, std::size_t i) {
  return v.entity("S" + std::to_string(100 + i));
}
inline EntityId obj(const Vocabulary& v, std::size_t i) {
  return v.entity("O" + std::to_string(100 + i));
}
inline RelationId rel(const Vocabulary& v, std::size_t i) {
  return v.relation("P" + std::to_string(100 + i));
}

}  // namespace bbtest
