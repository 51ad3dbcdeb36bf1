#include "beliefbench/world/graph.hpp"

#include <algorithm>
#include <array>
#include <istream>
#include <map>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "beliefbench/rng.hpp"

namespace beliefbench::world {

std::vector<EntityId> KnowledgeGraph::subjects() const {
  std::vector<EntityId> out;
  out.reserve(triples.size());
  for (const auto& t : triples) out.push_back(t.subject);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_row(std::string_view line) {
  const char sep = line.find('\t') != std::string_view::npos ? '\t' : ',';
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    fields.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

}  // namespace

KnowledgeGraph ingest_triples(std::istream& rows, const IngestOptions& options,
                              IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  KnowledgeGraph graph;
  std::string line;
  std::size_t lineno = 0;
  while (rep.rows_read < options.limit && std::getline(rows, line)) {
    ++lineno;
    if (trim(line).empty() || line.front() == '#') continue;
    ++rep.rows_read;
    const auto fields = split_row(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
      ++rep.malformed;
      rep.warnings.push_back("line " + std::to_string(lineno) +
                             ": expected 3 non-empty fields, row skipped");
      continue;
    }
    const auto& deny = options.denylist;
    if (deny.relations.count(std::string(fields[1])) ||
        deny.entities.count(std::string(fields[0])) ||
        deny.entities.count(std::string(fields[2]))) {
      ++rep.excluded;
      continue;
    }
    const EntityId s = graph.vocab.add_entity(fields[0]);
    const RelationId r = graph.vocab.add_relation(fields[1]);
    const EntityId o = graph.vocab.add_entity(fields[2]);
    graph.triples.push_back({s, r, o});
  }
  if (rep.rows_read == 0) return graph;
  if (graph.triples.empty()) throw Error("no usable triples");
  return compact(graph);
}

void apply_entity_names(KnowledgeGraph& graph, std::istream& names) {
  std::string line;
  while (std::getline(names, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    const auto id = graph.vocab.find_entity(std::string_view(line).substr(0, tab));
    if (!id) continue;
    const std::string name = sanitize_surface(std::string_view(line).substr(tab + 1));
    if (name.empty()) continue;
    const auto holder = graph.vocab.entity_by_surface(name);
    if (holder && *holder == *id) continue;
    if (!holder) {
      graph.vocab.set_entity_surface(*id, name);
    } else {
      graph.vocab.set_entity_surface(*id, name + " " + graph.vocab.entity_key(*id));
    }
  }
}

std::vector<std::vector<std::size_t>> count_cooccurrence(const KnowledgeGraph& graph) {
  const std::size_t n = graph.relations.size();
  std::unordered_map<RelationId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[graph.relations[i]] = i;

  std::unordered_map<EntityId, std::vector<std::size_t>> held;
  for (const auto& t : graph.triples) held[t.subject].push_back(index.at(t.relation));
  for (auto& [s, rels] : held) {
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
  }

  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(n, 0));
  for (const auto& t : graph.triples) {
    const std::size_t i = index.at(t.relation);
    for (std::size_t j : held.at(t.subject))
      if (j != i) ++counts[i][j];
  }
  return counts;
}

KnowledgeGraph filter_relations(const KnowledgeGraph& graph, std::size_t min_cooccur,
                                std::size_t top_k) {
  if (graph.triples.empty()) throw Error("filter_relations: empty graph");
  const auto counts = count_cooccurrence(graph);
  struct Scored {
    RelationId relation;
    std::size_t score;
  };
  std::vector<Scored> qualifying;
  for (std::size_t i = 0; i < graph.relations.size(); ++i) {
    const std::size_t best = *std::max_element(counts[i].begin(), counts[i].end());
    if (best >= min_cooccur && best > 0) qualifying.push_back({graph.relations[i], best});
  }
  std::sort(qualifying.begin(), qualifying.end(), [&](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return graph.vocab.relation_key(a.relation) < graph.vocab.relation_key(b.relation);
  });
  if (qualifying.size() > top_k) qualifying.resize(top_k);
  if (qualifying.size() < 2) throw Error("world too sparse");

  std::unordered_set<RelationId> keep;
  for (const auto& q : qualifying) keep.insert(q.relation);
  KnowledgeGraph out;
  out.vocab = graph.vocab;
  for (const auto& t : graph.triples)
    if (keep.count(t.relation)) out.triples.push_back(t);
  return compact(out);
}

KnowledgeGraph enforce_one_to_one(const KnowledgeGraph& graph, std::uint64_t seed) {
  std::map<FactKey, std::vector<EntityId>> slots;
  for (const auto& t : graph.triples) slots[{t.subject, t.relation}].push_back(t.object);
  KnowledgeGraph out;
  out.vocab = graph.vocab;
  out.triples.reserve(slots.size());
  for (auto& [key, objects] : slots) {
    std::sort(objects.begin(), objects.end(), [&](EntityId a, EntityId b) {
      return graph.vocab.entity_key(a) < graph.vocab.entity_key(b);
    });
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
    std::size_t pick = 0;
    if (objects.size() > 1) {
      const std::uint64_t h =
          hash_combine(hash_combine(seed, fnv1a(graph.vocab.entity_key(key.subject))),
                       fnv1a(graph.vocab.relation_key(key.relation)));
      pick = static_cast<std::size_t>(h % objects.size());
    }
    out.triples.push_back({key.subject, key.relation, objects[pick]});
  }
  return compact(out);
}

KnowledgeGraph compact(const KnowledgeGraph& graph) {
  std::vector<EntityId> entities;
  std::vector<RelationId> relations;
  for (const auto& t : graph.triples) {
    entities.push_back(t.subject);
    entities.push_back(t.object);
    relations.push_back(t.relation);
  }
  const auto& v = graph.vocab;
  auto by_entity_key = [&](EntityId a, EntityId b) { return v.entity_key(a) < v.entity_key(b); };
  auto by_relation_key = [&](RelationId a, RelationId b) {
    return v.relation_key(a) < v.relation_key(b);
  };
  std::sort(entities.begin(), entities.end(), by_entity_key);
  entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
  std::sort(relations.begin(), relations.end(), by_relation_key);
  relations.erase(std::unique(relations.begin(), relations.end()), relations.end());

  KnowledgeGraph out;
  std::unordered_map<EntityId, EntityId> entity_map;
  std::unordered_map<RelationId, RelationId> relation_map;
  for (RelationId r : relations) {
    const RelationId nr = out.vocab.add_relation(v.relation_key(r), v.relation_surface(r));
    relation_map[r] = nr;
    out.relations.push_back(nr);
  }
  for (EntityId e : entities)
    entity_map[e] = out.vocab.add_entity(v.entity_key(e), v.entity_surface(e));
  out.triples.reserve(graph.triples.size());
  for (const auto& t : graph.triples)
    out.triples.push_back(
        {entity_map.at(t.subject), relation_map.at(t.relation), entity_map.at(t.object)});
  std::sort(out.triples.begin(), out.triples.end());
  out.triples.erase(std::unique(out.triples.begin(), out.triples.end()), out.triples.end());
  return out;
}

// ---------------------------------------------------------------------------
// synthetic graphs

namespace {

struct RelationName {
  std::string_view key;
  std::string_view surface;
};

constexpr std::array<RelationName, 10> kRelationNames{{
    {"P69", "educated at"},
    {"P106", "occupation"},
    {"P19", "place of birth"},
    {"P27", "country of citizenship"},
    {"P413", "position played on team"},
    {"P54", "member of sports team"},
    {"P641", "sport"},
    {"P421", "located in time zone"},
    {"P31", "instance of"},
    {"P17", "country"},
}};

class NameForge {
 public:
  NameForge(Rng rng, std::unordered_set<std::string> reserved)
      : rng_(std::move(rng)), reserved_(std::move(reserved)) {}

  std::string name(std::size_t min_words, std::size_t max_words) {
    for (;;) {
      const std::size_t words = min_words + rng_.index(max_words - min_words + 1);
      std::string out;
      for (std::size_t w = 0; w < words; ++w) {
        if (w) out.push_back(' ');
        out += word();
      }
      if (used_.insert(out).second) return out;
    }
  }

 private:
  std::string word() {
    static constexpr std::string_view consonants = "bdfgklmnprstvz";
    static constexpr std::string_view vowels = "aeiou";
    static constexpr std::string_view codas = "nrls";
    for (;;) {
      std::string w;
      const std::size_t syllables = 2 + rng_.index(2);
      for (std::size_t i = 0; i < syllables; ++i) {
        w.push_back(consonants[rng_.index(consonants.size())]);
        w.push_back(vowels[rng_.index(vowels.size())]);
      }
      if (rng_.bernoulli(0.3)) w.push_back(codas[rng_.index(codas.size())]);
      if (!reserved_.count(w)) return w;
    }
  }

  Rng rng_;
  std::unordered_set<std::string> reserved_;
  std::unordered_set<std::string> used_;
};

std::string padded_key(char prefix, std::size_t number, std::size_t width) {
  std::string digits = std::to_string(number);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

}  // namespace

KnowledgeGraph synth_graph(std::size_t n_subjects, std::size_t n_relations,
                           std::size_t n_objects, const CooccurProfile& profile,
                           std::uint64_t seed) {
  if (n_relations < 2) throw Error("synth_graph: need at least 2 relations");
  if (n_subjects < 1) throw Error("synth_graph: need at least 1 subject");
  if (n_objects < 2)
    throw Error("synth_graph: need at least 2 objects per relation to pick distractors");
  for (double p : {profile.presence, profile.coupled_presence, profile.orphan_presence,
                   profile.coupling_strength, profile.multi_object_rate})
    if (!(p >= 0.0 && p <= 1.0)) throw Error("synth_graph: profile rates must lie in [0, 1]");

  std::vector<std::pair<std::size_t, std::size_t>> couplings;
  if (profile.couplings) {
    couplings = *profile.couplings;
  } else {
    for (std::size_t i = 0; i + 1 < n_relations; i += 2) couplings.emplace_back(i, i + 1);
  }
  std::vector<std::optional<std::size_t>> upstream_of(n_relations);
  std::vector<bool> paired(n_relations, false);
  for (auto [u, d] : couplings) {
    if (u >= n_relations || d >= n_relations || u == d || paired[u] || paired[d])
      throw Error("synth_graph: couplings must be disjoint pairs of valid relation indices");
    paired[u] = paired[d] = true;
    upstream_of[d] = u;
  }

  KnowledgeGraph graph;
  std::unordered_set<std::string> reserved{"not", "and", "or", "is", "true", "false"};
  std::vector<RelationId> relations;
  for (std::size_t k = 0; k < n_relations; ++k) {
    std::string key, surface;
    if (k < kRelationNames.size()) {
      key = kRelationNames[k].key;
      surface = kRelationNames[k].surface;
    } else {
      key = padded_key('P', 90000 + k, 0);
      surface = "property " + std::to_string(k);
    }
    relations.push_back(graph.vocab.add_relation(key, surface));
    for (std::size_t pos = 0; pos < surface.size();) {
      const auto end = std::min(surface.find(' ', pos), surface.size());
      reserved.insert(surface.substr(pos, end - pos));
      pos = end + 1;
    }
  }

  NameForge forge(Rng::stream(seed, "synth/names"), reserved);
  std::vector<std::vector<EntityId>> pools(n_relations);
  for (std::size_t k = 0; k < n_relations; ++k) {
    for (std::size_t j = 0; j < n_objects; ++j) {
      const std::string key = padded_key('Q', (k + 2) * 1'000'000 + j, 8);
      pools[k].push_back(graph.vocab.add_entity(key, forge.name(1, 2)));
    }
  }

  Rng rng = Rng::stream(seed, "synth/facts");
  std::vector<std::optional<std::size_t>> chosen(n_relations);
  for (std::size_t i = 0; i < n_subjects; ++i) {
    const EntityId subject =
        graph.vocab.add_entity(padded_key('Q', 1'000'000 + i, 8), forge.name(2, 3));
    std::fill(chosen.begin(), chosen.end(), std::nullopt);
    auto emit = [&](std::size_t k, std::size_t obj) {
      chosen[k] = obj;
      graph.triples.push_back({subject, relations[k], pools[k][obj]});
      if (rng.bernoulli(profile.multi_object_rate)) {
        const std::size_t extra = (obj + 1 + rng.index(n_objects - 1)) % n_objects;
        graph.triples.push_back({subject, relations[k], pools[k][extra]});
      }
    };
    for (std::size_t k = 0; k < n_relations; ++k) {
      if (upstream_of[k]) continue;
      if (rng.bernoulli(profile.presence)) emit(k, rng.index(n_objects));
    }
    for (std::size_t k = 0; k < n_relations; ++k) {
      if (!upstream_of[k]) continue;
      const auto& up = chosen[*upstream_of[k]];
      if (!rng.bernoulli(up ? profile.coupled_presence : profile.orphan_presence)) continue;
      if (up && rng.bernoulli(profile.coupling_strength)) {
        const std::uint64_t h = hash_combine(hash_combine(seed, k), *up);
        emit(k, static_cast<std::size_t>(h % n_objects));
      } else {
        emit(k, rng.index(n_objects));
      }
    }
  }
  return compact(graph);
}

}  // namespace beliefbench::world
