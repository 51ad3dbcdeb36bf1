#include "beliefbench/world/world_model.hpp"

#include "internal/text_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace beliefbench::world {

EntityId Distribution::mode() const {
  if (objects.empty()) throw Error("mode of an empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return objects[best];
}

double Distribution::prob(EntityId object) const {
  const auto it = std::lower_bound(objects.begin(), objects.end(), object);
  if (it == objects.end() || *it != object) return 0.0;
  return probs[static_cast<std::size_t>(it - objects.begin())];
}

EntityId Distribution::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return objects[i];
  }
  // rounding left u above the accumulated mass; take the last supported object
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0) return objects[i];
  return objects.back();
}

Distribution enforce_modal_floor(Distribution dist, double floor) {
  if (dist.objects.empty()) return dist;
  std::size_t mode = 0;
  for (std::size_t i = 1; i < dist.probs.size(); ++i)
    if (dist.probs[i] > dist.probs[mode]) mode = i;
  const double pm = dist.probs[mode];
  if (pm >= floor) return dist;
  const double scale = (1.0 - floor) / (1.0 - pm);
  for (std::size_t i = 0; i < dist.probs.size(); ++i)
    dist.probs[i] = i == mode ? floor : dist.probs[i] * scale;
  return dist;
}

namespace {

Distribution normalized(const std::map<EntityId, double>& counts) {
  Distribution d;
  double total = 0;
  for (const auto& [o, c] : counts) total += c;
  for (const auto& [o, c] : counts) {
    d.objects.push_back(o);
    d.probs.push_back(c / total);
  }
  return d;
}

}  // namespace

WorldModel build_generative_model(const KnowledgeGraph& graph, const DependencyMap& deps,
                                  double floor, std::uint64_t seed) {
  if (!(floor > 0.5 && floor <= 1.0))
    throw Error("floor must lie in (0.5, 1] so the modal object is strictly dominant");

  WorldModel world;
  world.vocab_ = graph.vocab;
  world.deps_ = deps;
  world.floor_ = floor;

  std::map<FactKey, EntityId> kg;
  for (const auto& t : graph.triples) {
    if (!kg.emplace(FactKey{t.subject, t.relation}, t.object).second)
      throw Error("graph is not 1:1; run enforce_one_to_one first");
    world.pools_[t.relation].push_back(t.object);
  }
  for (auto& [r, pool] : world.pools_) {
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }

  std::map<CondKey, std::map<EntityId, double>> cond_counts;
  for (const auto& [key, object] : kg) {
    const auto up = deps.upstream_of(key.relation);
    if (!up) continue;
    const auto it = kg.find({key.subject, *up});
    if (it == kg.end()) continue;
    cond_counts[{key.relation, *up, it->second}][object] += 1.0;
  }
  for (const auto& [ckey, counts] : cond_counts)
    world.cond_.emplace(ckey, enforce_modal_floor(normalized(counts), floor));

  const auto& v = graph.vocab;
  for (const auto& [key, object] : kg) {
    Fact f{key.subject, key.relation, object, object, object, std::nullopt};
    if (const auto up = deps.upstream_of(key.relation)) {
      if (const auto it = kg.find({key.subject, *up}); it != kg.end()) {
        f.upstream_object = it->second;
        f.ground_truth = world.cond_.at({key.relation, *up, it->second}).mode();
      }
    }
    const auto& pool = world.pools_.at(key.relation);
    if (pool.size() < 2)
      throw Error("relation '" + v.relation_key(key.relation) +
                  "' has a single observed object; no distractor available");
    const std::uint64_t h = hash_combine(
        hash_combine(hash_combine(seed, fnv1a("distractor")), fnv1a(v.entity_key(key.subject))),
        fnv1a(v.relation_key(key.relation)));
    std::size_t pick = static_cast<std::size_t>(h % (pool.size() - 1));
    if (pool[pick] >= f.ground_truth) ++pick;  // skip the ground truth slot
    f.distractor = pool[pick];
    if (f.distractor == f.ground_truth) throw Error("internal: distractor equals ground truth");

    if (!f.conditioned()) {
      Distribution d;
      if (f.ground_truth < f.distractor) {
        d.objects = {f.ground_truth, f.distractor};
        d.probs = {floor, 1.0 - floor};
      } else {
        d.objects = {f.distractor, f.ground_truth};
        d.probs = {1.0 - floor, floor};
      }
      world.base_.emplace(key, std::move(d));
    }
    world.facts_.push_back(f);
  }
  world.index();
  return world;
}

void WorldModel::index() {
  fact_index_.clear();
  subject_range_.clear();
  for (std::size_t i = 0; i < facts_.size(); ++i) {
    fact_index_[facts_[i].key()] = i;
    auto [it, fresh] = subject_range_.try_emplace(facts_[i].subject, i, i + 1);
    if (!fresh) it->second.second = i + 1;
  }
  if (pools_.empty()) {
    for (const auto& f : facts_) pools_[f.relation].push_back(f.kg_object);
    for (auto& [r, pool] : pools_) {
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    }
  }
}

const Fact* WorldModel::find_fact(EntityId subject, RelationId relation) const {
  const auto it = fact_index_.find({subject, relation});
  return it == fact_index_.end() ? nullptr : &facts_[it->second];
}

const Fact& WorldModel::fact(EntityId subject, RelationId relation) const {
  if (const Fact* f = find_fact(subject, relation)) return *f;
  throw Error("unknown fact key (" + vocab_.entity_key(subject) + ", " +
              vocab_.relation_key(relation) + ")");
}

std::span<const Fact> WorldModel::facts_of(EntityId subject) const {
  const auto it = subject_range_.find(subject);
  if (it == subject_range_.end()) return {};
  return std::span<const Fact>(facts_).subspan(it->second.first,
                                               it->second.second - it->second.first);
}

std::vector<EntityId> WorldModel::subjects() const {
  std::vector<EntityId> out;
  for (const auto& f : facts_)
    if (out.empty() || out.back() != f.subject) out.push_back(f.subject);
  return out;
}

const Distribution& WorldModel::distribution(const Fact& fact) const {
  if (fact.conditioned())
    return cond_.at({fact.relation, *deps_.upstream_of(fact.relation), *fact.upstream_object});
  return base_.at(fact.key());
}

std::span<const EntityId> WorldModel::object_pool(RelationId relation) const {
  const auto it = pools_.find(relation);
  if (it == pools_.end()) return {};
  return it->second;
}

double WorldModel::conditioned_fraction() const {
  if (facts_.empty()) return 0.0;
  const auto n = std::count_if(facts_.begin(), facts_.end(),
                               [](const Fact& f) { return f.conditioned(); });
  return static_cast<double>(n) / static_cast<double>(facts_.size());
}

// ---------------------------------------------------------------------------
// archive

namespace {

constexpr std::string_view kMagic = "beliefbench-world";
constexpr int kFormatVersion = 1;

}  // namespace

void WorldModel::save(std::ostream& out, const ArtifactHeader& header) const {
  out << header.render_comment_block();
  out << kMagic << '\t' << kFormatVersion << '\n';
  out << "floor\t" << format_double(floor_) << '\n';
  out << "[relations]\t" << vocab_.relation_count() << '\n';
  for (std::uint32_t i = 0; i < vocab_.relation_count(); ++i)
    out << vocab_.relation_key(RelationId{i}) << '\t' << vocab_.relation_surface(RelationId{i})
        << '\n';
  out << "[entities]\t" << vocab_.entity_count() << '\n';
  for (std::uint32_t i = 0; i < vocab_.entity_count(); ++i)
    out << vocab_.entity_key(EntityId{i}) << '\t' << vocab_.entity_surface(EntityId{i}) << '\n';
  out << "[dependencies]\t" << deps_.size() << '\n';
  for (const auto& p : deps_.pairs())
    out << vocab_.relation_key(p.upstream) << '\t' << vocab_.relation_key(p.downstream) << '\n';
  auto ek = [&](EntityId e) -> const std::string& { return vocab_.entity_key(e); };
  auto rk = [&](RelationId r) -> const std::string& { return vocab_.relation_key(r); };
  out << "[facts]\t" << facts_.size() << '\n';
  for (const auto& f : facts_) {
    out << ek(f.subject) << '\t' << rk(f.relation) << '\t' << ek(f.kg_object) << '\t'
        << ek(f.ground_truth) << '\t' << ek(f.distractor) << '\t'
        << (f.upstream_object ? ek(*f.upstream_object) : std::string("-")) << '\n';
  }
  auto write_dist = [&](const Distribution& d) {
    out << d.objects.size();
    for (std::size_t i = 0; i < d.objects.size(); ++i)
      out << '\t' << ek(d.objects[i]) << '\t' << format_double(d.probs[i]);
    out << '\n';
  };
  out << "[base]\t" << base_.size() << '\n';
  for (const auto& [key, d] : base_) {
    out << ek(key.subject) << '\t' << rk(key.relation) << '\t';
    write_dist(d);
  }
  out << "[conditional]\t" << cond_.size() << '\n';
  for (const auto& [key, d] : cond_) {
    out << rk(key.downstream) << '\t' << rk(key.upstream) << '\t' << ek(key.upstream_object)
        << '\t';
    write_dist(d);
  }
}

WorldModel WorldModel::load(std::istream& in) {
  detail::LineReader reader(in, "world archive");
  WorldModel w;
  reader.expect_magic(kMagic, kFormatVersion);
  auto fl = reader.next();
  if (fl.size() != 2 || fl[0] != "floor") reader.fail("expected floor");
  w.floor_ = parse_double(fl[1]);

  for (std::size_t n = reader.section("relations"); n-- > 0;) {
    auto f = reader.next();
    if (f.size() != 2) reader.fail("bad relation row");
    w.vocab_.add_relation(f[0], f[1]);
  }
  for (std::size_t n = reader.section("entities"); n-- > 0;) {
    auto f = reader.next();
    if (f.size() != 2) reader.fail("bad entity row");
    w.vocab_.add_entity(f[0], f[1]);
  }
  std::vector<DependencyMap::Pair> pairs;
  for (std::size_t n = reader.section("dependencies"); n-- > 0;) {
    auto f = reader.next();
    if (f.size() != 2) reader.fail("bad dependency row");
    pairs.push_back({w.vocab_.relation(f[0]), w.vocab_.relation(f[1])});
  }
  w.deps_ = DependencyMap(std::move(pairs));
  auto& v = w.vocab_;
  for (std::size_t n = reader.section("facts"); n-- > 0;) {
    auto f = reader.next();
    if (f.size() != 6) reader.fail("bad fact row");
    Fact fact{v.entity(f[0]), v.relation(f[1]), v.entity(f[2]),
              v.entity(f[3]), v.entity(f[4]), std::nullopt};
    if (f[5] != "-") fact.upstream_object = v.entity(f[5]);
    w.facts_.push_back(fact);
  }
  auto read_dist = [&](const std::vector<std::string>& f, std::size_t at) {
    Distribution d;
    if (f.size() <= at) reader.fail("bad distribution row");
    const std::size_t k = reader.to_size(f[at]);
    if (f.size() != at + 1 + 2 * k) reader.fail("bad distribution row");
    for (std::size_t i = 0; i < k; ++i) {
      d.objects.push_back(v.entity(f[at + 1 + 2 * i]));
      d.probs.push_back(parse_double(f[at + 2 + 2 * i]));
    }
    return d;
  };
  for (std::size_t n = reader.section("base"); n-- > 0;) {
    auto f = reader.next();
    w.base_.emplace(FactKey{v.entity(f.at(0)), v.relation(f.at(1))}, read_dist(f, 2));
  }
  for (std::size_t n = reader.section("conditional"); n-- > 0;) {
    auto f = reader.next();
    w.cond_.emplace(CondKey{v.relation(f.at(0)), v.relation(f.at(1)), v.entity(f.at(2))},
                    read_dist(f, 3));
  }
  w.index();
  return w;
}

}  // namespace beliefbench::world
