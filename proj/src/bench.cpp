#include "beliefbench/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace beliefbench::bench {

using json = nlohmann::json;
using oracle::Oracle;

std::string_view tag_name(ProbeTag tag) {
  static constexpr std::string_view names[] = {"s1r1", "s1r2", "s2r1", "s2r2"};
  return names[static_cast<std::size_t>(tag)];
}

std::string_view tag_name(LogicTag tag) {
  static constexpr std::string_view names[] = {"truth_a", "not_a", "a_and_b", "a_or_b",
                                               "truth_b"};
  return names[static_cast<std::size_t>(tag)];
}

std::array<Claim, kLogicCount> TestCase::logic_claims() const {
  const Atom& a = edit.atom;
  return {Claim{a}, Claim{lang::Not{a}}, Claim{lang::And{a, partner}}, Claim{lang::Or{a, partner}},
          Claim{partner}};
}

namespace {

constexpr double kTieTolerance = 1e-12;

std::vector<EntityId> argmax_set(const world::Distribution& d) {
  std::vector<EntityId> out;
  if (d.probs.empty()) return out;
  const double best = *std::max_element(d.probs.begin(), d.probs.end());
  for (std::size_t i = 0; i < d.probs.size(); ++i)
    if (d.probs[i] >= best - kTieTolerance) out.push_back(d.objects[i]);
  return out;
}

}  // namespace

Targets compute_targets(const Oracle& oracle, const std::array<Atom, kProbeCount>& probes,
                        const std::array<Claim, kLogicCount>& logic) {
  Targets t;
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    const auto d = oracle.predictive(probes[i].subject, probes[i].relation);
    t.probes[i] = d.prob(probes[i].object);
    t.argmax[i] = argmax_set(d);
  }
  for (std::size_t j = 0; j < kLogicCount; ++j) t.logic[j] = oracle.truth_probability(logic[j]);
  return t;
}

EntityId canonical_argmax(const Oracle& oracle, EntityId subject, RelationId relation) {
  return oracle.predictive(subject, relation).mode();
}

void fill_targets(Oracle& oracle, TestCase& c) {
  const auto logic = c.logic_claims();
  c.pre = compute_targets(oracle, c.probes, logic);
  for (const WeightMode mode : {WeightMode::automatic, WeightMode::fixed}) {
    const auto token = oracle.snapshot();
    oracle.apply_edit(c.edit.atom, c.weight_for(mode));
    (mode == WeightMode::automatic ? c.post : c.post_fixed) =
        compute_targets(oracle, c.probes, logic);
    oracle.restore(token);
  }
}

namespace {

template <class T>
const T& pick(std::span<const T> items, Rng& rng) {
  return items[rng.index(items.size())];
}

template <class T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.index(items.size())];
}

/// Argmax of (s, r) after the edit, restoring the oracle afterwards.
EntityId argmax_after(Oracle& oracle, const Atom& edit, double weight, EntityId subject,
                      RelationId relation) {
  const auto token = oracle.snapshot();
  oracle.apply_edit(edit, weight);
  const EntityId out = canonical_argmax(oracle, subject, relation);
  oracle.restore(token);
  return out;
}

bool holds(const std::vector<RelationId>& rels, RelationId r) {
  return std::find(rels.begin(), rels.end(), r) != rels.end();
}

}  // namespace

std::vector<TestCase> gen_cases(const world::WorldModel& world, Oracle& oracle,
                                const BenchOptions& options) {
  if (!(oracle.vocab() == world.vocab()))
    throw Error("oracle and world were built over different vocabularies");
  if (!(options.threshold > 0 && options.threshold < 1))
    throw Error("threshold must lie in (0, 1)");
  if (!(options.weight_fixed > 0)) throw Error("fixed edit weight must be positive");

  std::vector<EntityId> trained;
  std::vector<EntityId> eligible;  // trained subjects with at least two relations
  for (EntityId s : oracle.subjects()) {
    bool in_world = true;
    for (RelationId r : oracle.relations_of(s)) in_world = in_world && world.find_fact(s, r);
    if (!in_world) continue;
    trained.push_back(s);
    if (oracle.relations_of(s).size() >= 2) eligible.push_back(s);
  }
  if (eligible.size() < 2)
    throw Error("need at least two trained subjects with two or more relations");

  const auto& deps = world.deps();
  Rng rng = Rng::stream(options.seed, "bench/cases");
  std::vector<TestCase> cases;
  cases.reserve(options.n_cases);

  for (std::size_t n = 0; n < options.n_cases; ++n) {
    TestCase c;
    char id[32];
    std::snprintf(id, sizeof id, "case-%05zu", n + 1);
    c.id = id;

    const EntityId s1 = pick(eligible, rng);
    const auto rels = oracle.relations_of(s1);
    std::vector<RelationId> upstream;
    for (RelationId r : rels)
      if (const auto d = deps.downstream_of(r); d && holds(rels, *d)) upstream.push_back(r);
    RelationId r1, r2;
    if (!upstream.empty()) {
      r1 = pick(upstream, rng);
      r2 = *deps.downstream_of(r1);
    } else {
      std::vector<RelationId> basic;
      for (RelationId r : rels)
        if (!oracle.uses_marginal(s1, r)) basic.push_back(r);
      if (basic.empty()) basic = rels;
      r1 = pick(basic, rng);
      std::vector<RelationId> others;
      for (RelationId r : rels)
        if (r != r1) others.push_back(r);
      r2 = pick(others, rng);
      c.r2_fallback = true;
    }

    const auto& fact = world.fact(s1, r1);
    std::vector<EntityId> alternatives;
    for (EntityId o : world.object_pool(r1))
      if (o != fact.ground_truth) alternatives.push_back(o);
    const bool fix = alternatives.empty() || rng.bernoulli(options.error_fixing_rate);

    EntityId target = fact.ground_truth;
    if (!fix) {
      target = pick(alternatives, rng);
      if (!c.r2_fallback && rng.bernoulli(options.downstream_preference)) {
        const EntityId before = canonical_argmax(oracle, s1, r2);
        for (std::size_t draw = 0; draw < options.max_flip_draws; ++draw) {
          if (draw > 0) target = pick(alternatives, rng);
          const Atom edit{s1, r1, target};
          const double w = oracle.min_weight_for(edit, options.threshold);
          if (argmax_after(oracle, edit, w, s1, r2) != before) break;
        }
      }
    }
    c.edit.atom = {s1, r1, target};
    c.edit.kind = fix ? EditKind::error_fixing : EditKind::counterfactual;
    c.edit.weight_fixed = options.weight_fixed;
    c.edit.weight_auto = oracle.min_weight_for(c.edit.atom, options.threshold);

    // second subject: prefer one holding both probe relations
    std::vector<EntityId> both, any;
    for (EntityId s : eligible) {
      if (s == s1) continue;
      any.push_back(s);
      const auto srels = oracle.relations_of(s);
      if (holds(srels, r1) && holds(srels, r2)) both.push_back(s);
    }
    EntityId s2;
    RelationId q1 = r1, q2 = r2;
    if (!both.empty()) {
      s2 = pick(both, rng);
    } else {
      c.s2_fallback = true;
      s2 = pick(any, rng);
      const auto srels = oracle.relations_of(s2);
      if (!holds(srels, q1)) q1 = pick(srels, rng);
      if (!holds(srels, q2) || q2 == q1) {
        std::vector<RelationId> rest;
        for (RelationId r : srels)
          if (r != q1) rest.push_back(r);
        q2 = pick(rest, rng);
      }
    }

    const EntityId b_subject = [&] {
      for (;;) {
        const EntityId s = pick(trained, rng);
        if (s != s1) return s;
      }
    }();
    const auto b_rels = oracle.relations_of(b_subject);
    const RelationId b_relation = pick(b_rels, rng);
    c.partner = {b_subject, b_relation, pick(oracle.support(b_subject, b_relation), rng)};

    const EntityId s1r2_before = canonical_argmax(oracle, s1, r2);
    const EntityId s1r2_after = argmax_after(oracle, c.edit.atom, c.edit.weight_auto, s1, r2);
    c.downstream_change = s1r2_after != s1r2_before;
    c.probes = {c.edit.atom, Atom{s1, r2, s1r2_after},
                Atom{s2, q1, canonical_argmax(oracle, s2, q1)},
                Atom{s2, q2, canonical_argmax(oracle, s2, q2)}};
    fill_targets(oracle, c);
    cases.push_back(std::move(c));
  }
  return cases;
}

Subsets split_subsets(std::span<const TestCase> cases) {
  Subsets out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    out.all.push_back(i);
    if (cases[i].downstream_change) out.downstream_change.push_back(i);
    if (cases[i].error_fixing()) out.error_fixing.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON lines

namespace {

json atom_json(const Atom& a, const Vocabulary& v) {
  return {{"s", v.entity_key(a.subject)},
          {"r", v.relation_key(a.relation)},
          {"o", v.entity_key(a.object)},
          {"text", lang::render(a, v)}};
}

Atom atom_from(const json& j, const Vocabulary& v) {
  return {v.entity(j.at("s").get<std::string>()), v.relation(j.at("r").get<std::string>()),
          v.entity(j.at("o").get<std::string>())};
}

json targets_json(const Targets& t, const Vocabulary& v) {
  json probes = json::array(), logic = json::array(), argmax = json::array();
  for (double p : t.probes) probes.push_back(p);
  for (double p : t.logic) logic.push_back(p);
  for (const auto& set : t.argmax) {
    json keys = json::array();
    for (EntityId e : set) keys.push_back(v.entity_key(e));
    argmax.push_back(std::move(keys));
  }
  return {{"probes", probes}, {"logic", logic}, {"argmax", argmax}};
}

Targets targets_from(const json& j, const Vocabulary& v) {
  Targets t;
  const auto& probes = j.at("probes");
  const auto& logic = j.at("logic");
  const auto& argmax = j.at("argmax");
  if (probes.size() != kProbeCount || logic.size() != kLogicCount ||
      argmax.size() != kProbeCount)
    throw Error("bench: malformed targets record");
  for (std::size_t i = 0; i < kProbeCount; ++i) {
    t.probes[i] = probes[i].get<double>();
    for (const auto& k : argmax[i]) t.argmax[i].push_back(v.entity(k.get<std::string>()));
  }
  for (std::size_t i = 0; i < kLogicCount; ++i) t.logic[i] = logic[i].get<double>();
  return t;
}

}  // namespace

void write_bench(std::ostream& out, std::span<const TestCase> cases, const Vocabulary& vocab,
                 const ArtifactHeader& header) {
  const json head = {{"tool", std::string(kToolName)},
                     {"version", std::string(kToolVersion)},
                     {"artifact", "bench"},
                     {"config_hash", header.config_hash},
                     {"seed", header.seed},
                     {"config", header.config_text},
                     {"cases", cases.size()}};
  out << json{{"header", head}}.dump() << '\n';
  for (const auto& c : cases) {
    json probes = json::array();
    for (std::size_t i = 0; i < kProbeCount; ++i) {
      json p = atom_json(c.probes[i], vocab);
      p["tag"] = std::string(tag_name(static_cast<ProbeTag>(i)));
      probes.push_back(std::move(p));
    }
    json edit = atom_json(c.edit.atom, vocab);
    edit["kind"] = c.error_fixing() ? "error_fixing" : "counterfactual";
    const json record = {
        {"id", c.id},
        {"edit", edit},
        {"weights", {{"fixed", c.edit.weight_fixed}, {"auto", c.edit.weight_auto}}},
        {"probes", probes},
        {"partner", atom_json(c.partner, vocab)},
        {"targets_pre", targets_json(c.pre, vocab)},
        {"targets_post", targets_json(c.post, vocab)},
        {"targets_post_fixed", targets_json(c.post_fixed, vocab)},
        {"flags",
         {{"downstream_change", c.downstream_change},
          {"error_fixing", c.error_fixing()},
          {"r2_fallback", c.r2_fallback},
          {"s2_fallback", c.s2_fallback}}}};
    out << record.dump() << '\n';
  }
}

std::vector<TestCase> read_bench(std::istream& in, const Vocabulary& vocab) {
  std::vector<TestCase> cases;
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (j.contains("header")) {
        seen_header = true;
        continue;
      }
      TestCase c;
      c.id = j.at("id").get<std::string>();
      const auto& edit = j.at("edit");
      c.edit.atom = atom_from(edit, vocab);
      const auto kind = edit.at("kind").get<std::string>();
      if (kind != "error_fixing" && kind != "counterfactual")
        throw Error("unknown edit kind '" + kind + "'");
      c.edit.kind = kind == "error_fixing" ? EditKind::error_fixing : EditKind::counterfactual;
      c.edit.weight_fixed = j.at("weights").at("fixed").get<double>();
      c.edit.weight_auto = j.at("weights").at("auto").get<double>();
      const auto& probes = j.at("probes");
      if (probes.size() != kProbeCount) throw Error("expected 4 probes");
      for (std::size_t i = 0; i < kProbeCount; ++i) c.probes[i] = atom_from(probes[i], vocab);
      c.partner = atom_from(j.at("partner"), vocab);
      c.pre = targets_from(j.at("targets_pre"), vocab);
      c.post = targets_from(j.at("targets_post"), vocab);
      c.post_fixed = targets_from(j.at("targets_post_fixed"), vocab);
      const auto& flags = j.at("flags");
      c.downstream_change = flags.at("downstream_change").get<bool>();
      c.r2_fallback = flags.at("r2_fallback").get<bool>();
      c.s2_fallback = flags.at("s2_fallback").get<bool>();
      cases.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw Error("bench line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("bench line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!seen_header && !cases.empty()) throw Error("bench file has no header record");
  return cases;
}

}  // namespace beliefbench::bench
