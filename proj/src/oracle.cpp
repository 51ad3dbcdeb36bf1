#include "beliefbench/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "internal/text_io.hpp"

namespace beliefbench::oracle {

Oracle::Oracle(Vocabulary vocab, DependencyMap deps, double prior_alpha)
    : vocab_(std::move(vocab)), deps_(std::move(deps)), alpha_(prior_alpha) {
  if (!(prior_alpha > 0) || !std::isfinite(prior_alpha))
    throw Error("prior pseudo-count must be positive");
}

void Oracle::record(JournalEntry entry) {
  if (!marks_.empty()) journal_.push_back(std::move(entry));
}

// ---------------------------------------------------------------------------
// support

void Oracle::register_atom(const Atom& atom) {
  const FactKey key = atom.key();
  auto [it, created] = cells_.try_emplace(key);
  if (created) record(CellCreated{key});
  Cell& c = it->second;
  const auto pos = std::lower_bound(c.support.begin(), c.support.end(), atom.object);
  if (pos == c.support.end() || *pos != atom.object) {
    const auto index = static_cast<std::size_t>(pos - c.support.begin());
    c.support.insert(pos, atom.object);
    c.counts.insert(c.counts.begin() + static_cast<std::ptrdiff_t>(index), 0.0);
    record(SupportInserted{key, index});
  }
  if (deps_.is_downstream(atom.relation)) {
    auto& sup = cond_support_[atom.relation];
    const auto cpos = std::lower_bound(sup.begin(), sup.end(), atom.object);
    if (cpos == sup.end() || *cpos != atom.object) {
      const auto index = static_cast<std::size_t>(cpos - sup.begin());
      sup.insert(cpos, atom.object);
      record(CondSupportInserted{atom.relation, index});
    }
  }
}

bool Oracle::registered(EntityId subject, RelationId relation) const {
  return cells_.contains({subject, relation});
}

const Oracle::Cell& Oracle::cell(EntityId subject, RelationId relation) const {
  const auto it = cells_.find({subject, relation});
  if (it == cells_.end())
    throw Error("unknown fact key (" + vocab_.entity_key(subject) + ", " +
                vocab_.relation_key(relation) + ")");
  return it->second;
}

std::span<const EntityId> Oracle::support(EntityId subject, RelationId relation) const {
  return cell(subject, relation).support;
}

std::span<const EntityId> Oracle::conditional_support(RelationId downstream) const {
  const auto it = cond_support_.find(downstream);
  if (it == cond_support_.end()) return {};
  return it->second;
}

std::vector<RelationId> Oracle::relations_of(EntityId subject) const {
  std::vector<RelationId> out;
  for (auto it = cells_.lower_bound({subject, RelationId{0}});
       it != cells_.end() && it->first.subject == subject; ++it)
    out.push_back(it->first.relation);
  return out;
}

std::vector<EntityId> Oracle::subjects() const {
  std::vector<EntityId> out;
  for (const auto& [key, c] : cells_)
    if (out.empty() || out.back() != key.subject) out.push_back(key.subject);
  return out;
}

// ---------------------------------------------------------------------------
// evidence

void Oracle::add_count(const FactKey& key, EntityId object, double weight) {
  Cell& c = cells_.at(key);
  const auto pos = std::lower_bound(c.support.begin(), c.support.end(), object);
  const auto index = static_cast<std::size_t>(pos - c.support.begin());
  record(CountChanged{key, index, c.counts[index]});
  c.counts[index] += weight;
}

void Oracle::add_row(const CondKey& key, EntityId object, double weight) {
  auto [it, created] = rows_.try_emplace(key);
  Row& row = it->second;
  const auto entry = row.counts.find(object);
  std::optional<double> old;
  if (entry != row.counts.end()) old = entry->second;
  record(RowChanged{key, object, old, row.total, created});
  row.counts[object] += weight;
  row.total += weight;
}

void Oracle::propagate(const Atom& atom, double weight) {
  const auto up = deps_.upstream_of(atom.relation);
  if (!up || !registered(atom.subject, *up)) return;
  const Distribution upstream = posterior_basic(atom.subject, *up);
  for (std::size_t i = 0; i < upstream.objects.size(); ++i)
    add_row({atom.relation, *up, upstream.objects[i]}, atom.object, weight * upstream.probs[i]);
}

void Oracle::add_evidence(const Atom& atom, double weight, std::vector<Pending>* deferred) {
  register_atom(atom);
  add_count(atom.key(), atom.object, weight);
  if (!deps_.is_downstream(atom.relation)) return;
  if (deferred)
    deferred->push_back({atom, weight});
  else
    propagate(atom, weight);
}

void Oracle::add_false_evidence(const Atom& atom, double weight, std::vector<Pending>* deferred) {
  register_atom(atom);
  const std::vector<EntityId> others = [&] {
    std::vector<EntityId> v;
    for (EntityId o : cells_.at(atom.key()).support)
      if (o != atom.object) v.push_back(o);
    return v;
  }();
  if (others.empty()) return;
  const double share = weight / static_cast<double>(others.size());
  for (EntityId o : others) add_evidence({atom.subject, atom.relation, o}, share, deferred);
}

void Oracle::flush(std::vector<Pending>& deferred) {
  for (const auto& p : deferred) propagate(p.atom, p.weight);
  deferred.clear();
}

namespace {

void check_weight(double weight) {
  if (!(weight >= 0) || !std::isfinite(weight))
    throw Error("evidence weight must be a finite non-negative number");
}

}  // namespace

void Oracle::observe_atomic(const Atom& atom, double weight) {
  check_weight(weight);
  if (weight == 0) return;
  add_evidence(atom, weight, nullptr);
}

void Oracle::observe_false(const Atom& atom, double weight) {
  check_weight(weight);
  if (weight == 0) return;
  add_false_evidence(atom, weight, nullptr);
}

void Oracle::apply_edit(const Atom& atom, double weight) { observe_atomic(atom, weight); }

void Oracle::observe_corpus(std::span<const std::vector<Sentence>> documents) {
  std::vector<Sentence> flat;
  for (const auto& doc : documents) flat.insert(flat.end(), doc.begin(), doc.end());
  observe_corpus(std::span<const Sentence>(flat));
}

void Oracle::observe_corpus(std::span<const Sentence> sentences) {
  for (const auto& s : sentences)
    for (const auto& a : lang::atoms_of(s.claim)) register_atom(a);

  std::vector<Pending> deferred;
  for (const auto& s : sentences) {
    const auto* a = std::get_if<Atom>(&s.claim);
    if (!a) continue;
    if (!s.label || *s.label)
      add_evidence(*a, 1.0, &deferred);
    else
      add_false_evidence(*a, 1.0, &deferred);
  }
  flush(deferred);

  // every connective is weighted against the same pass-1 state
  std::vector<Pending> weighted;
  for (const auto& s : sentences) {
    const bool label = s.label.value_or(true);
    if (const auto* n = std::get_if<lang::Not>(&s.claim)) {
      if (!label) weighted.push_back({n->atom, 1.0});
      continue;
    }
    const lang::And* conj = std::get_if<lang::And>(&s.claim);
    const lang::Or* disj = std::get_if<lang::Or>(&s.claim);
    if (!conj && !disj) continue;
    const Atom& a = conj ? conj->lhs : disj->lhs;
    const Atom& b = conj ? conj->rhs : disj->rhs;
    if (a.key() == b.key()) throw Error("dependence unsupported: connective over one fact key");
    const double pa = probability(a), pb = probability(b);
    if (conj && label) {
      weighted.push_back({a, 1.0});
      weighted.push_back({b, 1.0});
    } else if (conj) {
      const double denom = 1.0 - pa * pb;
      if (denom > 0) {
        weighted.push_back({a, pa * (1.0 - pb) / denom});
        weighted.push_back({b, pb * (1.0 - pa) / denom});
      }
    } else if (label) {
      const double denom = pa + pb - pa * pb;
      if (denom > 0) {
        weighted.push_back({a, pa / denom});
        weighted.push_back({b, pb / denom});
      }
    }
  }
  for (const auto& w : weighted)
    if (w.weight > 0) add_evidence(w.atom, w.weight, &deferred);
  flush(deferred);
}

// ---------------------------------------------------------------------------
// posteriors

Distribution Oracle::posterior_basic(EntityId subject, RelationId relation) const {
  const Cell& c = cell(subject, relation);
  double total = 0;
  for (double x : c.counts) total += alpha_ + x;
  Distribution d;
  d.objects = c.support;
  d.probs.reserve(c.counts.size());
  for (double x : c.counts) d.probs.push_back((alpha_ + x) / total);
  return d;
}

double Oracle::row_probability(const CondKey& key, EntityId object,
                               std::size_t support_size) const {
  const auto it = rows_.find(key);
  double count = 0, total = 0;
  if (it != rows_.end()) {
    total = it->second.total;
    if (const auto e = it->second.counts.find(object); e != it->second.counts.end())
      count = e->second;
  }
  return (alpha_ + count) / (static_cast<double>(support_size) * alpha_ + total);
}

double Oracle::count(const Atom& atom) const {
  const Cell& c = cell(atom.subject, atom.relation);
  const auto it = std::lower_bound(c.support.begin(), c.support.end(), atom.object);
  if (it == c.support.end() || *it != atom.object) return 0.0;
  return c.counts[static_cast<std::size_t>(it - c.support.begin())];
}

double Oracle::conditional_count(const CondKey& key, EntityId object) const {
  const auto it = rows_.find(key);
  if (it == rows_.end()) return 0.0;
  const auto e = it->second.counts.find(object);
  return e == it->second.counts.end() ? 0.0 : e->second;
}

Distribution Oracle::conditional(const CondKey& key) const {
  const auto sup = conditional_support(key.downstream);
  Distribution d;
  d.objects.assign(sup.begin(), sup.end());
  for (EntityId o : sup) d.probs.push_back(row_probability(key, o, sup.size()));
  return d;
}

Distribution Oracle::posterior_downstream(EntityId subject, RelationId downstream,
                                          bool* fell_back) const {
  const auto up = deps_.upstream_of(downstream);
  if (!up)
    throw Error("relation " + vocab_.relation_key(downstream) + " has no upstream relation");
  if (fell_back) *fell_back = false;
  if (!registered(subject, *up)) {
    if (fell_back) *fell_back = true;
    return posterior_basic(subject, downstream);
  }
  const Distribution upstream = posterior_basic(subject, *up);
  const auto sup = conditional_support(downstream);
  Distribution d;
  d.objects.assign(sup.begin(), sup.end());
  d.probs.assign(sup.size(), 0.0);
  for (std::size_t j = 0; j < sup.size(); ++j)
    for (std::size_t i = 0; i < upstream.objects.size(); ++i)
      d.probs[j] += upstream.probs[i] *
                    row_probability({downstream, *up, upstream.objects[i]}, sup[j], sup.size());
  return d;
}

bool Oracle::uses_marginal(EntityId subject, RelationId relation) const {
  const auto up = deps_.upstream_of(relation);
  return up && registered(subject, *up);
}

Distribution Oracle::predictive(EntityId subject, RelationId relation) const {
  cell(subject, relation);  // unknown keys are an error under either rule
  if (uses_marginal(subject, relation)) return posterior_downstream(subject, relation);
  return posterior_basic(subject, relation);
}

double Oracle::probability(const Atom& atom) const {
  return predictive(atom.subject, atom.relation).prob(atom.object);
}

double Oracle::truth_probability(const Claim& claim) const {
  if (const auto* a = std::get_if<Atom>(&claim)) return probability(*a);
  if (const auto* n = std::get_if<lang::Not>(&claim)) return 1.0 - probability(n->atom);
  const auto atoms = lang::atoms_of(claim);
  if (atoms[0].key() == atoms[1].key())
    throw Error("dependence unsupported: connective over one fact key");
  const double pa = probability(atoms[0]), pb = probability(atoms[1]);
  if (std::holds_alternative<lang::And>(claim)) return pa * pb;
  return pa + pb - pa * pb;
}

double Oracle::min_weight_for(const Atom& atom, double threshold) {
  if (!(threshold > 0 && threshold < 1)) throw Error("threshold must lie in (0, 1)");
  cell(atom.subject, atom.relation);
  if (probability(atom) >= threshold) return 0;

  auto reaches = [&](double w) {
    const Token t = snapshot();
    apply_edit(atom, w);
    const double p = probability(atom);
    restore(t);
    return p >= threshold;
  };

  double w;
  if (!uses_marginal(atom.subject, atom.relation)) {
    // (alpha + c + w) / (S + w) >= t  <=>  w >= (t S - alpha - c) / (1 - t)
    const Cell& c = cell(atom.subject, atom.relation);
    double total = 0, count = 0;
    for (double x : c.counts) total += alpha_ + x;
    const auto pos = std::lower_bound(c.support.begin(), c.support.end(), atom.object);
    if (pos != c.support.end() && *pos == atom.object)
      count = c.counts[static_cast<std::size_t>(pos - c.support.begin())];
    else
      total += alpha_;
    w = std::max(1.0, std::ceil((threshold * total - alpha_ - count) / (1.0 - threshold)));
  } else {
    double hi = 1;
    while (!reaches(hi)) {
      hi *= 2;
      if (hi > 0x1p60) throw Error("edit weight search did not reach the threshold");
    }
    double lo = hi / 2 < 1 ? 0 : hi / 2;  // lo never reaches, hi does
    while (hi - lo > 1) {
      const double mid = std::floor((lo + hi) / 2);
      (reaches(mid) ? hi : lo) = mid;
    }
    w = hi;
  }
  // settle rounding at the boundary by direct evaluation
  while (!reaches(w)) w += 1;
  while (w > 1 && reaches(w - 1)) w -= 1;
  return w;
}

// ---------------------------------------------------------------------------
// snapshots

Oracle::Token Oracle::snapshot() {
  const std::uint64_t id = next_token_++;
  marks_.emplace_back(id, journal_.size());
  return {id};
}

void Oracle::restore(Token token) {
  const auto it = std::find_if(marks_.begin(), marks_.end(),
                               [&](const auto& m) { return m.first == token.id; });
  if (it == marks_.end()) throw Error("stale snapshot token");
  const std::size_t mark = it->second;
  marks_.erase(it, marks_.end());
  while (journal_.size() > mark) {
    const JournalEntry entry = std::move(journal_.back());
    journal_.pop_back();
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, CellCreated>) {
            cells_.erase(e.key);
          } else if constexpr (std::is_same_v<T, SupportInserted>) {
            Cell& c = cells_.at(e.key);
            c.support.erase(c.support.begin() + static_cast<std::ptrdiff_t>(e.index));
            c.counts.erase(c.counts.begin() + static_cast<std::ptrdiff_t>(e.index));
          } else if constexpr (std::is_same_v<T, CountChanged>) {
            cells_.at(e.key).counts[e.index] = e.old;
          } else if constexpr (std::is_same_v<T, CondSupportInserted>) {
            auto& sup = cond_support_.at(e.relation);
            sup.erase(sup.begin() + static_cast<std::ptrdiff_t>(e.index));
            if (sup.empty()) cond_support_.erase(e.relation);
          } else {
            if (e.row_created) {
              rows_.erase(e.key);
            } else {
              Row& row = rows_.at(e.key);
              if (e.old)
                row.counts[e.object] = *e.old;
              else
                row.counts.erase(e.object);
              row.total = e.old_total;
            }
          }
        },
        entry);
  }
  if (marks_.empty()) journal_.clear();
}

std::uint64_t Oracle::content_hash() const {
  std::uint64_t h = hash_combine(0x6f7261636c65ULL, std::bit_cast<std::uint64_t>(alpha_));
  auto mix = [&](std::uint64_t v) { h = hash_combine(h, v); };
  for (const auto& [key, c] : cells_) {
    mix(key.subject.value);
    mix(key.relation.value);
    for (std::size_t i = 0; i < c.support.size(); ++i) {
      mix(c.support[i].value);
      mix(std::bit_cast<std::uint64_t>(c.counts[i]));
    }
  }
  for (const auto& [r, sup] : cond_support_) {
    mix(r.value);
    for (EntityId o : sup) mix(o.value);
  }
  for (const auto& [key, row] : rows_) {
    mix(key.downstream.value);
    mix(key.upstream.value);
    mix(key.upstream_object.value);
    mix(std::bit_cast<std::uint64_t>(row.total));
    for (const auto& [o, c] : row.counts) {
      mix(o.value);
      mix(std::bit_cast<std::uint64_t>(c));
    }
  }
  return h;
}

bool operator==(const Oracle& a, const Oracle& b) {
  return a.vocab_ == b.vocab_ && a.deps_ == b.deps_ && a.alpha_ == b.alpha_ &&
         a.cells_ == b.cells_ && a.cond_support_ == b.cond_support_ && a.rows_ == b.rows_;
}

// ---------------------------------------------------------------------------
// state file

namespace {

constexpr std::string_view kMagic = "beliefbench-oracle";
constexpr int kFormatVersion = 1;

}  // namespace

void Oracle::save(std::ostream& out, const ArtifactHeader& header) const {
  out << header.render_comment_block();
  out << kMagic << '\t' << kFormatVersion << '\n';
  out << "alpha\t" << format_double(alpha_) << '\n';
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
  out << "[cells]\t" << cells_.size() << '\n';
  for (const auto& [key, c] : cells_) {
    out << ek(key.subject) << '\t' << rk(key.relation) << '\t' << c.support.size();
    for (std::size_t i = 0; i < c.support.size(); ++i)
      out << '\t' << ek(c.support[i]) << '\t' << format_double(c.counts[i]);
    out << '\n';
  }
  out << "[conditional_support]\t" << cond_support_.size() << '\n';
  for (const auto& [r, sup] : cond_support_) {
    out << rk(r) << '\t' << sup.size();
    for (EntityId o : sup) out << '\t' << ek(o);
    out << '\n';
  }
  out << "[rows]\t" << rows_.size() << '\n';
  for (const auto& [key, row] : rows_) {
    out << rk(key.downstream) << '\t' << rk(key.upstream) << '\t' << ek(key.upstream_object)
        << '\t' << format_double(row.total) << '\t' << row.counts.size();
    for (const auto& [o, c] : row.counts) out << '\t' << ek(o) << '\t' << format_double(c);
    out << '\n';
  }
}

Oracle Oracle::load(std::istream& in) {
  detail::LineReader reader(in, "oracle state");
  reader.expect_magic(kMagic, kFormatVersion);
  const auto a = reader.next();
  if (a.size() != 2 || a[0] != "alpha") reader.fail("expected alpha");

  Vocabulary vocab;
  for (std::size_t n = reader.section("relations"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() != 2) reader.fail("bad relation row");
    vocab.add_relation(f[0], f[1]);
  }
  for (std::size_t n = reader.section("entities"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() != 2) reader.fail("bad entity row");
    vocab.add_entity(f[0], f[1]);
  }
  std::vector<DependencyMap::Pair> pairs;
  for (std::size_t n = reader.section("dependencies"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() != 2) reader.fail("bad dependency row");
    pairs.push_back({vocab.relation(f[0]), vocab.relation(f[1])});
  }
  Oracle o(std::move(vocab), DependencyMap(std::move(pairs)), parse_double(a[1]));
  const Vocabulary& v = o.vocab_;

  for (std::size_t n = reader.section("cells"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() < 3) reader.fail("bad cell row");
    const std::size_t k = reader.to_size(f[2]);
    if (f.size() != 3 + 2 * k) reader.fail("bad cell row");
    Cell c;
    for (std::size_t i = 0; i < k; ++i) {
      c.support.push_back(v.entity(f[3 + 2 * i]));
      c.counts.push_back(parse_double(f[4 + 2 * i]));
    }
    if (!std::is_sorted(c.support.begin(), c.support.end())) reader.fail("unsorted support");
    o.cells_.emplace(FactKey{v.entity(f[0]), v.relation(f[1])}, std::move(c));
  }
  for (std::size_t n = reader.section("conditional_support"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() < 2 || f.size() != 2 + reader.to_size(f[1])) reader.fail("bad support row");
    std::vector<EntityId> sup;
    for (std::size_t i = 2; i < f.size(); ++i) sup.push_back(v.entity(f[i]));
    o.cond_support_.emplace(v.relation(f[0]), std::move(sup));
  }
  for (std::size_t n = reader.section("rows"); n-- > 0;) {
    const auto f = reader.next();
    if (f.size() < 5) reader.fail("bad conditional row");
    const std::size_t k = reader.to_size(f[4]);
    if (f.size() != 5 + 2 * k) reader.fail("bad conditional row");
    Row row;
    row.total = parse_double(f[3]);
    for (std::size_t i = 0; i < k; ++i)
      row.counts.emplace(v.entity(f[5 + 2 * i]), parse_double(f[6 + 2 * i]));
    o.rows_.emplace(CondKey{v.relation(f[0]), v.relation(f[1]), v.entity(f[2])}, std::move(row));
  }
  return o;
}

}  // namespace beliefbench::oracle
