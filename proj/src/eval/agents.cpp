#include "beliefbench/eval/agents.hpp"

#include "beliefbench/artifact.hpp"

namespace beliefbench::eval {

namespace {

ProbeResponse failure(const ProbeQuery& q, const std::string& message) {
  ProbeResponse r;
  r.id = q.id;
  r.error = message;
  return r;
}

ProbeResponse with_probability(const ProbeQuery& q, double p) {
  ProbeResponse r;
  r.id = q.id;
  r.probability = p;
  return r;
}

ProbeResponse with_text(const ProbeQuery& q, std::string text) {
  ProbeResponse r;
  r.id = q.id;
  r.text = std::move(text);
  return r;
}

ProbeResponse ack(const ProbeQuery& q) { return ProbeResponse{q.id, {}, {}, {}}; }

bool wants_false(const ProbeQuery& q) {
  if (!q.candidate || *q.candidate == "true") return false;
  if (*q.candidate == "false") return true;
  throw Error("truth candidate must be 'true' or 'false'");
}

lang::Atom atom_for(const ProbeQuery& q, const Vocabulary& vocab) {
  const FactKey key = lang::parse_next_object_prompt(q.prompt, vocab);
  if (!q.candidate) throw Error("query needs a candidate object");
  const auto object = vocab.entity_by_surface(*q.candidate);
  if (!object) throw Error("unknown candidate '" + *q.candidate + "'");
  return {key.subject, key.relation, *object};
}

}  // namespace

// ---------------------------------------------------------------------------

ProbeResponse BayesAgent::respond(const ProbeQuery& q) {
  const Vocabulary& vocab = oracle_.vocab();
  try {
    switch (q.kind) {
      case QueryKind::next_object:
        return with_probability(q, oracle_.probability(atom_for(q, vocab)));
      case QueryKind::generate: {
        const FactKey key = lang::parse_next_object_prompt(q.prompt, vocab);
        const EntityId o = oracle_.predictive(key.subject, key.relation).mode();
        return with_text(q, vocab.entity_surface(o));
      }
      case QueryKind::truth: {
        const double p = oracle_.truth_probability(lang::parse_truth_prompt(q.prompt, vocab));
        return with_probability(q, wants_false(q) ? 1.0 - p : p);
      }
      case QueryKind::edit: {
        const lang::Atom atom = atom_for(q, vocab);
        const double w = q.weight.value_or(1.0);
        const auto token = oracle_.snapshot();
        try {
          oracle_.apply_edit(atom, w);
        } catch (...) {
          oracle_.restore(token);
          throw;
        }
        edits_.push_back(token);
        return ack(q);
      }
      case QueryKind::revert:
        if (edits_.empty()) throw Error("no edit to revert");
        oracle_.restore(edits_.back());
        edits_.pop_back();
        return ack(q);
    }
  } catch (const std::exception& e) {
    return failure(q, e.what());
  }
  return failure(q, "unsupported query kind");
}

// ---------------------------------------------------------------------------

MemorizerAgent::MemorizerAgent(Vocabulary vocab,
                               std::span<const std::vector<lang::Sentence>> documents,
                               bool follow_edits)
    : vocab_(std::move(vocab)), follow_edits_(follow_edits) {
  for (const auto& doc : documents) {
    for (const auto& s : doc) {
      if (!s.label) {
        const auto& a = std::get<lang::Atom>(s.claim);
        counts_[a.key()][a.object] += 1.0;
        continue;
      }
      auto& l = labels_[s.claim];
      l.total += 1.0;
      if (*s.label) l.true_count += 1.0;
    }
  }
}

double MemorizerAgent::frequency(const lang::Atom& atom) const {
  const auto it = counts_.find(atom.key());
  if (it == counts_.end()) return 0.0;
  double total = 0, hit = 0;
  for (const auto& [o, c] : it->second) {
    total += c;
    if (o == atom.object) hit = c;
  }
  return total > 0 ? hit / total : 0.0;
}

double MemorizerAgent::truth(const lang::Claim& claim) const {
  if (const auto it = labels_.find(claim); it != labels_.end() && it->second.total > 0)
    return it->second.true_count / it->second.total;
  if (const auto* a = std::get_if<lang::Atom>(&claim)) return frequency(*a);
  return 0.5;
}

ProbeResponse MemorizerAgent::respond(const ProbeQuery& q) {
  try {
    switch (q.kind) {
      case QueryKind::next_object:
        return with_probability(q, frequency(atom_for(q, vocab_)));
      case QueryKind::generate: {
        const FactKey key = lang::parse_next_object_prompt(q.prompt, vocab_);
        const auto it = counts_.find(key);
        if (it == counts_.end()) return with_text(q, "");
        std::optional<EntityId> best;
        double best_count = -1;
        for (const auto& [o, c] : it->second)
          if (c > best_count) {
            best = o;
            best_count = c;
          }
        return with_text(q, best ? vocab_.entity_surface(*best) : "");
      }
      case QueryKind::truth: {
        const double p = truth(lang::parse_truth_prompt(q.prompt, vocab_));
        return with_probability(q, wants_false(q) ? 1.0 - p : p);
      }
      case QueryKind::edit: {
        const lang::Atom atom = atom_for(q, vocab_);
        const double w = q.weight.value_or(1.0);
        if (!(w >= 0)) throw Error("edit weight must be non-negative");
        if (!follow_edits_) {
          edits_.push_back(std::nullopt);
          return ack(q);
        }
        auto& cell = counts_[atom.key()];
        const auto it = cell.find(atom.object);
        EditRecord rec{atom.key(), atom.object, it != cell.end(),
                       it != cell.end() ? it->second : 0.0};
        cell[atom.object] += w;
        edits_.push_back(rec);
        return ack(q);
      }
      case QueryKind::revert: {
        if (edits_.empty()) throw Error("no edit to revert");
        const auto rec = edits_.back();
        edits_.pop_back();
        if (rec) {
          auto& cell = counts_[rec->key];
          if (rec->existed)
            cell[rec->object] = rec->old;
          else
            cell.erase(rec->object);
          if (cell.empty()) counts_.erase(rec->key);
        }
        return ack(q);
      }
    }
  } catch (const std::exception& e) {
    return failure(q, e.what());
  }
  return failure(q, "unsupported query kind");
}

}  // namespace beliefbench::eval
