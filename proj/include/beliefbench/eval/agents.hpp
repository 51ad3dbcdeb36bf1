#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "beliefbench/eval/protocol.hpp"
#include "beliefbench/language.hpp"
#include "beliefbench/oracle.hpp"

namespace beliefbench::eval {

/// The exact Bayesian agent. Edits go through Oracle::apply_edit under a
/// snapshot; revert restores it.
class BayesAgent : public Responder {
 public:
  explicit BayesAgent(oracle::Oracle oracle) : oracle_(std::move(oracle)) {}
  ProbeResponse respond(const ProbeQuery& query) override;
  const oracle::Oracle& oracle() const { return oracle_; }

 private:
  oracle::Oracle oracle_;
  std::vector<oracle::Oracle::Token> edits_;
};

/// Relative-frequency memorizer over the corpus. next_object and generate
/// use atomic sentence counts; truth uses the label frequency of the exact
/// claim when seen, otherwise the atomic frequency (atoms) or 0.5
/// (connectives). An edit adds `weight` observations of the requested
/// object unless the agent is stale.
class MemorizerAgent : public Responder {
 public:
  MemorizerAgent(Vocabulary vocab, std::span<const std::vector<lang::Sentence>> documents,
                 bool follow_edits = true);
  ProbeResponse respond(const ProbeQuery& query) override;

 private:
  struct LabelCount {
    double true_count = 0;
    double total = 0;
  };
  struct EditRecord {
    FactKey key;
    EntityId object;
    bool existed;
    double old;
  };

  double frequency(const lang::Atom& atom) const;
  double truth(const lang::Claim& claim) const;

  Vocabulary vocab_;
  bool follow_edits_;
  std::map<FactKey, std::map<EntityId, double>> counts_;
  std::map<lang::Claim, LabelCount> labels_;
  std::vector<std::optional<EditRecord>> edits_;
};

enum class AgentKind { bayes, memorizer, stale };

}  // namespace beliefbench::eval
