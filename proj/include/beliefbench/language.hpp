#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "beliefbench/ids.hpp"
#include "beliefbench/vocabulary.hpp"

namespace beliefbench::lang {

struct Atom {
  EntityId subject;
  RelationId relation;
  EntityId object;

  FactKey key() const { return {subject, relation}; }
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Not {
  Atom atom;
  friend auto operator<=>(const Not&, const Not&) = default;
};
struct And {
  Atom lhs, rhs;
  friend auto operator<=>(const And&, const And&) = default;
};
struct Or {
  Atom lhs, rhs;
  friend auto operator<=>(const Or&, const Or&) = default;
};

/// Body of a sentence. Connectives take atoms only, so nesting never goes
/// deeper than a connective wrapped in a truth claim.
using Claim = std::variant<Atom, Not, And, Or>;

enum class SentenceKind { atomic, truth, negation, conjunction, disjunction };

/// A bare atom (no label) or a claim labeled true/false. Not/And/Or bodies
/// always carry a label.
struct Sentence {
  Claim claim;
  std::optional<bool> label;

  static Sentence atomic(const Atom& a) { return {a, std::nullopt}; }
  static Sentence truth(const Claim& c, bool value) { return {c, value}; }

  SentenceKind kind() const;
  friend bool operator==(const Sentence&, const Sentence&) = default;
};

std::vector<Atom> atoms_of(const Claim& claim);

/// `subject relation object` with surface forms.
std::string render(const Atom& atom, const Vocabulary& vocab);
/// Claim text without the trailing `is true/false`: `"A"`, `not "A"`,
/// `"A" and "B"`, `"A" or "B"`.
std::string render_claim(const Claim& claim, const Vocabulary& vocab);
std::string render(const Sentence& sentence, const Vocabulary& vocab);
/// Sentences joined by " . ", terminated by " .".
std::string render_document(std::span<const Sentence> sentences, const Vocabulary& vocab);

/// `subject relation`, completed by an object.
std::string next_object_prompt(EntityId subject, RelationId relation, const Vocabulary& vocab);
/// Claim text followed by ` is`, completed by true/false.
std::string truth_prompt(const Claim& claim, const Vocabulary& vocab);

class ParseError : public Error {
 public:
  enum class Kind { syntax, unknown_entity, unknown_relation };

  ParseError(Kind kind, std::size_t position, std::size_t length, const std::string& what);

  Kind kind() const { return kind_; }
  /// 1-based character offset of the offending span.
  std::size_t position() const { return position_; }
  std::size_t length() const { return length_; }

 private:
  Kind kind_;
  std::size_t position_;
  std::size_t length_;
};

Sentence parse(std::string_view text, const Vocabulary& vocab);
std::vector<Sentence> parse_document(std::string_view line, const Vocabulary& vocab);
Atom parse_atom(std::string_view text, const Vocabulary& vocab);
/// Inverse of next_object_prompt.
FactKey parse_next_object_prompt(std::string_view text, const Vocabulary& vocab);
/// Inverse of truth_prompt.
Claim parse_truth_prompt(std::string_view text, const Vocabulary& vocab);

/// Truth value of a claim given an oracle for atoms.
template <class AtomTruth>
bool evaluate(const Claim& claim, AtomTruth&& atom_true) {
  struct Visitor {
    AtomTruth& f;
    bool operator()(const Atom& a) const { return f(a); }
    bool operator()(const Not& n) const { return !f(n.atom); }
    bool operator()(const And& c) const { return f(c.lhs) && f(c.rhs); }
    bool operator()(const Or& c) const { return f(c.lhs) || f(c.rhs); }
  };
  return std::visit(Visitor{atom_true}, claim);
}

}  // namespace beliefbench::lang
