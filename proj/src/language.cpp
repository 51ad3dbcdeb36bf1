#include "beliefbench/language.hpp"

#include <algorithm>

namespace beliefbench::lang {

SentenceKind Sentence::kind() const {
  switch (claim.index()) {
    case 0:
      return label ? SentenceKind::truth : SentenceKind::atomic;
    case 1:
      return SentenceKind::negation;
    case 2:
      return SentenceKind::conjunction;
    default:
      return SentenceKind::disjunction;
  }
}

std::vector<Atom> atoms_of(const Claim& claim) {
  if (const auto* a = std::get_if<Atom>(&claim)) return {*a};
  if (const auto* n = std::get_if<Not>(&claim)) return {n->atom};
  if (const auto* c = std::get_if<And>(&claim)) return {c->lhs, c->rhs};
  const auto& d = std::get<Or>(claim);
  return {d.lhs, d.rhs};
}

// ---------------------------------------------------------------------------
// rendering

std::string render(const Atom& atom, const Vocabulary& vocab) {
  std::string out = vocab.entity_surface(atom.subject);
  out += ' ';
  out += vocab.relation_surface(atom.relation);
  out += ' ';
  out += vocab.entity_surface(atom.object);
  return out;
}

namespace {

std::string quoted(const Atom& atom, const Vocabulary& vocab) {
  return '"' + render(atom, vocab) + '"';
}

}  // namespace

std::string render_claim(const Claim& claim, const Vocabulary& vocab) {
  if (const auto* a = std::get_if<Atom>(&claim)) return quoted(*a, vocab);
  if (const auto* n = std::get_if<Not>(&claim)) return "not " + quoted(n->atom, vocab);
  if (const auto* c = std::get_if<And>(&claim))
    return quoted(c->lhs, vocab) + " and " + quoted(c->rhs, vocab);
  const auto& d = std::get<Or>(claim);
  return quoted(d.lhs, vocab) + " or " + quoted(d.rhs, vocab);
}

std::string render(const Sentence& sentence, const Vocabulary& vocab) {
  if (!sentence.label) {
    const auto* a = std::get_if<Atom>(&sentence.claim);
    if (!a) throw Error("connective sentences need a truth label");
    return render(*a, vocab);
  }
  return render_claim(sentence.claim, vocab) + (*sentence.label ? " is true" : " is false");
}

std::string render_document(std::span<const Sentence> sentences, const Vocabulary& vocab) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += render(s, vocab);
    out += " .";
  }
  return out;
}

std::string next_object_prompt(EntityId subject, RelationId relation, const Vocabulary& vocab) {
  return vocab.entity_surface(subject) + ' ' + vocab.relation_surface(relation);
}

std::string truth_prompt(const Claim& claim, const Vocabulary& vocab) {
  return render_claim(claim, vocab) + " is";
}

// ---------------------------------------------------------------------------
// parsing

ParseError::ParseError(Kind kind, std::size_t position, std::size_t length,
                       const std::string& what)
    : Error(what + " at position " + std::to_string(position)),
      kind_(kind),
      position_(position),
      length_(length) {}

namespace {

struct Token {
  enum class Type { word, quoted } type;
  std::string_view text;  // quoted: inner text without the quotes
  std::size_t pos;        // 1-based offset of the first character of `text`
  std::size_t end;        // 1-based offset one past the token (including closing quote)
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::vector<Token> lex(std::string_view text, std::size_t base) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    if (text[i] == '"') {
      const auto close = text.find('"', i + 1);
      if (close == std::string_view::npos)
        throw ParseError(ParseError::Kind::syntax, base + i, text.size() - i,
                         "unterminated quote");
      out.push_back({Token::Type::quoted, text.substr(i + 1, close - i - 1), base + i + 1,
                     base + close + 1});
      i = close + 1;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j]) && text[j] != '"') ++j;
    out.push_back({Token::Type::word, text.substr(i, j - i), base + i, base + j});
    i = j;
  }
  return out;
}

struct Word {
  std::string_view text;
  std::size_t pos;
};

std::vector<Word> split_words(std::string_view text, std::size_t base) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    out.push_back({text.substr(i, j - i), base + i});
    i = j;
  }
  return out;
}

std::string join(std::span<const Word> words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w.text;
  }
  return out;
}

std::size_t span_length(std::span<const Word> words) {
  if (words.empty()) return 0;
  return words.back().pos + words.back().text.size() - words.front().pos;
}

/// Resolves `subject relation object` by trying the longest subject first,
/// then the longest relation, requiring the remainder to be an exact entity.
Atom resolve_atom(std::span<const Word> words, const Vocabulary& vocab, std::size_t fallback_pos) {
  const std::size_t n = words.size();
  if (n < 3)
    throw ParseError(ParseError::Kind::syntax, n ? words.front().pos : fallback_pos,
                     span_length(words), "atom needs a subject, a relation and an object");

  // deepest failure wins so the error points at the real culprit
  ParseError::Kind fail_kind = ParseError::Kind::unknown_entity;
  std::size_t fail_index = 0;
  std::size_t fail_end = std::min(n, vocab.max_entity_tokens());

  for (std::size_t i = std::min(n - 2, vocab.max_entity_tokens()); i >= 1; --i) {
    const auto subject = vocab.entity_by_surface(join(words.subspan(0, i)));
    if (!subject) continue;
    if (fail_index < i) {
      fail_kind = ParseError::Kind::unknown_relation;
      fail_index = i;
      fail_end = n - 1;
    }
    for (std::size_t j = std::min(n - i - 1, vocab.max_relation_tokens()); j >= 1; --j) {
      const auto relation = vocab.relation_by_surface(join(words.subspan(i, j)));
      if (!relation) continue;
      const auto object = vocab.entity_by_surface(join(words.subspan(i + j)));
      if (object) return {*subject, *relation, *object};
      if (fail_index < i + j) {
        fail_kind = ParseError::Kind::unknown_entity;
        fail_index = i + j;
        fail_end = n;
      }
    }
  }
  const auto culprit = words.subspan(fail_index, std::max(fail_end, fail_index + 1) - fail_index);
  const std::string what = fail_kind == ParseError::Kind::unknown_relation
                               ? "unknown relation in '" + join(culprit) + "'"
                               : "unknown entity '" + join(culprit) + "'";
  throw ParseError(fail_kind, culprit.front().pos, span_length(culprit), what);
}

Atom atom_from_quoted(const Token& t, const Vocabulary& vocab) {
  const auto words = split_words(t.text, t.pos);
  return resolve_atom(words, vocab, t.pos);
}

[[noreturn]] void expected(const std::string& what, std::span<const Token> tokens, std::size_t at,
                           std::size_t end_pos) {
  if (at < tokens.size())
    throw ParseError(ParseError::Kind::syntax, tokens[at].pos,
                     tokens[at].end - tokens[at].pos,
                     "expected " + what + ", found '" + std::string(tokens[at].text) + "'");
  throw ParseError(ParseError::Kind::syntax, end_pos, 0, "expected " + what + " before end");
}

bool is_word(std::span<const Token> tokens, std::size_t at, std::string_view text) {
  return at < tokens.size() && tokens[at].type == Token::Type::word && tokens[at].text == text;
}

bool is_quoted(std::span<const Token> tokens, std::size_t at) {
  return at < tokens.size() && tokens[at].type == Token::Type::quoted;
}

/// claim := QUOTED | "not" QUOTED | QUOTED ("and" | "or") QUOTED
Claim parse_claim(std::span<const Token> tokens, std::size_t& at, const Vocabulary& vocab,
                  std::size_t end_pos) {
  if (is_word(tokens, at, "not")) {
    if (!is_quoted(tokens, at + 1)) expected("a quoted atom after 'not'", tokens, at + 1, end_pos);
    const Atom a = atom_from_quoted(tokens[at + 1], vocab);
    at += 2;
    return Not{a};
  }
  if (!is_quoted(tokens, at)) expected("a quoted atom", tokens, at, end_pos);
  const Atom lhs = atom_from_quoted(tokens[at], vocab);
  ++at;
  const bool conj = is_word(tokens, at, "and");
  const bool disj = is_word(tokens, at, "or");
  if (!conj && !disj) return lhs;
  if (!is_quoted(tokens, at + 1))
    expected("a quoted atom after '" + std::string(tokens[at].text) + "'", tokens, at + 1,
             end_pos);
  const Atom rhs = atom_from_quoted(tokens[at + 1], vocab);
  at += 2;
  if (conj) return And{lhs, rhs};
  return Or{lhs, rhs};
}

Sentence parse_tokens(std::span<const Token> tokens, const Vocabulary& vocab,
                      std::size_t start_pos, std::size_t end_pos) {
  if (tokens.empty()) throw ParseError(ParseError::Kind::syntax, start_pos, 0, "empty sentence");
  const bool truth = is_quoted(tokens, 0) || (is_word(tokens, 0, "not") && is_quoted(tokens, 1));
  if (!truth) {
    std::vector<Word> words;
    for (const auto& t : tokens) {
      if (t.type != Token::Type::word)
        throw ParseError(ParseError::Kind::syntax, t.pos - 1, t.end - t.pos + 1,
                         "unexpected quote inside an atomic sentence");
      words.push_back({t.text, t.pos});
    }
    return Sentence::atomic(resolve_atom(words, vocab, start_pos));
  }
  std::size_t at = 0;
  Claim claim = parse_claim(tokens, at, vocab, end_pos);
  if (!is_word(tokens, at, "is")) expected("'is'", tokens, at, end_pos);
  ++at;
  bool label;
  if (is_word(tokens, at, "true"))
    label = true;
  else if (is_word(tokens, at, "false"))
    label = false;
  else
    expected("'true' or 'false'", tokens, at, end_pos);
  ++at;
  if (at != tokens.size()) expected("end of sentence", tokens, at, end_pos);
  return Sentence::truth(claim, label);
}

}  // namespace

Sentence parse(std::string_view text, const Vocabulary& vocab) {
  const auto tokens = lex(text, 1);
  return parse_tokens(tokens, vocab, 1, text.size() + 1);
}

std::vector<Sentence> parse_document(std::string_view line, const Vocabulary& vocab) {
  const auto tokens = lex(line, 1);
  std::vector<Sentence> out;
  std::size_t begin = 0;
  std::size_t start_pos = 1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].type != Token::Type::word || tokens[i].text != ".") continue;
    out.push_back(parse_tokens(std::span(tokens).subspan(begin, i - begin), vocab, start_pos,
                               tokens[i].pos));
    begin = i + 1;
    start_pos = tokens[i].end;
  }
  if (begin != tokens.size())
    throw ParseError(ParseError::Kind::syntax, tokens[begin].pos,
                     line.size() + 1 - tokens[begin].pos, "sentence not terminated by '.'");
  return out;
}

Atom parse_atom(std::string_view text, const Vocabulary& vocab) {
  const Sentence s = parse(text, vocab);
  if (s.kind() != SentenceKind::atomic)
    throw ParseError(ParseError::Kind::syntax, 1, text.size(), "expected a bare atom");
  return std::get<Atom>(s.claim);
}

FactKey parse_next_object_prompt(std::string_view text, const Vocabulary& vocab) {
  const auto words = split_words(text, 1);
  for (std::size_t i = std::min(words.size() - (words.empty() ? 0 : 1), vocab.max_entity_tokens());
       i >= 1; --i) {
    const auto subject = vocab.entity_by_surface(join(std::span(words).subspan(0, i)));
    if (!subject) continue;
    if (const auto relation = vocab.relation_by_surface(join(std::span(words).subspan(i))))
      return {*subject, *relation};
  }
  throw ParseError(ParseError::Kind::unknown_entity, 1, text.size(),
                   "prompt is not '<subject> <relation>'");
}

Claim parse_truth_prompt(std::string_view text, const Vocabulary& vocab) {
  const auto tokens = lex(text, 1);
  std::size_t at = 0;
  Claim claim = parse_claim(tokens, at, vocab, text.size() + 1);
  if (!is_word(tokens, at, "is")) expected("'is'", tokens, at, text.size() + 1);
  if (at + 1 != tokens.size()) expected("end of prompt", tokens, at + 1, text.size() + 1);
  return claim;
}

}  // namespace beliefbench::lang
