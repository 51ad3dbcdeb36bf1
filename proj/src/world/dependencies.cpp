#include "beliefbench/world/dependencies.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace beliefbench::world {

SquareMatrix::SquareMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : n_(rows.size()), data_() {
  data_.reserve(n_ * n_);
  for (const auto& row : rows) {
    if (row.size() != n_) throw Error("SquareMatrix: ragged initializer");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

double SquareMatrix::row_sum(std::size_t i) const {
  double s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += (*this)(i, j);
  return s;
}

double SquareMatrix::col_sum(std::size_t j) const {
  double s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += (*this)(i, j);
  return s;
}

bool SquareMatrix::all_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

SquareMatrix cooccurrence_rates(const KnowledgeGraph& graph) {
  const std::size_t n = graph.relations.size();
  std::unordered_map<RelationId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[graph.relations[i]] = i;
  std::unordered_map<EntityId, std::vector<std::size_t>> held;
  for (const auto& t : graph.triples) held[t.subject].push_back(index.at(t.relation));

  std::vector<double> holders(n, 0.0);
  SquareMatrix both(n);
  for (auto& [subject, rels] : held) {
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    for (std::size_t i : rels) {
      holders[i] += 1.0;
      for (std::size_t j : rels)
        if (i != j) both(i, j) += 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (holders[i] > 0) both(i, j) /= holders[i];
  return both;
}

int balance_doubly_stochastic(SquareMatrix& m, int max_rounds, double tol) {
  const std::size_t n = m.size();
  int round = 0;
  for (; round < max_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = m.row_sum(i);
      if (s > 0)
        for (std::size_t j = 0; j < n; ++j) m(i, j) /= s;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double s = m.col_sum(j);
      if (s > 0)
        for (std::size_t i = 0; i < n; ++i) m(i, j) /= s;
    }
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = m.row_sum(i);
      if (r > 0) err = std::max(err, std::abs(r - 1.0));
    }
    if (err < tol) return round + 1;
  }
  return round;
}

Pairing max_weight_pairing(const SquareMatrix& m) {
  const std::size_t n = m.size();
  if (n > 20) throw Error("max_weight_pairing: at most 20 relations supported");
  auto weight = [&](std::size_t i, std::size_t j) { return std::max(m(i, j), m(j, i)); };

  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<double> best(full + 1, 0.0);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    const auto i = static_cast<std::size_t>(__builtin_ctzll(mask));
    const std::size_t rest = mask & ~(std::size_t{1} << i);
    double b = best[rest];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(rest >> j & 1)) continue;
      const double w = weight(i, j);
      if (w > 0) b = std::max(b, w + best[rest & ~(std::size_t{1} << j)]);
    }
    best[mask] = b;
  }

  Pairing out;
  out.weight = best[full];
  const double eps = 1e-12 * std::max(1.0, std::abs(best[full]));
  std::size_t mask = full;
  while (mask) {
    const auto i = static_cast<std::size_t>(__builtin_ctzll(mask));
    const std::size_t rest = mask & ~(std::size_t{1} << i);
    std::size_t partner = n;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!(rest >> j & 1)) continue;
      const double w = weight(i, j);
      if (w > 0 && w + best[rest & ~(std::size_t{1} << j)] >= best[mask] - eps) {
        partner = j;
        break;
      }
    }
    if (partner == n) {
      mask = rest;
      continue;
    }
    if (m(partner, i) > m(i, partner))
      out.pairs.emplace_back(partner, i);
    else
      out.pairs.emplace_back(i, partner);
    mask = rest & ~(std::size_t{1} << partner);
  }
  return out;
}

DependencyMap assign_dependencies(const KnowledgeGraph& graph) {
  const SquareMatrix rates = cooccurrence_rates(graph);
  if (rates.size() == 0 || rates.all_zero()) throw Error("no co-occurrence structure");
  SquareMatrix balanced = rates;
  balance_doubly_stochastic(balanced);
  const Pairing pairing = max_weight_pairing(balanced);

  std::vector<DependencyMap::Pair> pairs;
  for (auto [a, b] : pairing.pairs) {
    const std::size_t lo = std::min(a, b), hi = std::max(a, b);
    std::size_t up = lo, down = hi;
    if (rates(hi, lo) > rates(lo, hi)) std::swap(up, down);
    pairs.push_back({graph.relations[up], graph.relations[down]});
  }
  return DependencyMap(std::move(pairs));
}

}  // namespace beliefbench::world
