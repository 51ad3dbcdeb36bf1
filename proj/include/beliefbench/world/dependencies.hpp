#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "beliefbench/ids.hpp"
#include "beliefbench/world/graph.hpp"

namespace beliefbench::world {

/// Dense row-major n x n matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}
  SquareMatrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  double row_sum(std::size_t i) const;
  double col_sum(std::size_t j) const;
  bool all_zero() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// rates(i, j) = fraction of subjects holding relation i that also hold j.
/// Diagonal is zero. Relations are in `graph.relations` order.
SquareMatrix cooccurrence_rates(const KnowledgeGraph& graph);

/// Iterative proportional fitting towards unit row and column sums. Rows and
/// columns that are entirely zero are left alone. Returns the rounds used.
int balance_doubly_stochastic(SquareMatrix& m, int max_rounds = 100, double tol = 1e-8);

struct Pairing {
  /// (first, second) with first oriented as the upstream side.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double weight = 0.0;
};

/// Exact maximum-weight set of disjoint unordered pairs {i, j}, i != j, where
/// a pair is worth max(m(i, j), m(j, i)) and is oriented towards the larger
/// entry (lower index first on ties). Zero-weight pairs are never chosen.
/// Among optimal pairings the lexicographically smallest is returned.
/// Exhaustive over subsets; supports up to 20 relations.
Pairing max_weight_pairing(const SquareMatrix& m);

/// Balanced co-occurrence matrix -> maximum-weight pairing. Each pair is
/// oriented so the upstream relation is the one whose holders more often
/// also hold the partner.
DependencyMap assign_dependencies(const KnowledgeGraph& graph);

}  // namespace beliefbench::world
