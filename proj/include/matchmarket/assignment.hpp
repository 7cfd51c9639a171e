#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "matchmarket/error.hpp"
#include "matchmarket/matrix.hpp"

namespace matchmarket {

/// An integral matching: row i is matched to column row_to_col[i], or -1.
struct Assignment {
  std::vector<int> row_to_col;
  double value = 0.0;

  std::size_t matched() const {
    return static_cast<std::size_t>(
        std::count_if(row_to_col.begin(), row_to_col.end(), [](int j) { return j >= 0; }));
  }

  Matrix to_matrix(std::size_t cols) const {
    Matrix x(row_to_col.size(), cols);
    for (std::size_t i = 0; i < row_to_col.size(); ++i)
      if (row_to_col[i] >= 0) x(i, static_cast<std::size_t>(row_to_col[i])) = 1.0;
    return x;
  }

  bool operator==(const Assignment&) const = default;
};

/// Optimal dual of max <W, x> over doubly-substochastic x:
/// min sum(row) + sum(col) s.t. row_i + col_j >= W_ij, row, col >= 0.
struct AssignmentDuals {
  std::vector<double> row;
  std::vector<double> col;

  double objective() const {
    double s = 0.0;
    for (double v : row) s += v;
    for (double v : col) s += v;
    return s;
  }
};

/// Edge mask: allowed[i * cols + j] != 0 when edge (i,j) may be used. Empty
/// means all edges are allowed.
using EdgeMask = std::vector<char>;

struct MatchingOptions {
  /// Maximize the number of matched rows first, then the weight.
  bool cardinality_first = false;
};

namespace detail {

// Shortest augmenting path (Hungarian) on a square cost matrix, minimization.
// Columns are scanned in increasing order with a strict comparison, so ties go
// to the lowest column index. Returns col -> row.
inline std::vector<int> hungarian_min(const Matrix& cost) {
  const std::size_t n = cost.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_to_row(n, -1);
  for (std::size_t j = 1; j <= n; ++j) col_to_row[j - 1] = static_cast<int>(p[j]) - 1;
  return col_to_row;
}

inline bool edge_allowed(const EdgeMask& mask, std::size_t cols, std::size_t i, std::size_t j) {
  return mask.empty() || mask[i * cols + j] != 0;
}

}  // namespace detail

/// Maximum-weight matching on a rectangular weight matrix where leaving rows
/// or columns unmatched is free. Weights may be negative; negative edges are
/// never used unless cardinality_first forces it.
///
/// The matrix is padded to a square (m+n) problem with zero-weight slack rows
/// and columns. Among optimal matchings the augmentation prefers lower column
/// indices, which makes the output reproducible.
inline Assignment max_weight_matching(const Matrix& weights, const EdgeMask& allowed = {},
                                      MatchingOptions options = {}) {
  const std::size_t m = weights.rows();
  const std::size_t n = weights.cols();
  if (!allowed.empty() && allowed.size() != m * n) {
    throw Error(ErrorCode::DimensionMismatch, "edge mask size does not match weights");
  }
  Assignment out;
  out.row_to_col.assign(m, -1);
  if (m == 0 || n == 0) return out;

  double bonus = 0.0;
  if (options.cardinality_first) {
    double span = 0.0;
    for (double w : weights.values()) span = std::max(span, std::abs(w));
    bonus = 1.0 + 2.0 * span * static_cast<double>(std::min(m, n));
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t size = m + n;
  Matrix cost(size, size, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost(i, j) = detail::edge_allowed(allowed, n, i, j) ? -(weights(i, j) + bonus) : inf;
    }
  }
  const auto col_to_row = detail::hungarian_min(cost);
  for (std::size_t j = 0; j < n; ++j) {
    const int i = col_to_row[j];
    if (i >= 0 && static_cast<std::size_t>(i) < m) {
      out.row_to_col[static_cast<std::size_t>(i)] = static_cast<int>(j);
      out.value += weights(static_cast<std::size_t>(i), j);
    }
  }
  return out;
}

/// Nonnegative optimal duals for an optimal matching of max_weight_matching
/// (without cardinality_first). Solved as a system of difference constraints
/// on the row duals with Bellman-Ford; column duals follow from tightness on
/// matched edges and are zero on unmatched columns.
inline AssignmentDuals matching_duals(const Matrix& weights, const Assignment& matching,
                                      const EdgeMask& allowed = {}) {
  const std::size_t m = weights.rows();
  const std::size_t n = weights.cols();
  std::vector<int> col_to_row(n, -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (matching.row_to_col[i] >= 0) col_to_row[static_cast<std::size_t>(matching.row_to_col[i])] =
        static_cast<int>(i);
  }

  struct Edge {
    std::size_t from, to;
    double weight;
  };
  const std::size_t source = m;  // fixed at 0
  std::vector<Edge> edges;
  edges.reserve(m * (n + 2));
  for (std::size_t i = 0; i < m; ++i) {
    edges.push_back({i, source, 0.0});  // row_i >= 0
    const int mj = matching.row_to_col[i];
    if (mj < 0) {
      edges.push_back({source, i, 0.0});  // unmatched row has zero dual
    } else {
      edges.push_back({source, i, weights(i, static_cast<std::size_t>(mj))});  // col dual >= 0
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<int>(j) == mj || !detail::edge_allowed(allowed, n, i, j)) continue;
      const int k = col_to_row[j];
      if (k >= 0) {
        edges.push_back({i, static_cast<std::size_t>(k),
                         weights(static_cast<std::size_t>(k), j) - weights(i, j)});
      } else {
        edges.push_back({i, source, -weights(i, j)});
      }
    }
  }

  std::vector<double> dist(m + 1, std::numeric_limits<double>::infinity());
  dist[source] = 0.0;
  for (std::size_t round = 0; round <= m + 1; ++round) {
    bool changed = false;
    for (const auto& e : edges) {
      if (dist[e.from] + e.weight < dist[e.to]) {
        dist[e.to] = dist[e.from] + e.weight;
        changed = true;
      }
    }
    if (!changed) break;
  }

  AssignmentDuals duals;
  duals.row.resize(m);
  duals.col.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) duals.row[i] = std::max(0.0, dist[i] - dist[source]);
  for (std::size_t j = 0; j < n; ++j) {
    const int k = col_to_row[j];
    if (k >= 0) {
      duals.col[j] =
          std::max(0.0, weights(static_cast<std::size_t>(k), j) - duals.row[static_cast<std::size_t>(k)]);
    }
  }
  return duals;
}

}  // namespace matchmarket
