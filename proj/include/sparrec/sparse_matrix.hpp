#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

// Row-indexed sparse matrices and the three combinators used to assemble the
// layered measurement matrix: vertical stacking, element-wise product, and
// the semi-direct product that replaces each non-zero of a row by a scaled
// column of the second operand. A dense materializer is provided for test
// oracles only.

namespace sparrec {

struct SparseMatrix {
  struct Entry {
    std::size_t col;
    double val;
  };

  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::vector<Entry>> rows;  // per row, sorted by col, no zeros

  static SparseMatrix zero(std::size_t r, std::size_t c) {
    SparseMatrix m;
    m.n_rows = r;
    m.n_cols = c;
    m.rows.resize(r);
    return m;
  }

  // Values in row-major order; zeros are dropped.
  static SparseMatrix from_dense(std::size_t r, std::size_t c,
                                 const std::vector<double>& vals) {
    if (vals.size() != r * c) throw std::invalid_argument("from_dense: size mismatch");
    SparseMatrix m = zero(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        if (vals[i * c + j] != 0.0) m.rows[i].push_back({j, vals[i * c + j]});
    return m;
  }

  void set(std::size_t r, std::size_t c, double v) {
    if (r >= n_rows || c >= n_cols) throw std::out_of_range("SparseMatrix::set");
    auto& row = rows[r];
    auto it = std::lower_bound(row.begin(), row.end(), c,
                               [](const Entry& e, std::size_t col) { return e.col < col; });
    if (it != row.end() && it->col == c) {
      if (v == 0.0)
        row.erase(it);
      else
        it->val = v;
    } else if (v != 0.0) {
      row.insert(it, {c, v});
    }
  }

  double at(std::size_t r, std::size_t c) const {
    for (const Entry& e : rows[r])
      if (e.col == c) return e.val;
    return 0.0;
  }

  std::size_t nnz() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += row.size();
    return n;
  }
};

inline SparseMatrix row_direct_sum(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n_cols != b.n_cols)
    throw std::invalid_argument("row_direct_sum: column-count mismatch");
  SparseMatrix m = SparseMatrix::zero(a.n_rows + b.n_rows, a.n_cols);
  for (std::size_t i = 0; i < a.n_rows; ++i) m.rows[i] = a.rows[i];
  for (std::size_t i = 0; i < b.n_rows; ++i) m.rows[a.n_rows + i] = b.rows[i];
  return m;
}

inline SparseMatrix elementwise_product(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.n_rows != b.n_rows || a.n_cols != b.n_cols)
    throw std::invalid_argument("elementwise_product: dimension mismatch");
  SparseMatrix m = SparseMatrix::zero(a.n_rows, a.n_cols);
  for (std::size_t i = 0; i < a.n_rows; ++i) {
    const auto& ra = a.rows[i];
    const auto& rb = b.rows[i];
    std::size_t ia = 0, ib = 0;
    while (ia < ra.size() && ib < rb.size()) {
      if (ra[ia].col < rb[ib].col) {
        ++ia;
      } else if (rb[ib].col < ra[ia].col) {
        ++ib;
      } else {
        const double v = ra[ia].val * rb[ib].val;
        if (v != 0.0) m.rows[i].push_back({ra[ia].col, v});
        ++ia;
        ++ib;
      }
    }
  }
  return m;
}

// Semi-direct product: b has h columns; each row of a carries at most h
// non-zeros. The j-th non-zero (by column order) of a's row k, value v at
// column l, contributes v * b(i, j) to output row i + k * b.n_rows, column l.
inline SparseMatrix semi_direct_product(const SparseMatrix& b, const SparseMatrix& a,
                                        std::size_t h) {
  if (b.n_cols != h)
    throw std::invalid_argument("semi_direct_product: b must have h columns");
  for (const auto& row : a.rows)
    if (row.size() > h)
      throw std::invalid_argument("semi_direct_product: row of a exceeds h non-zeros");
  SparseMatrix m = SparseMatrix::zero(a.n_rows * b.n_rows, a.n_cols);
  for (std::size_t k = 0; k < a.n_rows; ++k) {
    for (std::size_t j = 0; j < a.rows[k].size(); ++j) {
      const auto& e = a.rows[k][j];
      for (std::size_t i = 0; i < b.n_rows; ++i) {
        const double bv = b.at(i, j);
        if (bv != 0.0) m.set(i + k * b.n_rows, e.col, e.val * bv);
      }
    }
  }
  return m;
}

inline std::vector<double> apply(const SparseMatrix& m, const std::vector<double>& x) {
  if (x.size() != m.n_cols) throw std::invalid_argument("apply: length mismatch");
  std::vector<double> y(m.n_rows, 0.0);
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (const auto& e : m.rows[i]) y[i] += e.val * x[e.col];
  return y;
}

// Test oracle only; caller keeps n_rows * n_cols small.
inline std::vector<double> to_dense(const SparseMatrix& m) {
  std::vector<double> out(m.n_rows * m.n_cols, 0.0);
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (const auto& e : m.rows[i]) out[i * m.n_cols + e.col] = e.val;
  return out;
}

// Debug dump: first line "rows,cols", then one "row,col,val" triple per entry.
inline void dump_csv(const SparseMatrix& m, std::ostream& os) {
  os << m.n_rows << ',' << m.n_cols << '\n';
  for (std::size_t i = 0; i < m.n_rows; ++i)
    for (const auto& e : m.rows[i]) os << i << ',' << e.col << ',' << e.val << '\n';
}

}  // namespace sparrec
