#pragma once

// Dense exact matrix algebra: integral symmetric Gram matrices and
// matrices over Z/p^k, with determinants, adjugate/elimination inverses,
// primitive-vector extension, direct sums, local transformations and
// random invertible matrices.

#include <algorithm>
#include <utility>
#include <vector>

#include "padiq/integers.hpp"

namespace padiq {

// A symmetric integer Gram matrix, interpreted as the form x'Qx.
class IntQuadForm {
 public:
  explicit IntQuadForm(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0) {
    if (n <= 0) throw precondition_error("IntQuadForm: dimension must be positive");
  }

  static IntQuadForm from_rows(const std::vector<std::vector<Int>>& rows) {
    IntQuadForm q(static_cast<int>(rows.size()));
    for (int i = 0; i < q.n_; ++i) {
      if (static_cast<int>(rows[i].size()) != q.n_) {
        throw precondition_error("IntQuadForm: ragged rows");
      }
      for (int j = 0; j < q.n_; ++j) q.at(i, j) = rows[i][j];
    }
    if (!q.is_symmetric()) throw precondition_error("IntQuadForm: matrix is not symmetric");
    return q;
  }

  static IntQuadForm diagonal(const std::vector<Int>& d) {
    IntQuadForm q(static_cast<int>(d.size()));
    for (int i = 0; i < q.n_; ++i) q.at(i, i) = d[i];
    return q;
  }

  int dim() const { return n_; }
  Int& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const Int& at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  bool is_symmetric() const {
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j) {
        if (at(i, j) != at(j, i)) return false;
      }
    }
    return true;
  }

  // Exact determinant by fraction-free (Bareiss) elimination.
  Int det() const {
    std::vector<Int> m = a_;
    auto e = [&](int i, int j) -> Int& { return m[static_cast<size_t>(i) * n_ + j]; };
    Int prev = 1;
    int sign = 1;
    for (int c = 0; c < n_ - 1; ++c) {
      if (e(c, c) == 0) {
        int pivot = -1;
        for (int r = c + 1; r < n_; ++r) {
          if (e(r, c) != 0) {
            pivot = r;
            break;
          }
        }
        if (pivot < 0) return 0;
        for (int j = 0; j < n_; ++j) std::swap(e(c, j), e(pivot, j));
        sign = -sign;
      }
      for (int i = c + 1; i < n_; ++i) {
        for (int j = c + 1; j < n_; ++j) {
          e(i, j) = (e(i, j) * e(c, c) - e(i, c) * e(c, j)) / prev;
        }
        e(i, c) = 0;
      }
      prev = e(c, c);
    }
    return sign * e(n_ - 1, n_ - 1);
  }

  friend bool operator==(const IntQuadForm&, const IntQuadForm&) = default;

 private:
  int n_;
  std::vector<Int> a_;
};

inline IntQuadForm direct_sum(const IntQuadForm& a, const IntQuadForm& b) {
  IntQuadForm q(a.dim() + b.dim());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) q.at(i, j) = a.at(i, j);
  }
  for (int i = 0; i < b.dim(); ++i) {
    for (int j = 0; j < b.dim(); ++j) q.at(a.dim() + i, a.dim() + j) = b.at(i, j);
  }
  return q;
}

// A dense matrix with entries reduced into [0, p^k).
class ModMatrix {
 public:
  ModMatrix(int rows, int cols, PrimePower modulus)
      : rows_(rows), cols_(cols), modulus_(std::move(modulus)), a_(static_cast<size_t>(rows) * cols, 0) {
    if (rows < 0 || cols < 0) throw precondition_error("ModMatrix: dimensions must be non-negative");
  }

  static ModMatrix identity(int n, const PrimePower& pk) {
    ModMatrix m(n, n, pk);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  static ModMatrix from_rows(const std::vector<std::vector<Int>>& rows, const PrimePower& pk) {
    ModMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.at(0).size()), pk);
    for (int i = 0; i < m.rows_; ++i) {
      if (static_cast<int>(rows[i].size()) != m.cols_) throw precondition_error("ModMatrix: ragged rows");
      for (int j = 0; j < m.cols_; ++j) m.at(i, j) = mod_reduce(rows[i][j], pk.modulus());
    }
    return m;
  }

  static ModMatrix from_form(const IntQuadForm& q, const PrimePower& pk) {
    ModMatrix m(q.dim(), q.dim(), pk);
    for (int i = 0; i < q.dim(); ++i) {
      for (int j = 0; j < q.dim(); ++j) m.at(i, j) = mod_reduce(q.at(i, j), pk.modulus());
    }
    return m;
  }

  // The same matrix with entries reduced at another precision.
  ModMatrix rebase(const PrimePower& pk) const {
    ModMatrix m(rows_, cols_, pk);
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) m.at(i, j) = mod_reduce(at(i, j), pk.modulus());
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const PrimePower& modulus() const { return modulus_; }

  Int& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const Int& at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  void set(int i, int j, const Int& v) { at(i, j) = mod_reduce(v, modulus_.modulus()); }

  bool is_square() const { return rows_ == cols_; }

  bool is_symmetric() const {
    if (!is_square()) return false;
    for (int i = 0; i < rows_; ++i) {
      for (int j = i + 1; j < cols_; ++j) {
        if (at(i, j) != at(j, i)) return false;
      }
    }
    return true;
  }

  ModMatrix transpose() const {
    ModMatrix t(cols_, rows_, modulus_);
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
    }
    return t;
  }

  ModMatrix operator*(const ModMatrix& o) const {
    if (cols_ != o.rows_) throw precondition_error("ModMatrix: dimension mismatch in product");
    if (!(modulus_ == o.modulus_)) throw precondition_error("ModMatrix: modulus mismatch in product");
    ModMatrix r(rows_, o.cols_, modulus_);
    const Int& m = modulus_.modulus();
    for (int i = 0; i < rows_; ++i) {
      for (int p = 0; p < cols_; ++p) {
        const Int& aij = at(i, p);
        if (aij == 0) continue;
        for (int j = 0; j < o.cols_; ++j) {
          r.at(i, j) += aij * o.at(p, j);
        }
      }
    }
    for (auto& v : r.a_) v = mod_reduce(v, m);
    return r;
  }

  // u' * this * u
  ModMatrix congruent(const ModMatrix& u) const { return u.transpose() * (*this * u); }

  // The integral form whose entries are the canonical representatives.
  IntQuadForm to_form() const {
    if (!is_symmetric()) throw precondition_error("ModMatrix: not symmetric");
    IntQuadForm q(rows_);
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) q.at(i, j) = at(i, j);
    }
    return q;
  }

  friend bool operator==(const ModMatrix&, const ModMatrix&) = default;

 private:
  int rows_, cols_;
  PrimePower modulus_;
  std::vector<Int> a_;
};

// Determinant mod p^k, via an exact integer determinant of the
// representatives reduced at the end (no division by non-units).
inline Int det_mod(const ModMatrix& m) {
  if (!m.is_square()) throw precondition_error("det_mod: matrix not square");
  if (m.rows() == 0) return mod_reduce(1, m.modulus().modulus());
  std::vector<std::vector<Int>> rows(m.rows(), std::vector<Int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) rows[i][j] = m.at(i, j);
  }
  // Bareiss on a plain copy (IntQuadForm requires symmetry, so inline here).
  int n = m.rows();
  auto e = [&](int i, int j) -> Int& { return rows[i][j]; };
  Int prev = 1;
  int sign = 1;
  for (int c = 0; c < n - 1; ++c) {
    if (e(c, c) == 0) {
      int pivot = -1;
      for (int r = c + 1; r < n; ++r) {
        if (e(r, c) != 0) {
          pivot = r;
          break;
        }
      }
      if (pivot < 0) return 0;
      std::swap(rows[c], rows[pivot]);
      sign = -sign;
    }
    for (int i = c + 1; i < n; ++i) {
      for (int j = c + 1; j < n; ++j) {
        e(i, j) = (e(i, j) * e(c, c) - e(i, c) * e(c, j)) / prev;
      }
      e(i, c) = 0;
    }
    prev = e(c, c);
  }
  return mod_reduce(sign * e(n - 1, n - 1), m.modulus().modulus());
}

inline bool is_invertible(const ModMatrix& m) {
  return m.is_square() && det_mod(m) % m.modulus().prime() != 0;
}

namespace detail {

// Adjugate of a small matrix by cofactor expansion over the integers.
inline ModMatrix adjugate(const ModMatrix& m) {
  const int n = m.rows();
  ModMatrix adj(n, n, m.modulus());
  if (n == 1) {
    adj.at(0, 0) = 1;
    return adj;
  }
  std::vector<std::vector<Int>> minor(static_cast<size_t>(n) - 1, std::vector<Int>(static_cast<size_t>(n) - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int mr = 0;
      for (int r = 0; r < n; ++r) {
        if (r == i) continue;
        int mc = 0;
        for (int c = 0; c < n; ++c) {
          if (c == j) continue;
          minor[mr][mc] = m.at(r, c);
          ++mc;
        }
        ++mr;
      }
      ModMatrix sub = ModMatrix::from_rows(minor, m.modulus());
      Int cof = det_mod(sub);
      if ((i + j) % 2 == 1) cof = -cof;
      adj.set(j, i, cof);
    }
  }
  return adj;
}

}  // namespace detail

// Inverse mod p^k: adjugate route for n <= 4, unit-pivot Gauss-Jordan above.
inline ModMatrix inverse_mod(const ModMatrix& m) {
  if (!m.is_square()) throw precondition_error("inverse_mod: matrix not square");
  const int n = m.rows();
  const Int& mod = m.modulus().modulus();
  const Int& p = m.modulus().prime();
  if (n <= 4) {
    Int d = det_mod(m);
    if (d % p == 0) throw not_invertible_error("inverse_mod: determinant not a unit");
    Int dinv = inv_mod(d, mod);
    ModMatrix adj = detail::adjugate(m);
    ModMatrix r(n, n, m.modulus());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) r.set(i, j, adj.at(i, j) * dinv);
    }
    return r;
  }
  ModMatrix a = m;
  ModMatrix inv = ModMatrix::identity(n, m.modulus());
  for (int c = 0; c < n; ++c) {
    int pivot = -1;
    for (int r = c; r < n; ++r) {
      if (a.at(r, c) % p != 0) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) throw not_invertible_error("inverse_mod: no unit pivot in column");
    if (pivot != c) {
      for (int j = 0; j < n; ++j) {
        std::swap(a.at(c, j), a.at(pivot, j));
        std::swap(inv.at(c, j), inv.at(pivot, j));
      }
    }
    Int pinv = inv_mod(a.at(c, c), mod);
    for (int j = 0; j < n; ++j) {
      a.set(c, j, a.at(c, j) * pinv);
      inv.set(c, j, inv.at(c, j) * pinv);
    }
    for (int r = 0; r < n; ++r) {
      if (r == c || a.at(r, c) == 0) continue;
      Int f = a.at(r, c);
      for (int j = 0; j < n; ++j) {
        a.set(r, j, a.at(r, j) - f * a.at(c, j));
        inv.set(r, j, inv.at(r, j) - f * inv.at(c, j));
      }
    }
  }
  return inv;
}

inline bool is_primitive(const std::vector<Int>& v, const PrimePower& pk) {
  for (const Int& x : v) {
    if (x % pk.prime() != 0) return true;
  }
  return false;
}

// Extend a primitive vector to a matrix in SL_n with the vector as first
// column: pivot on a unit component, place its inverse, pad with identity,
// and repair the sign of the determinant after the row swap.
inline ModMatrix extend_primitive(const std::vector<Int>& v, const PrimePower& pk) {
  const int n = static_cast<int>(v.size());
  if (!is_primitive(v, pk)) throw precondition_error("extend_primitive: vector is not primitive");
  const Int& mod = pk.modulus();
  int piv = -1;
  for (int i = 0; i < n; ++i) {
    if (v[i] % pk.prime() != 0) {
      piv = i;
      break;
    }
  }
  if (n == 1) {
    if (mod_reduce(v[0], mod) != 1) {
      throw precondition_error("extend_primitive: 1-dimensional extension requires v = (1)");
    }
    ModMatrix m(1, 1, pk);
    m.at(0, 0) = 1;
    return m;
  }
  ModMatrix m(n, n, pk);
  // First column is v itself.
  for (int i = 0; i < n; ++i) m.set(i, 0, v[i]);
  // Column 2 holds the pivot inverse in the row that, before the swap of
  // rows 1 and piv, sat directly under the pivot.
  Int pinv = inv_mod(v[piv], mod);
  int inv_row = (piv == 0) ? 1 : 0;
  m.set(inv_row, 1, pinv);
  // Remaining columns: identity on the rows other than piv and inv_row.
  int col = 2;
  for (int i = 0; i < n; ++i) {
    if (i == piv || i == inv_row) continue;
    m.set(i, col, 1);
    ++col;
  }
  Int d = det_mod(m);
  if (d != 1) {
    // The row swap flipped the sign; negate column 2 to restore det = 1.
    for (int i = 0; i < n; ++i) m.set(i, 1, -m.at(i, 1));
    d = det_mod(m);
  }
  if (d != 1) throw internal_error("extend_primitive: determinant is not 1");
  return m;
}

inline ModMatrix direct_sum(const ModMatrix& a, const ModMatrix& b) {
  if (!(a.modulus() == b.modulus())) throw precondition_error("direct_sum: modulus mismatch");
  ModMatrix r(a.rows() + b.rows(), a.cols() + b.cols(), a.modulus());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) r.at(i, j) = a.at(i, j);
  }
  for (int i = 0; i < b.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) r.at(a.rows() + i, a.cols() + j) = b.at(i, j);
  }
  return r;
}

// I ^ offset  (+)  v  (+)  I ^ rest, the local transformation embedding.
inline ModMatrix embed_local(int n, int offset, const ModMatrix& v) {
  if (offset < 0 || offset + v.rows() > n || !v.is_square()) {
    throw precondition_error("embed_local: block does not fit");
  }
  ModMatrix u = ModMatrix::identity(n, v.modulus());
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < v.cols(); ++j) u.at(offset + i, offset + j) = v.at(i, j);
  }
  return u;
}

// Apply a sub-transformation on a contiguous run of coordinates of a
// symmetric matrix; returns the transformed matrix and the embedding.
inline std::pair<ModMatrix, ModMatrix> apply_local(const ModMatrix& m, int offset, const ModMatrix& v) {
  if (!is_invertible(v)) throw not_invertible_error("apply_local: sub-transformation not invertible");
  ModMatrix u = embed_local(m.rows(), offset, v);
  return {m.congruent(u), u};
}

// Random element of GL_n(Z/p^k) by rejection on the determinant.
inline ModMatrix random_gl(int n, const PrimePower& pk, Rng& rng) {
  for (int attempt = 0; attempt < kRetryBudget; ++attempt) {
    ModMatrix m(n, n, pk);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m.at(i, j) = uniform_int(rng, pk.modulus());
    }
    if (is_invertible(m)) return m;
  }
  throw retries_exhausted_error("random_gl: rejection sampling budget exceeded");
}

// A checked record of the relation u' * source * u == target (mod p^k).
class Witness {
 public:
  Witness(ModMatrix source, ModMatrix target, ModMatrix u)
      : source_(std::move(source)), target_(std::move(target)), u_(std::move(u)) {
    if (!(source_.modulus() == target_.modulus()) || !(source_.modulus() == u_.modulus())) {
      throw precondition_error("Witness: modulus mismatch");
    }
    if (!is_invertible(u_)) throw not_invertible_error("Witness: u is not invertible");
    if (!(source_.congruent(u_) == target_)) {
      throw internal_error("Witness: u' * source * u != target");
    }
  }

  const ModMatrix& source() const { return source_; }
  const ModMatrix& target() const { return target_; }
  const ModMatrix& u() const { return u_; }
  const PrimePower& modulus() const { return u_.modulus(); }

 private:
  ModMatrix source_, target_, u_;
};

}  // namespace padiq
