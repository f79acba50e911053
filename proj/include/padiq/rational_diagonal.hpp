#pragma once

// Diagonalization over Q with an exact rational witness, the real
// signature, p-antisquare detection, and the p-signature / oddity.

#include <utility>
#include <vector>

#include "padiq/matrix.hpp"

namespace padiq {

struct RatDiagForm {
  std::vector<Rat> entries;  // all nonzero
};

// Square rational matrix, only as rich as the diagonalization needs.
class RatMatrix {
 public:
  explicit RatMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0) {}

  static RatMatrix identity(int n) {
    RatMatrix m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  int dim() const { return n_; }
  Rat& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const Rat& at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  RatMatrix operator*(const RatMatrix& o) const {
    RatMatrix r(n_);
    for (int i = 0; i < n_; ++i) {
      for (int p = 0; p < n_; ++p) {
        if (at(i, p) == 0) continue;
        for (int j = 0; j < n_; ++j) r.at(i, j) += at(i, p) * o.at(p, j);
      }
    }
    return r;
  }

  RatMatrix transpose() const {
    RatMatrix t(n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) t.at(j, i) = at(i, j);
    }
    return t;
  }

  friend bool operator==(const RatMatrix&, const RatMatrix&) = default;

 private:
  int n_;
  std::vector<Rat> a_;
};

inline RatMatrix rat_from_form(const IntQuadForm& q) {
  RatMatrix m(q.dim());
  for (int i = 0; i < q.dim(); ++i) {
    for (int j = 0; j < q.dim(); ++j) m.at(i, j) = Rat(q.at(i, j));
  }
  return m;
}

// Symmetric elimination over Q; a zero pivot with a live off-diagonal
// entry is repaired by adding the partner basis vector first.
inline std::pair<RatDiagForm, RatMatrix> rational_diagonalize(const IntQuadForm& q) {
  if (q.det() == 0) throw degenerate_error("rational_diagonalize: determinant is zero");
  const int n = q.dim();
  RatMatrix m = rat_from_form(q);
  RatMatrix v = RatMatrix::identity(n);
  for (int c = 0; c < n; ++c) {
    if (m.at(c, c) == 0) {
      int j = -1;
      for (int t = c + 1; t < n; ++t) {
        if (m.at(c, t) != 0) {
          j = t;
          break;
        }
      }
      if (j < 0) throw internal_error("rational_diagonalize: zero row in nondegenerate form");
      // Adding t * b_j revives the pivot for t = 1 or t = 2.
      for (int t = 1; t <= 2; ++t) {
        RatMatrix add = RatMatrix::identity(n);
        add.at(j, c) = t;
        RatMatrix trial = add.transpose() * m * add;
        if (trial.at(c, c) != 0) {
          m = trial;
          v = v * add;
          break;
        }
      }
      if (m.at(c, c) == 0) throw internal_error("rational_diagonalize: pivot repair failed");
    }
    RatMatrix clear = RatMatrix::identity(n);
    for (int j = c + 1; j < n; ++j) clear.at(c, j) = -m.at(c, j) / m.at(c, c);
    m = clear.transpose() * m * clear;
    v = v * clear;
  }
  RatDiagForm d;
  for (int i = 0; i < n; ++i) d.entries.push_back(m.at(i, i));
  return {std::move(d), std::move(v)};
}

// Count of positive minus negative diagonal entries.
inline int signature(const IntQuadForm& q) {
  auto [d, v] = rational_diagonalize(q);
  int sig = 0;
  for (const Rat& e : d.entries) sig += e > 0 ? 1 : -1;
  return sig;
}

inline int ord_p_rat(const Rat& x, const Int& p) {
  return static_cast<int>(ord_p(boost::multiprecision::numerator(x), p)) -
         static_cast<int>(ord_p(boost::multiprecision::denominator(x), p));
}

// x = p^alpha * a/b with a, b units; a p-antisquare has odd alpha and
// mismatched unit signs. At p = 2 the sign comparison is the +-1-valued
// Kronecker symbol (a/b = +-3 mod 8), which is what the signature
// invariance requires; the mod-8 residue itself is not invariant.
inline bool is_antisquare(const Rat& x, const Int& p) {
  if (x == 0) throw precondition_error("is_antisquare: zero input");
  Int a = cop_p(boost::multiprecision::numerator(x), p);
  Int b = cop_p(boost::multiprecision::denominator(x), p);
  int alpha = ord_p_rat(x, p);
  if (alpha % 2 == 0) return false;
  if (p == 2) return kronecker2(a) != kronecker2(b);
  return legendre(a, p) != legendre(b, p);
}

// p-signature of the form: sum of p^{alpha_i} (odd p) or of the odd parts
// a_i (p = 2), plus 4 per antisquare, read mod 8.
inline int p_signature(const IntQuadForm& q, const Int& p) {
  auto [d, v] = rational_diagonalize(q);
  Int total = 0;
  for (const Rat& e : d.entries) {
    if (p == 2) {
      Int a = cop_p(boost::multiprecision::numerator(e), 2);
      Int b = cop_p(boost::multiprecision::denominator(e), 2);
      total += a * inv_mod(mod_reduce(b, 8), 8);
    } else {
      // p^2 = 1 mod 8, so only the parity of the order matters.
      int alpha = ord_p_rat(e, p);
      total += (alpha % 2 == 0) ? Int(1) : p;
    }
    if (is_antisquare(e, p)) total += 4;
  }
  return static_cast<int>(mod_reduce(total, 8));
}

}  // namespace padiq
