#pragma once

// Block diagonalization over Z/p^k with an SL_n witness: strictly diagonal
// for odd p, and a direct sum of scaled Type I entries and Type II blocks
// [[2a,b],[b,2c]] (b odd) at p = 2. Also block sorting and assembly.

#include <optional>
#include <utility>
#include <vector>

#include "padiq/matrix.hpp"

namespace padiq {

enum class BlockType { kTypeI, kTypeII };

// Unit-scale content of one Jordan block; the power-of-p scale is kept
// separately so the stored entries are always unit structures.
struct Block {
  BlockType type;
  Int unit;              // Type I: unit coprime to p
  Int a, b, c;           // Type II: [[2a, b],[b, 2c]] with b odd

  static Block type1(Int u) { return Block{BlockType::kTypeI, std::move(u), 0, 0, 0}; }
  static Block type2(Int a, Int b, Int c) {
    return Block{BlockType::kTypeII, 0, std::move(a), std::move(b), std::move(c)};
  }

  int dim() const { return type == BlockType::kTypeI ? 1 : 2; }
  // Determinant of the unit-scale content.
  Int content_det() const { return type == BlockType::kTypeI ? unit : 4 * a * c - b * b; }

  friend bool operator==(const Block&, const Block&) = default;
};

struct ScaledBlock {
  unsigned scale;
  Block block;

  friend bool operator==(const ScaledBlock&, const ScaledBlock&) = default;
};

class BlockDiagForm {
 public:
  BlockDiagForm(PrimePower modulus, std::vector<ScaledBlock> blocks, int zero_dim = 0)
      : modulus_(std::move(modulus)), blocks_(std::move(blocks)), zero_dim_(zero_dim) {
    for (const auto& sb : blocks_) {
      if (sb.block.type == BlockType::kTypeII && !modulus_.is_two()) {
        throw precondition_error("BlockDiagForm: Type II blocks exist only at p = 2");
      }
    }
  }

  const PrimePower& modulus() const { return modulus_; }
  const std::vector<ScaledBlock>& blocks() const { return blocks_; }
  int zero_dim() const { return zero_dim_; }

  int dimension() const {
    int d = zero_dim_;
    for (const auto& sb : blocks_) d += sb.block.dim();
    return d;
  }

  // The explicit symmetric matrix, zero dimensions trailing.
  ModMatrix assemble() const {
    ModMatrix m(dimension(), dimension(), modulus_);
    int off = 0;
    for (const auto& sb : blocks_) {
      Int scale = boost::multiprecision::pow(modulus_.prime(), sb.scale);
      if (sb.block.type == BlockType::kTypeI) {
        m.set(off, off, scale * sb.block.unit);
        off += 1;
      } else {
        m.set(off, off, scale * 2 * sb.block.a);
        m.set(off, off + 1, scale * sb.block.b);
        m.set(off + 1, off, scale * sb.block.b);
        m.set(off + 1, off + 1, scale * 2 * sb.block.c);
        off += 2;
      }
    }
    return m;
  }

  friend bool operator==(const BlockDiagForm&, const BlockDiagForm&) = default;

 private:
  PrimePower modulus_;
  std::vector<ScaledBlock> blocks_;
  int zero_dim_;
};

namespace detail {

// Order of a residue, capped at k for zero entries.
inline unsigned ord_capped(const Int& v, const PrimePower& pk) {
  auto s = padic_split(v, pk.prime());
  if (!s.order) return pk.exponent();
  return std::min(*s.order, pk.exponent());
}

// The SL_2 swap embedded at (i, j): exchanges basis vectors i and j while
// negating one of them, keeping determinant 1.
inline ModMatrix sl_swap(int n, int i, int j, const PrimePower& pk) {
  ModMatrix u = ModMatrix::identity(n, pk);
  u.at(i, i) = 0;
  u.at(j, j) = 0;
  u.set(i, j, -1);
  u.at(j, i) = 1;
  return u;
}

}  // namespace detail

// Working state for congruence pipelines: current matrix plus the
// accumulated transformation from the original input.
class Conjugation {
 public:
  explicit Conjugation(ModMatrix start)
      : initial_(start), current_(std::move(start)), u_(ModMatrix::identity(initial_.rows(), initial_.modulus())) {}

  const ModMatrix& current() const { return current_; }
  const ModMatrix& initial() const { return initial_; }
  const ModMatrix& u() const { return u_; }

  void apply(const ModMatrix& v) {
    current_ = current_.congruent(v);
    u_ = u_ * v;
  }

  void apply_local(int offset, const ModMatrix& v) { apply(embed_local(current_.rows(), offset, v)); }

  Witness witness() const { return Witness(initial_, current_, u_); }

 private:
  ModMatrix initial_, current_, u_;
};

namespace detail {

struct MinEntry {
  unsigned ord;
  int i, j;
};

// Minimum p-order entry of the trailing submatrix, preferring diagonal
// entries of least index, then the lexicographically least off-diagonal.
inline std::optional<MinEntry> find_min_order(const ModMatrix& m, int start) {
  const unsigned cap = m.modulus().exponent();
  unsigned best = cap;
  for (int i = start; i < m.rows(); ++i) {
    for (int j = i; j < m.cols(); ++j) {
      best = std::min(best, ord_capped(m.at(i, j), m.modulus()));
    }
  }
  if (best == cap) return std::nullopt;
  for (int i = start; i < m.rows(); ++i) {
    if (ord_capped(m.at(i, i), m.modulus()) == best) return MinEntry{best, i, i};
  }
  for (int i = start; i < m.rows(); ++i) {
    for (int j = i + 1; j < m.cols(); ++j) {
      if (ord_capped(m.at(i, j), m.modulus()) == best) return MinEntry{best, i, j};
    }
  }
  throw internal_error("find_min_order: scan mismatch");
}

}  // namespace detail

// Transform a symmetric matrix over Z/p^k into block diagonal shape with an
// SL_n witness. Repeatedly: locate a minimum-order entry; clear the row and
// column of a diagonal pivot; move an off-diagonal minimum onto the diagonal
// by a basis addition (odd p); or, at p = 2 when every diagonal entry has
// strictly larger order, isolate a Type II block and clear its rows and
// columns by Cramer's rule.
inline std::pair<BlockDiagForm, Witness> block_diagonalize(const ModMatrix& q_in) {
  if (!q_in.is_symmetric()) throw precondition_error("block_diagonalize: matrix not symmetric");
  const PrimePower& pk = q_in.modulus();
  const Int& mod = pk.modulus();
  const int n = q_in.rows();
  Conjugation work(q_in);
  std::vector<ScaledBlock> blocks;
  int start = 0;
  while (start < n) {
    auto min_entry = detail::find_min_order(work.current(), start);
    if (!min_entry) break;  // the residual submatrix vanishes mod p^k
    const auto [e, mi, mj] = *min_entry;
    if (mi == mj) {
      // Diagonal pivot: swap to the front and clear its row and column.
      if (mi != start) work.apply(detail::sl_swap(n, start, mi, pk));
      const Int& piv = work.current().at(start, start);
      Int scale = boost::multiprecision::pow(pk.prime(), e);
      Int cop_inv = inv_mod(piv / scale, mod);
      ModMatrix clear = ModMatrix::identity(n, pk);
      for (int j = start + 1; j < n; ++j) {
        Int cj = (work.current().at(start, j) / scale) * cop_inv;
        clear.set(start, j, -cj);
      }
      work.apply(clear);
      blocks.push_back({e, Block::type1(work.current().at(start, start) / scale)});
      start += 1;
    } else if (!pk.is_two()) {
      // Odd p: add basis vector j to basis vector i; the new diagonal entry
      // attains the minimum order, so the next round pivots on it.
      ModMatrix shear = ModMatrix::identity(n, pk);
      shear.at(mj, mi) = 1;
      work.apply(shear);
    } else {
      // p = 2, all diagonal orders strictly larger: Type II block.
      if (mi != start) work.apply(detail::sl_swap(n, start, mi, pk));
      int j2 = (mj == start) ? mi : mj;  // position of the partner after the swap
      if (j2 != start + 1) work.apply(detail::sl_swap(n, start + 1, j2, pk));
      Int scale = boost::multiprecision::pow(pk.prime(), e);
      const ModMatrix& cur = work.current();
      Int a2 = cur.at(start, start) / scale;        // 2a
      Int b = cur.at(start, start + 1) / scale;     // b, odd
      Int c2 = cur.at(start + 1, start + 1) / scale;  // 2c
      Int det2 = a2 * c2 - b * b;  // odd
      Int rem_mod = mod / scale;   // 2^{k-e}
      Int det_inv = inv_mod(mod_reduce(det2, rem_mod), rem_mod);
      ModMatrix clear = ModMatrix::identity(n, pk);
      for (int col = start + 2; col < n; ++col) {
        Int d = cur.at(start, col) / scale;
        Int ee = cur.at(start + 1, col) / scale;
        Int r = mod_reduce((d * c2 - ee * b) * det_inv, rem_mod);
        Int s = mod_reduce((a2 * ee - b * d) * det_inv, rem_mod);
        clear.set(start, col, -r);
        clear.set(start + 1, col, -s);
      }
      work.apply(clear);
      const ModMatrix& now = work.current();
      blocks.push_back({e, Block::type2(now.at(start, start) / scale / 2,
                                        now.at(start, start + 1) / scale,
                                        now.at(start + 1, start + 1) / scale / 2)});
      start += 2;
    }
  }
  int zero_dim = n - start;
  BlockDiagForm form(pk, std::move(blocks), zero_dim);
  Witness w = work.witness();
  if (det_mod(w.u()) != 1) throw internal_error("block_diagonalize: witness left SL_n");
  return {std::move(form), std::move(w)};
}

inline std::pair<BlockDiagForm, Witness> block_diagonalize(const IntQuadForm& q, const PrimePower& pk) {
  return block_diagonalize(ModMatrix::from_form(q, pk));
}

// Apply a sub-transformation on a contiguous run of blocks starting at the
// given block index; the embedding is I (+) v (+) I and the result is
// p^k-equivalent to the input.
inline std::pair<ModMatrix, Witness> apply_local(const BlockDiagForm& d, size_t start_block, const ModMatrix& v) {
  if (start_block >= d.blocks().size()) throw precondition_error("apply_local: block index out of range");
  int offset = 0;
  for (size_t i = 0; i < start_block; ++i) offset += d.blocks()[i].block.dim();
  int span = 0;
  for (size_t i = start_block; i < d.blocks().size() && span < v.rows(); ++i) span += d.blocks()[i].block.dim();
  if (span != v.rows()) throw precondition_error("apply_local: size does not cover whole blocks");
  ModMatrix m = d.assemble();
  auto [out, u] = apply_local(m, offset, v);
  return {out, Witness(m, out, u)};
}

// Reorder blocks by ascending scale via permutation local transformations,
// stable within a scale with Type I entries before Type II blocks.
inline std::pair<BlockDiagForm, Witness> sort_blocks(const BlockDiagForm& d) {
  std::vector<ScaledBlock> blocks = d.blocks();
  ModMatrix m = d.assemble();
  Conjugation work(m);
  auto offset_of = [&](size_t idx) {
    int off = 0;
    for (size_t t = 0; t < idx; ++t) off += blocks[t].block.dim();
    return off;
  };
  auto rank = [](const ScaledBlock& sb) {
    return std::pair<unsigned, int>(sb.scale, sb.block.type == BlockType::kTypeI ? 0 : 1);
  };
  bool moved = true;
  while (moved) {
    moved = false;
    for (size_t i = 0; i + 1 < blocks.size(); ++i) {
      if (rank(blocks[i + 1]) < rank(blocks[i])) {
        // Swap adjacent blocks with a determinant-one block permutation.
        int a = blocks[i].block.dim();
        int b = blocks[i + 1].block.dim();
        ModMatrix v(a + b, a + b, d.modulus());
        for (int r = 0; r < a; ++r) v.set(r, b + r, -1);
        for (int r = 0; r < b; ++r) v.at(a + r, r) = 1;
        if (det_mod(v) != 1) {
          for (int r = 0; r < a + b; ++r) v.set(r, 0, -v.at(r, 0));
        }
        work.apply_local(offset_of(i), v);
        std::swap(blocks[i], blocks[i + 1]);
        // Negations flip the sign of b in a Type II block; re-read content.
        int off = offset_of(i);
        for (size_t t : {i, i + 1}) {
          if (blocks[t].block.type == BlockType::kTypeII) {
            Int scale = boost::multiprecision::pow(d.modulus().prime(), blocks[t].scale);
            blocks[t].block.b = work.current().at(off, off + 1) / scale;
          }
          off += blocks[t].block.dim();
        }
        moved = true;
      }
    }
  }
  return {BlockDiagForm(d.modulus(), std::move(blocks), d.zero_dim()), work.witness()};
}

}  // namespace padiq
