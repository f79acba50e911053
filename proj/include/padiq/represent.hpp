#pragma once

// Primitive solutions of x'Qx = t (mod p^k): closed forms for single
// blocks, precision lifting, and a general Las Vegas solver that decides
// existence at a truncated precision and lifts any solution found.

#include <optional>
#include <utility>
#include <vector>

#include "padiq/block_diagonal.hpp"
#include "padiq/oracle.hpp"

namespace padiq {

// A checked primitive representation: vector' * form * vector == target.
class Representation {
 public:
  Representation(std::vector<Int> vector, Int target, ModMatrix form)
      : vector_(std::move(vector)), target_(mod_reduce(target, form.modulus().modulus())), form_(std::move(form)) {
    const Int& m = form_.modulus().modulus();
    for (auto& x : vector_) x = mod_reduce(x, m);
    if (!is_primitive(vector_, form_.modulus())) {
      throw precondition_error("Representation: vector is not primitive");
    }
    Int val = 0;
    for (int i = 0; i < form_.rows(); ++i) {
      for (int j = 0; j < form_.cols(); ++j) val += vector_[static_cast<size_t>(i)] * form_.at(i, j) * vector_[static_cast<size_t>(j)];
    }
    if (mod_reduce(val, m) != target_) {
      throw internal_error("Representation: value check failed");
    }
  }

  const std::vector<Int>& vector() const { return vector_; }
  const Int& target() const { return target_; }
  const ModMatrix& form() const { return form_; }

 private:
  std::vector<Int> vector_;
  Int target_;
  ModMatrix form_;
};

// Solve x^2 * p^s * tau = t (mod p^k) for a unit x. Any p-factor of tau is
// absorbed into the scale first.
inline std::optional<Representation> represent_type1(const Int& tau, unsigned scale, const Int& t,
                                                     const PrimePower& pk) {
  Int scaled = boost::multiprecision::pow(pk.prime(), scale) * tau;
  if (mod_reduce(scaled, pk.modulus()) == 0) {
    throw precondition_error("represent_type1: entry vanishes mod p^k");
  }
  auto entry = padic_split(mod_reduce(scaled, pk.modulus()), pk.prime());
  unsigned s = *entry.order;
  const Int& unit = entry.unit;
  ModMatrix form = ModMatrix::from_rows({{scaled}}, pk);
  Int tr = mod_reduce(t, pk.modulus());
  if (tr == 0) return std::nullopt;  // a unit square keeps order s < k
  auto split = padic_split(tr, pk.prime());
  if (*split.order != s) return std::nullopt;
  unsigned rem = pk.exponent() - s;
  PrimePower rem_pk = pk.with_exponent(rem);
  Int ratio = mod_reduce(split.unit * inv_mod(unit, rem_pk.modulus()), rem_pk.modulus());
  auto root = sqrt_mod(ratio, rem_pk);
  if (!root) return std::nullopt;
  return Representation({*root}, tr, form);
}

// Primitive representation of t with ord_2(t) = 1 by a Type II block at
// scale 0: solve modulo 16 by a scan that prefers odd first coordinates,
// then correct by a unit square.
inline Representation represent_type2(const Block& b, const Int& t, unsigned k) {
  if (b.type != BlockType::kTypeII) throw precondition_error("represent_type2: block is not Type II");
  PrimePower pk(2, k);
  Int tr = mod_reduce(t, pk.modulus());
  if (int_symbol(t, pk).order != std::optional<unsigned>(1u)) {
    throw precondition_error("represent_type2: ord_2(t) must be 1");
  }
  ModMatrix form = ModMatrix::from_rows({{2 * b.a, b.b}, {b.b, 2 * b.c}}, pk);
  auto value = [&](const Int& x, const Int& y) { return 2 * b.a * x * x + 2 * b.b * x * y + 2 * b.c * y * y; };
  const Int probe_mod = k >= 4 ? Int(16) : pk.modulus();
  const int xs[] = {1, 3, 5, 7, 9, 11, 13, 15, 0, 2, 4, 6, 8, 10, 12, 14};
  for (int x : xs) {
    for (int y = 0; y < 16; ++y) {
      if (x % 2 == 0 && y % 2 == 0) continue;
      Int v = value(x, y);
      if (mod_reduce(v - t, probe_mod) != 0) continue;
      if (k <= 4) return Representation({x, y}, tr, form);
      // v = t mod 16 and both have order 1, so t/v is 1 mod 8 and has a
      // square root at full precision.
      PrimePower half(2, k - 1);
      Int ratio = mod_reduce((t / 2 % half.modulus()) * inv_mod(mod_reduce(v / 2, half.modulus()), half.modulus()),
                             half.modulus());
      auto w = sqrt_mod(ratio, half);
      if (!w) throw internal_error("represent_type2: correction root missing");
      return Representation({*w * x, *w * y}, tr, form);
    }
  }
  throw internal_error("represent_type2: scan found no base solution");
}

// Lift a primitive representation of t from precision p^m to p^k, given
// the same form reduced at the target precision. Works by scaling with a
// unit square root, which exists because the symbols of x'Qx and t agree
// at the source precision.
inline Representation lift_representation(const Representation& rep, const Int& t, const ModMatrix& form_k) {
  const PrimePower& src = rep.form().modulus();
  const PrimePower& dst = form_k.modulus();
  const unsigned m = src.exponent();
  const unsigned k = dst.exponent();
  if (!(dst.prime() == src.prime()) || k < m) {
    throw precondition_error("lift_representation: target precision must refine the source");
  }
  for (int i = 0; i < form_k.rows(); ++i) {
    for (int j = 0; j < form_k.cols(); ++j) {
      if (mod_reduce(form_k.at(i, j), src.modulus()) != rep.form().at(i, j)) {
        throw precondition_error("lift_representation: form mismatch at source precision");
      }
    }
  }
  // Threshold m >= max(ord_p(Q), ord_p(t)) + k_p.
  unsigned content_ord = src.exponent();
  for (int i = 0; i < form_k.rows(); ++i) {
    for (int j = 0; j < form_k.cols(); ++j) {
      auto s = padic_split(rep.form().at(i, j), src.prime());
      if (s.order) content_ord = std::min(content_ord, *s.order);
    }
  }
  Int t_src = mod_reduce(t, src.modulus());
  if (t_src == 0) throw precision_error("lift_representation: target vanishes at source precision");
  unsigned ord_t = ord_p(t_src, src.prime());
  if (m < std::max(content_ord, ord_t) + src.kp()) {
    throw precision_error("lift_representation: source precision below threshold");
  }
  if (k == m) return Representation(rep.vector(), t, form_k);
  Int a = 0;
  for (int i = 0; i < form_k.rows(); ++i) {
    for (int j = 0; j < form_k.cols(); ++j) {
      a += rep.vector()[static_cast<size_t>(i)] * form_k.at(i, j) * rep.vector()[static_cast<size_t>(j)];
    }
  }
  if (ord_p(a, src.prime()) != ord_t) throw internal_error("lift_representation: order drift");
  PrimePower unit_pk = dst.with_exponent(k - ord_t);
  Int ratio = mod_reduce(cop_p(t, src.prime()) * inv_mod(cop_p(a, src.prime()), unit_pk.modulus()), unit_pk.modulus());
  auto u = sqrt_mod(ratio, unit_pk);
  if (!u) throw internal_error("lift_representation: scaling root missing");
  std::vector<Int> lifted = rep.vector();
  for (auto& x : lifted) x = mod_reduce(x * *u, dst.modulus());
  return Representation(std::move(lifted), t, form_k);
}

namespace detail {

inline Int eval_form(const ModMatrix& q, const std::vector<Int>& x) {
  Int val = 0;
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) val += x[static_cast<size_t>(i)] * q.at(i, j) * x[static_cast<size_t>(j)];
  }
  return val;
}

// Randomized search over a block diagonal form: sample all but one
// coordinate, close the last with a square root.
inline std::optional<std::vector<Int>> random_close_search(const BlockDiagForm& d, const Int& t,
                                                           const PrimePower& pk, Rng& rng) {
  const auto& blocks = d.blocks();
  const int n = d.dimension();
  ModMatrix assembled = ModMatrix::from_rows(
      [&] {
        ModMatrix a = d.assemble();
        std::vector<std::vector<Int>> rows(a.rows(), std::vector<Int>(a.cols()));
        for (int i = 0; i < a.rows(); ++i) {
          for (int j = 0; j < a.cols(); ++j) rows[i][j] = mod_reduce(a.at(i, j), pk.modulus());
        }
        return rows;
      }(),
      pk);
  // Coordinates on vanished dimensions represent 0 for free.
  if (mod_reduce(t, pk.modulus()) == 0 && d.zero_dim() > 0) {
    std::vector<Int> x(static_cast<size_t>(n), 0);
    x.back() = 1;
    return x;
  }
  // Close against a single Type II block when the orders line up.
  {
    Int tr = mod_reduce(t, pk.modulus());
    if (pk.is_two() && tr != 0) {
      unsigned ord_t = ord_p(tr, 2);
      int off = 0;
      for (const auto& sb : blocks) {
        if (sb.block.type == BlockType::kTypeII && sb.scale + 1 == ord_t && sb.scale + 3 <= pk.exponent()) {
          Int scale = Int(1) << sb.scale;
          Representation sub = represent_type2(sb.block, tr / scale, pk.exponent() - sb.scale);
          std::vector<Int> x(static_cast<size_t>(n), 0);
          x[static_cast<size_t>(off)] = sub.vector()[0];
          x[static_cast<size_t>(off) + 1] = sub.vector()[1];
          return x;
        }
        off += sb.block.dim();
      }
    }
  }
  const Int sample_bound = pk.is_two() ? Int(16) : std::min<Int>(pk.modulus(), Int(1) << 16);
  for (int round = 0; round < kRetryBudget; ++round) {
    for (size_t piv = 0; piv < blocks.size(); ++piv) {
      if (blocks[piv].block.type != BlockType::kTypeI) continue;
      if (blocks[piv].scale >= pk.exponent()) continue;
      std::vector<Int> x(static_cast<size_t>(n), 0);
      Int rest = mod_reduce(t, pk.modulus());
      int off = 0;
      int piv_off = -1;
      for (size_t bidx = 0; bidx < blocks.size(); ++bidx) {
        const auto& sb = blocks[bidx];
        if (bidx == piv) {
          piv_off = off;
          off += sb.block.dim();
          continue;
        }
        for (int c = 0; c < sb.block.dim(); ++c) x[static_cast<size_t>(off + c)] = uniform_int(rng, sample_bound);
        off += sb.block.dim();
      }
      Int partial = eval_form(assembled, x);
      rest = mod_reduce(rest - partial, pk.modulus());
      const auto& sb = blocks[piv];
      Int scale = boost::multiprecision::pow(pk.prime(), sb.scale);
      if (rest == 0) {
        // The sampled coordinates already meet the target.
        if (is_primitive(x, pk) && mod_reduce(eval_form(assembled, x) - t, pk.modulus()) == 0) return x;
        continue;
      }
      auto split = padic_split(rest, pk.prime());
      if (*split.order < sb.scale || (*split.order - sb.scale) % 2 != 0) continue;
      unsigned rem = pk.exponent() - sb.scale;
      PrimePower rem_pk = pk.with_exponent(rem);
      Int ratio = mod_reduce((rest / scale) * inv_mod(sb.block.unit, rem_pk.modulus()), rem_pk.modulus());
      auto root = sqrt_mod(ratio, rem_pk);
      if (!root) continue;
      x[static_cast<size_t>(piv_off)] = mod_reduce(*root, pk.modulus());
      if (!is_primitive(x, pk)) continue;
      if (mod_reduce(eval_form(assembled, x) - t, pk.modulus()) != 0) continue;
      return x;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Theorem-8-style general solver. Existence is decided at the truncated
// precision m = max(ord_p(D), ord_p(t)) + k_p (capped at k): an exhaustive
// scan certifies NoRepresentation, and any hit is lifted to p^k. Outside
// the enumerable regime a randomized search runs instead, and its failure
// is reported as retries_exhausted (never as a certified absence).
inline std::optional<Representation> represent_general(const ModMatrix& q, const Int& t, const PrimePower& pk,
                                                       Rng& rng) {
  if (!q.is_symmetric()) throw precondition_error("represent_general: form not symmetric");
  const int n = q.rows();
  ModMatrix q_k = q.modulus() == pk ? q : q.rebase(pk);
  auto [d, w] = block_diagonalize(q_k);
  // Truncation threshold.
  unsigned content_ord = pk.exponent();
  for (const auto& sb : d.blocks()) content_ord = std::min(content_ord, sb.scale);
  Int tr = mod_reduce(t, pk.modulus());
  unsigned ord_t = tr == 0 ? pk.exponent() : ord_p(tr, pk.prime());
  unsigned m = std::min(pk.exponent(), std::max(content_ord, ord_t) + pk.kp());
  PrimePower pm = pk.with_exponent(m);

  ModMatrix d_k = d.assemble();
  ModMatrix d_m = m == pk.exponent() ? d_k : d_k.rebase(pm);
  std::optional<std::vector<Int>> found;
  bool certified = false;
  double candidates = 1;
  for (int i = 0; i < n; ++i) candidates *= pm.modulus().convert_to<double>();
  if (candidates <= static_cast<double>(1u << 22)) {
    found = brute_represent(d_m, tr);
    certified = true;
  } else {
    found = detail::random_close_search(d, tr, pm, rng);
  }
  if (!found) {
    if (certified) return std::nullopt;
    throw retries_exhausted_error("represent_general: randomized search budget exceeded");
  }
  Representation rep_m(*found, tr, d_m);
  Representation rep_k = (m == pk.exponent()) ? rep_m : lift_representation(rep_m, tr, d_k);
  // Map back through the diagonalization witness: y solves D, U y solves Q.
  std::vector<Int> x(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    Int acc = 0;
    for (int j = 0; j < n; ++j) acc += w.u().at(i, j) * rep_k.vector()[static_cast<size_t>(j)];
    x[static_cast<size_t>(i)] = mod_reduce(acc, pk.modulus());
  }
  return Representation(std::move(x), tr, q_k);
}

}  // namespace padiq
