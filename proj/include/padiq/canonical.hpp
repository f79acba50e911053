#pragma once

// Canonical forms over Z/p^k with explicit GL_n witnesses: the odd-p
// pipeline (diagonalize, sort, two-entry sweeps), the p = 2 pipeline
// (Type II normalization, de-mixing, sign walking along trains,
// lexicographically minimal compartments), and transformation recovery
// between equivalent forms.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "padiq/represent.hpp"
#include "padiq/symbols.hpp"

namespace padiq {

struct CanonicalForm {
  BlockDiagForm form;

  ModMatrix matrix() const { return form.assemble(); }

  friend bool operator==(const CanonicalForm&, const CanonicalForm&) = default;
};

namespace detail {

// z with z^2 * unit = target (mod p^k); both arguments must be units with
// matching square classes.
inline Int unit_scaling_root(const Int& unit, const Int& target, const PrimePower& pk) {
  Int ratio = mod_reduce(target * inv_mod(unit, pk.modulus()), pk.modulus());
  auto z = sqrt_mod(ratio, pk);
  if (!z) throw internal_error("unit_scaling_root: classes do not match");
  return *z;
}

inline ModMatrix mat2(const Int& a, const Int& b, const Int& c, const Int& d, const PrimePower& pk) {
  return ModMatrix::from_rows({{a, b}, {c, d}}, pk);
}

inline Int exact_div(const Int& a, const Int& b) {
  if (a % b != 0) throw internal_error("exact_div: not divisible");
  return a / b;
}

}  // namespace detail

// Normalize t1 (+) t2 (units mod p^k, p odd) to 1 (+) {1, sigma_p}:
// direct square scalings when one entry is a residue, and the
// sum-of-two-non-residues representation when neither is.
inline std::pair<std::pair<Int, Int>, Witness> canp2_pair(const Int& t1, const Int& t2, const PrimePower& pk) {
  if (pk.is_two()) throw precondition_error("canp2_pair: p must be odd");
  const Int& p = pk.prime();
  const Int& mod = pk.modulus();
  Int u1 = mod_reduce(t1, mod);
  Int u2 = mod_reduce(t2, mod);
  if (u1 % p == 0 || u2 % p == 0) throw precondition_error("canp2_pair: entries must be units");
  ModMatrix source = ModMatrix::from_rows({{u1, 0}, {0, u2}}, pk);
  Int sigma = sigma_p(p);
  ModMatrix v = ModMatrix::identity(2, pk);
  if (legendre(u1, p) == -1 && legendre(u2, p) == 1) {
    v = detail::mat2(0, -1, 1, 0, pk);
    std::swap(u1, u2);
  }
  if (legendre(u1, p) == 1) {
    Int x = detail::unit_scaling_root(u1, 1, pk);
    Int tau = legendre(u2, p) == 1 ? Int(1) : sigma;
    Int y = detail::unit_scaling_root(u2, tau, pk);
    v = v * detail::mat2(x, 0, 0, y, pk);
    ModMatrix target = ModMatrix::from_rows({{1, 0}, {0, tau}}, pk);
    return {{Int(1), tau}, Witness(source, target, v)};
  }
  // Both non-residues: 1 = n1 + (p^k + 1 - n1) with both parts non-residues.
  auto [n1, n2] = nonresidue_sum_pair(p);
  Int s1 = n1;
  Int s2 = mod_reduce(1 - n1, mod);
  Int x = detail::unit_scaling_root(u1, s1, pk);
  Int y = detail::unit_scaling_root(u2, s2, pk);
  ModMatrix ext = extend_primitive({x, y}, pk);
  ModMatrix mixed = source.congruent(ext);
  if (mixed.at(0, 0) != 1) throw internal_error("canp2_pair: representation of 1 failed");
  ModMatrix clear = detail::mat2(1, -mixed.at(0, 1), 0, 1, pk);
  ModMatrix diag = mixed.congruent(clear);
  Int a = diag.at(1, 1);
  if (a % p == 0) throw internal_error("canp2_pair: trailing entry is not a unit");
  Int tau = legendre(a, p) == 1 ? Int(1) : sigma;
  Int z = detail::unit_scaling_root(a, tau, pk);
  v = v * ext * clear * detail::mat2(1, 0, 0, z, pk);
  ModMatrix target = ModMatrix::from_rows({{1, 0}, {0, tau}}, pk);
  return {{Int(1), tau}, Witness(source, target, v)};
}

// Lemma-11 normalization of a Type II block of 2-order 0 to T+ or T-,
// running at one extra bit of internal precision so the trailing entry
// collapses to 2 or 4 exactly.
inline std::pair<Block, Witness> type2_canonical(const Block& b, unsigned k) {
  if (b.type != BlockType::kTypeII) throw precondition_error("type2_canonical: block is not Type II");
  if (k < 3) throw precision_error("type2_canonical: requires k >= 3");
  const unsigned s = k + 1;
  PrimePower pks(2, s);
  PrimePower pk(2, k);
  Int lambda = mod_reduce(b.content_det(), 8);
  if (lambda != 3 && lambda != 7) throw internal_error("type2_canonical: determinant not 3 or 7 mod 8");
  ModMatrix bs = ModMatrix::from_rows({{2 * b.a, b.b}, {b.b, 2 * b.c}}, pks);
  ModMatrix acc = ModMatrix::identity(2, pks);
  Representation rep2 = represent_type2(b, 2, s);
  Int x1 = rep2.vector()[0];
  Int x2 = rep2.vector()[1];
  ModMatrix cur = bs;
  if (x1 % 2 == 0) {
    ModMatrix swap = detail::mat2(0, 1, 1, 0, pks);
    cur = cur.congruent(swap);
    acc = acc * swap;
    std::swap(x1, x2);
  }
  ModMatrix u = detail::mat2(x1, 0, x2, inv_mod(x1, pks.modulus()), pks);
  cur = cur.congruent(u);
  acc = acc * u;
  if (cur.at(0, 0) != 2) throw internal_error("type2_canonical: top entry is not 2");
  Int x = detail::unit_scaling_root(det_mod(cur), lambda, pks);
  ModMatrix v = detail::mat2(1, 0, 0, x, pks);
  cur = cur.congruent(v);
  acc = acc * v;
  if (cur.at(0, 1) % 2 != 1) throw internal_error("type2_canonical: off-diagonal is even");
  ModMatrix w = detail::mat2(1, detail::exact_div(1 - cur.at(0, 1), 2), 0, 1, pks);
  cur = cur.congruent(w);
  acc = acc * w;
  Block target = lambda == 3 ? Block::type2(1, 1, 1) : Block::type2(1, 1, 2);
  // Reduce the accumulated transformation to the caller's precision.
  ModMatrix acc_k(2, 2, pk);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) acc_k.set(i, j, acc.at(i, j));
  }
  ModMatrix source = ModMatrix::from_rows({{2 * b.a, b.b}, {b.b, 2 * b.c}}, pk);
  ModMatrix expect = ModMatrix::from_rows({{2, 1}, {1, lambda == 3 ? 2 : 4}}, pk);
  return {target, Witness(source, expect, acc_k)};
}

// Single-block canonicalization at scale 0 (Type I for any p, Type II at
// p = 2 via the T+/T- normalization).
inline std::pair<Block, Witness> can_block(const Block& b, const PrimePower& pk) {
  if (b.type == BlockType::kTypeII) {
    if (!pk.is_two()) throw precondition_error("can_block: Type II blocks require p = 2");
    return type2_canonical(b, pk.exponent());
  }
  Int unit = mod_reduce(b.unit, pk.modulus());
  if (unit % pk.prime() == 0) throw precondition_error("can_block: entry is not a unit");
  Int target;
  if (pk.is_two()) {
    target = mod_reduce(unit, 8);
  } else {
    target = legendre(unit, pk.prime()) == 1 ? Int(1) : sigma_p(pk.prime());
  }
  Int z = detail::unit_scaling_root(unit, target, pk);
  ModMatrix source = ModMatrix::from_rows({{unit}}, pk);
  ModMatrix tgt = ModMatrix::from_rows({{target}}, pk);
  ModMatrix v = ModMatrix::from_rows({{z}}, pk);
  return {Block::type1(target), Witness(source, tgt, v)};
}

// Lemma-12 absorption: tau (+) T (same scale, T already T+ or T-) becomes a
// diagonal of three odd units.
inline std::pair<std::array<Int, 3>, Witness> absorb_type2_dim3(const Int& tau, const Block& t, unsigned k) {
  if (t.type != BlockType::kTypeII) throw precondition_error("absorb_type2_dim3: second block must be Type II");
  if (k < 3) throw precision_error("absorb_type2_dim3: requires k >= 3");
  PrimePower pk(2, k);
  Int tau_r = mod_reduce(tau, pk.modulus());
  if (tau_r % 2 == 0) throw precondition_error("absorb_type2_dim3: tau must be odd");
  bool is_plus = mod_reduce(t.content_det(), 8) == 7;
  ModMatrix source = ModMatrix::from_rows({{tau_r, 0, 0}, {0, 2 * t.a, t.b}, {0, t.b, 2 * t.c}}, pk);
  Conjugation work(source);
  Int x;
  if (is_plus) {
    // Map T+ back to [[8,1],[1,2]] so the (2,2) slot is even but the (3,3)
    // slot is 2.
    auto [tp, w1] = type2_canonical(Block::type2(4, 1, 1), k);
    if (!(tp == Block::type2(1, 1, 2))) throw internal_error("absorb_type2_dim3: [[8,1],[1,2]] is not T+");
    ModMatrix back = inverse_mod(w1.u());
    work.apply(direct_sum(ModMatrix::identity(1, pk), back));
    x = 8;
  } else {
    x = 2;
  }
  if (work.current().at(1, 1) != mod_reduce(x, pk.modulus()) || work.current().at(2, 2) != 2) {
    throw internal_error("absorb_type2_dim3: unexpected shape before the shear");
  }
  Int r = mod_reduce(-tau_r * inv_mod(x + 1, pk.modulus()), pk.modulus());
  ModMatrix v = ModMatrix::from_rows({{1, 1, 1}, {r, 1, 0}, {0, 1, 1}}, pk);
  work.apply(v);
  if (work.current().at(0, 1) != 0) throw internal_error("absorb_type2_dim3: shear did not clear (1,2)");
  auto [d, w] = block_diagonalize(work.current());
  work.apply(w.u());
  std::array<Int, 3> out;
  for (int i = 0; i < 3; ++i) {
    out[static_cast<size_t>(i)] = work.current().at(i, i);
    if (out[static_cast<size_t>(i)] % 2 == 0) throw internal_error("absorb_type2_dim3: output entry is even");
  }
  return {out, work.witness()};
}

// Lemma-13 sign walking primitives. Each returns the transformed segment
// contents together with a witness over the stated segment.

// (i) t1 (+) 4 t2 -> (t1+4) (+) 4 (t2+4), both read mod 8.
inline std::pair<std::pair<Int, Int>, Witness> sign_walk_unit_gap_unit(const Int& t1, const Int& t2, unsigned k) {
  if (k < 5) throw precision_error("sign_walk_unit_gap_unit: requires k >= 5");
  PrimePower pk(2, k);
  Int u1 = mod_reduce(t1, pk.modulus());
  Int u2 = mod_reduce(t2, pk.modulus());
  ModMatrix source = ModMatrix::from_rows({{u1, 0}, {0, 4 * u2}}, pk);
  Int quarter = Int(1) << (k - 2);
  Int x = mod_reduce(-u1 * inv_mod(u2, quarter), quarter);
  ModMatrix u = detail::mat2(1, 4, 1, x, pk);
  ModMatrix s = source.congruent(u);
  if (s.at(0, 1) != 0) throw internal_error("sign_walk_unit_gap_unit: off-diagonal did not vanish");
  Int r1 = mod_reduce(u1 + 4, 8);
  Int r2 = mod_reduce(u2 + 4, 8);
  Int z1 = detail::unit_scaling_root(s.at(0, 0), r1, pk);
  Int z2 = detail::unit_scaling_root(detail::exact_div(s.at(1, 1), 4), r2, pk.with_exponent(k - 2));
  ModMatrix v = u * detail::mat2(z1, 0, 0, z2, pk);
  ModMatrix target = ModMatrix::from_rows({{r1, 0}, {0, 4 * r2}}, pk);
  return {{r1, r2}, Witness(source, target, v)};
}

// (ii) t (+) 2T -> (t+4) (+) 2 flip(T).
inline std::pair<std::pair<Int, Block>, Witness> sign_walk_unit_type2(const Int& t, const Block& block, unsigned k) {
  if (k < 4) throw precision_error("sign_walk_unit_type2: requires k >= 4");
  if (block.type != BlockType::kTypeII) throw precondition_error("sign_walk_unit_type2: needs a Type II block");
  PrimePower pk(2, k);
  Int u0 = mod_reduce(t, pk.modulus());
  ModMatrix source =
      ModMatrix::from_rows({{u0, 0, 0}, {0, 4 * block.a, 2 * block.b}, {0, 2 * block.b, 4 * block.c}}, pk);
  Conjugation work(source);
  work.apply(ModMatrix::from_rows({{1, 0, 0}, {1, 1, 0}, {0, 0, 1}}, pk));
  auto [d, w] = block_diagonalize(work.current());
  work.apply(w.u());
  if (d.blocks().size() != 2 || d.blocks()[0].block.type != BlockType::kTypeI ||
      d.blocks()[1].block.type != BlockType::kTypeII || d.blocks()[1].scale != 1) {
    throw internal_error("sign_walk_unit_type2: unexpected block structure");
  }
  Int r = mod_reduce(u0 + 4, 8);
  Int z = detail::unit_scaling_root(work.current().at(0, 0), r, pk);
  work.apply_local(0, ModMatrix::from_rows({{z}}, pk));
  auto [tcan, tw] = type2_canonical(d.blocks()[1].block, k - 1);
  ModMatrix lift(2, 2, pk);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) lift.at(i, j) = tw.u().at(i, j);
  }
  work.apply_local(1, lift);
  // A flip exchanges determinant classes 3 and 7; their difference is 4.
  if (mod_reduce(tcan.content_det() - block.content_det(), 8) != 4) {
    throw internal_error("sign_walk_unit_type2: Type II sign did not flip");
  }
  return {{r, tcan}, work.witness()};
}

// (iii) T (+) 2t -> flip(T) (+) 2t' with the sign of t' flipped.
inline std::pair<std::pair<Block, Int>, Witness> sign_walk_type2_unit(const Block& block, const Int& t, unsigned k) {
  if (k < 4) throw precision_error("sign_walk_type2_unit: requires k >= 4");
  if (block.type != BlockType::kTypeII) throw precondition_error("sign_walk_type2_unit: needs a Type II block");
  PrimePower pk(2, k);
  Int u0 = mod_reduce(t, pk.modulus());
  ModMatrix source =
      ModMatrix::from_rows({{2 * block.a, block.b, 0}, {block.b, 2 * block.c, 0}, {0, 0, 2 * u0}}, pk);
  Conjugation work(source);
  work.apply(ModMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 1, 1}}, pk));
  auto [d, w] = block_diagonalize(work.current());
  work.apply(w.u());
  if (d.blocks().size() != 2 || d.blocks()[0].block.type != BlockType::kTypeII || d.blocks()[0].scale != 0 ||
      d.blocks()[1].block.type != BlockType::kTypeI || d.blocks()[1].scale != 1) {
    throw internal_error("sign_walk_type2_unit: unexpected block structure");
  }
  auto [tcan, tw] = type2_canonical(d.blocks()[0].block, k);
  work.apply_local(0, tw.u());
  Int trailing = d.blocks()[1].block.unit;
  Int r = mod_reduce(trailing, 8);
  if (kronecker2(r) != -kronecker2(mod_reduce(u0, 8))) {
    throw internal_error("sign_walk_type2_unit: unit sign did not flip");
  }
  Int z = detail::unit_scaling_root(trailing, r, pk.with_exponent(k - 1));
  work.apply_local(2, ModMatrix::from_rows({{z}}, pk));
  if (mod_reduce(tcan.content_det() - block.content_det(), 8) == 0) {
    throw internal_error("sign_walk_type2_unit: Type II sign did not flip");
  }
  return {{tcan, r}, work.witness()};
}

// (iv) T1 (+) T2 (same scale) -> (T1*T2 parity) (+) T+: at most one minus
// sign, carried in front.
inline std::pair<std::pair<Block, Block>, Witness> sign_walk_type2_pair(const Block& b1, const Block& b2,
                                                                        unsigned k) {
  if (k < 3) throw precision_error("sign_walk_type2_pair: requires k >= 3");
  if (b1.type != BlockType::kTypeII || b2.type != BlockType::kTypeII) {
    throw precondition_error("sign_walk_type2_pair: needs two Type II blocks");
  }
  PrimePower pk(2, k);
  bool minus1 = mod_reduce(b1.content_det(), 8) == 3;
  bool minus2 = mod_reduce(b2.content_det(), 8) == 3;
  ModMatrix source = direct_sum(ModMatrix::from_rows({{2 * b1.a, b1.b}, {b1.b, 2 * b1.c}}, pk),
                                ModMatrix::from_rows({{2 * b2.a, b2.b}, {b2.b, 2 * b2.c}}, pk));
  Conjugation work(source);
  if (!minus2) {
    // Second block already T+; nothing to move.
    return {{b1, b2}, work.witness()};
  }
  if (!minus1) {
    // (T+, T-): swap the two blocks.
    ModMatrix perm(4, 4, pk);
    for (int i = 0; i < 2; ++i) {
      perm.set(i, 2 + i, -1);
      perm.at(2 + i, i) = 1;
    }
    if (det_mod(perm) != 1) {
      for (int i = 0; i < 4; ++i) perm.set(i, 0, -perm.at(i, 0));
    }
    work.apply(perm);
    auto [f1, w1] = type2_canonical(Block::type2(work.current().at(0, 0) / 2, work.current().at(0, 1),
                                                 work.current().at(1, 1) / 2),
                                    k);
    work.apply_local(0, w1.u());
    auto [f2, w2] = type2_canonical(Block::type2(work.current().at(2, 2) / 2, work.current().at(2, 3),
                                                 work.current().at(3, 3) / 2),
                                    k);
    work.apply_local(2, w2.u());
    return {{f1, f2}, work.witness()};
  }
  // (T-, T-): shear, split off a leading T+, and normalize the remainder.
  work.apply(ModMatrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}}, pk));
  auto [d, w] = block_diagonalize(work.current());
  work.apply(w.u());
  if (d.blocks().size() != 2 || d.blocks()[0].block.type != BlockType::kTypeII ||
      d.blocks()[1].block.type != BlockType::kTypeII || d.blocks()[0].scale != 0 || d.blocks()[1].scale != 0) {
    throw internal_error("sign_walk_type2_pair: unexpected block structure");
  }
  auto [f1, w1] = type2_canonical(d.blocks()[0].block, k);
  work.apply_local(0, w1.u());
  auto [f2, w2] = type2_canonical(d.blocks()[1].block, k);
  work.apply_local(2, w2.u());
  if (!(f1 == Block::type2(1, 1, 2)) || !(f2 == Block::type2(1, 1, 2))) {
    throw internal_error("sign_walk_type2_pair: T- pair did not land on (T+, T+)");
  }
  return {{f1, f2}, work.witness()};
}

namespace detail {

// Lexicographically minimal compartment tuple. Positions carry fixed
// relative scales; the class is pinned by the minus-count parity sigma and
// the walk invariant phi = total oddity + 4 * sum of minus scales (mod 8).
struct CompartmentClass {
  int sigma;  // +1 or -1
  int phi;    // 0..7
};

inline CompartmentClass compartment_class(const std::vector<std::pair<unsigned, Int>>& entries) {
  std::map<unsigned, std::pair<int, int>> scales;  // scale -> (sign, sum)
  for (const auto& [s, u] : entries) {
    auto& [sign, sum] = scales.try_emplace(s, 1, 0).first->second;
    sign *= kronecker2(u);
    sum = (sum + static_cast<int>(mod_reduce(u, 8))) % 8;
  }
  CompartmentClass c{1, 0};
  for (const auto& [s, data] : scales) {
    c.sigma *= data.first;
    c.phi = (c.phi + data.second + (data.first < 0 ? 4 * static_cast<int>(s % 2) : 0)) % 8;
  }
  return c;
}

// Achievable (sign, contribution) pairs for d units at one scale, where
// contribution = unit sum + 4 * scale when the scale sign is minus.
inline std::set<std::pair<int, int>> scale_reachable(int d, unsigned scale) {
  std::set<std::pair<int, int>> cur{{1, 0}};
  for (int i = 0; i < d; ++i) {
    std::set<std::pair<int, int>> next;
    for (auto [sign, sum] : cur) {
      for (int u : {1, 3, 5, 7}) {
        next.insert({sign * kronecker2(u), (sum + u) % 8});
      }
    }
    cur = std::move(next);
  }
  std::set<std::pair<int, int>> out;
  for (auto [sign, sum] : cur) {
    out.insert({sign, (sum + (sign < 0 ? 4 * static_cast<int>(scale % 2) : 0)) % 8});
  }
  return out;
}

inline std::vector<Int> minimal_compartment_tuple(const std::vector<unsigned>& scales, const CompartmentClass& cls) {
  const size_t n = scales.size();
  std::vector<Int> chosen;
  // Accumulated (sign product, phi contribution) of completed scale groups,
  // plus the partial data of the group in progress.
  int done_sign = 1;
  int done_phi = 0;
  int cur_sign = 1;
  int cur_sum = 0;
  auto group_contrib = [](int sign, int sum, unsigned scale) {
    return (sum + (sign < 0 ? 4 * static_cast<int>(scale % 2) : 0)) % 8;
  };
  // Achievable (sign, contrib) pairs over positions pos.., where the group
  // containing pos (if it continues the current scale) starts from the
  // given partial state.
  auto suffix_reachable = [&](size_t pos, int sign_partial, int sum_partial) {
    std::set<std::pair<int, int>> acc;
    size_t i = pos;
    if (pos < n && scales[pos] == scales[pos - 1]) {
      // Finish the open group first.
      size_t end = pos;
      while (end < n && scales[end] == scales[pos]) ++end;
      std::set<std::pair<int, int>> group{{sign_partial, sum_partial}};
      for (size_t t = pos; t < end; ++t) {
        std::set<std::pair<int, int>> next;
        for (auto [sg, sm] : group) {
          for (int u : {1, 3, 5, 7}) next.insert({sg * kronecker2(u), (sm + u) % 8});
        }
        group = std::move(next);
      }
      for (auto [sg, sm] : group) acc.insert({sg, group_contrib(sg, sm, scales[pos])});
      i = end;
    } else {
      acc.insert({sign_partial, group_contrib(sign_partial, sum_partial, scales[pos - 1])});
    }
    while (i < n) {
      size_t end = i;
      while (end < n && scales[end] == scales[i]) ++end;
      auto opts = scale_reachable(static_cast<int>(end - i), scales[i]);
      std::set<std::pair<int, int>> next;
      for (auto [sg, sm] : acc) {
        for (auto [og, os] : opts) next.insert({sg * og, (sm + os) % 8});
      }
      acc = std::move(next);
      i = end;
    }
    return acc;
  };
  for (size_t pos = 0; pos < n; ++pos) {
    if (pos > 0 && scales[pos] != scales[pos - 1]) {
      done_sign *= cur_sign;
      done_phi = (done_phi + group_contrib(cur_sign, cur_sum, scales[pos - 1])) % 8;
      cur_sign = 1;
      cur_sum = 0;
    }
    const int need_sign = cls.sigma * done_sign;
    const int need_phi = ((cls.phi - done_phi) % 8 + 8) % 8;
    bool placed = false;
    for (int u : {1, 3, 5, 7}) {
      auto reach = suffix_reachable(pos + 1, cur_sign * kronecker2(u), (cur_sum + u) % 8);
      if (reach.count({need_sign, need_phi})) {
        chosen.push_back(u);
        cur_sign *= kronecker2(u);
        cur_sum = (cur_sum + u) % 8;
        placed = true;
        break;
      }
    }
    if (!placed) throw internal_error("minimal_compartment_tuple: infeasible class");
  }
  return chosen;
}

// Primitive mod-8 window representation of an odd target by a scaled
// diagonal (relative scales ascending, 0 at the front). Coordinates run
// over {0, 1, 2}, which exhausts the square classes mod 8; an all-even
// pattern is completed by a unit on the first position beyond the window.
inline std::optional<std::vector<Int>> window_representation(const std::vector<std::pair<unsigned, Int>>& entries,
                                                             const Int& target8) {
  size_t w = 0;
  while (w < entries.size() && entries[w].first <= 2 && w < 12) ++w;
  std::vector<Int> coords(w, 0);
  for (;;) {
    Int val = 0;
    bool has_odd = false;
    for (size_t i = 0; i < w; ++i) {
      val += (Int(1) << entries[i].first) * entries[i].second * coords[i] * coords[i];
      if (coords[i] % 2 == 1) has_odd = true;
    }
    if (mod_reduce(val - target8, 8) == 0) {
      std::vector<Int> full(entries.size(), 0);
      for (size_t i = 0; i < w; ++i) full[i] = coords[i];
      if (has_odd) return full;
      if (w < entries.size()) {
        full[w] = 1;
        return full;
      }
    }
    size_t i = w;
    for (; i-- > 0;) {
      if (++coords[i] <= 2) break;
      coords[i] = 0;
    }
    if (i == static_cast<size_t>(-1)) return std::nullopt;
  }
}

}  // namespace detail

// Canonicalize a single compartment (contiguous scaled Type I diagonal with
// consecutive scales): realize the lexicographically minimal tuple of its
// class by peeling target entries with primitive representations.
inline std::pair<std::vector<ScaledBlock>, Witness> canonicalize_compartment_mod(const ModMatrix& segment,
                                                                                 std::vector<ScaledBlock> blocks) {
  const PrimePower& pk = segment.modulus();
  const unsigned k = pk.exponent();
  Conjugation work(segment);
  std::vector<std::pair<unsigned, Int>> entries;
  for (const auto& sb : blocks) {
    if (sb.block.type != BlockType::kTypeI) {
      throw precondition_error("canonicalize_compartment: only Type I entries allowed");
    }
    entries.push_back({sb.scale, sb.block.unit});
  }
  std::vector<unsigned> scales;
  for (const auto& [s, u] : entries) scales.push_back(s);
  detail::CompartmentClass cls = detail::compartment_class(entries);
  std::vector<Int> tuple = detail::minimal_compartment_tuple(scales, cls);

  // Per-position peel targets; the 1 (+) 1 (+) 7 class resists peeling its
  // smallest entry first (the leftover pair closes into a Type II block),
  // so it is realized as (7, 1, 1) and rotated at the end.
  std::vector<Int> targets = tuple;
  std::optional<int> rotate_at;
  int offset = 0;
  for (size_t idx = 0; idx < tuple.size(); ++idx) {
    const unsigned base = scales[idx];
    const unsigned rem_prec = k - base;
    size_t remaining = tuple.size() - idx;
    if (remaining == 3 && scales[idx] == scales[idx + 2] && targets[idx] == 1 && targets[idx + 1] == 1 &&
        targets[idx + 2] == 7) {
      targets[idx] = 7;
      targets[idx + 1] = 1;
      targets[idx + 2] = 1;
      rotate_at = offset;
    }
    if (remaining == 1) {
      Int unit = detail::exact_div(work.current().at(offset, offset), Int(1) << base);
      Int z = detail::unit_scaling_root(unit, targets[idx], pk.with_exponent(rem_prec));
      work.apply_local(offset, ModMatrix::from_rows({{z}}, pk));
      break;
    }
    const Int peel_target = targets[idx];
    // Collect the remaining sub-diagonal, descaled by the current base.
    std::vector<std::pair<unsigned, Int>> sub;
    for (size_t j = idx; j < tuple.size(); ++j) {
      Int entry = work.current().at(offset + static_cast<int>(j - idx), offset + static_cast<int>(j - idx));
      sub.push_back({scales[j] - base, detail::exact_div(entry, Int(1) << scales[j])});
    }
    auto pattern = detail::window_representation(sub, peel_target);
    if (!pattern) throw internal_error("canonicalize_compartment: window search failed");
    // Exact value of the patterned vector, then a unit square correction.
    Int a = 0;
    for (size_t j = 0; j < sub.size(); ++j) a += (Int(1) << sub[j].first) * sub[j].second * (*pattern)[j] * (*pattern)[j];
    PrimePower sub_pk(2, rem_prec);
    Int u = detail::unit_scaling_root(mod_reduce(a, sub_pk.modulus()), peel_target, sub_pk);
    std::vector<Int> rep;
    for (const Int& c : *pattern) rep.push_back(mod_reduce(c * u, sub_pk.modulus()));
    ModMatrix ext = extend_primitive(rep, sub_pk);
    ModMatrix ext_k(ext.rows(), ext.cols(), pk);
    for (int i = 0; i < ext.rows(); ++i) {
      for (int j = 0; j < ext.cols(); ++j) ext_k.at(i, j) = ext.at(i, j);
    }
    work.apply_local(offset, ext_k);
    // Re-diagonalize the touched segment; the lead keeps the least order so
    // it stays in front.
    ModMatrix seg(static_cast<int>(remaining), static_cast<int>(remaining), pk);
    for (size_t i = 0; i < remaining; ++i) {
      for (size_t j = 0; j < remaining; ++j) {
        seg.at(static_cast<int>(i), static_cast<int>(j)) =
            work.current().at(offset + static_cast<int>(i), offset + static_cast<int>(j));
      }
    }
    auto [d, w] = block_diagonalize(seg);
    work.apply_local(offset, w.u());
    if (d.blocks().empty() || d.blocks()[0].scale != base || d.blocks()[0].block.type != BlockType::kTypeI) {
      throw internal_error("canonicalize_compartment: peel lost its lead");
    }
    // The leftover must be Type I; absorb any Type II block with a
    // same-scale unit (possible except in the handled 1,1,7 case).
    bool retry = true;
    while (retry) {
      retry = false;
      std::vector<ScaledBlock> leftover(d.blocks().begin() + 1, d.blocks().end());
      // Sort leftover by (scale, type) with local block permutations.
      auto rank = [](const ScaledBlock& sb) {
        return std::pair<unsigned, int>(sb.scale, sb.block.type == BlockType::kTypeI ? 0 : 1);
      };
      bool moved = true;
      while (moved) {
        moved = false;
        int pos = offset + 1;
        for (size_t i = 0; i + 1 < leftover.size(); ++i) {
          if (rank(leftover[i + 1]) < rank(leftover[i])) {
            int a_dim = leftover[i].block.dim();
            int b_dim = leftover[i + 1].block.dim();
            ModMatrix perm(a_dim + b_dim, a_dim + b_dim, pk);
            for (int r = 0; r < a_dim; ++r) perm.set(r, b_dim + r, -1);
            for (int r = 0; r < b_dim; ++r) perm.at(a_dim + r, r) = 1;
            work.apply_local(pos, perm);
            std::swap(leftover[i], leftover[i + 1]);
            moved = true;
          }
          pos += leftover[i].block.dim();
        }
      }
      // Refresh leftover contents from the matrix.
      int pos = offset + 1;
      for (auto& sb : leftover) {
        Int scale_val = Int(1) << sb.scale;
        if (sb.block.type == BlockType::kTypeI) {
          sb.block.unit = detail::exact_div(work.current().at(pos, pos), scale_val);
        } else {
          sb.block.a = detail::exact_div(work.current().at(pos, pos), 2 * scale_val);
          sb.block.b = detail::exact_div(work.current().at(pos, pos + 1), scale_val);
          sb.block.c = detail::exact_div(work.current().at(pos + 1, pos + 1), 2 * scale_val);
        }
        pos += sb.block.dim();
      }
      // Absorb Type II leftovers.
      pos = offset + 1;
      for (size_t i = 0; i < leftover.size(); ++i) {
        if (leftover[i].block.type == BlockType::kTypeII) {
          if (i == 0 || leftover[i - 1].scale != leftover[i].scale ||
              leftover[i - 1].block.type != BlockType::kTypeI) {
            throw internal_error("canonicalize_compartment: stranded Type II leftover");
          }
          int unit_pos = pos - 1;
          unsigned s = leftover[i].scale;
          auto [tcan, tw] = type2_canonical(leftover[i].block, k - s);
          ModMatrix tlift(2, 2, pk);
          for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) tlift.at(r, c) = tw.u().at(r, c);
          }
          work.apply_local(pos, tlift);
          Int tau = detail::exact_div(work.current().at(unit_pos, unit_pos), Int(1) << s);
          auto [units, aw] = absorb_type2_dim3(tau, tcan, k - s);
          ModMatrix alift(3, 3, pk);
          for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) alift.at(r, c) = aw.u().at(r, c);
          }
          work.apply_local(unit_pos, alift);
          retry = true;
          break;
        }
        pos += leftover[i].block.dim();
      }
      if (!retry) {
        // Rebuild the block view of the remaining segment for the next peel.
        std::vector<ScaledBlock> rebuilt{d.blocks()[0]};
        for (const auto& sb : leftover) rebuilt.push_back(sb);
        d = BlockDiagForm(pk, std::move(rebuilt), 0);
      } else {
        // Re-derive the block structure of the whole remaining segment.
        ModMatrix seg2(static_cast<int>(remaining), static_cast<int>(remaining), pk);
        for (size_t i = 0; i < remaining; ++i) {
          for (size_t j = 0; j < remaining; ++j) {
            seg2.at(static_cast<int>(i), static_cast<int>(j)) =
                work.current().at(offset + static_cast<int>(i), offset + static_cast<int>(j));
          }
        }
        auto [d2, w2] = block_diagonalize(seg2);
        work.apply_local(offset, w2.u());
        d = d2;
      }
    }
    offset += 1;
  }
  if (rotate_at) {
    // The trailing trio reads (7, 1, 1); rotate it to (1, 1, 7).
    ModMatrix rot(3, 3, pk);
    rot.at(0, 2) = 1;
    rot.at(1, 0) = 1;
    rot.at(2, 1) = 1;
    work.apply_local(*rotate_at, rot);
  }
  std::vector<ScaledBlock> out_blocks;
  for (size_t j = 0; j < tuple.size(); ++j) {
    out_blocks.push_back({scales[j], Block::type1(tuple[j])});
    if (work.current().at(static_cast<int>(j), static_cast<int>(j)) !=
        mod_reduce((Int(1) << scales[j]) * tuple[j], pk.modulus())) {
      throw internal_error("canonicalize_compartment: final diagonal mismatch");
    }
  }
  return {out_blocks, work.witness()};
}

// Spec-level wrapper: canonicalize a compartment given as scaled units.
inline std::pair<std::vector<ScaledBlock>, Witness> canonicalize_compartment(
    const std::vector<std::pair<unsigned, Int>>& scaled_units, unsigned k) {
  PrimePower pk(2, k);
  std::vector<ScaledBlock> blocks;
  for (const auto& [s, u] : scaled_units) blocks.push_back({s, Block::type1(u)});
  BlockDiagForm d(pk, blocks, 0);
  return canonicalize_compartment_mod(d.assemble(), blocks);
}

// Table-1 canonicalization of three odd units at one scale.
inline std::pair<std::array<Int, 3>, Witness> compartment_dim3(const Int& t1, const Int& t2, const Int& t3,
                                                               unsigned k) {
  auto [blocks, w] =
      canonicalize_compartment({{0u, mod_reduce(t1, Int(1) << k)}, {0u, mod_reduce(t2, Int(1) << k)},
                                {0u, mod_reduce(t3, Int(1) << k)}},
                               k);
  return {std::array<Int, 3>{blocks[0].block.unit, blocks[1].block.unit, blocks[2].block.unit}, std::move(w)};
}

// Canonicalization for odd p: diagonalize, sort scales ascending, then
// sweep each scale group with two-entry normalizations so every unit
// becomes 1 except possibly a trailing sigma_p.
inline std::pair<CanonicalForm, Witness> canonicalize_odd(const IntQuadForm& q, const Int& p, unsigned k) {
  if (p == 2 || !is_probable_prime(p)) throw precondition_error("canonicalize_odd: p must be an odd prime");
  Int det = q.det();
  if (det == 0) throw degenerate_error("canonicalize_odd: determinant is zero");
  if (k <= ord_p(det, p)) throw precision_error("canonicalize_odd: requires k > ord_p(det)");
  PrimePower pk(p, k);
  Conjugation work(ModMatrix::from_form(q, pk));
  auto [d0, w0] = block_diagonalize(work.current());
  work.apply(w0.u());
  if (d0.zero_dim() != 0) throw internal_error("canonicalize_odd: zero dimensions in nondegenerate form");
  auto [d1, w1] = sort_blocks(d0);
  work.apply(w1.u());
  std::vector<ScaledBlock> blocks = d1.blocks();
  const int n = q.dim();
  for (int start = 0; start < n;) {
    unsigned scale = blocks[static_cast<size_t>(start)].scale;
    int end = start;
    while (end < n && blocks[static_cast<size_t>(end)].scale == scale) ++end;
    PrimePower rem_pk = pk.with_exponent(k - scale);
    Int scale_val = boost::multiprecision::pow(p, scale);
    for (int j = start; j < end; ++j) {
      if (j + 1 < end) {
        Int u1 = detail::exact_div(work.current().at(j, j), scale_val);
        Int u2 = detail::exact_div(work.current().at(j + 1, j + 1), scale_val);
        auto [pair, w] = canp2_pair(u1, u2, rem_pk);
        ModMatrix lift(2, 2, pk);
        for (int r = 0; r < 2; ++r) {
          for (int c = 0; c < 2; ++c) lift.at(r, c) = w.u().at(r, c);
        }
        work.apply_local(j, lift);
      } else {
        Int u1 = detail::exact_div(work.current().at(j, j), scale_val);
        auto [blk, w] = can_block(Block::type1(u1), rem_pk);
        ModMatrix lift(1, 1, pk);
        lift.at(0, 0) = w.u().at(0, 0);
        work.apply_local(j, lift);
      }
    }
    start = end;
  }
  std::vector<ScaledBlock> out;
  for (int j = 0; j < n; ++j) {
    unsigned scale = blocks[static_cast<size_t>(j)].scale;
    Int unit = detail::exact_div(work.current().at(j, j), boost::multiprecision::pow(p, scale));
    out.push_back({scale, Block::type1(unit)});
  }
  BlockDiagForm form(pk, std::move(out), 0);
  if (!(form.assemble() == work.current())) throw internal_error("canonicalize_odd: assembly mismatch");
  // Canonical shape: scales ascending; units all 1 except possibly a
  // trailing sigma_p per scale group.
  Int sigma = sigma_p(p);
  for (size_t j = 0; j < form.blocks().size(); ++j) {
    const Int& u = form.blocks()[j].block.unit;
    bool last_of_scale =
        j + 1 == form.blocks().size() || form.blocks()[j + 1].scale != form.blocks()[j].scale;
    if (u != 1 && !(last_of_scale && u == sigma)) throw internal_error("canonicalize_odd: shape check failed");
  }
  return {CanonicalForm{std::move(form)}, work.witness()};
}

namespace detail {

// Block-level pipeline state for the p = 2 canonicalization.
struct TwoAdicPipeline {
  Conjugation work;
  std::vector<ScaledBlock> blocks;
  PrimePower pk;

  TwoAdicPipeline(ModMatrix start, std::vector<ScaledBlock> layout)
      : work(std::move(start)), blocks(std::move(layout)), pk(work.current().modulus()) {}

  int offset_of(size_t index) const {
    int off = 0;
    for (size_t i = 0; i < index; ++i) off += blocks[i].block.dim();
    return off;
  }

  // Apply a small witness computed at the descaled precision 2^(k-s).
  void apply_lifted(int offset, const ModMatrix& small) {
    ModMatrix lift(small.rows(), small.cols(), pk);
    for (int i = 0; i < small.rows(); ++i) {
      for (int j = 0; j < small.cols(); ++j) lift.at(i, j) = small.at(i, j);
    }
    work.apply_local(offset, lift);
  }

  // Re-read block contents from the matrix (structure stays fixed).
  void sync() {
    int off = 0;
    for (auto& sb : blocks) {
      Int scale_val = Int(1) << sb.scale;
      if (sb.block.type == BlockType::kTypeI) {
        sb.block.unit = exact_div(work.current().at(off, off), scale_val);
      } else {
        sb.block.a = exact_div(work.current().at(off, off), 2 * scale_val);
        sb.block.b = exact_div(work.current().at(off, off + 1), scale_val);
        sb.block.c = exact_div(work.current().at(off + 1, off + 1), 2 * scale_val);
      }
      off += sb.block.dim();
    }
  }

  // Stable sort by (scale, Type I first) with local block permutations.
  void sort() {
    auto rank = [](const ScaledBlock& sb) {
      return std::pair<unsigned, int>(sb.scale, sb.block.type == BlockType::kTypeI ? 0 : 1);
    };
    bool moved = true;
    while (moved) {
      moved = false;
      for (size_t i = 0; i + 1 < blocks.size(); ++i) {
        if (rank(blocks[i + 1]) < rank(blocks[i])) {
          int a = blocks[i].block.dim();
          int b = blocks[i + 1].block.dim();
          ModMatrix perm(a + b, a + b, pk);
          for (int r = 0; r < a; ++r) perm.set(r, b + r, -1);
          for (int r = 0; r < b; ++r) perm.at(a + r, r) = 1;
          work.apply_local(offset_of(i), perm);
          std::swap(blocks[i], blocks[i + 1]);
          moved = true;
        }
      }
    }
    sync();
    // A negated basis vector flips the off-diagonal sign of a Type II
    // block; restore b = 1 on canonical blocks.
    int off = 0;
    for (auto& sb : blocks) {
      if (sb.block.type == BlockType::kTypeII && mod_reduce(sb.block.b + 1, Int(1) << (pk.exponent() - sb.scale)) == 0) {
        ModMatrix fix(2, 2, pk);
        fix.at(0, 0) = 1;
        fix.set(1, 1, -1);
        work.apply_local(off, fix);
      }
      off += sb.block.dim();
    }
    sync();
  }
};

}  // namespace detail

// Canonicalization at p = 2 (requires k >= ord_2(det) + 3): block
// diagonalize, normalize blocks, absorb mixed scales, walk signs along each
// train to the canonical pattern, normalize Type II runs, and realize the
// minimal tuple of every compartment.
inline std::pair<CanonicalForm, Witness> canonicalize_two(const IntQuadForm& q, unsigned k) {
  Int det = q.det();
  if (det == 0) throw degenerate_error("canonicalize_two: determinant is zero");
  if (k < ord_p(det, 2) + 3) throw precision_error("canonicalize_two: requires k >= ord_2(det) + 3");
  PrimePower pk(2, k);
  auto [d0, w0] = block_diagonalize(q, pk);
  if (d0.zero_dim() != 0) throw internal_error("canonicalize_two: zero dimensions in nondegenerate form");
  detail::TwoAdicPipeline pipe(ModMatrix::from_form(q, pk), d0.blocks());
  pipe.work.apply(w0.u());
  pipe.sync();

  // Stage 1: canonicalize each block in place (units to their mod-8
  // residue, Type II blocks to T+ or T-).
  auto normalize_blocks = [&] {
    int off = 0;
    for (auto& sb : pipe.blocks) {
      unsigned rem = pipe.pk.exponent() - sb.scale;
      if (sb.block.type == BlockType::kTypeI) {
        Int target = mod_reduce(sb.block.unit, 8);
        if (sb.block.unit != target) {
          Int z = detail::unit_scaling_root(sb.block.unit, target, pipe.pk.with_exponent(rem));
          ModMatrix v(1, 1, pipe.pk.with_exponent(rem));
          v.at(0, 0) = z;
          pipe.apply_lifted(off, v);
        }
      } else {
        Block canon = mod_reduce(sb.block.content_det(), 8) == 3 ? Block::type2(1, 1, 1) : Block::type2(1, 1, 2);
        if (!(sb.block == canon)) {
          auto [blk, w] = type2_canonical(sb.block, rem);
          pipe.apply_lifted(off, w.u());
        }
      }
      off += sb.block.dim();
    }
    pipe.sync();
  };
  normalize_blocks();
  pipe.sort();

  // Stage 2: de-mix scales holding both types by absorbing each Type II
  // block into three units with a same-scale Type I partner.
  for (;;) {
    bool mixed = false;
    for (size_t i = 0; i + 1 < pipe.blocks.size(); ++i) {
      if (pipe.blocks[i].block.type == BlockType::kTypeI && pipe.blocks[i + 1].block.type == BlockType::kTypeII &&
          pipe.blocks[i].scale == pipe.blocks[i + 1].scale) {
        unsigned s = pipe.blocks[i].scale;
        auto [units, w] = absorb_type2_dim3(pipe.blocks[i].block.unit, pipe.blocks[i + 1].block,
                                            pipe.pk.exponent() - s);
        pipe.apply_lifted(pipe.offset_of(i), w.u());
        pipe.blocks[i + 1] = {s, Block::type1(1)};
        pipe.blocks.insert(pipe.blocks.begin() + static_cast<long>(i) + 2, {s, Block::type1(1)});
        pipe.sync();
        mixed = true;
        break;
      }
    }
    if (!mixed) break;
    normalize_blocks();
    pipe.sort();
  }

  // Stage 3: constituent structure. Type I scales group into compartments;
  // each Type II scale stands alone.
  TwoSymbol symbol = two_symbol_of_blocks(BlockDiagForm(pk, pipe.blocks, 0));
  CanonicalTwoSymbol canonical = canonical_two_symbol(symbol);
  struct Constituent {
    bool type1;
    std::vector<unsigned> scales;  // compartment scale range or one scale
  };
  auto build_constituents = [&] {
    std::vector<Constituent> cs;
    for (const auto& e : symbol.entries) {
      if (e.type == BlockType::kTypeI) {
        if (!cs.empty() && cs.back().type1 && cs.back().scales.back() + 1 == e.scale) {
          cs.back().scales.push_back(e.scale);
        } else {
          cs.push_back({true, {e.scale}});
        }
      } else {
        cs.push_back({false, {e.scale}});
      }
    }
    return cs;
  };
  std::vector<Constituent> constituents = build_constituents();
  auto constituent_sign = [&](const Constituent& c) {
    int sign = 1;
    for (const auto& sb : pipe.blocks) {
      for (unsigned s : c.scales) {
        if (sb.scale == s) sign *= kronecker2(sb.block.content_det());
      }
    }
    return sign;
  };
  auto canonical_sign_at = [&](unsigned scale) {
    for (const auto& e : canonical.entries) {
      if (e.scale == scale) return e.sign;
    }
    throw internal_error("canonicalize_two: scale missing from canonical symbol");
  };
  auto target_sign = [&](const Constituent& c) {
    int sign = 1;
    for (unsigned s : c.scales) sign *= canonical_sign_at(s);
    return sign;
  };

  // Stage 4: walk minus signs between adjacent constituents of each train,
  // highest first, so every constituent reaches its canonical sign.
  TrainStructure st = partition(symbol);
  auto constituent_train = [&](const Constituent& c) {
    for (size_t t = 0; t < st.trains.size(); ++t) {
      if (st.trains[t].contains(c.scales.front())) return t;
    }
    throw internal_error("canonicalize_two: constituent outside every train");
  };
  auto first_block_at = [&](unsigned scale) -> size_t {
    for (size_t i = 0; i < pipe.blocks.size(); ++i) {
      if (pipe.blocks[i].scale == scale) return i;
    }
    throw internal_error("canonicalize_two: no block at scale");
  };
  auto last_block_at = [&](unsigned scale) -> size_t {
    size_t found = pipe.blocks.size();
    for (size_t i = 0; i < pipe.blocks.size(); ++i) {
      if (pipe.blocks[i].scale == scale) found = i;
    }
    if (found == pipe.blocks.size()) throw internal_error("canonicalize_two: no block at scale");
    return found;
  };
  auto flip_pair = [&](const Constituent& low, const Constituent& high) {
    unsigned a = low.scales.back();
    unsigned b = high.scales.front();
    size_t ia = last_block_at(a);
    size_t ib = first_block_at(b);
    const Block& ba = pipe.blocks[ia].block;
    const Block& bb = pipe.blocks[ib].block;
    unsigned rem = pipe.pk.exponent() - a;
    if (ba.type == BlockType::kTypeI && bb.type == BlockType::kTypeI) {
      if (b != a + 2) throw internal_error("canonicalize_two: Type I pair is not across a gap");
      auto [vals, w] = sign_walk_unit_gap_unit(ba.unit, bb.unit, rem);
      pipe.apply_lifted(pipe.offset_of(ia), w.u());
    } else if (ba.type == BlockType::kTypeI) {
      if (b != a + 1) throw internal_error("canonicalize_two: adjacent walk expected");
      auto [vals, w] = sign_walk_unit_type2(ba.unit, bb, rem);
      pipe.apply_lifted(pipe.offset_of(ia), w.u());
    } else if (bb.type == BlockType::kTypeI) {
      if (b != a + 1) throw internal_error("canonicalize_two: adjacent walk expected");
      auto [vals, w] = sign_walk_type2_unit(ba, bb.unit, rem);
      pipe.apply_lifted(pipe.offset_of(ia), w.u());
    } else {
      throw internal_error("canonicalize_two: cannot walk between two Type II constituents");
    }
    pipe.sync();
  };
  for (size_t t = 0; t < st.trains.size(); ++t) {
    std::vector<size_t> members;
    for (size_t c = 0; c < constituents.size(); ++c) {
      if (constituent_train(constituents[c]) == t) members.push_back(c);
    }
    for (size_t j = members.size(); j-- > 1;) {
      const Constituent& cur = constituents[members[j]];
      if (constituent_sign(cur) != target_sign(cur)) {
        flip_pair(constituents[members[j - 1]], cur);
      }
    }
    if (!members.empty()) {
      const Constituent& head = constituents[members.front()];
      if (constituent_sign(head) != target_sign(head)) {
        throw internal_error("canonicalize_two: train parity mismatch after walking");
      }
    }
  }

  // Stage 5: normalize every Type II run to at most one leading T-.
  for (const Constituent& c : constituents) {
    if (c.type1) continue;
    unsigned s = c.scales.front();
    std::vector<size_t> run;
    for (size_t i = 0; i < pipe.blocks.size(); ++i) {
      if (pipe.blocks[i].scale == s && pipe.blocks[i].block.type == BlockType::kTypeII) run.push_back(i);
    }
    unsigned rem = pipe.pk.exponent() - s;
    for (size_t j = run.size(); j-- > 1;) {
      auto [pair, w] = sign_walk_type2_pair(pipe.blocks[run[j - 1]].block, pipe.blocks[run[j]].block, rem);
      pipe.apply_lifted(pipe.offset_of(run[j - 1]), w.u());
      pipe.sync();
    }
  }
  normalize_blocks();

  // Stage 6: realize the minimal tuple of each compartment.
  for (const Constituent& c : constituents) {
    if (!c.type1) continue;
    std::vector<size_t> members;
    for (size_t i = 0; i < pipe.blocks.size(); ++i) {
      for (unsigned s : c.scales) {
        if (pipe.blocks[i].scale == s) members.push_back(i);
      }
    }
    unsigned base = c.scales.front();
    unsigned rem = pipe.pk.exponent() - base;
    PrimePower seg_pk(2, rem);
    int dims = static_cast<int>(members.size());
    ModMatrix seg(dims, dims, seg_pk);
    std::vector<ScaledBlock> seg_blocks;
    for (int i = 0; i < dims; ++i) {
      const ScaledBlock& sb = pipe.blocks[members[static_cast<size_t>(i)]];
      seg.set(i, i, (Int(1) << (sb.scale - base)) * sb.block.unit);
      seg_blocks.push_back({sb.scale - base, sb.block});
    }
    auto [canon_blocks, w] = canonicalize_compartment_mod(seg, seg_blocks);
    pipe.apply_lifted(pipe.offset_of(members.front()), w.u());
    pipe.sync();
  }

  // Final assembly and class check.
  BlockDiagForm result(pk, pipe.blocks, 0);
  if (!(result.assemble() == pipe.work.current())) throw internal_error("canonicalize_two: assembly mismatch");
  if (!(canonical_two_symbol(two_symbol_of_blocks(result)) == canonical)) {
    throw internal_error("canonicalize_two: canonical symbol drifted");
  }
  return {CanonicalForm{std::move(result)}, pipe.work.witness()};
}

// Dispatch on p with the default precision ord_p(det) + k_p.
inline std::pair<CanonicalForm, Witness> canonicalize(const IntQuadForm& q, const Int& p,
                                                      std::optional<unsigned> k = std::nullopt) {
  Int det = q.det();
  if (det == 0) throw degenerate_error("canonicalize: determinant is zero");
  unsigned kp = (p == 2) ? 3u : 1u;
  unsigned kk = k.value_or(ord_p(det, p) + kp);
  if (p == 2) return canonicalize_two(q, kk);
  return canonicalize_odd(q, p, kk);
}

struct Inequivalence {
  std::string reason;
};

// Witness W with W' q1 W = q2 (mod p^k) via both canonicalizations, or the
// first differing symbol component.
inline std::variant<Witness, Inequivalence> transform_between(const IntQuadForm& q1, const IntQuadForm& q2,
                                                              const Int& p,
                                                              std::optional<unsigned> k = std::nullopt) {
  Int det1 = q1.det();
  Int det2 = q2.det();
  if (det1 == 0 || det2 == 0) throw degenerate_error("transform_between: degenerate input");
  unsigned kp = (p == 2) ? 3u : 1u;
  unsigned kk = k.value_or(std::max(ord_p(det1, p), ord_p(det2, p)) + kp);
  if (q1.dim() != q2.dim()) return Inequivalence{"dimensions differ"};
  auto [c1, w1] = canonicalize(q1, p, kk);
  auto [c2, w2] = canonicalize(q2, p, kk);
  if (!(c1 == c2)) {
    std::ostringstream reason;
    if (p == 2) {
      CanonicalTwoSymbol s1 = canonical_two_symbol(two_symbol(q1));
      CanonicalTwoSymbol s2 = canonical_two_symbol(two_symbol(q2));
      reason << "canonical 2-symbols differ: " << s1.to_string() << " vs " << s2.to_string();
    } else {
      PSymbolOdd s1 = p_symbol(q1, p);
      PSymbolOdd s2 = p_symbol(q2, p);
      reason << "p-symbols differ: " << s1.to_string() << " vs " << s2.to_string();
    }
    return Inequivalence{reason.str()};
  }
  ModMatrix u = w1.u() * inverse_mod(w2.u());
  return Witness(w1.source(), w2.source(), u);
}

}  // namespace padiq
