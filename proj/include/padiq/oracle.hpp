#pragma once

// Brute-force ground truth on tiny universes: full GL_n(Z/p^k)
// enumeration, orbit searches for equivalence witnesses, and exhaustive
// primitive-representation scans.

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "padiq/matrix.hpp"

namespace padiq {

// |GL_n(Z/p^k)| = p^{n^2 (k-1)} * prod_{i<n} (p^n - p^i)
inline Int gl_order(int n, const PrimePower& pk) {
  Int order = boost::multiprecision::pow(pk.prime(), static_cast<unsigned>(n) * n * (pk.exponent() - 1));
  Int pn = boost::multiprecision::pow(pk.prime(), static_cast<unsigned>(n));
  Int pi = 1;
  for (int i = 0; i < n; ++i) {
    order *= pn - pi;
    pi *= pk.prime();
  }
  return order;
}

// Streams every invertible n x n matrix over Z/p^k exactly once, in
// row-major counter order over the candidate entries.
class GlEnumerator {
 public:
  GlEnumerator(int n, const PrimePower& pk, std::uint64_t max_candidates = (1u << 26))
      : n_(n), pk_(pk), current_(n, n, pk) {
    double total = 1;
    for (int i = 0; i < n * n; ++i) total *= static_cast<double>(pk.modulus().convert_to<std::uint64_t>());
    if (total > static_cast<double>(max_candidates)) {
      throw universe_error("GlEnumerator: candidate space too large");
    }
    counters_.assign(static_cast<size_t>(n) * n, 0);
    done_ = false;
    if (!is_invertible(materialize())) advance();
  }

  bool done() const { return done_; }
  const ModMatrix& value() const { return current_; }

  void advance() {
    while (!done_) {
      if (!increment()) {
        done_ = true;
        return;
      }
      if (is_invertible(materialize())) return;
    }
  }

 private:
  bool increment() {
    std::uint64_t m = pk_.modulus().convert_to<std::uint64_t>();
    for (size_t i = counters_.size(); i-- > 0;) {
      if (++counters_[i] < m) return true;
      counters_[i] = 0;
    }
    return false;
  }

  const ModMatrix& materialize() {
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) current_.at(i, j) = counters_[static_cast<size_t>(i) * n_ + j];
    }
    return current_;
  }

  int n_;
  PrimePower pk_;
  ModMatrix current_;
  std::vector<std::uint64_t> counters_;
  bool done_;
};

inline std::vector<ModMatrix> enumerate_gl(int n, const PrimePower& pk) {
  std::vector<ModMatrix> out;
  for (GlEnumerator e(n, pk); !e.done(); e.advance()) out.push_back(e.value());
  return out;
}

namespace oracle_detail {

// Compact fixed-size matrices over a small modulus, for fast orbit walks.
struct SmallForm {
  int n;
  std::uint64_t m;
  std::array<std::uint32_t, 9> a{};  // row-major, n <= 3

  std::uint32_t& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  std::uint32_t at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

  std::uint64_t key() const {
    std::uint64_t k = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) k = k * m + at(i, j);
    }
    return k;
  }
};

struct SmallMat {
  int n;
  std::uint64_t m;
  std::array<std::uint32_t, 9> a{};

  std::uint32_t& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  std::uint32_t at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }

  static SmallMat identity(int n, std::uint64_t m) {
    SmallMat s{n, m, {}};
    for (int i = 0; i < n; ++i) s.at(i, i) = 1;
    return s;
  }
};

inline SmallForm conjugate(const SmallForm& q, const SmallMat& u) {
  // u' * q * u with 64-bit accumulation; safe for m <= 2^16 and n <= 3.
  SmallForm r{q.n, q.m, {}};
  for (int i = 0; i < q.n; ++i) {
    for (int j = 0; j < q.n; ++j) {
      std::uint64_t acc = 0;
      for (int s = 0; s < q.n; ++s) {
        std::uint64_t row = 0;
        for (int t = 0; t < q.n; ++t) row += static_cast<std::uint64_t>(q.at(s, t)) * u.at(t, j) % q.m;
        acc += static_cast<std::uint64_t>(u.at(s, i)) * (row % q.m) % q.m;
      }
      r.at(i, j) = static_cast<std::uint32_t>(acc % q.m);
    }
  }
  return r;
}

// Generators of GL_n(Z/p^k): transvections I +- E_ij and unit scalings of
// the first coordinate. They generate the full group over a local ring.
inline std::vector<SmallMat> gl_generators(int n, const PrimePower& pk) {
  std::uint64_t m = pk.modulus().convert_to<std::uint64_t>();
  std::uint64_t p = pk.prime().convert_to<std::uint64_t>();
  std::vector<SmallMat> gens;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      SmallMat t = SmallMat::identity(n, m);
      t.at(i, j) = 1;
      gens.push_back(t);
      SmallMat t2 = SmallMat::identity(n, m);
      t2.at(i, j) = static_cast<std::uint32_t>(m - 1);
      gens.push_back(t2);
    }
  }
  for (std::uint64_t u = 2; u < m; ++u) {
    if (u % p == 0) continue;
    SmallMat s = SmallMat::identity(n, m);
    s.at(0, 0) = static_cast<std::uint32_t>(u);
    gens.push_back(s);
  }
  return gens;
}

inline SmallForm to_small(const ModMatrix& q) {
  SmallForm s{q.rows(), q.modulus().modulus().convert_to<std::uint64_t>(), {}};
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) s.at(i, j) = q.at(i, j).convert_to<std::uint32_t>();
  }
  return s;
}

}  // namespace oracle_detail

// Orbit of a symmetric matrix under GL_n(Z/p^k), walked breadth-first over
// group generators; visit() sees every orbit member exactly once. Returns
// the generator-trail map for witness reconstruction.
class OrbitWalker {
 public:
  OrbitWalker(const ModMatrix& q, std::uint64_t max_orbit = (1u << 22))
      : pk_(q.modulus()), gens_(oracle_detail::gl_generators(q.rows(), q.modulus())) {
    if (q.rows() > 3 || q.modulus().modulus() > 64) {
      throw universe_error("OrbitWalker: universe bounds exceeded");
    }
    oracle_detail::SmallForm start = oracle_detail::to_small(q);
    parents_[start.key()] = {start.key(), -1};
    std::deque<oracle_detail::SmallForm> frontier{start};
    while (!frontier.empty()) {
      oracle_detail::SmallForm cur = frontier.front();
      frontier.pop_front();
      for (size_t g = 0; g < gens_.size(); ++g) {
        oracle_detail::SmallForm next = oracle_detail::conjugate(cur, gens_[g]);
        auto [it, inserted] = parents_.try_emplace(next.key(), std::pair<std::uint64_t, int>{cur.key(), static_cast<int>(g)});
        if (inserted) {
          if (parents_.size() > max_orbit) throw universe_error("OrbitWalker: orbit too large");
          frontier.push_back(next);
        }
      }
    }
  }

  bool contains(const ModMatrix& q2) const {
    return parents_.count(oracle_detail::to_small(q2).key()) > 0;
  }

  size_t size() const { return parents_.size(); }

  // Product of generators mapping the start form to the given orbit member.
  ModMatrix witness_to(const ModMatrix& q2) const {
    std::uint64_t key = oracle_detail::to_small(q2).key();
    std::vector<int> trail;
    for (;;) {
      auto it = parents_.find(key);
      if (it == parents_.end()) throw internal_error("OrbitWalker: member not in orbit");
      if (it->second.second < 0) break;
      trail.push_back(it->second.second);
      key = it->second.first;
    }
    ModMatrix u = ModMatrix::identity(gens_[0].n, pk_);
    for (auto g = trail.rbegin(); g != trail.rend(); ++g) {
      ModMatrix gm(gens_[0].n, gens_[0].n, pk_);
      for (int i = 0; i < gens_[0].n; ++i) {
        for (int j = 0; j < gens_[0].n; ++j) gm.at(i, j) = gens_[static_cast<size_t>(*g)].at(i, j);
      }
      u = u * gm;
    }
    return u;
  }

 private:
  PrimePower pk_;
  std::vector<oracle_detail::SmallMat> gens_;
  std::unordered_map<std::uint64_t, std::pair<std::uint64_t, int>> parents_;
};

// A witness U with U' q1 U = q2, or nullopt after exhausting the group.
// Scans the full enumeration on the smallest universes and switches to a
// generator-driven orbit walk when the scan would be too large.
inline std::optional<ModMatrix> brute_equivalent(const ModMatrix& q1, const ModMatrix& q2) {
  if (!(q1.modulus() == q2.modulus()) || q1.rows() != q2.rows()) {
    throw precondition_error("brute_equivalent: incompatible inputs");
  }
  double candidates = 1;
  for (int i = 0; i < q1.rows() * q1.rows(); ++i) {
    candidates *= q1.modulus().modulus().convert_to<double>();
  }
  if (candidates <= static_cast<double>(1u << 22)) {
    for (GlEnumerator e(q1.rows(), q1.modulus()); !e.done(); e.advance()) {
      if (q1.congruent(e.value()) == q2) return e.value();
    }
    return std::nullopt;
  }
  OrbitWalker orbit(q1);
  if (!orbit.contains(q2)) return std::nullopt;
  ModMatrix u = orbit.witness_to(q2);
  if (!(q1.congruent(u) == q2)) throw internal_error("brute_equivalent: witness reconstruction failed");
  return u;
}

// First primitive x with x' q x = t (mod p^k) in counter order, or nullopt.
// Small universes run on machine words.
inline std::optional<std::vector<Int>> brute_represent(const ModMatrix& q, const Int& t) {
  const Int& m = q.modulus().modulus();
  const int n = q.rows();
  double candidates = 1;
  for (int i = 0; i < n; ++i) candidates *= m.convert_to<double>();
  if (candidates > static_cast<double>(1u << 24)) {
    throw universe_error("brute_represent: universe too large");
  }
  Int target = mod_reduce(t, m);
  if (m <= 1024 && n <= 4) {
    const std::uint64_t mm = m.convert_to<std::uint64_t>();
    const std::uint64_t p = q.modulus().prime().convert_to<std::uint64_t>();
    const std::uint64_t tt = target.convert_to<std::uint64_t>();
    std::array<std::uint64_t, 16> qe{};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) qe[static_cast<size_t>(i * n + j)] = q.at(i, j).convert_to<std::uint64_t>();
    }
    std::array<std::uint64_t, 4> x{};
    for (;;) {
      bool primitive = false;
      for (int i = 0; i < n; ++i) {
        if (x[static_cast<size_t>(i)] % p != 0) primitive = true;
      }
      if (primitive) {
        std::uint64_t val = 0;
        for (int i = 0; i < n; ++i) {
          std::uint64_t row = 0;
          for (int j = 0; j < n; ++j) row += qe[static_cast<size_t>(i * n + j)] * x[static_cast<size_t>(j)] % mm;
          val += x[static_cast<size_t>(i)] * (row % mm) % mm;
        }
        if (val % mm == tt) {
          std::vector<Int> out;
          for (int i = 0; i < n; ++i) out.push_back(Int(x[static_cast<size_t>(i)]));
          return out;
        }
      }
      int i = n;
      while (i-- > 0) {
        if (++x[static_cast<size_t>(i)] < mm) break;
        x[static_cast<size_t>(i)] = 0;
      }
      if (i < 0) return std::nullopt;
    }
  }
  std::vector<Int> x(static_cast<size_t>(n), 0);
  for (;;) {
    if (is_primitive(x, q.modulus())) {
      Int val = 0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) val += x[static_cast<size_t>(i)] * q.at(i, j) * x[static_cast<size_t>(j)];
      }
      if (mod_reduce(val, m) == target) return x;
    }
    size_t i = x.size();
    for (; i-- > 0;) {
      if (++x[i] < m) break;
      x[i] = 0;
    }
    if (i == static_cast<size_t>(-1)) return std::nullopt;
  }
}

}  // namespace padiq
