#pragma once

// Exact scalar arithmetic over Z and Z/p^k: p-adic orders and coprime
// parts, Legendre/Kronecker symbols, p-signs, integer symbols, modular
// square roots, smallest non-residues and non-residue sum pairs.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include <boost/multiprecision/cpp_int.hpp>

namespace padiq {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;
using Rng = std::mt19937_64;

// Retry budget for Las Vegas subroutines (per-round failure <= 1/3).
inline constexpr int kRetryBudget = 64;

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Caller violated a documented precondition (wrong parity, non-prime p, ...).
struct precondition_error : error {
  using error::error;
};
struct not_invertible_error : error {
  using error::error;
};
struct degenerate_error : error {
  using error::error;
};
struct precision_error : error {
  using error::error;
};
struct retries_exhausted_error : error {
  using error::error;
};
struct universe_error : error {
  using error::error;
};
// A self-check that must hold by construction failed; never expected.
struct internal_error : error {
  using error::error;
};

inline Int mod_reduce(const Int& a, const Int& m) {
  Int r = a % m;
  if (r < 0) r += m;
  return r;
}

inline Int pow_mod(const Int& base, const Int& exp, const Int& m) {
  if (m == 1) return 0;
  return boost::multiprecision::powm(mod_reduce(base, m), exp, m);
}

// Inverse of a modulo m via extended Euclid.
inline Int inv_mod(const Int& a, const Int& m) {
  Int r0 = m, r1 = mod_reduce(a, m);
  Int t0 = 0, t1 = 1;
  while (r1 != 0) {
    Int q = r0 / r1;
    Int r2 = r0 - q * r1;
    Int t2 = t0 - q * t1;
    r0 = r1;
    r1 = r2;
    t0 = t1;
    t1 = t2;
  }
  if (r0 != 1) throw not_invertible_error("inv_mod: element is not a unit");
  return mod_reduce(t0, m);
}

inline Int uniform_int(Rng& rng, const Int& bound) {
  if (bound <= 0) throw precondition_error("uniform_int: bound must be positive");
  const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(bound)) + 1;
  const unsigned words = (bits + 63) / 64;
  for (;;) {
    Int r = 0;
    for (unsigned i = 0; i < words; ++i) {
      r <<= 64;
      r |= Int(rng());
    }
    r >>= words * 64 - bits;
    if (r < bound) return r;
  }
}

// Miller-Rabin with a fixed base set; deterministic below 3.3e24 and a
// strong probabilistic check beyond.
inline bool is_probable_prime(const Int& n) {
  if (n < 2) return false;
  static const int kSmall[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (int q : kSmall) {
    if (n == q) return true;
    if (n % q == 0) return false;
  }
  Int d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (int a : kSmall) {
    Int x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned i = 1; i < s; ++i) {
      x = x * x % n;
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// A prime power modulus p^k with the modulus value cached.
class PrimePower {
 public:
  PrimePower(Int p, unsigned k) : p_(std::move(p)), k_(k) {
    if (k_ == 0) throw precondition_error("PrimePower: exponent must be >= 1");
    if (!is_probable_prime(p_)) throw precondition_error("PrimePower: p is not prime");
    modulus_ = boost::multiprecision::pow(p_, k_);
  }

  const Int& prime() const { return p_; }
  unsigned exponent() const { return k_; }
  const Int& modulus() const { return modulus_; }
  bool is_two() const { return p_ == 2; }
  // k_p: the extra precision constant, 3 at p=2 and 1 at odd p.
  unsigned kp() const { return is_two() ? 3u : 1u; }
  PrimePower with_exponent(unsigned k) const { return PrimePower(p_, k); }

  friend bool operator==(const PrimePower& a, const PrimePower& b) {
    return a.p_ == b.p_ && a.k_ == b.k_;
  }

 private:
  Int p_;
  unsigned k_;
  Int modulus_;
};

// t = p^order * unit with p coprime to unit; order is empty (infinite) at t=0.
struct PadicSplit {
  std::optional<unsigned> order;
  Int unit;
};

inline PadicSplit padic_split(const Int& t, const Int& p) {
  if (t == 0) return {std::nullopt, 0};
  Int u = t;
  unsigned ord = 0;
  while (u % p == 0) {
    u /= p;
    ++ord;
  }
  return {ord, u};
}

inline unsigned ord_p(const Int& t, const Int& p) {
  auto s = padic_split(t, p);
  if (!s.order) throw precondition_error("ord_p: order of 0 is infinite");
  return *s.order;
}

inline Int cop_p(const Int& t, const Int& p) { return padic_split(t, p).unit; }

inline int legendre(const Int& t, const Int& p) {
  if (p == 2 || !is_probable_prime(p)) throw precondition_error("legendre: p must be an odd prime");
  if (t % p == 0) throw precondition_error("legendre: t not coprime to p");
  Int r = pow_mod(t, (p - 1) / 2, p);
  return r == 1 ? 1 : -1;
}

inline int kronecker2(const Int& t) {
  if (t % 2 == 0) throw precondition_error("kronecker2: t must be odd");
  Int r = mod_reduce(t, 8);
  return (r == 1 || r == 7) ? 1 : -1;
}

// The p-sign: 0 at t=0, the Legendre symbol of cop_p(t) for odd p, and
// cop_2(t) mod 8 at p=2.
inline int sgn_p(const Int& t, const Int& p) {
  if (t == 0) return 0;
  Int u = cop_p(t, p);
  if (p == 2) return static_cast<int>(mod_reduce(u, 8));
  return legendre(u, p);
}

// The p^k-symbol of an integer: (order, sign) of t reduced mod p^k.
struct IntSymbol {
  std::optional<unsigned> order;  // empty means infinite
  int sign = 0;

  friend bool operator==(const IntSymbol&, const IntSymbol&) = default;
};

inline IntSymbol int_symbol(const Int& t, const PrimePower& pk) {
  Int r = mod_reduce(t, pk.modulus());
  if (r == 0) return {std::nullopt, 0};
  auto split = padic_split(r, pk.prime());
  return {split.order, sgn_p(r, pk.prime())};
}

// Smallest quadratic non-residue modulo an odd prime, by ascending scan.
inline Int sigma_p(const Int& p) {
  if (p == 2 || !is_probable_prime(p)) throw precondition_error("sigma_p: p must be an odd prime");
  for (Int s = 2;; ++s) {
    if (legendre(s, p) == -1) return s;
  }
}

// A pair of non-residues summing to 1 mod p (exists for every odd prime).
inline std::pair<Int, Int> nonresidue_sum_pair(const Int& p) {
  if (p == 2 || !is_probable_prime(p)) {
    throw precondition_error("nonresidue_sum_pair: p must be an odd prime");
  }
  for (Int a = 2; a < p; ++a) {
    if (legendre(a, p) != -1) continue;
    Int b = mod_reduce(1 - a, p);
    if (b != 0 && legendre(b, p) == -1) return {a, b};
  }
  throw internal_error("nonresidue_sum_pair: no pair found");
}

namespace detail {

// Square root of a residue mod an odd prime. Tonelli-Shanks driven by the
// smallest non-residue, so fully deterministic.
inline Int sqrt_mod_prime(const Int& t, const Int& p) {
  Int a = mod_reduce(t, p);
  if (a == 0) return 0;
  if (p % 4 == 3) return pow_mod(a, (p + 1) / 4, p);
  Int q = p - 1;
  unsigned s = 0;
  while ((q & 1) == 0) {
    q >>= 1;
    ++s;
  }
  Int z = sigma_p(p);
  Int m = s;
  Int c = pow_mod(z, q, p);
  Int x = pow_mod(a, (q + 1) / 2, p);
  Int tt = pow_mod(a, q, p);
  while (tt != 1) {
    Int t2 = tt;
    unsigned i = 0;
    while (t2 != 1) {
      t2 = t2 * t2 % p;
      ++i;
    }
    Int b = c;
    for (Int j = 0; j < m - i - 1; ++j) b = b * b % p;
    x = x * b % p;
    c = b * b % p;
    tt = tt * c % p;
    m = i;
  }
  return x;
}

// Hensel lift of a unit square root from mod p to mod p^k (odd p).
inline Int hensel_lift_odd(const Int& u, Int x, const Int& p, unsigned k) {
  Int mod = p;
  unsigned prec = 1;
  Int pk = boost::multiprecision::pow(p, k);
  while (prec < k) {
    prec = std::min(2 * prec, k);
    mod = boost::multiprecision::pow(p, prec);
    // Newton step: x <- x - (x^2 - u) / (2x)
    Int num = mod_reduce(x * x - u, mod);
    x = mod_reduce(x - num * inv_mod(2 * x, mod), mod);
  }
  return mod_reduce(x, pk);
}

// Lift a root of u = 1 mod 8 from mod 8 to mod 2^k, one bit at a time
// (the derivative 2x is not a unit, so adjust with 2^{j-1} steps).
inline Int lift_root_two(const Int& u, unsigned k) {
  Int x = 1;
  for (unsigned j = 3; j < k; ++j) {
    Int mod_next = Int(1) << (j + 1);
    if (mod_reduce(x * x - u, mod_next) != 0) x += Int(1) << (j - 1);
  }
  return mod_reduce(x, Int(1) << k);
}

}  // namespace detail

// Square root modulo p^k, or nullopt when no root exists. Existence follows
// the even-order / unit-sign criterion, with the short-precision cases at
// p=2 split out separately.
inline std::optional<Int> sqrt_mod(const Int& t_in, const PrimePower& pk) {
  const Int t = mod_reduce(t_in, pk.modulus());
  if (t == 0) return Int(0);
  const Int& p = pk.prime();
  const unsigned k = pk.exponent();
  auto split = padic_split(t, p);
  const unsigned ord = *split.order;
  const Int& u = split.unit;
  if (ord % 2 != 0) return std::nullopt;
  const unsigned rem = k - ord;  // precision left for the unit part
  Int root_unit;
  if (p == 2) {
    Int u8 = mod_reduce(u, 8);
    if (rem >= 3) {
      if (u8 != 1) return std::nullopt;
      root_unit = detail::lift_root_two(mod_reduce(u, Int(1) << rem), rem);
    } else {
      if (mod_reduce(u, Int(1) << rem) != 1) return std::nullopt;
      root_unit = 1;
    }
  } else {
    if (legendre(u, p) != 1) return std::nullopt;
    Int base = detail::sqrt_mod_prime(u, p);
    root_unit = detail::hensel_lift_odd(mod_reduce(u, boost::multiprecision::pow(p, rem)), base, p, rem);
  }
  Int root = mod_reduce(boost::multiprecision::pow(p, ord / 2) * root_unit, pk.modulus());
  if (mod_reduce(root * root - t, pk.modulus()) != 0) throw internal_error("sqrt_mod: root check failed");
  return root;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace padiq
