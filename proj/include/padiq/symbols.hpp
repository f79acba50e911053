#pragma once

// p-symbols (odd p) and 2-symbols with train/compartment structure,
// oddity fusion, sign walking, the canonical 2-symbol, p^*-equivalence
// testing, and the ASCII symbol grammar.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "padiq/block_diagonal.hpp"

namespace padiq {

struct PSymbolEntry {
  unsigned scale;
  int sign;  // Legendre symbol of the unit-part determinant
  int dim;

  friend bool operator==(const PSymbolEntry&, const PSymbolEntry&) = default;
};

struct PSymbolOdd {
  Int p;
  std::vector<PSymbolEntry> entries;  // ascending scales

  friend bool operator==(const PSymbolOdd&, const PSymbolOdd&) = default;

  std::string to_string() const {
    std::ostringstream out;
    for (size_t i = 0; i < entries.size(); ++i) {
      if (i) out << ' ';
      out << boost::multiprecision::pow(p, entries[i].scale) << '^' << (entries[i].sign > 0 ? '+' : '-')
          << entries[i].dim;
    }
    return out.str();
  }
};

struct TwoSymbolEntry {
  unsigned scale;
  int sign;
  int dim;
  BlockType type;
  int oddity;

  friend bool operator==(const TwoSymbolEntry&, const TwoSymbolEntry&) = default;
};

struct Interval {
  unsigned lo, hi;  // inclusive scale range

  bool contains(unsigned s) const { return lo <= s && s <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct TrainStructure {
  std::vector<Interval> trains;
  std::vector<Interval> compartments;
};

struct TwoSymbol {
  // Ascending scales; dimension-0 entries are kept only when they were
  // written explicitly (they matter for train structure and printing).
  std::vector<TwoSymbolEntry> entries;

  friend bool operator==(const TwoSymbol&, const TwoSymbol&) = default;

  const TwoSymbolEntry* find(unsigned scale) const {
    for (const auto& e : entries) {
      if (e.scale == scale) return &e;
    }
    return nullptr;
  }

  TwoSymbolEntry* find(unsigned scale) {
    for (auto& e : entries) {
      if (e.scale == scale) return &e;
    }
    return nullptr;
  }

  std::string to_string() const;
  static TwoSymbol parse(const std::string& text);
};

namespace detail {

inline bool scale_is_type1(const TwoSymbol& sym, unsigned s) {
  const TwoSymbolEntry* e = sym.find(s);
  return e != nullptr && e->dim > 0 && e->type == BlockType::kTypeI;
}

}  // namespace detail

// Compartments are maximal intervals of Type I forms; trains are maximal
// intervals in which every adjacent pair of forms contains a Type I form.
// Scales absent from the symbol count as dimension-0 Type II forms.
inline TrainStructure partition(const TwoSymbol& sym) {
  TrainStructure out;
  if (sym.entries.empty()) return out;
  const unsigned lo = sym.entries.front().scale;
  const unsigned hi = sym.entries.back().scale;
  unsigned train_start = lo;
  for (unsigned s = lo; s < hi; ++s) {
    if (!detail::scale_is_type1(sym, s) && !detail::scale_is_type1(sym, s + 1)) {
      out.trains.push_back({train_start, s});
      train_start = s + 1;
    }
  }
  out.trains.push_back({train_start, hi});
  std::optional<unsigned> comp_start;
  for (unsigned s = lo; s <= hi; ++s) {
    if (detail::scale_is_type1(sym, s)) {
      if (!comp_start) comp_start = s;
    } else if (comp_start) {
      out.compartments.push_back({*comp_start, s - 1});
      comp_start.reset();
    }
  }
  if (comp_start) out.compartments.push_back({*comp_start, hi});
  return out;
}

// Total oddity per compartment, mod 8.
inline std::vector<std::pair<Interval, int>> oddity_fuse(const TwoSymbol& sym, const TrainStructure& trains) {
  std::vector<std::pair<Interval, int>> out;
  for (const Interval& c : trains.compartments) {
    int total = 0;
    for (const auto& e : sym.entries) {
      if (c.contains(e.scale)) total += e.oddity;
    }
    out.push_back({c, total % 8});
  }
  return out;
}

// Flip the signs at two scales of one train. Each walk step between
// adjacent scales r, r+1 changes the total oddity of the compartment
// containing either of them by 4.
inline TwoSymbol sign_walk_symbol(const TwoSymbol& sym, unsigned scale_i, unsigned scale_j) {
  TwoSymbol out = sym;
  if (scale_i == scale_j) return out;
  TrainStructure st = partition(sym);
  const Interval* train = nullptr;
  for (const Interval& t : st.trains) {
    if (t.contains(scale_i) && t.contains(scale_j)) train = &t;
  }
  if (train == nullptr) throw precondition_error("sign_walk_symbol: scales are not in one train");
  for (unsigned s : {scale_i, scale_j}) {
    TwoSymbolEntry* e = out.find(s);
    if (e == nullptr || e->dim == 0) {
      throw precondition_error("sign_walk_symbol: no positive-dimensional form at flipped scale");
    }
    e->sign = -e->sign;
  }
  const unsigned lo = std::min(scale_i, scale_j);
  const unsigned hi = std::max(scale_i, scale_j);
  for (unsigned r = lo; r < hi; ++r) {
    for (const Interval& c : st.compartments) {
      if (!c.contains(r) && !c.contains(r + 1)) continue;
      // Bump the compartment total on its first stored member.
      for (auto& e : out.entries) {
        if (c.contains(e.scale)) {
          e.oddity = (e.oddity + 4) % 8;
          break;
        }
      }
    }
  }
  return out;
}

struct CanonicalTwoSymbol {
  struct Entry {
    unsigned scale;
    int sign;
    int dim;
    BlockType type;

    friend bool operator==(const Entry&, const Entry&) = default;
  };
  std::vector<Entry> entries;
  std::vector<std::pair<Interval, int>> compartment_oddities;

  friend bool operator==(const CanonicalTwoSymbol&, const CanonicalTwoSymbol&) = default;

  std::string to_string() const {
    std::vector<std::string> tokens;
    size_t ci = 0;
    for (const Entry& e : entries) {
      while (ci < compartment_oddities.size() && compartment_oddities[ci].first.hi < e.scale) ++ci;
      std::ostringstream term;
      term << (Int(1) << e.scale) << '^';
      if (e.sign < 0) term << '-';
      term << e.dim;
      std::string token = term.str();
      if (ci < compartment_oddities.size() && compartment_oddities[ci].first.contains(e.scale)) {
        if (compartment_oddities[ci].first.lo == e.scale) token = "[" + token;
        if (compartment_oddities[ci].first.hi == e.scale) {
          token += "]_" + std::to_string(compartment_oddities[ci].second);
        }
      }
      tokens.push_back(token);
    }
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }
};

// Normalize a 2-symbol: within each train, cancel minus signs pairwise from
// the highest scale downward and walk any surviving minus onto the earliest
// nonzero-dimensional form; report per-compartment totals only.
inline CanonicalTwoSymbol canonical_two_symbol(const TwoSymbol& sym) {
  TwoSymbol work = sym;
  TrainStructure st = partition(sym);
  for (const Interval& train : st.trains) {
    auto minus_scales = [&] {
      std::vector<unsigned> m;
      for (const auto& e : work.entries) {
        if (train.contains(e.scale) && e.dim > 0 && e.sign < 0) m.push_back(e.scale);
      }
      return m;
    };
    std::vector<unsigned> minus = minus_scales();
    while (minus.size() >= 2) {
      unsigned h = minus[minus.size() - 1];
      unsigned h2 = minus[minus.size() - 2];
      work = sign_walk_symbol(work, h2, h);
      minus = minus_scales();
    }
    if (minus.size() == 1) {
      unsigned earliest = 0;
      bool found = false;
      for (const auto& e : work.entries) {
        if (train.contains(e.scale) && e.dim > 0) {
          earliest = e.scale;
          found = true;
          break;
        }
      }
      if (found && earliest != minus[0]) work = sign_walk_symbol(work, earliest, minus[0]);
    }
  }
  CanonicalTwoSymbol out;
  for (const auto& e : work.entries) {
    if (e.dim > 0) out.entries.push_back({e.scale, e.sign, e.dim, e.type});
  }
  out.compartment_oddities = oddity_fuse(work, st);
  return out;
}

inline std::string TwoSymbol::to_string() const {
  TrainStructure st = partition(*this);
  std::vector<std::string> tokens;
  size_t ci = 0;
  for (const auto& e : entries) {
    while (ci < st.compartments.size() && st.compartments[ci].hi < e.scale) ++ci;
    bool in_comp = ci < st.compartments.size() && st.compartments[ci].contains(e.scale);
    std::ostringstream term;
    term << (Int(1) << e.scale) << '^' << (e.sign > 0 ? '+' : '-') << e.dim;
    std::string token = term.str();
    if (in_comp) {
      if (st.compartments[ci].lo == e.scale) token = "[" + token;
      if (st.compartments[ci].hi == e.scale) {
        int total = 0;
        for (const auto& t : entries) {
          if (st.compartments[ci].contains(t.scale)) total += t.oddity;
        }
        token += "]_" + std::to_string(total % 8);
      }
    } else if (e.dim > 0) {
      token += "_" + std::to_string(e.oddity);
    }
    tokens.push_back(token);
  }
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline TwoSymbol TwoSymbol::parse(const std::string& text) {
  TwoSymbol sym;
  size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && text[pos] == ' ') ++pos;
  };
  auto parse_int = [&]() -> long {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (start == pos) throw precondition_error("TwoSymbol::parse: expected a number");
    return std::stol(text.substr(start, pos - start));
  };
  auto parse_term = [&](bool in_compartment, bool* had_oddity) -> TwoSymbolEntry {
    if (had_oddity) *had_oddity = false;
    long scale_val = parse_int();
    unsigned scale = 0;
    while ((1L << scale) < scale_val) ++scale;
    if ((1L << scale) != scale_val) throw precondition_error("TwoSymbol::parse: scale is not a power of 2");
    skip_ws();
    if (pos >= text.size() || text[pos] != '^') throw precondition_error("TwoSymbol::parse: expected '^'");
    ++pos;
    skip_ws();
    int sign = 1;
    if (text[pos] == '+') {
      ++pos;
    } else if (text[pos] == '-') {
      sign = -1;
      ++pos;
    }
    int dim = static_cast<int>(parse_int());
    int oddity = 0;
    skip_ws();
    if (pos < text.size() && text[pos] == '_') {
      ++pos;
      oddity = static_cast<int>(parse_int()) % 8;
      if (had_oddity) *had_oddity = true;
    }
    BlockType type = in_compartment ? BlockType::kTypeI : BlockType::kTypeII;
    if (dim == 0) {
      sign = 1;
      type = BlockType::kTypeII;
      oddity = 0;
    }
    if (type == BlockType::kTypeII && oddity != 0) {
      throw precondition_error("TwoSymbol::parse: Type II term with nonzero oddity");
    }
    return {scale, sign, dim, type, oddity};
  };
  skip_ws();
  while (pos < text.size()) {
    if (text[pos] == '[') {
      ++pos;
      std::vector<size_t> member_indices;
      bool explicit_oddities = false;
      for (;;) {
        skip_ws();
        if (pos < text.size() && text[pos] == ']') {
          ++pos;
          break;
        }
        bool had_oddity = false;
        TwoSymbolEntry e = parse_term(true, &had_oddity);
        if (e.dim == 0) throw precondition_error("TwoSymbol::parse: dimension-0 form inside a compartment");
        if (had_oddity) explicit_oddities = true;
        member_indices.push_back(sym.entries.size());
        sym.entries.push_back(e);
      }
      skip_ws();
      if (pos < text.size() && text[pos] == '_') {
        ++pos;
        int total = static_cast<int>(parse_int()) % 8;
        if (!explicit_oddities && !member_indices.empty()) {
          sym.entries[member_indices.front()].oddity = total;
          for (size_t i = 1; i < member_indices.size(); ++i) sym.entries[member_indices[i]].oddity = 0;
        }
      }
    } else {
      sym.entries.push_back(parse_term(false, nullptr));
    }
    skip_ws();
  }
  for (size_t i = 0; i + 1 < sym.entries.size(); ++i) {
    if (sym.entries[i].scale >= sym.entries[i + 1].scale) {
      throw precondition_error("TwoSymbol::parse: scales must be strictly increasing");
    }
  }
  return sym;
}

// p-symbol of a nondegenerate form at precision ord_p(det) + 1.
inline PSymbolOdd p_symbol(const IntQuadForm& q, const Int& p) {
  if (p == 2 || !is_probable_prime(p)) throw precondition_error("p_symbol: p must be an odd prime");
  Int det = q.det();
  if (det == 0) throw degenerate_error("p_symbol: determinant is zero");
  unsigned k = ord_p(det, p) + 1;
  auto [d, w] = block_diagonalize(q, PrimePower(p, k));
  std::map<unsigned, std::pair<Int, int>> groups;  // scale -> (unit det, dim)
  for (const auto& sb : d.blocks()) {
    auto& [unit_det, dim] = groups.try_emplace(sb.scale, Int(1), 0).first->second;
    unit_det = mod_reduce(unit_det * sb.block.unit, p);
    dim += 1;
  }
  PSymbolOdd sym{p, {}};
  for (const auto& [scale, data] : groups) {
    sym.entries.push_back({scale, legendre(data.first, p), data.second});
  }
  return sym;
}

// 2-symbol of a block diagonal form: per scale, the dimension, type
// (Type I iff an odd diagonal entry exists), sign (Kronecker symbol of the
// unit-part determinant) and oddity (sum of the Type I units mod 8 -- the
// trace of the diagonalized odd part; Type II blocks contribute none).
inline TwoSymbol two_symbol_of_blocks(const BlockDiagForm& d) {
  if (!d.modulus().is_two()) throw precondition_error("two_symbol_of_blocks: modulus must be a power of 2");
  std::map<unsigned, TwoSymbolEntry> groups;
  for (const auto& sb : d.blocks()) {
    auto [it, fresh] = groups.try_emplace(sb.scale, TwoSymbolEntry{sb.scale, 1, 0, BlockType::kTypeII, 0});
    TwoSymbolEntry& e = it->second;
    e.dim += sb.block.dim();
    if (sb.block.type == BlockType::kTypeI) {
      e.type = BlockType::kTypeI;
      e.oddity = static_cast<int>(mod_reduce(e.oddity + sb.block.unit, 8));
    }
    e.sign *= static_cast<int>(kronecker2(sb.block.content_det()));
  }
  TwoSymbol sym;
  for (auto& [scale, e] : groups) sym.entries.push_back(e);
  return sym;
}

// 2-symbol of a nondegenerate form at precision ord_2(det) + 3.
inline TwoSymbol two_symbol(const IntQuadForm& q) {
  Int det = q.det();
  if (det == 0) throw degenerate_error("two_symbol: determinant is zero");
  unsigned k = ord_p(det, 2) + 3;
  auto [d, w] = block_diagonalize(q, PrimePower(2, k));
  if (d.zero_dim() != 0) throw internal_error("two_symbol: nondegenerate form produced zero dimensions");
  return two_symbol_of_blocks(d);
}

// p^*-equivalence: equal p-symbols for odd p, equal canonical 2-symbols
// at p = 2.
inline bool equivalent(const IntQuadForm& q1, const IntQuadForm& q2, const Int& p) {
  if (q1.det() == 0 || q2.det() == 0) throw degenerate_error("equivalent: degenerate form");
  if (p == 2) return canonical_two_symbol(two_symbol(q1)) == canonical_two_symbol(two_symbol(q2));
  return p_symbol(q1, p) == p_symbol(q2, p);
}

}  // namespace padiq
