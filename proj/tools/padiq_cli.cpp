// Command-line surface: p-adic symbols, canonical forms, equivalence
// testing and primitive representations for integral quadratic forms.
//
// Exit codes: 0 ok, 1 inequivalent, 2 parse/usage, 3 degenerate,
// 4 randomness exhausted, 10 internal verification failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "padiq/matrix_io.hpp"
#include "padiq/padiq.hpp"

namespace {

using padiq::Int;
using nlohmann::json;

json json_int(const Int& v) {
  // Entries below 2^53 stay numbers; anything larger is emitted as a
  // string to survive double-precision JSON consumers.
  static const Int kLimit = Int(1) << 53;
  if (v >= 0 && v < kLimit) return json(v.convert_to<std::uint64_t>());
  if (v < 0 && -v < kLimit) return json(-static_cast<std::int64_t>((-v).convert_to<std::uint64_t>()));
  return json(v.str());
}

json json_matrix(const padiq::ModMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) rows.push_back(json_int(m.at(i, j)));
  }
  return rows;
}

unsigned default_precision(const padiq::IntQuadForm& q, const Int& p) {
  Int det = q.det();
  if (det == 0) throw padiq::degenerate_error("determinant is zero");
  return padiq::ord_p(det, p) + (p == 2 ? 3u : 1u);
}

struct CommonArgs {
  std::string p_text = "2";
  std::optional<unsigned> k;
  std::uint64_t seed = 0;
  bool as_json = false;

  Int prime() const { return Int(p_text); }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_seed = true) {
  cmd->add_option("-p,--prime", args.p_text, "prime p")->required();
  cmd->add_option("-k,--precision", args.k, "precision exponent k (defaults to ord_p(det) + k_p)");
  if (with_seed) cmd->add_option("--seed", args.seed, "random seed for reproducible runs");
  cmd->add_flag("--json", args.as_json, "machine-readable JSON output");
}

int cmd_symbol(const CommonArgs& args, const std::string& path) {
  padiq::IntQuadForm q = padiq::load_form(path);
  Int p = args.prime();
  unsigned k = args.k.value_or(default_precision(q, p));
  if (p == 2) {
    padiq::TwoSymbol sym = padiq::two_symbol(q);
    padiq::CanonicalTwoSymbol canon = padiq::canonical_two_symbol(sym);
    if (args.as_json) {
      json out{{"command", "symbol"}, {"n", q.dim()}, {"p", 2}, {"k", k},
               {"symbol", sym.to_string()}, {"canonical", canon.to_string()}};
      std::cout << out.dump() << '\n';
    } else {
      std::cout << "p: 2\nk: " << k << "\nsymbol: " << sym.to_string() << "\ncanonical: " << canon.to_string()
                << '\n';
    }
  } else {
    padiq::PSymbolOdd sym = padiq::p_symbol(q, p);
    if (args.as_json) {
      json out{{"command", "symbol"}, {"n", q.dim()}, {"p", json_int(p)}, {"k", k}, {"symbol", sym.to_string()}};
      std::cout << out.dump() << '\n';
    } else {
      std::cout << "p: " << p << "\nk: " << k << "\nsymbol: " << sym.to_string() << '\n';
    }
  }
  return 0;
}

int cmd_canon(const CommonArgs& args, const std::string& path) {
  padiq::IntQuadForm q = padiq::load_form(path);
  Int p = args.prime();
  unsigned k = args.k.value_or(default_precision(q, p));
  padiq::PrimePower pk(p, k);
  for (int attempt = 0;; ++attempt) {
    try {
      auto [canon, witness] = padiq::canonicalize(q, p, k);
      padiq::ModMatrix cm = canon.matrix();
      // Independent re-verification before any output claims success.
      padiq::ModMatrix check = padiq::ModMatrix::from_form(q, pk).congruent(witness.u());
      if (!(check == cm)) throw padiq::internal_error("canon: verification failed");
      if (args.as_json) {
        json out{{"command", "canon"},        {"n", q.dim()},
                 {"p", json_int(p)},          {"k", k},
                 {"seed", args.seed},         {"canonical", json_matrix(cm)},
                 {"witness", json_matrix(witness.u())}};
        std::cout << out.dump() << '\n';
      } else {
        std::cout << "p: " << p << "\nk: " << k << "\nseed: " << args.seed << "\ncanonical:\n"
                  << padiq::format_matrix(cm) << "witness:\n"
                  << padiq::format_matrix(witness.u()) << "VERIFIED\n";
      }
      return 0;
    } catch (const padiq::retries_exhausted_error&) {
      if (attempt >= 2) throw;
    }
  }
}

int cmd_equiv(const CommonArgs& args, const std::string& path_a, const std::string& path_b) {
  padiq::IntQuadForm a = padiq::load_form(path_a);
  padiq::IntQuadForm b = padiq::load_form(path_b);
  Int p = args.prime();
  unsigned k = args.k ? *args.k : std::max(default_precision(a, p), default_precision(b, p));
  padiq::PrimePower pk(p, k);
  for (int attempt = 0;; ++attempt) {
    try {
      auto result = padiq::transform_between(a, b, p, k);
      if (std::holds_alternative<padiq::Inequivalence>(result)) {
        const auto& reason = std::get<padiq::Inequivalence>(result).reason;
        if (args.as_json) {
          json out{{"command", "equiv"}, {"p", json_int(p)}, {"k", k}, {"equivalent", false}, {"difference", reason}};
          std::cout << out.dump() << '\n';
        } else {
          std::cout << "p: " << p << "\nk: " << k << "\nINEQUIVALENT\ndifference: " << reason << '\n';
        }
        return 1;
      }
      const padiq::Witness& w = std::get<padiq::Witness>(result);
      padiq::ModMatrix check = padiq::ModMatrix::from_form(a, pk).congruent(w.u());
      if (!(check == padiq::ModMatrix::from_form(b, pk))) throw padiq::internal_error("equiv: verification failed");
      if (args.as_json) {
        json out{{"command", "equiv"},  {"n", a.dim()},   {"p", json_int(p)}, {"k", k},
                 {"equivalent", true},  {"seed", args.seed}, {"witness", json_matrix(w.u())}};
        std::cout << out.dump() << '\n';
      } else {
        std::cout << "p: " << p << "\nk: " << k << "\nEQUIVALENT\nwitness:\n"
                  << padiq::format_matrix(w.u()) << "VERIFIED\n";
      }
      return 0;
    } catch (const padiq::retries_exhausted_error&) {
      if (attempt >= 2) throw;
    }
  }
}

int cmd_represent(const CommonArgs& args, const std::string& path, const std::string& target_text) {
  padiq::IntQuadForm q = padiq::load_form(path);
  Int p = args.prime();
  Int t(target_text);
  unsigned k = args.k.value_or(default_precision(q, p));
  padiq::PrimePower pk(p, k);
  padiq::Rng rng = padiq::make_rng(args.seed);
  auto rep = padiq::represent_general(padiq::ModMatrix::from_form(q, pk), t, pk, rng);
  // Certifying precision: max(ord_p of the form content, ord_p(t)) + k_p.
  unsigned content = k;
  for (int i = 0; i < q.dim(); ++i) {
    for (int j = 0; j < q.dim(); ++j) {
      auto s = padiq::padic_split(padiq::mod_reduce(q.at(i, j), pk.modulus()), p);
      if (s.order) content = std::min(content, *s.order);
    }
  }
  Int tr = padiq::mod_reduce(t, pk.modulus());
  unsigned ord_t = tr == 0 ? k : padiq::ord_p(tr, p);
  unsigned m = std::min(k, std::max(content, ord_t) + pk.kp());
  if (!rep) {
    Int mod_m = boost::multiprecision::pow(p, m);
    if (args.as_json) {
      json out{{"command", "represent"}, {"p", json_int(p)}, {"k", k}, {"t", json_int(t)},
               {"found", false},         {"certified_modulus", json_int(mod_m)}};
      std::cout << out.dump() << '\n';
    } else {
      std::cout << "p: " << p << "\nk: " << k << "\nNONE (certified mod " << mod_m << ")\n";
    }
    return 0;
  }
  // Re-verify the representation value and primitivity before printing.
  Int val = 0;
  for (int i = 0; i < q.dim(); ++i) {
    for (int j = 0; j < q.dim(); ++j) val += rep->vector()[static_cast<size_t>(i)] * q.at(i, j) * rep->vector()[static_cast<size_t>(j)];
  }
  if (padiq::mod_reduce(val - t, pk.modulus()) != 0 || !padiq::is_primitive(rep->vector(), pk)) {
    throw padiq::internal_error("represent: verification failed");
  }
  if (args.as_json) {
    json vec = json::array();
    for (const Int& x : rep->vector()) vec.push_back(json_int(x));
    json out{{"command", "represent"}, {"n", q.dim()}, {"p", json_int(p)}, {"k", k},
             {"t", json_int(t)},       {"found", true}, {"seed", args.seed}, {"vector", vec}};
    std::cout << out.dump() << '\n';
  } else {
    std::cout << "p: " << p << "\nk: " << k << "\nvector:";
    for (const Int& x : rep->vector()) std::cout << ' ' << x;
    std::cout << "\nVERIFIED\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact p-adic canonical forms of integral quadratic forms"};
  app.require_subcommand(1);

  CommonArgs sym_args, canon_args, equiv_args, rep_args;
  std::string sym_path, canon_path, equiv_a, equiv_b, rep_path, rep_target;

  CLI::App* sym = app.add_subcommand("symbol", "print the p-symbol (odd p) or 2-symbol and canonical 2-symbol");
  add_common(sym, sym_args, false);
  sym->add_option("input", sym_path, "Gram matrix file")->required();

  CLI::App* canon = app.add_subcommand("canon", "canonical form with a verified witness");
  add_common(canon, canon_args);
  canon->add_option("input", canon_path, "Gram matrix file")->required();

  CLI::App* equiv = app.add_subcommand("equiv", "decide p^k-equivalence of two forms");
  add_common(equiv, equiv_args);
  equiv->add_option("inputA", equiv_a, "first Gram matrix file")->required();
  equiv->add_option("inputB", equiv_b, "second Gram matrix file")->required();

  CLI::App* rep = app.add_subcommand("represent", "primitive representation of a target value");
  add_common(rep, rep_args);
  rep->add_option("-t,--target", rep_target, "target value t")->required();
  rep->add_option("input", rep_path, "Gram matrix file")->required();

  try {
    app.parse(argc, argv);
    if (sym->parsed()) return cmd_symbol(sym_args, sym_path);
    if (canon->parsed()) return cmd_canon(canon_args, canon_path);
    if (equiv->parsed()) return cmd_equiv(equiv_args, equiv_a, equiv_b);
    if (rep->parsed()) return cmd_represent(rep_args, rep_path, rep_target);
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const padiq::parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const padiq::degenerate_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const padiq::retries_exhausted_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const padiq::internal_error& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 10;
  } catch (const padiq::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
