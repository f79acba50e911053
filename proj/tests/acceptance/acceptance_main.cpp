// Acceptance suite: executes every criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. All checks are exact; there are
// no floating-point tolerances anywhere. The CLI binary path may be passed
// as argv[1] so the worked-example criterion can drive the real tool.

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "padiq/matrix_io.hpp"
#include "padiq/padiq.hpp"

namespace {

using namespace padiq;
using Clock = std::chrono::steady_clock;

int g_failures = 0;
std::string g_cli;

struct Criterion {
  const char* name;
  Clock::time_point start = Clock::now();
  bool ok = true;
  std::string detail;

  explicit Criterion(const char* n) : name(n) {}

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }

  ~Criterion() {
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (ok) {
      std::printf("PASS %s (%.2fs)\n", name, secs);
    } else {
      std::printf("FAIL %s (%.2fs): %s\n", name, secs, detail.c_str());
      ++g_failures;
    }
    std::fflush(stdout);
  }
};

IntQuadForm random_form(Rng& rng, int n, int spread = 50) {
  for (;;) {
    IntQuadForm q(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Int v = uniform_int(rng, 2 * spread + 1) - spread;
        q.at(i, j) = v;
        q.at(j, i) = v;
      }
    }
    if (q.det() != 0) return q;
  }
}

int run_cli(const std::string& args, std::string* output) {
  std::string cmd = g_cli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::array<char, 4096> buf;
  size_t got;
  output->clear();
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) output->append(buf.data(), got);
  return WEXITSTATUS(pclose(pipe));
}

std::string write_temp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/padiq_acceptance_" + name;
  std::ofstream(path) << content;
  return path;
}

// Criterion 1: the worked examples, exactly.
void criterion1() {
  Criterion c("criterion-1 paper worked examples (equivalences, sign walk, canonical symbol)");
  // (a) 3+5 ~ 1+7 at k=4 and 1+4 ~ 5+20 at k=5, with verified witnesses.
  for (auto [lhs, rhs, k] : {std::tuple<IntQuadForm, IntQuadForm, unsigned>{
                                 IntQuadForm::diagonal({3, 5}), IntQuadForm::diagonal({1, 7}), 4},
                             {IntQuadForm::diagonal({1, 4}), IntQuadForm::diagonal({5, 20}), 5}}) {
    auto r = transform_between(lhs, rhs, 2, k);
    c.require(std::holds_alternative<Witness>(r), "equivalence witness missing");
    if (std::holds_alternative<Witness>(r)) {
      const Witness& w = std::get<Witness>(r);
      PrimePower pk(2, k);
      c.require(ModMatrix::from_form(lhs, pk).congruent(w.u()) == ModMatrix::from_form(rhs, pk),
                "witness does not verify");
    }
  }
  if (!g_cli.empty()) {
    std::string a = write_temp("c1a.mat", "2\n3 0\n0 5\n");
    std::string b = write_temp("c1b.mat", "2\n1 0\n0 7\n");
    std::string out;
    int code = run_cli("equiv -p 2 -k 4 " + a + " " + b, &out);
    c.require(code == 0 && out.find("EQUIVALENT") != std::string::npos && out.find("VERIFIED") != std::string::npos,
              "cmd_equiv did not report a verified equivalence");
    std::string a2 = write_temp("c1c.mat", "2\n1 0\n0 4\n");
    std::string b2 = write_temp("c1d.mat", "2\n5 0\n0 20\n");
    code = run_cli("equiv -p 2 -k 5 " + a2 + " " + b2, &out);
    c.require(code == 0 && out.find("EQUIVALENT") != std::string::npos, "cmd_equiv failed on 1+4 vs 5+20");
  }
  // (b) the sign-walking example, bit-exact in the symbol grammar.
  TwoSymbol start = TwoSymbol::parse("1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0");
  TwoSymbol walked = sign_walk_symbol(start, 1, 4);
  c.require(walked.to_string() == "1^+2_0 [2^+2 4^+3]_3 8^+0 [16^-1]_5 32^+2_0",
            "sign walk output mismatch: " + walked.to_string());
  // (c) the canonical symbol of that example.
  c.require(canonical_two_symbol(start).to_string() == "1^-2 [2^2 4^3]_7 [16^1]_1 32^2",
            "canonical symbol mismatch: " + canonical_two_symbol(start).to_string());
  c.require(canonical_two_symbol(walked) == canonical_two_symbol(start), "canonical symbol not class invariant");
}

// Criterion 2: Tables 1 and 2, exactly.
void criterion2() {
  Criterion c("criterion-2 dimension-3 canonical tables");
  Rng rng = make_rng(2024);
  const std::map<std::pair<int, int>, std::array<Int, 3>> table1 = {
      {{1, 1}, {1, 1, 7}},  {{1, 3}, {1, 1, 1}},  {{1, 5}, {3, 3, 7}},  {{1, 7}, {1, 3, 3}},
      {{-1, 1}, {3, 3, 3}}, {{-1, 3}, {1, 3, 7}}, {{-1, 5}, {1, 1, 3}}, {{-1, 7}, {1, 1, 5}},
  };
  std::set<std::pair<int, int>> seen;
  while (seen.size() < 8) {
    std::array<Int, 3> in;
    for (auto& v : in) v = 2 * uniform_int(rng, 1 << 7) + 1;
    int eps = kronecker2(in[0]) * kronecker2(in[1]) * kronecker2(in[2]);
    int odd = static_cast<int>(mod_reduce(in[0] + in[1] + in[2], 8));
    seen.insert({eps, odd});
    auto [triple, w] = compartment_dim3(in[0], in[1], in[2], 4);
    const auto& expect = table1.at({eps, odd});
    c.require(triple == expect, "table 1 mismatch for class");
  }
  // Table 2: each row's two sides are equivalent with an explicit witness
  // mod 2^3.
  const struct {
    int tau;
    bool plus;
    std::array<Int, 3> rhs;
  } table2[] = {
      {1, false, {3, 3, 3}}, {3, false, {1, 1, 1}}, {5, false, {3, 3, 7}}, {7, false, {1, 1, 5}},
      {1, true, {1, 1, 7}},  {3, true, {1, 3, 7}},  {5, true, {1, 1, 3}},  {7, true, {1, 3, 3}},
  };
  for (const auto& row : table2) {
    IntQuadForm lhs(3);
    lhs.at(0, 0) = row.tau;
    lhs.at(1, 1) = 2;
    lhs.at(1, 2) = 1;
    lhs.at(2, 1) = 1;
    lhs.at(2, 2) = row.plus ? 4 : 2;
    IntQuadForm rhs = IntQuadForm::diagonal({row.rhs[0], row.rhs[1], row.rhs[2]});
    auto r = transform_between(lhs, rhs, 2, 3);
    c.require(std::holds_alternative<Witness>(r), "table 2 row not equivalent");
    if (std::holds_alternative<Witness>(r)) {
      const Witness& w = std::get<Witness>(r);
      PrimePower pk(2, 3);
      c.require(ModMatrix::from_form(lhs, pk).congruent(w.u()) == ModMatrix::from_form(rhs, pk),
                "table 2 witness does not verify");
    }
  }
}

// Criterion 3: soundness, class invariance and idempotence on random forms.
void criterion3() {
  Criterion c("criterion-3 canonicalization soundness and invariance (500 forms per prime)");
  Rng rng = make_rng(3001);
  for (const Int& p : {Int(2), Int(3), Int(5), Int(7)}) {
    for (int trial = 0; trial < 500; ++trial) {
      int n = 1 + trial % 6;
      IntQuadForm q = random_form(rng, n);
      unsigned k = ord_p(q.det(), p) + (p == 2 ? 3u : 1u);
      PrimePower pk(p, k);
      auto [canon, w] = canonicalize(q, p, k);
      if (!(w.source() == ModMatrix::from_form(q, pk)) || !(w.target() == canon.matrix())) {
        c.require(false, "witness endpoints drifted");
        return;
      }
      ModMatrix v = random_gl(n, pk, rng);
      IntQuadForm q2 = ModMatrix::from_form(q, pk).congruent(v).to_form();
      auto [canon2, w2] = canonicalize(q2, p, k);
      if (!(canon.form == canon2.form)) {
        c.require(false, "canonical form not class invariant");
        return;
      }
      auto [canon3, w3] = canonicalize(canon.matrix().to_form(), p, k);
      if (!(canon.form == canon3.form)) {
        c.require(false, "canonicalization not idempotent");
        return;
      }
    }
  }
}

// Criterion 4: oracle completeness on full small universes.
void criterion4() {
  Criterion c("criterion-4 oracle completeness (full n=2 and n=3/Z8 universes, 200 random n=3 pairs)");
  const std::pair<int, unsigned> universes[] = {{2, 3}, {3, 2}, {2, 4}, {5, 2}};
  for (auto [p, k] : universes) {
    PrimePower pk(p, k);
    const std::uint64_t m = pk.modulus().convert_to<std::uint64_t>();
    std::vector<IntQuadForm> forms;
    std::vector<std::string> canon_key;
    std::map<std::uint64_t, size_t> index_of;
    for (std::uint64_t a = 0; a < m; ++a) {
      for (std::uint64_t b = 0; b < m; ++b) {
        for (std::uint64_t d = 0; d < m; ++d) {
          IntQuadForm q = IntQuadForm::from_rows({{Int(a), Int(b)}, {Int(b), Int(d)}});
          Int det = q.det();
          if (mod_reduce(det, pk.modulus()) == 0) continue;
          unsigned ord = ord_p(det, p);
          if (ord + (p == 2 ? 3u : 1u) > k) continue;  // not licensed at this precision
          index_of[(a * m + b) * m + d] = forms.size();
          forms.push_back(q);
          auto [canon, w] = canonicalize(q, p, k);
          std::ostringstream key;
          for (const auto& sb : canon.form.blocks()) {
            key << sb.scale << (sb.block.type == BlockType::kTypeI ? 'I' : 'T') << sb.block.unit << ','
                << sb.block.a << ',' << sb.block.b << ',' << sb.block.c << ';';
          }
          canon_key.push_back(key.str());
        }
      }
    }
    // Walk orbits; equality of canonical keys must coincide with orbits.
    std::vector<char> visited(forms.size(), 0);
    std::set<std::string> closed_orbit_keys;
    for (size_t i = 0; i < forms.size(); ++i) {
      if (visited[i]) continue;
      OrbitWalker orbit(ModMatrix::from_form(forms[i], pk));
      size_t members = 0;
      for (size_t j = 0; j < forms.size(); ++j) {
        if (!visited[j] && orbit.contains(ModMatrix::from_form(forms[j], pk))) {
          visited[j] = 1;
          ++members;
          if (canon_key[j] != canon_key[i]) {
            c.require(false, "orbit member with different canonical form");
            return;
          }
        }
      }
      if (closed_orbit_keys.count(canon_key[i])) {
        c.require(false, "two orbits share one canonical form");
        return;
      }
      closed_orbit_keys.insert(canon_key[i]);
      (void)members;
    }
  }
  // The complete n = 3 universe over Z/8 (odd determinant): the canonical
  // partition must match the orbit partition exactly.
  {
    PrimePower pk(2, 3);
    std::vector<IntQuadForm> forms;
    std::vector<std::string> keys;
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        for (int cc = 0; cc < 8; ++cc) {
          for (int d = 0; d < 8; ++d) {
            for (int e = 0; e < 8; ++e) {
              for (int f = 0; f < 8; ++f) {
                IntQuadForm q = IntQuadForm::from_rows({{a, b, cc}, {b, d, e}, {cc, e, f}});
                if (q.det() % 2 == 0) continue;
                forms.push_back(q);
                auto [canon, w] = canonicalize_two(q, 3);
                std::ostringstream key;
                for (const auto& sb : canon.form.blocks()) {
                  key << sb.scale << (sb.block.type == BlockType::kTypeI ? 'I' : 'T') << sb.block.unit << ','
                      << sb.block.a << ',' << sb.block.b << ',' << sb.block.c << ';';
                }
                keys.push_back(key.str());
              }
            }
          }
        }
      }
    }
    std::vector<char> visited(forms.size(), 0);
    std::set<std::string> closed;
    for (size_t i = 0; i < forms.size(); ++i) {
      if (visited[i]) continue;
      OrbitWalker orbit(ModMatrix::from_form(forms[i], pk));
      for (size_t j = 0; j < forms.size(); ++j) {
        if (!visited[j] && orbit.contains(ModMatrix::from_form(forms[j], pk))) {
          visited[j] = 1;
          if (keys[j] != keys[i]) {
            c.require(false, "n=3 orbit member with different canonical form");
            return;
          }
        }
      }
      if (closed.count(keys[i])) {
        c.require(false, "n=3 orbits share one canonical form");
        return;
      }
      closed.insert(keys[i]);
    }
  }
  // 200 random n = 3 pairs over Z/8, as stated.
  Rng rng = make_rng(4001);
  PrimePower pk(2, 3);
  int done = 0;
  while (done < 200) {
    IntQuadForm a(3), b(3);
    for (IntQuadForm* q : {&a, &b}) {
      for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
          Int v = uniform_int(rng, 8);
          q->at(i, j) = v;
          q->at(j, i) = v;
        }
      }
    }
    if (mod_reduce(a.det(), 8) == 0 || ord_p(a.det(), 2) > 0) continue;
    if (mod_reduce(b.det(), 8) == 0 || ord_p(b.det(), 2) > 0) continue;
    ++done;
    auto [ca, wa] = canonicalize(a, 2, 3);
    auto [cb, wb] = canonicalize(b, 2, 3);
    bool brute = brute_equivalent(ModMatrix::from_form(a, pk), ModMatrix::from_form(b, pk)).has_value();
    if ((ca.form == cb.form) != brute) {
      c.require(false, "n=3 canonical equality disagrees with brute equivalence");
      return;
    }
  }
}

// Criterion 5: modular square roots against brute-force scans.
void criterion5() {
  Criterion c("criterion-5 sqrt_mod exhaustive agreement (2^7, 3^5, 5^4, 7^3)");
  const std::pair<int, unsigned> universes[] = {{2, 7}, {3, 5}, {5, 4}, {7, 3}};
  for (auto [p, k] : universes) {
    PrimePower pk(p, k);
    std::uint64_t m = pk.modulus().convert_to<std::uint64_t>();
    std::vector<char> is_square(m, 0);
    for (std::uint64_t x = 0; x < m; ++x) is_square[x * x % m] = 1;
    for (std::uint64_t t = 0; t < m; ++t) {
      auto r = sqrt_mod(Int(t), pk);
      if (r.has_value() != static_cast<bool>(is_square[t])) {
        c.require(false, "existence verdict differs at t=" + std::to_string(t));
        return;
      }
      if (r && mod_reduce(*r * *r - Int(t), pk.modulus()) != 0) {
        c.require(false, "returned root fails at t=" + std::to_string(t));
        return;
      }
    }
  }
}

// Criterion 6: the representation contract against brute force.
void criterion6() {
  Criterion c("criterion-6 representation contract on all small diagonal/block forms");
  Rng rng = make_rng(6001);
  const std::pair<int, unsigned> universes[] = {{2, 3}, {2, 4}, {3, 2}, {3, 3}};
  for (auto [p, k] : universes) {
    PrimePower pk(p, k);
    const std::uint64_t m = pk.modulus().convert_to<std::uint64_t>();
    std::vector<ModMatrix> forms;
    // All diagonal forms of dimension up to 3.
    for (std::uint64_t a = 0; a < m; ++a) {
      forms.push_back(ModMatrix::from_rows({{Int(a)}}, pk));
      for (std::uint64_t b = 0; b < m; ++b) {
        forms.push_back(ModMatrix::from_rows({{Int(a), 0}, {0, Int(b)}}, pk));
        for (std::uint64_t d = 0; d < m; ++d) {
          forms.push_back(ModMatrix::from_rows({{Int(a), 0, 0}, {0, Int(b), 0}, {0, 0, Int(d)}}, pk));
        }
      }
    }
    // Block forms at p = 2: every Type II block, alone and with one unit.
    if (p == 2) {
      for (std::uint64_t a = 0; 2 * a < m; ++a) {
        for (std::uint64_t b = 1; b < m; b += 2) {
          for (std::uint64_t d = 0; 2 * d < m; ++d) {
            ModMatrix block = ModMatrix::from_rows({{Int(2 * a), Int(b)}, {Int(b), Int(2 * d)}}, pk);
            forms.push_back(block);
            for (std::uint64_t u = 0; u < m; u += 3) {
              forms.push_back(direct_sum(block, ModMatrix::from_rows({{Int(u)}}, pk)));
            }
          }
        }
      }
    }
    for (const ModMatrix& q : forms) {
      for (std::uint64_t t = 0; t < m; ++t) {
        auto mine = represent_general(q, Int(t), pk, rng);
        auto brute = brute_represent(q, Int(t));
        if (mine.has_value() != brute.has_value()) {
          std::ostringstream what;
          what << "verdict mismatch p=" << p << " k=" << k << " t=" << t;
          c.require(false, what.str());
          return;
        }
        if (mine) {
          if (!is_primitive(mine->vector(), pk)) {
            c.require(false, "returned vector is not primitive");
            return;
          }
          Int val = 0;
          for (int i = 0; i < q.rows(); ++i) {
            for (int j = 0; j < q.cols(); ++j) {
              val += mine->vector()[static_cast<size_t>(i)] * q.at(i, j) * mine->vector()[static_cast<size_t>(j)];
            }
          }
          if (mod_reduce(val - Int(t), pk.modulus()) != 0) {
            c.require(false, "returned vector fails verification");
            return;
          }
        }
      }
    }
  }
}

// Criterion 7: symbol invariance under random changes of basis.
void criterion7() {
  Criterion c("criterion-7 symbol invariance (300 pairs per prime)");
  Rng rng = make_rng(7001);
  for (const Int& p : {Int(2), Int(3), Int(5), Int(7)}) {
    for (int trial = 0; trial < 300; ++trial) {
      int n = 1 + trial % 5;
      IntQuadForm q = random_form(rng, n, 30);
      unsigned k = ord_p(q.det(), p) + (p == 2 ? 3u : 1u);
      PrimePower pk(p, k);
      ModMatrix v = random_gl(n, pk, rng);
      IntQuadForm q2 = ModMatrix::from_form(q, pk).congruent(v).to_form();
      bool same;
      if (p == 2) {
        same = canonical_two_symbol(two_symbol(q)) == canonical_two_symbol(two_symbol(q2));
      } else {
        same = p_symbol(q, p) == p_symbol(q2, p);
      }
      if (!same) {
        c.require(false, "symbol changed under conjugation");
        return;
      }
    }
  }
}

// Criterion 8: smoke benchmark, a regression tripwire only.
void criterion8() {
  Criterion c("criterion-8 smoke benchmark n=20 k=30 p=3 under 10 s");
  Rng rng = make_rng(8001);
  IntQuadForm q = random_form(rng, 20);
  auto start = Clock::now();
  auto [canon, w] = canonicalize(q, 3, 30);
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  c.require(secs < 10.0, "canonicalization took " + std::to_string(secs) + "s");
  c.require(w.target() == canon.matrix(), "smoke witness mismatch");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (g_failures == 0) {
    std::printf("ALL ACCEPTANCE CRITERIA PASSED\n");
  } else {
    std::printf("%d ACCEPTANCE CRITERIA FAILED\n", g_failures);
  }
  return g_failures == 0 ? 0 : 1;
}
