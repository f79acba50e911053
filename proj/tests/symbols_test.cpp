#include "padiq/symbols.hpp"

#include <gtest/gtest.h>

#include "padiq/oracle.hpp"

namespace padiq {
namespace {

TEST(PSymbol, KnownForms) {
  PSymbolOdd s = p_symbol(IntQuadForm::diagonal({2, 2}), 3);
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(s.entries[0], (PSymbolEntry{0, 1, 2}));  // det unit part 4 is a residue

  s = p_symbol(IntQuadForm::diagonal({1, 3, 9}), 3);
  ASSERT_EQ(s.entries.size(), 3u);
  EXPECT_EQ(s.to_string(), "1^+1 3^+1 9^+1");

  s = p_symbol(IntQuadForm::diagonal({1, 6}), 3);
  EXPECT_EQ(s.to_string(), "1^+1 3^-1");
}

TEST(TwoSymbol, KnownForms) {
  TwoSymbol s = two_symbol(IntQuadForm::from_rows({{2, 1}, {1, 2}}));
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(s.entries[0], (TwoSymbolEntry{0, -1, 2, BlockType::kTypeII, 0}));

  s = two_symbol(IntQuadForm::diagonal({1, 7}));
  EXPECT_EQ(s.entries[0], (TwoSymbolEntry{0, 1, 2, BlockType::kTypeI, 0}));

  s = two_symbol(IntQuadForm::diagonal({3, 5}));
  EXPECT_EQ(s.entries[0], (TwoSymbolEntry{0, 1, 2, BlockType::kTypeI, 0}));
  EXPECT_EQ(s.to_string(), "[1^+2]_0");
}

TEST(Partition, PaperWorkedExample) {
  TwoSymbol s = TwoSymbol::parse("1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0");
  TrainStructure st = partition(s);
  ASSERT_EQ(st.trains.size(), 1u);
  EXPECT_EQ(st.trains[0], (Interval{0, 5}));
  ASSERT_EQ(st.compartments.size(), 2u);
  EXPECT_EQ(st.compartments[0], (Interval{1, 2}));
  EXPECT_EQ(st.compartments[1], (Interval{4, 4}));
}

TEST(Partition, AdjacentTypeIIFormsSplitTrains) {
  TwoSymbol s = TwoSymbol::parse("1^+2_0 2^-2_0 4^+2_0");
  TrainStructure st = partition(s);
  ASSERT_EQ(st.trains.size(), 3u);
  EXPECT_TRUE(st.compartments.empty());
}

TEST(Partition, SingleTypeIFormIsItsOwnTrainAndCompartment) {
  TwoSymbol s = TwoSymbol::parse("[2^+1]_3");
  TrainStructure st = partition(s);
  ASSERT_EQ(st.trains.size(), 1u);
  EXPECT_EQ(st.trains[0], (Interval{1, 1}));
  ASSERT_EQ(st.compartments.size(), 1u);
}

TEST(OddityFuse, CompartmentTotals) {
  TwoSymbol a = two_symbol(IntQuadForm::diagonal({3, 5}));
  TwoSymbol b = two_symbol(IntQuadForm::diagonal({1, 7}));
  auto fa = oddity_fuse(a, partition(a));
  auto fb = oddity_fuse(b, partition(b));
  ASSERT_EQ(fa.size(), 1u);
  EXPECT_EQ(fa[0].second, 0);
  EXPECT_EQ(fb[0].second, 0);

  TwoSymbol c = TwoSymbol::parse("[1^+1]_3");
  EXPECT_EQ(oddity_fuse(c, partition(c))[0].second, 3);
}

TEST(SignWalk, PaperWorkedExampleBitExact) {
  TwoSymbol s = TwoSymbol::parse("1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0");
  EXPECT_EQ(s.to_string(), "1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0");
  TwoSymbol walked = sign_walk_symbol(s, 1, 4);
  EXPECT_EQ(walked.to_string(), "1^+2_0 [2^+2 4^+3]_3 8^+0 [16^-1]_5 32^+2_0");
}

TEST(SignWalk, SameScaleIsIdentity) {
  TwoSymbol s = TwoSymbol::parse("[1^+1 2^-1]_4");
  EXPECT_EQ(sign_walk_symbol(s, 1, 1), s);
}

TEST(SignWalk, AcrossAGapShiftsBothCompartments) {
  // 1 (+) 2^2 and 5 (+) 2^2*5 are equivalent: flipping scales 0 and 2
  // shifts both singleton compartments by 4.
  TwoSymbol s = TwoSymbol::parse("[1^+1]_1 [4^+1]_1");
  TwoSymbol walked = sign_walk_symbol(s, 0, 2);
  EXPECT_EQ(walked.to_string(), "[1^-1]_5 [4^-1]_5");
  EXPECT_EQ(walked, two_symbol(IntQuadForm::diagonal({5, 20})));
}

TEST(SignWalk, RejectsScalesFromDifferentTrains) {
  TwoSymbol s = TwoSymbol::parse("1^+2_0 2^-2_0");
  EXPECT_THROW(sign_walk_symbol(s, 0, 1), precondition_error);
}

TEST(SignWalk, InvolutionOnSigns) {
  TwoSymbol s = TwoSymbol::parse("[1^+1 2^-1 4^+2]_6");
  TwoSymbol twice = sign_walk_symbol(sign_walk_symbol(s, 0, 2), 0, 2);
  EXPECT_EQ(twice, s);
}

TEST(CanonicalTwoSymbol, PaperExample) {
  TwoSymbol original = TwoSymbol::parse("1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0");
  CanonicalTwoSymbol canon = canonical_two_symbol(original);
  EXPECT_EQ(canon.to_string(), "1^-2 [2^2 4^3]_7 [16^1]_1 32^2");

  // The walked form of the same symbol is in the same class and must give
  // the identical canonical symbol.
  TwoSymbol walked = sign_walk_symbol(original, 1, 4);
  EXPECT_EQ(canonical_two_symbol(walked), canon);
  EXPECT_EQ(canonical_two_symbol(walked).to_string(), "1^-2 [2^2 4^3]_7 [16^1]_1 32^2");
}

TEST(CanonicalTwoSymbol, AllPlusIsFixed) {
  TwoSymbol s = TwoSymbol::parse("[1^+2 2^+1]_5 4^+2_0");
  CanonicalTwoSymbol c = canonical_two_symbol(s);
  EXPECT_EQ(c.entries[0].sign, 1);
  EXPECT_EQ(c.entries[1].sign, 1);
  EXPECT_EQ(c.entries[2].sign, 1);
  EXPECT_EQ(c.compartment_oddities[0].second, 5);
}

TEST(CanonicalTwoSymbol, TwoMinusesCancelWithOddityShift) {
  // diag(3, 6): signs (-,-), total 6 -> canonical (+,+), total 2, the
  // class of diag(1, 2).
  CanonicalTwoSymbol a = canonical_two_symbol(two_symbol(IntQuadForm::diagonal({3, 6})));
  CanonicalTwoSymbol b = canonical_two_symbol(two_symbol(IntQuadForm::diagonal({1, 2})));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.compartment_oddities[0].second, 2);
}

TEST(CanonicalTwoSymbol, Idempotent) {
  // Canonicalizing a symbol whose signs already satisfy the convention
  // changes nothing.
  TwoSymbol s = TwoSymbol::parse("1^-2_0 [2^+2 4^+3]_7 [16^+1]_1 32^+2_0");
  CanonicalTwoSymbol c = canonical_two_symbol(s);
  EXPECT_EQ(c.to_string(), "1^-2 [2^2 4^3]_7 [16^1]_1 32^2");
}

TEST(Equivalent, PaperPairsAtTwo) {
  EXPECT_TRUE(equivalent(IntQuadForm::diagonal({3, 5}), IntQuadForm::diagonal({1, 7}), 2));
  EXPECT_TRUE(equivalent(IntQuadForm::diagonal({1, 4}), IntQuadForm::diagonal({5, 20}), 2));
  EXPECT_FALSE(equivalent(IntQuadForm::diagonal({1, 1}), IntQuadForm::diagonal({1, 3}), 2));
}

TEST(Equivalent, OddPrimeSigns) {
  EXPECT_FALSE(equivalent(IntQuadForm::diagonal({1, 1}), IntQuadForm::diagonal({1, 2}), 3));
  EXPECT_TRUE(equivalent(IntQuadForm::diagonal({4, 1}), IntQuadForm::diagonal({1, 1}), 3));
}

TEST(Equivalent, MatchesBruteForceOverZ8) {
  // Over the n = 2 universe mod 8 (odd determinant), canonical 2-symbol
  // equality must match orbit equality exactly.
  PrimePower pk(2, 3);
  std::vector<IntQuadForm> forms;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      for (int c = 0; c < 8; ++c) {
        IntQuadForm q = IntQuadForm::from_rows({{a, b}, {b, c}});
        Int det = q.det();
        if (det == 0 || det % 2 == 0) continue;
        forms.push_back(q);
      }
    }
  }
  int checked = 0;
  for (size_t i = 0; i < forms.size(); i += 7) {
    for (size_t j = 0; j < forms.size(); j += 11) {
      bool brute = brute_equivalent(ModMatrix::from_form(forms[i], pk), ModMatrix::from_form(forms[j], pk)).has_value();
      EXPECT_EQ(equivalent(forms[i], forms[j], 2), brute) << forms[i].at(0, 0) << " vs " << forms[j].at(0, 0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 400);
}

TEST(SymbolInvariance, RandomConjugation) {
  Rng rng = make_rng(211);
  const Int primes[] = {2, 3, 5, 7};
  for (int trial = 0; trial < 120; ++trial) {
    int n = 2 + trial % 4;
    IntQuadForm q(n);
    do {
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          Int v = uniform_int(rng, 41) - 20;
          q.at(i, j) = v;
          q.at(j, i) = v;
        }
      }
    } while (q.det() == 0);
    const Int& p = primes[trial % 4];
    unsigned k = ord_p(q.det(), p) + (p == 2 ? 3 : 1);
    PrimePower pk(p, k);
    ModMatrix v = random_gl(n, pk, rng);
    IntQuadForm q2 = ModMatrix::from_form(q, pk).congruent(v).to_form();
    if (p == 2) {
      EXPECT_EQ(canonical_two_symbol(two_symbol(q)), canonical_two_symbol(two_symbol(q2)));
    } else {
      EXPECT_EQ(p_symbol(q, p), p_symbol(q2, p));
    }
  }
}

TEST(SymbolInvariance, LocalTransformationsPreserveSymbols) {
  // apply_local embeddings keep the whole form in its class.
  Rng rng = make_rng(223);
  for (int trial = 0; trial < 40; ++trial) {
    const Int p = trial % 2 == 0 ? 2 : 3;
    unsigned k = p == 2 ? 5 : 3;
    PrimePower pk(p, k);
    std::vector<ScaledBlock> blocks;
    for (int i = 0; i < 3; ++i) {
      Int unit;
      do {
        unit = uniform_int(rng, pk.modulus());
      } while (unit % p == 0);
      blocks.push_back({static_cast<unsigned>(i % 2), Block::type1(unit)});
    }
    BlockDiagForm d(pk, blocks, 0);
    ModMatrix v = random_gl(2, pk, rng);
    auto [out, w] = apply_local(d, 1, v);
    IntQuadForm before = d.assemble().to_form();
    IntQuadForm after = out.to_form();
    if (p == 2) {
      EXPECT_EQ(canonical_two_symbol(two_symbol(before)), canonical_two_symbol(two_symbol(after)));
    } else {
      EXPECT_EQ(p_symbol(before, p), p_symbol(after, p));
    }
  }
}

TEST(TwoSymbolGrammar, ParseRoundTrip) {
  for (const char* text : {
           "1^+2_0 [2^-2 4^+3]_3 8^+0 [16^+1]_1 32^+2_0",
           "[1^+2]_0",
           "[1^-1]_5 [4^-1]_5",
           "1^-2_0",
           "[2^+1 4^+1 8^+2]_4 16^+2_0",
       }) {
    EXPECT_EQ(TwoSymbol::parse(text).to_string(), text);
  }
}

TEST(TwoSymbolGrammar, RejectsMalformedInput) {
  EXPECT_THROW(TwoSymbol::parse("3^+1"), precondition_error);        // not a power of 2
  EXPECT_THROW(TwoSymbol::parse("1^+1 1^+1"), precondition_error);   // repeated scale
  EXPECT_THROW(TwoSymbol::parse("[8^+0]"), precondition_error);      // gap inside compartment
  EXPECT_THROW(TwoSymbol::parse("2^"), precondition_error);
}

}  // namespace
}  // namespace padiq
