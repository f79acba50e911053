// Classify a handful of binary forms over Z/2^k: print each form's
// 2-symbol, canonical symbol and canonical matrix, then recover an explicit
// transformation between two equivalent ones.

#include <iostream>

#include "padiq/padiq.hpp"

int main() {
  using namespace padiq;
  const IntQuadForm forms[] = {
      IntQuadForm::diagonal({3, 5}),
      IntQuadForm::diagonal({1, 7}),
      IntQuadForm::from_rows({{0, 1}, {1, 0}}),
      IntQuadForm::from_rows({{2, 1}, {1, 2}}),
  };
  for (const IntQuadForm& q : forms) {
    TwoSymbol sym = two_symbol(q);
    auto [canon, witness] = canonicalize(q, 2);
    std::cout << "form diag-ish [" << q.at(0, 0) << ' ' << q.at(0, 1) << "; " << q.at(1, 0) << ' ' << q.at(1, 1)
              << "]\n  2-symbol:  " << sym.to_string()
              << "\n  canonical: " << canonical_two_symbol(sym).to_string() << "\n  can_2 =    [";
    ModMatrix m = canon.matrix();
    std::cout << m.at(0, 0) << ' ' << m.at(0, 1) << "; " << m.at(1, 0) << ' ' << m.at(1, 1) << "] (mod "
              << m.modulus().modulus() << ")\n";
  }

  auto result = transform_between(IntQuadForm::diagonal({3, 5}), IntQuadForm::diagonal({1, 7}), 2, 4);
  const Witness& w = std::get<Witness>(result);
  std::cout << "\ntransform 3(+)5 -> 1(+)7 over Z/16: U = [" << w.u().at(0, 0) << ' ' << w.u().at(0, 1) << "; "
            << w.u().at(1, 0) << ' ' << w.u().at(1, 1) << "]\n";
  return 0;
}
