// Place the poles of a small descriptor system and print what came out.
//
// The system has a singular E (one algebraic equation), two inputs, and we
// ask for one infinite pole, one real pole and a complex pair.

#include <cstdio>

#include "drschur/drschur.hpp"

int main() {
  using namespace drschur;

  Problem p;
  p.E = MatrixXd::Zero(4, 4);
  p.E.diagonal() << 1.0, 1.0, 1.0, 0.0;
  p.A.resize(4, 4);
  p.A << 0, 1, 0, 0,
         0, 0, 1, 0,
         0, 0, 0, 1,
         1, 0, 0, 1;
  p.B.resize(4, 2);
  p.B << 0, 0,
         1, 0,
         0, 0,
         0, 1;
  p.r = 3;
  p.poles = {PolePair::infinite(), PolePair::real(-1.0, 1.0), PolePair::finite({-0.5, 2.0})};

  const ValidationReport val = validate_problem(p);
  if (!val.ok) {
    for (const auto& f : val.failures) std::printf("invalid: %s\n", f.c_str());
    return 1;
  }

  const Solution sol = run_pipeline(p);
  const Report rep = verify_solution(p, sol);

  std::printf("precs        %8.2f\n", rep.precs);
  std::printf("departure    %.3e\n", rep.deltaF2);
  std::printf("||F||, ||G|| %.4f, %.4f\n", rep.normF, rep.normG);
  std::printf("kappa(X)     %.4f\n", rep.kappaXGF);
  std::printf("index <= 1   %s\n", rep.index_ok ? "yes" : "no");

  std::printf("closed-loop poles:\n");
  for (const auto& pole : generalized_eig_oracle(p.A + p.B * sol.F, p.E + p.B * sol.G)) {
    if (pole.is_infinite()) {
      std::printf("  inf\n");
    } else {
      const Complex l = pole.lambda();
      std::printf("  %.12f %+.12fi%s\n", l.real(), l.imag(), pole.is_complex() ? " (and conjugate)" : "");
    }
  }
  return rep.pass ? 0 : 1;
}
