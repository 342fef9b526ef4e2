// walks a few textbook parameter families through the full classification
// pipeline and prints one line per family

#include <cstdio>

#include "hiercan/hiercan.hpp"

using namespace hiercan;

static void show(const char* name, const ParamFamily& p, const EnvLaw& law, int N) {
  DichotomyVerdict v = classify_finite_N(p, N);
  ScalingClass sc = classify_family(p, law);
  ClusterClass cc = cluster_class(sc);
  std::printf("%-28s regime=%-11s scaling=%-3s cluster=%-4s %s\n", name,
              regime_name(v.regime), sc.resolved ? sc.label.c_str() : "?",
              cc.resolved ? regime_tag(cc.regime) : "?",
              cc.caveat.empty() ? "" : "(limit in probability)");
}

int main() {
  EnvLaw law = EnvLaw::two_point(0.5, 1.5, 0.5);
  int N = 3;

  ParamFamily flat{SeqSpec::constant(1.0), SeqSpec::constant(1.0)};
  show("c=1, lambda=1", flat, law, N);

  ParamFamily poly{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -1.0)};
  show("c=1, lambda~1/k", poly, law, N);

  ParamFamily steep{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -3.0)};
  show("c=1, lambda~1/k^3", steep, law, N);

  ParamFamily geo{SeqSpec::exponential(1.0, 2.0), SeqSpec::exponential(1.0, 2.0)};
  show("c=2^k, lambda=2^k", geo, law, N);

  ParamFamily coex{SeqSpec::exponential(1.0, 2.5), SeqSpec::constant(1.0)};
  show("c=2.5^k, lambda=1", coex, law, N);
  return 0;
}
