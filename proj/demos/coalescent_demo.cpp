// simulates the spatial coalescent for a clustering and a coexistence family
// and prints how the pair-merge probability moves with the horizon

#include <cstdio>

#include "hiercan/hiercan.hpp"

using namespace hiercan;

static void run(const char* name, const ParamFamily& p, int N) {
  CoalescentConfig cfg;
  cfg.params = p;
  cfg.N = N;
  cfg.level_cut = 6;
  Environment env(EnvLaw::two_point(0.5, 1.5, 0.5), 42);
  PairCoalescence pc =
      pair_coalescence_estimate(cfg, env, {2.0, 8.0, 32.0, 128.0}, 400, 7, 2);
  std::printf("%s\n", name);
  for (std::size_t i = 0; i < pc.horizons.size(); ++i)
    std::printf("  T=%7.1f  P(merged)=%.3f +- %.3f\n", pc.horizons[i], pc.prob[i],
                pc.se[i]);
}

int main() {
  ParamFamily cluster{SeqSpec::constant(1.0), SeqSpec::constant(1.0)};
  run("clustering family (c=1, lambda=1, N=3)", cluster, 3);

  ParamFamily coex{SeqSpec::exponential(1.0, 3.0), SeqSpec::constant(1.0)};
  run("coexistence family (c=3^k, lambda=1, N=4)", coex, 4);
  return 0;
}
