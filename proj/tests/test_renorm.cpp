#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hiercan/renorm.hpp"

using namespace hiercan;

namespace {
const double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2

// root of M^2 + K M - K = 0, the degenerate-law fixed point
double poly_root(double K) { return 0.5 * (-K + std::sqrt(K * K + 4.0 * K)); }
}  // namespace

TEST_CASE("pure migration telescopes the reciprocal") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::constant(0.0)};
  VolatilityTrace t = recurse(p, EnvLaw::dirac(1.0), 1.0, 2000);
  for (int k = 0; k <= 2000; ++k) REQUIRE(std::abs(t.d[k] - 1.0 / (1.0 + k)) < 1e-12);

  // general c: 1/d_k = 1/d0 + sigma_k
  ParamFamily geo{SeqSpec::exponential(1.0, 2.0), SeqSpec::constant(0.0)};
  VolatilityTrace tg = recurse(geo, EnvLaw::dirac(1.0), 0.7, 60);
  for (int k = 0; k <= 60; ++k)
    REQUIRE(tg.d[k] == Catch::Approx(1.0 / (1.0 / 0.7 + tg.sigma[k])).epsilon(1e-13));
}

TEST_CASE("degenerate law collapses onto the frozen-at-one companion") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::constant(2.0)};
  VolatilityTrace t = recurse(p, EnvLaw::dirac(1.0), 1.0, 100);
  for (int k = 0; k <= 100; ++k) REQUIRE(t.d[k] == Catch::Approx(t.d_hi[k]).margin(1e-15));
}

TEST_CASE("randomness strictly lowers volatility") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::constant(2.0)};
  VolatilityTrace t = recurse(p, EnvLaw::two_point(0.5, 1.5, 0.5), 1.0, 50);
  for (int k = 1; k <= 50; ++k) {
    REQUIRE(t.d_lo[k] < t.d[k]);
    REQUIRE(t.d[k] < t.d_hi[k]);
  }
}

TEST_CASE("sandwich holds over randomized families") {
  std::mt19937 gen(4242);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    double cs = 0.3 + 2.0 * unif(gen), ls = 0.1 + 2.0 * unif(gen);
    double cp = -1.0 + 2.0 * unif(gen), lp = -1.0 + 2.0 * unif(gen);
    double p_hi = 0.1 + 0.8 * unif(gen);
    double lo = 0.1 + 0.85 * unif(gen);
    double hi = (1.0 - (1.0 - p_hi) * lo) / p_hi;  // keeps the mean at 1
    double d0 = 0.05 + 3.0 * unif(gen);
    ParamFamily p{SeqSpec::polynomial(cs, cp), SeqSpec::polynomial(ls, lp)};
    EnvLaw law = EnvLaw::two_point(lo, hi, p_hi);
    VolatilityTrace t = recurse(p, law, d0, 100);
    for (int k = 1; k <= 100; ++k) {
      REQUIRE(t.d_lo[k] < t.d[k]);
      REQUIRE(t.d[k] < t.d_hi[k]);
    }
  }
}

TEST_CASE("each step map is increasing and concave in the incoming volatility") {
  EnvLaw law = EnvLaw::two_point(0.5, 1.5, 0.5);
  double c = 1.3, mu = 0.8;
  double prev = mobius_step(c, mu, 0.0, law);
  double prev_slope = 1e300;
  for (int i = 1; i <= 40; ++i) {
    double d = 0.25 * i;
    double cur = mobius_step(c, mu, d, law);
    double slope = (cur - prev) / 0.25;
    REQUIRE(cur > prev);
    REQUIRE(slope < prev_slope);
    prev = cur;
    prev_slope = slope;
  }
}

TEST_CASE("volatility is monotone in every earlier rate") {
  std::vector<double> cs(12, 1.0), ls(12, 1.0);
  EnvLaw law = EnvLaw::two_point(0.5, 1.5, 0.5);
  ParamFamily base{SeqSpec::explicit_values(cs), SeqSpec::explicit_values(ls)};
  double ref = recurse(base, law, 1.0, 11).d[11];
  for (int l = 0; l < 11; ++l) {
    auto cs2 = cs, ls2 = ls;
    cs2[l] *= 1.5;
    ParamFamily pc{SeqSpec::explicit_values(cs2), SeqSpec::explicit_values(ls)};
    REQUIRE(recurse(pc, law, 1.0, 11).d[11] >= ref);
    ls2[l] *= 1.5;
    ParamFamily pl{SeqSpec::explicit_values(cs), SeqSpec::explicit_values(ls2)};
    REQUIRE(recurse(pl, law, 1.0, 11).d[11] >= ref);
  }
}

TEST_CASE("fixed point matches the closed-form quadratic root") {
  for (double K : {0.25, 1.0, 4.0}) {
    FixedPoint fp = fixed_point_poly(K, EnvLaw::dirac(1.0));
    REQUIRE(fp.M == Catch::Approx(poly_root(K)).margin(1e-10));
    REQUIRE(fp.residual < 1e-12);
    REQUIRE(fp.beta > 0.0);
    REQUIRE(fp.beta < 1.0);
  }
  REQUIRE(fixed_point_poly(1.0, EnvLaw::dirac(1.0)).M ==
          Catch::Approx(kGolden).margin(1e-10));
  // K -> 0 drives the root to 0
  REQUIRE(fixed_point_poly(1e-8, EnvLaw::dirac(1.0)).M < 1e-3);
  REQUIRE(fixed_point_poly(1e-8, EnvLaw::dirac(1.0)).M > 0.0);
  REQUIRE_THROWS_AS(fixed_point_poly(0.0, EnvLaw::dirac(1.0)), std::invalid_argument);
}

TEST_CASE("averaging strictly lowers the fixed point") {
  for (double K : {0.3, 1.0, 3.0}) {
    double rand_M = fixed_point_poly(K, EnvLaw::two_point(0.5, 1.5, 0.5)).M;
    double det_M = fixed_point_poly(K, EnvLaw::dirac(1.0)).M;
    REQUIRE(rand_M < det_M);
    REQUIRE(det_M - rand_M > 1e-4);
  }
}

TEST_CASE("exponential-family fixed point") {
  // c = 1/2, ratio limit 1, degenerate law: M^2 + (c + c - 1) M - c = 0 gives sqrt(2)/2
  FixedPoint fp = fixed_point_exp(0.5, 1.0, EnvLaw::dirac(1.0));
  REQUIRE(fp.M == Catch::Approx(0.7071067811865476).margin(1e-10));
  REQUIRE(fp.residual < 1e-12);
  REQUIRE_THROWS_AS(fixed_point_exp(0.0, 1.0, EnvLaw::dirac(1.0)), std::invalid_argument);
}

TEST_CASE("polynomial families sort into their cases") {
  EnvLaw law = EnvLaw::two_point(0.5, 1.5, 0.5);

  ParamFamily fa{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, 1.0)};
  ScalingClass a = classify_family(fa, law);
  REQUIRE(a.label == "a");
  REQUIRE(a.resolved);
  REQUIRE(a.diagnostic == Diagnostic::RatioC);
  REQUIRE(a.predicted == 1.0);
  REQUIRE(std::isinf(a.K));

  ParamFamily fb{SeqSpec::constant(1.0), SeqSpec::constant(2.0)};
  ScalingClass b = classify_family(fb, EnvLaw::dirac(1.0));
  REQUIRE(b.label == "b");
  REQUIRE(b.K == 1.0);
  REQUIRE(b.M == Catch::Approx(kGolden).margin(1e-10));
  REQUIRE(b.predicted == b.M);

  ParamFamily fc{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -1.0)};
  ScalingClass c = classify_family(fc, law);
  REQUIRE(c.label == "c");
  REQUIRE(c.diagnostic == Diagnostic::RatioSqrtCMu);
  REQUIRE(c.K == 0.0);
  REQUIRE(std::isinf(c.L));
  REQUIRE(c.predicted == 1.0);

  ParamFamily fd{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -2.0)};
  ScalingClass d = classify_family(fd, law);
  REQUIRE(d.label == "d");
  REQUIRE(d.diagnostic == Diagnostic::SigmaD);
  REQUIRE(d.L == Catch::Approx(1.0));
  REQUIRE(d.M == Catch::Approx(0.5 * (1.0 + std::sqrt(5.0))).margin(1e-12));

  ParamFamily fe{SeqSpec::polynomial(1.0, 1.0), SeqSpec::polynomial(2.0, -3.0)};
  ScalingClass e = classify_family(fe, law);
  REQUIRE(e.label == "e");
  REQUIRE_FALSE(e.resolved);

  ParamFamily fx{SeqSpec::polynomial(1.0, 2.0), SeqSpec::polynomial(2.0, -3.0)};
  ScalingClass x = classify_family(fx, law);
  REQUIRE_FALSE(x.resolved);
  REQUIRE(x.label.empty());

  ParamFamily f0{SeqSpec::constant(1.0), SeqSpec::constant(0.0)};
  ScalingClass z = classify_family(f0, law);
  REQUIRE_FALSE(z.resolved);
  REQUIRE(z.note.find("no resampling") != std::string::npos);

  ParamFamily fex{SeqSpec::explicit_values({1.0}), SeqSpec::constant(1.0)};
  REQUIRE_THROWS_AS(classify_family(fex, law), std::invalid_argument);
}

TEST_CASE("exponential families sort into their cases") {
  EnvLaw law = EnvLaw::dirac(1.0);

  ParamFamily fA{SeqSpec::exponential(1.0, 0.5), SeqSpec::exponential(2.0, 0.8)};
  ScalingClass A = classify_family(fA, law);
  REQUIRE(A.label == "A");
  REQUIRE(A.predicted == Catch::Approx(2.0));

  ParamFamily fB{SeqSpec::exponential(1.0, 0.5), SeqSpec::exponential(2.0, 0.5)};
  ScalingClass B = classify_family(fB, law);
  REQUIRE(B.label == "B");
  REQUIRE(B.Kbar == Catch::Approx(1.0));
  REQUIRE(B.predicted == Catch::Approx(std::sqrt(2.0)).margin(1e-9));

  ParamFamily fC1{SeqSpec::exponential(1.0, 0.5), SeqSpec::exponential(2.0, 0.5, -1.0)};
  ScalingClass C1 = classify_family(fC1, law);
  REQUIRE(C1.label == "C1");
  REQUIRE(C1.predicted == Catch::Approx(1.0));

  ParamFamily fC2{SeqSpec::exponential(1.0, 2.0), SeqSpec::exponential(2.0, 2.0, -1.0)};
  ScalingClass C2 = classify_family(fC2, law);
  REQUIRE(C2.label == "C2");
  REQUIRE(C2.diagnostic == Diagnostic::RatioMu);
  REQUIRE(C2.predicted == Catch::Approx(1.0));
  REQUIRE(C2.kK_limit == Catch::Approx(1.0));

  ParamFamily fC2s{SeqSpec::exponential(1.0, 2.0), SeqSpec::exponential(2.0, 2.0, -2.0)};
  ScalingClass C2s = classify_family(fC2s, law);
  REQUIRE_FALSE(C2s.resolved);
  REQUIRE(C2s.note.find("summable") != std::string::npos);

  ParamFamily fC3{SeqSpec::exponential(1.0, 0.8), SeqSpec::exponential(2.0, 0.5, -1.0)};
  ScalingClass C3 = classify_family(fC3, law);
  REQUIRE(C3.label == "C3");
  REQUIRE(C3.diagnostic == Diagnostic::SigmaD);
  REQUIRE(C3.predicted == 1.0);
}

TEST_CASE("the ratio diagnostic converges at the predicted rate") {
  // constant migration and resampling, degenerate law: geometric contraction
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::constant(2.0)};
  ScalingClass cls = classify_family(p, EnvLaw::dirac(1.0));
  VolatilityTrace t = recurse(p, EnvLaw::dirac(1.0), 1.0, 200);
  ScalingVerdict v = verify_scaling(t, cls, p, 100, 200);
  REQUIRE(v.gap < 1e-6);
  REQUIRE(v.predicted == Catch::Approx(kGolden).margin(1e-10));
}

TEST_CASE("interface-sum diagnostic reaches its limit slowly but surely") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -2.0)};
  ScalingClass cls = classify_family(p, EnvLaw::two_point(0.5, 1.5, 0.5));
  VolatilityTrace t = recurse(p, EnvLaw::two_point(0.5, 1.5, 0.5), 1.0, 10000);
  ScalingVerdict v = verify_scaling(t, cls, p, 10000, 10000);
  REQUIRE(v.gap < 1e-2);
}

TEST_CASE("dominant resampling drives the ratio to the top") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, 1.0)};
  ScalingClass cls = classify_family(p, EnvLaw::two_point(0.5, 1.5, 0.5));
  VolatilityTrace t = recurse(p, EnvLaw::two_point(0.5, 1.5, 0.5), 1.0, 1000);
  ScalingVerdict v = verify_scaling(t, cls, p, 1000, 1000);
  REQUIRE(t.ratio_c[1000] > 1.0 - 1e-2);
  REQUIRE(t.ratio_c[1000] <= 1.0);
  REQUIRE(v.gap < 1e-2);
}

TEST_CASE("scaling verification guards its inputs") {
  ParamFamily p{SeqSpec::polynomial(1.0, 1.0), SeqSpec::polynomial(2.0, -3.0)};
  EnvLaw law = EnvLaw::dirac(1.0);
  ScalingClass e = classify_family(p, law);
  VolatilityTrace t = recurse(p, law, 1.0, 50);
  REQUIRE_THROWS_AS(verify_scaling(t, e, p, 10, 40), std::invalid_argument);
  ScalingClass b = classify_family(ParamFamily{SeqSpec::constant(1.0), SeqSpec::constant(2.0)}, law);
  REQUIRE_THROWS_AS(verify_scaling(t, b, p, 10, 60), std::out_of_range);
}

TEST_CASE("deterministic substitute environment reproduces the averaged recursion") {
  Substitution s0 = stability_substitution(
      ParamFamily{SeqSpec::constant(1.0), SeqSpec::constant(2.0)}, EnvLaw::dirac(1.0), 1.0, 200);
  for (double r : s0.r) REQUIRE(r == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(s0.max_dev < 1e-14);

  std::mt19937 gen(777);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    ParamFamily p{SeqSpec::polynomial(0.5 + 2.0 * unif(gen), -1.0 + 2.0 * unif(gen)),
                  SeqSpec::polynomial(0.2 + 2.0 * unif(gen), -1.0 + 2.0 * unif(gen))};
    double d0 = 0.05 + 2.0 * unif(gen);
    Substitution s = stability_substitution(p, EnvLaw::two_point(0.5, 1.5, 0.5), d0, 300);
    REQUIRE(s.max_dev < 1e-12);
  }
}

TEST_CASE("substitute factors drift to one when resampling fades") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::polynomial(2.0, -2.0)};
  Substitution s = stability_substitution(p, EnvLaw::two_point(0.5, 1.5, 0.5), 1.0, 1000);
  REQUIRE(std::abs(s.r[999] - 1.0) < 1e-2);
  // and they sit strictly below 1 on the way (the high atom is discounted)
  REQUIRE(s.r[10] < 1.0);
}

TEST_CASE("recursion rejects bad inputs") {
  ParamFamily p{SeqSpec::constant(1.0), SeqSpec::constant(1.0)};
  REQUIRE_THROWS_AS(recurse(p, EnvLaw::dirac(1.0), -0.5, 10), std::invalid_argument);
  ParamFamily zero_c{SeqSpec::constant(0.0), SeqSpec::constant(1.0)};
  REQUIRE_THROWS_AS(recurse(zero_c, EnvLaw::dirac(1.0), 1.0, 10), std::invalid_argument);
}
