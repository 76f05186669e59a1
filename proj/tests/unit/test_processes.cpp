#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <vector>

#include "core/errors.hpp"
#include "core/processes.hpp"

using namespace spdnn::proc;
using spdnn::ConfigError;
using spdnn::NumericError;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// grid audit of the order-2 smoothness norm of a scalar function on [0,1]:
// sup |f| + sup |f'| + spread of f'', derivatives by central differences
double c2_norm_fd(const Target& f, int grid = 2001) {
  double h = 1e-4;
  double s0 = 0.0, s1 = 0.0, mx = -1e300, mn = 1e300;
  for (int i = 0; i <= grid; ++i) {
    double x = 0.02 + 0.96 * i / grid;  // keep the stencil inside [0,1]
    double xm = x - h, xp = x + h;
    double fm = f(&xm), f0 = f(&x), fp = f(&xp);
    s0 = std::fmax(s0, std::fabs(f0));
    s1 = std::fmax(s1, std::fabs((fp - fm) / (2.0 * h)));
    double d2 = (fp - 2.0 * f0 + fm) / (h * h);
    mx = std::fmax(mx, d2);
    mn = std::fmin(mn, d2);
  }
  return s0 + s1 + (mx - mn);
}

}  // namespace

TEST_CASE("constant and linear targets") {
  auto c = make_constant(2, 0.7);
  double x[2] = {0.1, 0.9};
  CHECK(c(x) == doctest::Approx(0.7));
  CHECK(c.d == 2);

  auto l = make_linear(2, {0.5, -0.25}, 0.1);
  CHECK(l(x) == doctest::Approx(0.1 + 0.05 - 0.225));
  CHECK_THROWS_AS(make_linear(2, {0.5}, 0.0), ConfigError);
}

TEST_CASE("sine target sits exactly on the smoothness budget") {
  CHECK(sine_holder_multiplier(2.0, 1) ==
        doctest::Approx(86.240020515894457).epsilon(1e-14));

  double K = 1.0;
  auto t = make_holder_sine(1, K, 2.0);
  double a = K / 86.240020515894457;
  for (double x : {0.0, 0.125, 0.25, 0.6, 0.9}) {
    CHECK(t(&x) == doctest::Approx(a * std::sin(kTwoPi * x)).epsilon(1e-12));
  }
  // analytic norm: a * (1 + 2 pi + 8 pi^2) = K
  CHECK(a * (1.0 + kTwoPi + 2.0 * kTwoPi * kTwoPi) ==
        doctest::Approx(K).epsilon(1e-12));
  // independent finite-difference audit stays within the ball
  CHECK(c2_norm_fd(t) <= K * (1.0 + 1e-3));

  // fractional smoothness keeps the grid quotient under the budget
  auto t15 = make_holder_sine(1, K, 1.5);
  double sup = 0.0, quot = 0.0;
  const int g = 400;
  std::vector<double> d1(g + 1);
  for (int i = 0; i <= g; ++i) {
    double x = 0.02 + 0.96 * i / g;
    double xm = x - 1e-4, xp = x + 1e-4;
    double fm = t15(&xm), fp = t15(&xp);
    double xx = x;
    sup = std::fmax(sup, std::fabs(t15(&xx)));
    d1[i] = (fp - fm) / 2e-4;
  }
  for (int i = 0; i <= g; ++i) {
    sup = std::fmax(sup, 0.0);
    for (int j = i + 1; j <= g; ++j) {
      double dx = 0.96 * (j - i) / g;
      quot = std::fmax(quot, std::fabs(d1[j] - d1[i]) / std::sqrt(dx));
    }
  }
  double s1 = 0.0;
  for (int i = 0; i <= g; ++i) s1 = std::fmax(s1, std::fabs(d1[i]));
  CHECK(sup + s1 + quot <= K * (1.0 + 1e-3));
}

TEST_CASE("quadratic target and its exact norm") {
  double K = 2.0;
  auto t = make_holder_quadratic(1, K);
  double a = 0.8 * K;
  double x = 0.5;
  CHECK(t(&x) == doctest::Approx(0.0));
  x = 0.0;
  CHECK(t(&x) == doctest::Approx(0.25 * a));
  x = -3.0;  // clamped to the cube edge
  CHECK(t(&x) == doctest::Approx(0.25 * a));
  x = 0.75;
  CHECK(t(&x) == doctest::Approx(a * 0.0625));
  // sup a/4, first-derivative sup a, constant curvature: norm 1.25 a = K
  CHECK(c2_norm_fd(t) <= K * (1.0 + 1e-3));
  CHECK(t.K == doctest::Approx(0.25 * a));
}

TEST_CASE("layered sine target stays inside the unit band") {
  auto t = make_composition({2, 2}, {1, 2}, {1.0, 2.0}, 1.0);
  CHECK(t.d == 2);
  for (double u : {0.0, 0.3, 0.77}) {
    double x[2] = {u, 1.0 - u};
    double v = t(x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(t(x) == v);  // deterministic
  }
  CHECK_THROWS_AS(make_composition({2}, {3}, {1.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(make_composition({2, 2}, {1, 2}, {1.0}, 1.0), ConfigError);
}

TEST_CASE("exponential autoregression mean and parameter checks") {
  GexparParams p;
  p.c0 = 0.1;
  p.c = {0.4};
  p.pi = {0.2};
  p.lambda = -1.0;
  p.z = {0.0};
  CHECK_NOTHROW(p.validate());
  double x = 0.5;
  CHECK(gexpar_mean(p, &x) == doctest::Approx(0.37788007830714054).epsilon(1e-15));
  auto t = make_gexpar_target(p);
  CHECK(t(&x) == doctest::Approx(0.37788007830714054));
  CHECK(t.d == 1);

  GexparParams bad = p;
  bad.pi = {0.2, 0.1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = p;
  bad.lambda = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.allow_lambda_positive = true;
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("stability check matches the worked second-order example") {
  GexparParams p;
  p.c = {0.3, 0.2};
  p.pi = {0.1, 0.1};  // envelope (0.4, 0.3)
  p.z = {0.0, 0.0};
  auto rep = gexpar_stability(p);
  CHECK(rep.stable);
  REQUIRE(rep.root_moduli.size() == 2);
  CHECK(rep.radius == doctest::Approx(0.78309518948453016).epsilon(1e-12));
  CHECK(rep.root_moduli[0] == doctest::Approx(0.78309518948453016));
  CHECK(rep.root_moduli[1] == doctest::Approx(0.38309518948453009));

  GexparParams u;
  u.c = {0.9, 0.3};
  u.pi = {0.0, 0.0};
  u.z = {0.0, 0.0};
  auto urep = gexpar_stability(u);
  CHECK_FALSE(urep.stable);
  CHECK(urep.radius > 1.0);

  GexparParams unit;
  unit.c = {1.0};
  unit.pi = {0.0};
  unit.z = {0.0};
  CHECK_FALSE(gexpar_stability(unit).stable);  // unit root is not stable

  GexparParams zero;
  zero.c = {0.0, 0.0};
  zero.pi = {0.0, 0.0};
  zero.z = {0.0, 0.0};
  auto zrep = gexpar_stability(zero);
  CHECK(zrep.stable);
  CHECK(zrep.radius == doctest::Approx(0.0));
}

TEST_CASE("autoregression simulation settles on the truth with no noise") {
  ARSpec spec;
  spec.truth = make_linear(1, {0.5}, 0.25);  // fixed point 0.5
  spec.noise.scale = 0.0;
  spec.seed = 3;
  auto ds = simulate_ar(spec, 50);
  REQUIRE(ds.size() == 50);
  REQUIRE(ds.d == 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.y[i] == doctest::Approx(0.5).epsilon(1e-9));
  }
  // windows hold the lagged series: x_t = y_{t-1}
  for (std::size_t i = 1; i < ds.size(); ++i) {
    CHECK(ds.row(i)[0] == ds.y[i - 1]);
    CHECK(ds.t[i] == ds.t[i - 1] + 1);
  }
}

TEST_CASE("autoregression simulation is seed-deterministic") {
  ARSpec spec;
  spec.truth = make_holder_quadratic(1, 1.0);
  spec.noise.scale = 0.25;
  spec.seed = 11;
  auto a = simulate_ar(spec, 64);
  auto b = simulate_ar(spec, 64);
  CHECK(a.y == b.y);
  CHECK(a.x == b.x);
  spec.seed = 12;
  auto other = simulate_ar(spec, 64);
  CHECK(a.y != other.y);
}

TEST_CASE("diverging recursions are reported, not returned") {
  ARSpec spec;
  spec.truth = make_linear(1, {2.0}, 1.0);
  spec.noise.scale = 0.0;
  spec.burn_in = 0;
  spec.seed = 1;
  // with zero noise the zero fixed point is left unstable only when kicked
  spec.noise.scale = 1.0;
  CHECK_THROWS_AS(simulate_ar(spec, 500), NumericError);
}

TEST_CASE("exponential autoregression simulation stays in range") {
  GexparParams p;
  p.c0 = 0.05;
  p.c = {0.3, 0.2};
  p.pi = {0.1, 0.1};
  p.lambda = -1.0;
  p.z = {0.0, 0.0};
  NoiseSpec noise;
  noise.scale = 0.1;
  auto ds = simulate_gexpar(p, 200, noise, 5);
  REQUIRE(ds.size() == 200);
  REQUIRE(ds.d == 2);
  for (double v : ds.y) {
    CHECK(std::isfinite(v));
    CHECK(std::fabs(v) < 10.0);
  }
  auto again = simulate_gexpar(p, 200, noise, 5);
  CHECK(ds.y == again.y);
}

TEST_CASE("binary chain frequencies match the conditional probabilities") {
  BinaryARSpec spec;
  spec.f = make_linear(1, {0.4}, 0.0);
  spec.g_offset = 0.1;
  spec.seed = 21;
  auto ds = simulate_binary(spec, 40000);
  REQUIRE(ds.d == 1);
  std::size_t up_total = 0, up_hits = 0, dn_total = 0, dn_hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK((ds.y[i] == 1.0 || ds.y[i] == -1.0));
    if (ds.row(i)[0] > 0.0) {
      ++up_total;
      up_hits += ds.y[i] > 0.0;
    } else {
      ++dn_total;
      dn_hits += ds.y[i] > 0.0;
    }
  }
  // eta(+1) = (1 + 0.4 + 0.1)/2 = 0.75, eta(-1) = (1 - 0.4 + 0.1)/2 = 0.35
  double up = static_cast<double>(up_hits) / up_total;
  double dn = static_cast<double>(dn_hits) / dn_total;
  CHECK(std::fabs(up - 0.75) < 4.0 * std::sqrt(0.75 * 0.25 / up_total));
  CHECK(std::fabs(dn - 0.35) < 4.0 * std::sqrt(0.35 * 0.65 / dn_total));

  spec.recode01 = true;
  auto rec = simulate_binary(spec, 200);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    CHECK((rec.row(i)[0] == 0.0 || rec.row(i)[0] == 1.0));
    CHECK((rec.y[i] == 1.0 || rec.y[i] == -1.0));
  }
}

TEST_CASE("binary chain rejects probabilities outside [0,1]") {
  BinaryARSpec spec;
  spec.f = make_linear(1, {0.8}, 0.0);
  spec.g_offset = 0.3;  // 1 + 0.8 + 0.3 > 2
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.g_offset = 0.2;
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("dataset CSV round trip is exact") {
  ARSpec spec;
  spec.truth = make_holder_quadratic(2, 1.0);
  spec.noise.scale = 0.3;
  spec.seed = 9;
  auto ds = simulate_ar(spec, 32);
  std::string path = "unit_dataset_roundtrip.csv";
  ds.save_csv(path);
  auto back = Dataset::load_csv(path);
  REQUIRE(back.size() == ds.size());
  REQUIRE(back.d == ds.d);
  CHECK(back.y == ds.y);
  CHECK(back.x == ds.x);
  CHECK(back.t == ds.t);
  std::remove(path.c_str());
  CHECK_THROWS_AS(Dataset::load_csv("missing_file.csv"), ConfigError);
}

TEST_CASE("target configs parse and reject unknown kinds") {
  using nlohmann::json;
  auto t = make_target(json{{"kind", "holder-sine"}, {"d", 1}, {"K", 2.0},
                            {"s", 2.0}});
  double x = 0.25;
  CHECK(t(&x) == doctest::Approx(2.0 / 86.240020515894457).epsilon(1e-12));
  CHECK_THROWS_AS(make_target(json{{"kind", "mystery"}}), ConfigError);
  CHECK_THROWS_AS(make_target(json{{"kind", "linear"}}), ConfigError);
}
