#include <doctest.h>

#include <random>

#include "uavco/airframe.hpp"

using namespace uavco;

TEST_CASE("flap effectiveness endpoints and reference value") {
  CHECK(flap_effectiveness(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(flap_effectiveness(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  // cf = 0.3: theta = acos(-0.4), tau = 1 - (theta - sin(theta))/pi
  CHECK(flap_effectiveness(0.3) ==
        doctest::Approx(0.6607459491435452).epsilon(1e-12));
  CHECK(flap_effectiveness(0.3) > flap_effectiveness(0.2));
}

TEST_CASE("map_design mass and aspect ratio for reference designs") {
  AirframeConfig cfg;
  const auto m = map_design(DesignParams{1.0, 0.116, 0.054}, cfg);
  CHECK(m.wing_aspect_ratio == doctest::Approx(8.620689655172413).epsilon(1e-12));
  // 0.25 fuselage + 0.0696 wing + 2 x 0.018 tail + 0.35 payload
  CHECK(m.mass == doctest::Approx(0.7056).epsilon(1e-12));
  CHECK(m.x_cg == doctest::Approx(0.37855793025871776).epsilon(1e-9));
  CHECK(m.x_np == doctest::Approx(0.18329294677628732).epsilon(1e-9));

  const auto m2 = map_design(DesignParams{0.996, 0.310, 0.245}, cfg);
  CHECK(m2.wing_aspect_ratio == doctest::Approx(3.2129032258064515).epsilon(1e-12));
}

TEST_CASE("zero structural density leaves only the payload mass") {
  AirframeConfig cfg;
  cfg.fuselage_linear_density = 0.0;
  cfg.surface_area_density = 0.0;
  const auto m = map_design(DesignParams{0.5, 0.15, 0.25}, cfg);
  CHECK(m.mass == doctest::Approx(cfg.payload_mass).epsilon(1e-15));
}

TEST_CASE("strip widths sum to the span and stations mirror exactly") {
  const auto m = map_design(DesignParams{0.7321, 0.1234, 0.2}, AirframeConfig{});
  for (const auto& surf : m.surfaces) {
    double sum = 0.0;
    for (const auto& s : surf.strips) sum += s.width;
    CHECK(sum == doctest::Approx(surf.span).epsilon(1e-12));
  }
  const auto& wing = m.surfaces[0].strips;
  const int n = static_cast<int>(wing.size());
  for (int i = 0; i < n / 2; ++i) {
    CHECK(wing[i].r[1] == -wing[n - 1 - i].r[1]);  // bitwise mirror
    CHECK(wing[i].channel_sign == -wing[n - 1 - i].channel_sign);
  }
}

TEST_CASE("inertia is symmetric positive definite and transfers consistently") {
  const auto m = map_design(DesignParams{0.9, 0.2, 0.3}, AirframeConfig{});
  CHECK((m.inertia - m.inertia.transpose()).norm() < 1e-15);
  Eigen::SelfAdjointEigenSolver<Mat3> es(m.inertia);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  const Vec3 r(0.12, -0.34, 0.56);
  const Mat3 shifted = translate_inertia(m.inertia, m.mass, r);
  const Mat3 back = shifted - m.mass * (r.squaredNorm() * Mat3::Identity() -
                                        r * r.transpose());
  CHECK((back - m.inertia).norm() / m.inertia.norm() < 1e-10);
}

TEST_CASE("mass and inertia are continuous in the design variables") {
  const DesignParams d{0.6, 0.2, 0.3};
  const auto m0 = map_design(d, AirframeConfig{});
  DesignParams dp = d;
  dp.span += 1e-6;
  dp.chord += 1e-6;
  dp.x_wing += 1e-6;
  const auto m1 = map_design(dp, AirframeConfig{});
  CHECK(std::abs(m1.mass - m0.mass) / m0.mass < 1e-3);
  CHECK((m1.inertia - m0.inertia).norm() / m0.inertia.norm() < 1e-3);
}

TEST_CASE("static margin grows as the wing moves aft") {
  AirframeConfig cfg;
  double prev = -1e9;
  for (int i = 0; i <= 18; ++i) {
    const double xw = 0.05 + i * 0.025;
    const auto m = map_design(DesignParams{0.8, 0.15, xw}, cfg);
    CHECK(static_margin(m) > prev);
    prev = static_margin(m);
  }
}

TEST_CASE("neutral point collapses to the wing AC without a tail") {
  CHECK(neutral_point(5.0, 0.1, 0.083, 0.0, 0.03, 0.72) ==
        doctest::Approx(0.083).epsilon(1e-15));
}

TEST_CASE("reference designs order their static margins") {
  AirframeConfig cfg;
  const auto nominal = map_design(DesignParams{1.0, 0.116, 0.054}, cfg);
  const auto robust = map_design(DesignParams{0.944, 0.180, 0.311}, cfg);
  CHECK(static_margin(nominal) < 0.0);
  CHECK(static_margin(nominal) < static_margin(robust));
}

TEST_CASE("map_design rejects designs outside the bounds") {
  CHECK_THROWS_AS(map_design(DesignParams{1.5, 0.1, 0.2}, AirframeConfig{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(map_design(DesignParams{0.5, 0.01, 0.2}, AirframeConfig{}),
                  std::invalid_argument);
}

TEST_CASE("perturb_design is deterministic given the seed and respects bounds") {
  const DesignParams d{0.98, 0.45, 0.1};
  std::mt19937_64 rng1(42), rng2(42);
  const auto a = perturb_design(d, 0.1, rng1);
  const auto b = perturb_design(d, 0.1, rng2);
  CHECK(a.vec() == b.vec());
  DesignBounds bounds;
  for (int k = 0; k < 200; ++k) {
    const auto p = perturb_design(d, 0.3, rng1);
    CHECK(bounds.contains(p.vec()));
  }
  // zero sigma is the identity
  const auto z = perturb_design(d, 0.0, rng1);
  CHECK(z.vec() == d.vec());
}
