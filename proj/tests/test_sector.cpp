#include <catch_amalgamated.hpp>

#include "heis/sector.hpp"

using namespace heis;

namespace {

const CalibratedKernel& shared_kernel() {
  static CalibratedKernel k = make_calibrated_kernel(
      VectorFieldId::X(1, 1), default_calibration_sample(VectorFieldId::X(1, 1), 12, 2024));
  return k;
}

const SectorSpec& shared_spec() {
  static SectorSpec s = find_direction_point(VectorFieldId::X(1, 1), 48, {}, shared_kernel());
  return s;
}

}  // namespace

TEST_CASE("unit ball volume closed form") {
  CHECK(koranyi_unit_ball_volume(Mode::heisenberg, 1) ==
        Catch::Approx(M_PI * M_PI / 2).epsilon(1e-12));
  CHECK(koranyi_unit_ball_volume(Mode::abelian, 2) == Catch::Approx(M_PI).epsilon(1e-12));
  CHECK(koranyi_unit_ball_volume(Mode::abelian, 3) ==
        Catch::Approx(4.0 * M_PI / 3.0).epsilon(1e-12));
  // against the Monte-Carlo estimate
  double mc = unit_ball_volume_mc(Mode::heisenberg, 1, 400000, 5);
  CHECK(mc == Catch::Approx(M_PI * M_PI / 2).epsilon(0.02));
}

TEST_CASE("direction point: sphere norm, envelope, dyadic radii") {
  const auto& spec = shared_spec();
  CHECK(koranyi_norm(spec.g_tilde) == Catch::Approx(1.0).margin(1e-10));
  CHECK(std::abs(spec.kernel_at_inv) > 0.0);
  CHECK(spec.eps > 0.0);
  CHECK(spec.eps < 1.0);
  // alpha, beta inside the reverse-triangle envelope
  CHECK(spec.alpha >= 1.0 - spec.c_rho * spec.eps - 1e-12);
  CHECK(spec.beta <= 1.0 + spec.c_rho * spec.eps + 1e-12);
  CHECK(spec.alpha <= 1.0);
  CHECK(spec.beta >= 1.0);
  // r_o = 2^gamma, the smallest power of two above 1/eps
  CHECK(spec.r_o > 1.0 / spec.eps);
  CHECK(spec.r_o / 2.0 <= 1.0 / spec.eps);
  double lg = std::log2(spec.r_o);
  CHECK(lg == Catch::Approx(std::round(lg)));
  // deterministic construction
  auto spec2 = find_direction_point(VectorFieldId::X(1, 1), 48, {}, shared_kernel());
  CHECK(spec2.g_tilde.x[0] == spec.g_tilde.x[0]);
  CHECK(spec2.eps == spec.eps);
}

TEST_CASE("sector membership: generators, truncation, ray monotonicity") {
  const auto& spec = shared_spec();
  GroupPoint base = GroupPoint::h1(0.3, -0.7, 0.4);
  SectorRegion region{spec, base, 1.0};

  // centre generator at s = 2 r_o
  CHECK(sector_contains(region, compose(base, dilate(2.0 * spec.r_o, spec.g_tilde))));
  // far below the inner truncation
  GroupPoint near = compose(base, dilate(0.5 * spec.r_o * spec.alpha / spec.beta, spec.g_tilde));
  CHECK_FALSE(sector_contains(region, near));
  // the base point itself
  CHECK_FALSE(sector_contains(region, base));

  // rays s -> base o delta_s(g_tilde) switch on once and stay on
  bool seen_true = false;
  for (int k = 0; k <= 60; ++k) {
    double s = spec.r_o * std::pow(1.12, k) / 4.0;
    bool in = sector_contains(region, compose(base, dilate(s, spec.g_tilde)));
    if (seen_true) REQUIRE(in);
    if (in) seen_true = true;
  }
  CHECK(seen_true);

  // translation equivariance
  GroupPoint h = GroupPoint::h1(-0.2, 0.5, -0.9);
  SectorRegion shifted{spec, compose(h, base), 1.0};
  Rng rng(404);
  for (int i = 0; i < 40; ++i) {
    GroupPoint q = GroupPoint::h1(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    GroupPoint p = compose(base, dilate(spec.r_o * rng.uniform(1.0, 40.0), q));
    CHECK(sector_contains(region, p) == sector_contains(shifted, compose(h, p)));
  }
}

TEST_CASE("sampled sector points are members") {
  const auto& spec = shared_spec();
  SectorRegion region{spec, GroupPoint::identity(Mode::heisenberg, 1), 1.0};
  for (const auto& p : sector_sample(region, 200, 31)) {
    REQUIRE(sector_contains(region, p));
    REQUIRE(koranyi_norm(p) >= spec.r_o * spec.alpha / spec.beta * 0.999);
  }
}

TEST_CASE("kernel lower bound and sign constancy over sampled pairs") {
  const auto& spec = shared_spec();
  const auto& kernel = shared_kernel();
  SectorRegion region{spec, GroupPoint::h1(0.1, 0.2, -0.3), 1.0};
  auto rep = lower_bound_verify(spec.j, region, 2000, 99, kernel);
  CHECK(rep.sign_constant);
  CHECK(rep.c_est > 0.0);
  CHECK(rep.c_est >= 0.4 * std::abs(spec.kernel_at_inv));

  // halving eps never decreases the constant (smaller landed set)
  SectorSpec tight = spec;
  tight.eps = spec.eps / 2.0;
  tight.r_o = 2.0 * spec.r_o;
  double amin = 1e300, amax = 0.0;
  for (const auto& p : ball_sample(tight.g_tilde, tight.eps, 2048, 7)) {
    amin = std::min(amin, koranyi_norm(p));
    amax = std::max(amax, koranyi_norm(p));
  }
  tight.alpha = std::min(amin, 1.0);
  tight.beta = std::max(amax, 1.0);
  SectorRegion region2{tight, region.base, 1.0};
  auto rep2 = lower_bound_verify(spec.j, region2, 2000, 99, kernel);
  CHECK(rep2.c_est >= rep.c_est * 0.98);
}

TEST_CASE("scaled sectors keep the constant and the inner distance") {
  const auto& spec = shared_spec();
  const auto& kernel = shared_kernel();
  GroupPoint base = GroupPoint::h1(-0.4, 0.1, 0.2);
  auto rep1 = lower_bound_verify(spec.j, scaled_sector(spec, base, 1.0), 1500, 7, kernel);
  for (double r : {0.25, 3.0}) {
    SectorRegion region = scaled_sector(spec, base, r);
    // infimum distance ~ r_o * r: sampled points never closer, generators
    // approach it
    double inf_seen = 1e300;
    for (const auto& p : sector_sample(region, 300, 11))
      inf_seen = std::min(inf_seen, koranyi_distance(base, p));
    REQUIRE(inf_seen >= spec.r_o * r * spec.alpha / spec.beta * 0.999);
    REQUIRE(inf_seen <= spec.r_o * r * 2.5);
    auto rep = lower_bound_verify(spec.j, region, 1500, 7, kernel);
    REQUIRE(rep.sign_constant);
    // C_est is dilation invariant up to sampling (kernel homogeneity)
    REQUIRE(rep.c_est == Catch::Approx(rep1.c_est).epsilon(0.10));
  }
  CHECK_THROWS_AS(scaled_sector(spec, base, 0.0), argument_error);
}

TEST_CASE("volume regularity: ratios confined to a narrow band") {
  const auto& spec = shared_spec();
  SectorRegion region{spec, GroupPoint::h1(0.2, -0.1, 0.5), 1.0};
  double ro = spec.r_o;
  std::vector<double> radii = {3 * ro, 10 * ro, 30 * ro, 100 * ro};
  auto ratios = volume_regularity(region, radii, 300000, 12345);
  REQUIRE(ratios.size() == 4);
  double lo = 1e300, hi = 0.0;
  for (const auto& vr : ratios) {
    REQUIRE(vr.ratio > 0.0);
    REQUIRE(vr.ratio <= koranyi_unit_ball_volume(Mode::heisenberg, 1));  // G cap B subset B
    lo = std::min(lo, vr.ratio);
    hi = std::max(hi, vr.ratio);
  }
  CHECK(hi / lo < 10.0);

  // analytic lower bar: one dilated aperture ball fits inside B(g,R) cap G
  double bar = std::pow(0.99 / (1.0 + spec.beta) * spec.eps, 4) *
               koranyi_unit_ball_volume(Mode::heisenberg, 1);
  for (const auto& vr : ratios) CHECK(vr.ratio + 3.0 * vr.stderr_ > bar);

  // translation leaves the ratios unchanged within 3 standard errors
  SectorRegion shifted{spec, GroupPoint::h1(-1.0, 0.8, 2.0), 1.0};
  auto ratios2 = volume_regularity(shifted, {10 * ro}, 300000, 999);
  auto base10 = ratios[1];
  CHECK(std::abs(ratios2[0].ratio - base10.ratio) <
        3.0 * (ratios2[0].stderr_ + base10.stderr_));

  CHECK_THROWS_AS(volume_regularity(region, {1.0}, 1000, 1), argument_error);
}
