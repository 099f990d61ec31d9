#include <catch_amalgamated.hpp>

#include "heis/riesz.hpp"

using namespace heis;

// Frozen multiprecision anchors (independent quadrature, 20+ digits, computed
// before this module was written).
namespace {
constexpr double kA1_0 = 2.6679037299943326;
constexpr double kA2_0 = 1.8373614847506268;
constexpr double kA3_0 = 1.4841557689295998;
constexpr double kA1_pi6 = 2.1829561814756953;
constexpr double kB1im_pi6 = 1.4353612577149778;
constexpr double kA1_pi3 = 0.95834158349926988;
constexpr double kB1im_pi3 = 2.2542168705510728;
constexpr double kA1_pi2 = -0.43168798117621373;
constexpr double kB1im_pi2 = 2.1443098598803827;
constexpr double kA1Zero = 1.3995247653227166;  // A_1(i phi) root in (0, pi/2)
// c* = -(2n+1) Gamma(n+1/2) / (4 pi^{n+3/2}), the global constant relating
// d^{-Q-1} F_j to the subordination kernel (re-derived and cross-checked
// numerically at 15 digits)
constexpr double kCstar1 = -0.037995443865876664;
constexpr double kK1_a = -0.059006461639385551;  // K_1([1, 0.5, 0.3])
constexpr double kK1_b = -0.10136818641256264;   // K_1([1, 0, 0])
constexpr double kK1_c = 0.039808705715816115;   // K_1([0.3, -0.2, 0.7])
}  // namespace

TEST_CASE("phase angle of the Koranyi decomposition") {
  CHECK(phase_of(GroupPoint::h1(1, 0, 0)).phi == 0.0);
  CHECK(phase_of(GroupPoint::h1(0, 0, 1)).phi == Catch::Approx(M_PI / 2));
  CHECK(phase_of(GroupPoint::h1(0, 0, -1)).phi == Catch::Approx(-M_PI / 2));
  CHECK_THROWS_AS(phase_of(GroupPoint::identity(Mode::heisenberg, 1)), argument_error);
}

TEST_CASE("contour anchors: A_n(0) > 0 and B_n(0) = 0") {
  QuadratureConfig cfg;
  auto a1 = contour_A(1, 0.0, cfg);
  CHECK(a1.branch_ok);
  CHECK(a1.value.real() == Catch::Approx(kA1_0).epsilon(1e-11));
  CHECK(std::abs(a1.value.imag()) < 1e-12);
  CHECK(contour_A(2, 0.0, cfg).value.real() == Catch::Approx(kA2_0).epsilon(1e-11));
  CHECK(contour_A(3, 0.0, cfg).value.real() == Catch::Approx(kA3_0).epsilon(1e-11));
  auto b1 = contour_B(1, 0.0, cfg);
  CHECK(std::abs(b1.value) < 1e-12);
}

TEST_CASE("on the segment A is real and B purely imaginary") {
  QuadratureConfig cfg;
  using C = std::complex<double>;
  auto a6 = contour_A(1, C(0, M_PI / 6), cfg);
  CHECK(a6.value.real() == Catch::Approx(kA1_pi6).epsilon(1e-11));
  CHECK(std::abs(a6.value.imag()) < 1e-11);
  auto b6 = contour_B(1, C(0, M_PI / 6), cfg);
  CHECK(b6.value.imag() == Catch::Approx(kB1im_pi6).epsilon(1e-11));
  CHECK(std::abs(b6.value.real()) < 1e-11);
  CHECK(contour_A(1, C(0, M_PI / 3), cfg).value.real() == Catch::Approx(kA1_pi3).epsilon(1e-11));
  CHECK(contour_B(1, C(0, M_PI / 3), cfg).value.imag() ==
        Catch::Approx(kB1im_pi3).epsilon(1e-11));
  // endpoints of the segment
  CHECK(contour_A(1, C(0, M_PI / 2), cfg).value.real() == Catch::Approx(kA1_pi2).epsilon(1e-10));
  CHECK(contour_B(1, C(0, M_PI / 2), cfg).value.imag() ==
        Catch::Approx(kB1im_pi2).epsilon(1e-10));
  // conjugate symmetry under phi -> -phi
  auto am = contour_A(1, C(0, -M_PI / 3), cfg);
  CHECK(am.value.real() == Catch::Approx(kA1_pi3).epsilon(1e-11));
  auto bm = contour_B(1, C(0, -M_PI / 3), cfg);
  CHECK(bm.value.imag() == Catch::Approx(-kB1im_pi3).epsilon(1e-11));
}

TEST_CASE("branch continuity holds across the whole segment") {
  QuadratureConfig cfg;
  for (int k = 0; k <= 16; ++k) {
    double phi = -M_PI / 2 + M_PI * k / 16.0;
    auto cv = contour_A(1, std::complex<double>(0, phi), cfg);
    REQUIRE(cv.branch_ok);
  }
  CHECK_THROWS_AS(contour_A(1, std::complex<double>(0, 2.0), cfg), argument_error);
  CHECK_THROWS_AS(contour_A(0, 0.0, cfg), argument_error);
}

TEST_CASE("formula path: homogeneity, zero line, inversion parity") {
  QuadratureConfig cfg;
  auto X1 = VectorFieldId::X(1, 1);
  GroupPoint g = GroupPoint::h1(0.8, -0.5, 0.6);
  auto base = riesz_formula_eval(X1, g, cfg);
  for (double r : {0.5, 2.0, 7.0}) {
    auto scaled = riesz_formula_eval(X1, dilate(r, g), cfg);
    double factor = std::pow(r, -4);  // Q = 4
    REQUIRE(std::abs(scaled.raw - factor * base.raw) < 1e-10 * std::abs(factor * base.raw));
  }

  // x_1 = 0, t = 0: phi = 0 so the B-term dies with B(0) = 0 and the A-term
  // with x_1 = 0
  auto zero = riesz_formula_eval(X1, GroupPoint::h1(0, 1.3, 0), cfg);
  CHECK(std::abs(zero.raw) < 1e-12);

  // parity: A even in phi, Im B odd, so F(g^{-1}) = -x A + y Im B; at t=0
  // the moduli match
  GroupPoint p = GroupPoint::h1(0.7, 0.4, 0.0);
  auto v = riesz_formula_eval(X1, p, cfg);
  auto vi = riesz_formula_eval(X1, inverse(p), cfg);
  CHECK(std::abs(vi.raw) == Catch::Approx(std::abs(v.raw)).epsilon(1e-10));
  // general point: the predicted combination, not a plain sign flip
  GroupPoint q = GroupPoint::h1(0.7, 0.4, 0.5);
  double phi = phase_of(q).phi;
  auto A = contour_A(1, {0, phi}, cfg).value.real();
  auto bI = contour_B(1, {0, phi}, cfg).value.imag();
  double d = koranyi_norm(q);
  double predicted = std::pow(d, -5) * (-q.x[0] * A + q.y[0] * bI);
  auto qi = riesz_formula_eval(X1, inverse(q), cfg);
  CHECK(qi.raw.real() == Catch::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("kernel table interpolates the contours to high accuracy") {
  QuadratureConfig cfg;
  auto table = KernelTable::build(1, 1025, cfg);
  CHECK(table.branch_ok);
  CHECK(table.max_structural_residual < 1e-10);
  Rng rng(71);
  for (int i = 0; i < 25; ++i) {
    double phi = rng.uniform(-M_PI / 2, M_PI / 2);
    double a_direct = contour_A(1, {0, phi}, cfg).value.real();
    double b_direct = contour_B(1, {0, phi}, cfg).value.imag();
    REQUIRE(table.a(phi) == Catch::Approx(a_direct).margin(1e-9));
    REQUIRE(table.b(phi) == Catch::Approx(b_direct).margin(1e-9));
  }
  CHECK(table.a(M_PI / 2) == Catch::Approx(kA1_pi2).margin(1e-9));
}

TEST_CASE("abelian subordination matches the classical closed form") {
  QuadratureConfig cfg;
  // n = 1: kernel of (d/dx)(-Delta)^{-1/2} is -1/(pi x)
  auto X1 = VectorFieldId::X(1, 1);
  double v = riesz_subordination_eval(X1, GroupPoint::r1(1.0), cfg);
  CHECK(v == Catch::Approx(-1.0 / M_PI).epsilon(1e-9));
  double v2 = riesz_subordination_eval(X1, GroupPoint::r1(-0.5), cfg);
  CHECK(v2 == Catch::Approx(2.0 / M_PI).epsilon(1e-9));

  for (int n : {2, 3}) {
    Rng rng(1000 + n);
    for (int i = 0; i < 5; ++i) {
      GroupPoint x = GroupPoint::identity(Mode::abelian, n);
      for (auto& c : x.x) c = rng.uniform(-2.0, 2.0);
      if (koranyi_norm(x) < 0.3) continue;
      auto j = VectorFieldId::X(1 + static_cast<int>(rng.uniform_index(n)), n);
      double got = riesz_subordination_eval(j, x, cfg);
      double want = riesz_abelian_closed_form(j, x.x);
      REQUIRE(got == Catch::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("Heisenberg subordination matches c* times the formula path") {
  QuadratureConfig cfg;
  auto X1 = VectorFieldId::X(1, 1);
  struct Case {
    GroupPoint g;
    double expect;
  };
  for (auto& c : {Case{GroupPoint::h1(1, 0.5, 0.3), kK1_a}, Case{GroupPoint::h1(1, 0, 0), kK1_b},
                  Case{GroupPoint::h1(0.3, -0.2, 0.7), kK1_c}}) {
    double got = riesz_subordination_eval(X1, c.g, cfg);
    REQUIRE(got == Catch::Approx(c.expect).epsilon(1e-7));
    auto raw = riesz_formula_eval(X1, c.g, cfg).raw;
    REQUIRE((kCstar1 * raw).real() == Catch::Approx(c.expect).epsilon(1e-9));
  }
  // homogeneity along the subordination path
  GroupPoint g = GroupPoint::h1(0.6, -0.8, 0.4);
  double base = riesz_subordination_eval(X1, g, cfg);
  for (double r : {0.5, 2.0}) {
    double scaled = riesz_subordination_eval(X1, dilate(r, g), cfg);
    REQUIRE(scaled == Catch::Approx(std::pow(r, -4) * base).epsilon(1e-5));
  }
}

TEST_CASE("calibration recovers the analytic constant") {
  QuadratureConfig cfg;
  auto X1 = VectorFieldId::X(1, 1);
  auto table = std::make_shared<KernelTable>(KernelTable::build(1, 1025, cfg));
  auto sample = default_calibration_sample(X1, 12, 2024, table.get());
  auto cal = calibrate_constant(X1, sample, cfg, table.get());
  CHECK(cal.residual < 1e-4);
  CHECK(cal.c.real() == Catch::Approx(kCstar1).epsilon(1e-4));
  CHECK(std::abs(cal.c.imag()) < 1e-4 * std::abs(cal.c.real()));

  // cross-sample invariance
  auto sample2 = default_calibration_sample(X1, 12, 4048, table.get());
  auto cal2 = calibrate_constant(X1, sample2, cfg, table.get());
  CHECK(cal2.c.real() == Catch::Approx(cal.c.real()).epsilon(1e-4));

  // scaling insensitivity: calibrating on dilated points returns the same c*
  std::vector<GroupPoint> dilated;
  for (const auto& p : sample) dilated.push_back(dilate(3.0, p));
  auto cal3 = calibrate_constant(X1, dilated, cfg, table.get());
  CHECK(cal3.c.real() == Catch::Approx(cal.c.real()).epsilon(1e-4));

  // realness of the calibrated kernel on held-out points
  auto held = default_calibration_sample(X1, 8, 777, table.get());
  for (const auto& p : held) {
    auto v = riesz_formula_eval(X1, p, cfg, table.get(), &cal);
    double im = std::abs((cal.c * riesz_formula_eval(X1, p, cfg).raw).imag());
    REQUIRE(im < 1e-6 * std::abs(v.calibrated));
  }

  // degenerate sample: every point sits on the kernel zero line x=0, t=0
  std::vector<GroupPoint> bad;
  for (int i = 0; i < 8; ++i) bad.push_back(GroupPoint::h1(0, 0.5 + 0.1 * i, 0));
  CHECK_THROWS_AS(calibrate_constant(X1, bad, cfg, table.get()), calibration_error);
}

TEST_CASE("calibrated kernel evaluates K_j fast and matches the anchors") {
  QuadratureConfig cfg;
  auto X1 = VectorFieldId::X(1, 1);
  auto kernel = make_calibrated_kernel(X1, default_calibration_sample(X1, 12, 2024), cfg);
  CHECK(kernel.eval(GroupPoint::h1(1, 0.5, 0.3)) == Catch::Approx(kK1_a).epsilon(1e-5));
  CHECK(kernel.eval(GroupPoint::h1(1, 0, 0)) == Catch::Approx(kK1_b).epsilon(1e-5));
  CHECK(kernel.eval(GroupPoint::h1(0.3, -0.2, 0.7)) == Catch::Approx(kK1_c).epsilon(1e-5));
  // two-point form: K(g, g') = K(g'^{-1} o g)
  GroupPoint a = GroupPoint::h1(0.9, 0.1, 0.2), b = GroupPoint::h1(-0.2, 0.5, -0.1);
  CHECK(kernel.eval_pair(a, b) == Catch::Approx(kernel.eval(compose(inverse(b), a))));
  // Y-type kernel against its own subordination values
  auto Y1 = VectorFieldId::Y(1, 1);
  auto kernel_y = make_calibrated_kernel(Y1, default_calibration_sample(Y1, 12, 555), cfg,
                                         kernel.table);
  GroupPoint g = GroupPoint::h1(0.4, 0.7, 0.25);
  double want = riesz_subordination_eval(Y1, g, cfg);
  CHECK(kernel_y.eval(g) == Catch::Approx(want).epsilon(1e-5));
}

TEST_CASE("zero scan finds the A_1 roots and is refinement stable") {
  QuadratureConfig cfg;
  auto roots = zero_scan(1, 128, cfg);
  REQUIRE(roots.size() == 2);
  CHECK(roots[0].phi == Catch::Approx(-kA1Zero).margin(1e-8));
  CHECK(roots[1].phi == Catch::Approx(kA1Zero).margin(1e-8));
  for (auto r : roots) CHECK(std::abs(r.phi) > 1e-6);  // phi = 0 never returned

  auto refined = zero_scan(1, 256, cfg);
  REQUIRE(refined.size() == roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i)
    CHECK(std::abs(refined[i].phi - roots[i].phi) < 1e-6);

  double maxmod = std::abs(contour_A(1, 0.0, cfg).value);
  for (auto r : roots)
    CHECK(std::abs(contour_A(1, {0, r.phi}, cfg).value) < 1e-8 * maxmod);

  CHECK_THROWS_AS(zero_scan(1, 32, cfg), argument_error);
}

TEST_CASE("nonvanishing census: near-zero fraction shrinks under refinement") {
  QuadratureConfig cfg;
  auto X1 = VectorFieldId::X(1, 1);
  auto kernel = make_calibrated_kernel(X1, default_calibration_sample(X1, 12, 2024), cfg);
  double prev = 1.0;
  for (int grid : {32, 64, 128}) {
    auto rep = nonvanishing_report(X1, grid, cfg, kernel);
    CHECK(rep.near_zero_fraction_adaptive < prev);
    prev = rep.near_zero_fraction_adaptive;
    // near-zero cells hug the described locus (zero curve or |z_j| = 0)
    CHECK(rep.max_locus_distance < 6.0 * rep.cell_size);
    CHECK(rep.a_zeros.size() == 2);
  }
  CHECK(kernel_envelope_constant(kernel) > 0.0);
}
