#include <catch_amalgamated.hpp>

#include "heis/dyadic.hpp"

using namespace heis;

namespace {

Box unit_box() {
  Box b;
  b.lo = {-1.0, -1.0, -1.0};
  b.hi = {1.0, 1.0, 1.0};
  return b;
}

}  // namespace

TEST_CASE("axis cells: x,y halve per level, t quarters (2^Q children)") {
  DyadicSystem sys(Mode::heisenberg, 1, unit_box(), 6);
  CHECK(sys.axis_cells(0, 0) == 1);
  CHECK(sys.axis_cells(3, 0) == 8);
  CHECK(sys.axis_cells(3, 2) == 64);  // t-axis: 4^3
  CHECK(sys.level_count(2) == 256.0);  // 2^(Q*l) with Q = 4
  CHECK(sys.level_count(6) == std::pow(2.0, 24));
  CHECK_THROWS_AS(DyadicSystem(Mode::heisenberg, 1, unit_box(), 0), argument_error);
}

TEST_CASE("children partition the parent exactly and link back") {
  DyadicSystem sys(Mode::heisenberg, 1, unit_box(), 4);
  CubeId root{0, {0, 0, 0}};
  auto kids = sys.children(root);
  REQUIRE(kids.size() == 16);  // 2*2*4
  double child_vol = 0.0;
  Box rb = sys.cube_bounds(root);
  for (const auto& k : kids) {
    Box kb = sys.cube_bounds(k);
    child_vol += kb.volume();
    // child inside parent
    for (std::size_t a = 0; a < 3; ++a) {
      REQUIRE(kb.lo[a] >= rb.lo[a] - 1e-15);
      REQUIRE(kb.hi[a] <= rb.hi[a] + 1e-15);
    }
    auto p = sys.parent(k);
    REQUIRE(p.idx == root.idx);
    REQUIRE(p.level == 0);
  }
  CHECK(child_vol == Catch::Approx(rb.volume()).epsilon(1e-12));
  // |child| = 2^{-Q} |parent|
  CHECK(sys.cube_bounds(kids[0]).volume() ==
        Catch::Approx(rb.volume() / 16.0).epsilon(1e-12));
}

TEST_CASE("locate is the inverse of cube_bounds membership") {
  DyadicSystem sys(Mode::heisenberg, 1, unit_box(), 5);
  Rng rng(44);
  for (int i = 0; i < 400; ++i) {
    double p[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (int level : {1, 3, 5}) {
      CubeId id;
      REQUIRE(sys.locate(p, level, id));
      Box b = sys.cube_bounds(id);
      REQUIRE(b.contains(p));
      // nesting: the ancestor at level-1 contains the same point
      if (level > 1) {
        CubeId anc = sys.parent(id);
        REQUIRE(sys.cube_bounds(anc).contains(p));
      }
    }
  }
  double outside[3] = {1.5, 0.0, 0.0};
  CubeId id;
  CHECK_FALSE(sys.locate(outside, 2, id));
}

TEST_CASE("certificates: inner ball inside the cube, cube inside outer ball") {
  DyadicSystem sys(Mode::heisenberg, 1, unit_box(), 6);
  Rng rng(99);
  for (int level : {0, 1, 2, 4, 6}) {
    for (int trial = 0; trial < 12; ++trial) {
      CubeId id;
      id.level = level;
      id.idx = {static_cast<std::int64_t>(rng.uniform_index(sys.axis_cells(level, 0))),
                static_cast<std::int64_t>(rng.uniform_index(sys.axis_cells(level, 1))),
                static_cast<std::int64_t>(rng.uniform_index(sys.axis_cells(level, 2)))};
      auto cert = sys.certificate(id);
      REQUIRE(cert.r1 > 0.0);
      REQUIRE(cert.r2 >= cert.r1);
      Box bounds = sys.cube_bounds(id);
      auto c = sys.cube_center(id);
      GroupPoint center = GroupPoint::h1(c[0], c[1], c[2]);
      // B(center, r1) inside the cube
      for (const auto& p : ball_sample(center, cert.r1 * 0.999, 100, 5 + level)) {
        double q[3] = {p.x[0], p.y[0], p.t};
        REQUIRE(bounds.contains(q));
      }
      // cube corners and random interior points inside B(center, r2)
      for (int m = 0; m < 50; ++m) {
        GroupPoint p = GroupPoint::h1(rng.uniform(bounds.lo[0], bounds.hi[0]),
                                      rng.uniform(bounds.lo[1], bounds.hi[1]),
                                      rng.uniform(bounds.lo[2], bounds.hi[2]));
        REQUIRE(koranyi_distance(p, center) <= cert.r2 * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("certificate report walks levels and flags validity") {
  DyadicSystem sys(Mode::heisenberg, 1, unit_box(), 6);
  auto report = dyadic_certificate_report(sys, 2, 64, 2026);
  REQUIRE(report.size() == 7);
  for (const auto& st : report) {
    CHECK(st.certificates_valid);
    CHECK(st.min_r1 > 0.0);
    CHECK(st.max_ratio >= 1.0);
    CHECK(st.cubes_checked > 0);
  }
  // level 0..2 walked exhaustively
  CHECK(report[0].cubes_checked == 1);
  CHECK(report[1].cubes_checked == 16);
  CHECK(report[2].cubes_checked == 256);
  // the nominal scale halves per level
  CHECK(report[1].nominal == Catch::Approx(report[0].nominal / 2));
}

TEST_CASE("abelian systems split every axis in two") {
  Box b;
  b.lo = {0.0, 0.0};
  b.hi = {1.0, 1.0};
  DyadicSystem sys(Mode::abelian, 2, b, 3);
  CHECK(sys.axis_cells(2, 0) == 4);
  CHECK(sys.axis_cells(2, 1) == 4);
  CubeId root{0, {0, 0}};
  CHECK(sys.children(root).size() == 4);
  auto cert = sys.certificate(root);
  CHECK(cert.r1 == Catch::Approx(0.5));
  CHECK(cert.r2 == Catch::Approx(std::sqrt(0.5)));
}
