#include <catch2/catch_amalgamated.hpp>

#include "fronttrack/model.hpp"

using namespace fronttrack;

namespace {

const FluxModel& burgers() {
  static FluxModel m = make_decoupled_burgers();
  return m;
}
const FluxModel& coupled() {
  static FluxModel m = make_coupled_quadratic();
  return m;
}
const FluxModel& psys() {
  static FluxModel m = make_p_system();
  return m;
}

Mat2 jacobian_fd(const FluxModel& m, State u, double h = 1e-6) {
  Vec2 fx = (m.flux({u.u1 + h, u.u2}) - m.flux({u.u1 - h, u.u2})) / (2 * h);
  Vec2 fy = (m.flux({u.u1, u.u2 + h}) - m.flux({u.u1, u.u2 - h})) / (2 * h);
  return Mat2{fx.x, fy.x, fx.y, fy.y};
}

}  // namespace

TEST_CASE("eigen: decoupled Burgers closed forms") {
  auto e0 = eigen(burgers(), {0, 0});
  CHECK(e0.lam1 == Catch::Approx(-1.0));
  CHECK(e0.lam2 == Catch::Approx(1.0));
  auto e = eigen(burgers(), {0.1, -0.1});
  CHECK(e.lam1 == Catch::Approx(-0.9));
  CHECK(e.lam2 == Catch::Approx(0.9));
  // orientation: grad(lam_i).r_i > 0
  CHECK(e.r1.x == Catch::Approx(1.0));
  CHECK(e.r2.y == Catch::Approx(1.0));
}

TEST_CASE("eigen: p-system symmetric speeds, FD Jacobian agreement") {
  auto e0 = eigen(psys(), {0, 0});
  CHECK(e0.lam1 == Catch::Approx(-1.0).margin(1e-12));
  CHECK(e0.lam2 == Catch::Approx(1.0).margin(1e-12));
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    double th = rng.uniform(0, 2 * M_PI), rr = 0.98 * psys().radius() * std::sqrt(rng.uniform(0, 1));
    State u{rr * std::cos(th), rr * std::sin(th)};
    auto e = eigen(psys(), u);
    CHECK(e.lam1 == Catch::Approx(-e.lam2).margin(1e-12));
    Mat2 fd = jacobian_fd(psys(), u);
    CHECK((psys().jacobian(u) - fd).norm() < 1e-6);
  }
}

TEST_CASE("eigen: out-of-ball is rejected") {
  CHECK_THROWS_AS(eigen(burgers(), {0.6, 0.0}), Error);
}

TEST_CASE("normal form coefficients") {
  NormalForm nf = normal_form_coefficients(burgers());
  CHECK(nf.a11 == Catch::Approx(1.0).margin(1e-6));
  CHECK(nf.a12 == Catch::Approx(0.0).margin(1e-6));
  CHECK(nf.a22 == Catch::Approx(0.0).margin(1e-6));
  CHECK(nf.b11 == Catch::Approx(0.0).margin(1e-6));
  CHECK(nf.b22 == Catch::Approx(1.0).margin(1e-6));

  NormalForm nc = normal_form_coefficients(coupled());
  CHECK(nc.a22 == Catch::Approx(1.0).margin(1e-6));  // f1 contains u2^2/2

  NormalForm np = normal_form_coefficients(psys());
  CHECK(np.a11 == Catch::Approx(0.0).margin(1e-6));
  CHECK(np.a22 == Catch::Approx(0.0).margin(1e-6));
  CHECK(np.b11 == Catch::Approx(2.4).margin(1e-6));  // p''(1) = gamma + 1
  CHECK(np.b12 == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("hyperbolicity gap estimates") {
  CHECK(hyperbolicity_gap(burgers(), 10000) == Catch::Approx(1.0).margin(1e-9));
  FluxModel small = make_decoupled_burgers(0.1);
  CHECK(hyperbolicity_gap(small, 10000) == Catch::Approx(1.8).margin(1e-9));
  CHECK_THROWS_AS(hyperbolicity_gap(burgers(), 50), Error);
  // eigenvalue touches zero inside the ball
  FluxModel degenerate = make_coupled_quadratic(4.0, 0, 0, 0, 0, 1.0, 0.5, 0.05);
  CHECK_THROWS_AS(hyperbolicity_gap(degenerate, 10000), Error);
}

TEST_CASE("max speed") {
  CHECK(max_speed(burgers()) == Catch::Approx(1.5 * 1.01).margin(1e-9));
  FluxModel linear = make_coupled_quadratic(0, 0, 0, 0, 0, 0, 0.4, 2.0);
  CHECK(max_speed(linear) == Catch::Approx(1.01).margin(1e-12));
  FluxModel tiny = make_decoupled_burgers(1e-6);
  CHECK(max_speed(tiny) == Catch::Approx(1.01).margin(1e-5));
}

TEST_CASE("invariants: decoupled model is the identity") {
  Rng rng(5);
  for (int k = 0; k < 100; ++k) {
    State u{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    RiemannCoords v = riemann_invariants(burgers(), u);
    CHECK(v.v1 == u.u1);
    CHECK(v.v2 == u.u2);
  }
}

TEST_CASE("invariants: origin maps to zero for every shipped model") {
  for (const FluxModel* m : {&burgers(), &coupled(), &psys()}) {
    RiemannCoords v = riemann_invariants(*m, {0, 0});
    CHECK(std::abs(v.v1) < 1e-12);
    CHECK(std::abs(v.v2) < 1e-12);
  }
}

TEST_CASE("invariants: orthogonality residual by finite differences") {
  for (const FluxModel* mp : {&coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(17);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = 0.95 * m.radius() * std::sqrt(rng.uniform(0, 1));
      State u{rr * std::cos(th), rr * std::sin(th)};
      auto e = eigen(m, u);
      double h = 1e-5;
      auto vat = [&](Vec2 p) { return riemann_invariants(m, State::of(p)); };
      RiemannCoords vxp = vat(u.vec() + Vec2{h, 0}), vxm = vat(u.vec() - Vec2{h, 0});
      RiemannCoords vyp = vat(u.vec() + Vec2{0, h}), vym = vat(u.vec() - Vec2{0, h});
      Vec2 g1{(vxp.v1 - vxm.v1) / (2 * h), (vyp.v1 - vym.v1) / (2 * h)};
      Vec2 g2{(vxp.v2 - vxm.v2) / (2 * h), (vyp.v2 - vym.v2) / (2 * h)};
      worst = std::max({worst, std::abs(dot(g1, e.r2)), std::abs(dot(g2, e.r1))});
    }
    INFO(m.name());
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("invariants: round trip") {
  for (const FluxModel* mp : {&burgers(), &coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(23);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = 0.95 * m.radius() * std::sqrt(rng.uniform(0, 1));
      State u{rr * std::cos(th), rr * std::sin(th)};
      State back = riemann_inverse(m, riemann_invariants(m, u));
      worst = std::max(worst, norm(back.vec() - u.vec()));
    }
    INFO(m.name());
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("invariants: bicubic chart agrees with direct field tracing") {
  for (const FluxModel* mp : {&coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(29);
    double worst = 0.0;
    for (int k = 0; k < 25; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = 0.9 * m.radius() * std::sqrt(rng.uniform(0, 1));
      State u{rr * std::cos(th), rr * std::sin(th)};
      RiemannCoords a = riemann_invariants(m, u);
      RiemannCoords b = m.trace_invariants(u);
      worst = std::max({worst, std::abs(a.v1 - b.v1), std::abs(a.v2 - b.v2)});
    }
    INFO(m.name() << " chart residual " << m.chart_residual());
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("model invariant: eigenvalue gap at 1e4 random states") {
  for (const FluxModel* mp : {&burgers(), &coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(31);
    for (int k = 0; k < 10000; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = m.radius() * std::sqrt(rng.uniform(0, 1)) * 0.999;
      auto e = eigen(m, {rr * std::cos(th), rr * std::sin(th)});
      REQUIRE(e.lam1 <= -m.declared_gap() / 2);
      REQUIRE(e.lam2 >= m.declared_gap() / 2);
    }
  }
}

TEST_CASE("model invariant: jacobian matches finite differences") {
  for (const FluxModel* mp : {&burgers(), &coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(37);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = 0.9 * m.radius() * std::sqrt(rng.uniform(0, 1));
      State u{rr * std::cos(th), rr * std::sin(th)};
      worst = std::max(worst, (m.jacobian(u) - jacobian_fd(m, u)).norm());
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("genuine nonlinearity holds on the ball") {
  for (const FluxModel* mp : {&burgers(), &coupled(), &psys()}) {
    const FluxModel& m = *mp;
    Rng rng(41);
    for (int k = 0; k < 500; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = 0.98 * m.radius() * std::sqrt(rng.uniform(0, 1));
      State u{rr * std::cos(th), rr * std::sin(th)};
      CHECK(gnl_coefficient(m, 1, u) > 0.0);
      CHECK(gnl_coefficient(m, 2, u) > 0.0);
    }
  }
}

TEST_CASE("closed-form curve defect") {
  // quadratic normal-form models: defect_i = alpha_ii' * beta_ii' / 8
  CHECK(curve_defect_closed_form(burgers(), 1) == Catch::Approx(0.0).margin(1e-8));
  CHECK(curve_defect_closed_form(burgers(), 2) == Catch::Approx(0.0).margin(1e-8));
  // coupled default: a11=1, b11=0.5 -> 0.0625 ; a22=1, b22=1 -> 0.125
  CHECK(curve_defect_closed_form(coupled(), 1) == Catch::Approx(0.0625).margin(2e-4));
  CHECK(curve_defect_closed_form(coupled(), 2) == Catch::Approx(0.125).margin(2e-4));
  FluxModel no22 = make_coupled_quadratic(1.0, 0.25, 0.0, 0.5, 0.25, 1.0);
  CHECK(curve_defect_closed_form(no22, 2) == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("envelope audit flags violations and passes compliant sources") {
  SourceModel ok;
  ok.zero = false;
  ok.T_star = 1.0;
  ok.g = [](double t, double x, Vec2 u) {
    double bump = std::exp(-x * x);
    return Vec2{0.05 * std::exp(-t) * bump * u.y, -0.05 * std::exp(-t) * bump};
  };
  // generous envelopes
  ok.omega1 = [](double x) { return 2.5 * std::abs(x) * std::exp(-x * x) + 0.2 * std::exp(-x * x); };
  ok.omega2 = [](double t) { return 0.4 * std::exp(-t); };
  ok.x_var_lo = -6;
  ok.x_var_hi = 6;
  auto rep = audit_envelopes(ok, burgers(), 4000);
  CHECK(rep.value_violations == 0);
  CHECK(rep.slope_violations == 0);

  SourceModel bad = ok;
  bad.omega2 = [](double) { return 1e-4; };
  auto rep2 = audit_envelopes(bad, burgers(), 2000);
  CHECK(rep2.value_violations > 0);
}
