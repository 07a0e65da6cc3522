#include <catch2/catch_amalgamated.hpp>
#include <cstring>

#include "fronttrack/tracker.hpp"

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

Datum piecewise(std::vector<double> edges, std::vector<State> states) {
  Datum d;
  d.lo = edges.front();
  d.hi = edges.back();
  d.value = [edges = std::move(edges), states = std::move(states)](double x) {
    size_t k = 0;
    while (k < edges.size() && x >= edges[k]) ++k;
    return states[k].vec();
  };
  return d;
}

RunConfig cfg(double eps, double tau, double T, uint64_t seed = 42) {
  RunConfig c;
  c.eps = eps;
  c.tau = tau;
  c.T = T;
  c.seed = seed;
  return c;
}

DiscretizedSource no_source(double eps, double tau, double T_star = 10.0) {
  return discretize_g(SourceModel::none(T_star), eps, tau);
}

}  // namespace

TEST_CASE("init: constant datum has no fronts") {
  WavePattern p = init_approximation(burgers(), Datum::constant({0.1, -0.1}),
                                     WaveCurveParams::with(0.1));
  CHECK(p.fronts.empty());
  CHECK(p.leftmost.u1 == 0.1);
}

TEST_CASE("init: step datum is exactly the Riemann fan") {
  WaveCurveParams wc = WaveCurveParams::with(0.05);
  State ul{0.2, -0.1}, ur{-0.1, 0.15};
  WavePattern p = init_approximation(burgers(), Datum::riemann(ul, ur, 0.0), wc);
  RiemannFan f = solve_riemann(burgers(), ul, ur, wc);
  REQUIRE(p.fronts.size() == f.fronts.size());
  for (size_t k = 0; k < f.fronts.size(); ++k) {
    CHECK(p.fronts[k].strength == f.fronts[k].strength);
    CHECK(p.fronts[k].speed == f.fronts[k].speed);
    CHECK(p.fronts[k].position == 0.0);
    CHECK(p.fronts[k].generation == 1);
  }
}

TEST_CASE("init: sampling does not increase total variation") {
  Datum d;
  d.lo = -1.0;
  d.hi = 1.0;
  d.value = [](double x) {
    double b = (std::abs(x) < 1) ? std::exp(-1.0 / (1 - x * x)) * std::exp(1.0) : 0.0;
    return Vec2{0.2 * b * std::sin(3 * x), -0.15 * b};
  };
  // TV of the smooth datum by quadrature of |u'|
  auto tv_exact = [&](int comp) {
    return integrate_panels(
        [&](double x) {
          double h = 1e-6;
          Vec2 dp = (d.value(x + h) - d.value(x - h)) / (2 * h);
          return std::abs(comp == 0 ? dp.x : dp.y);
        },
        -1.0, 1.0, 64, 8);
  };
  double tv1 = tv_exact(0), tv2 = tv_exact(1);
  WaveCurveParams wc = WaveCurveParams::with(0.02);
  // sampled TV before Riemann resolution
  double s1 = 0, s2 = 0;
  Vec2 prev = d.value((static_cast<int>(std::floor(-1.0 / 0.02)) - 1 + 0.5) * 0.02);
  for (int j = static_cast<int>(std::floor(-1.0 / 0.02)); j <= static_cast<int>(std::floor(1.0 / 0.02)) + 1; ++j) {
    Vec2 cur = d.value((j + 0.5) * 0.02);
    s1 += std::abs(cur.x - prev.x);
    s2 += std::abs(cur.y - prev.y);
    prev = cur;
  }
  CHECK(s1 <= tv1 + 1e-9);
  CHECK(s2 <= tv2 + 1e-9);
  WavePattern p = init_approximation(burgers(), d, wc);
  CHECK(p.fronts.size() > 10);
}

TEST_CASE("run: zero datum and zero source produce zero events") {
  RunConfig c = cfg(0.1, 0.05, 1.0);
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                             init_approximation(burgers(), Datum::constant({0, 0}),
                                                WaveCurveParams::with(c.eps)));
  CHECK(log.events.empty());
  CHECK(log.status == RunStatus::Completed);
  CHECK(log.final_pattern.fronts.empty());
}

TEST_CASE("run: two approaching shocks collide at the kinematic point") {
  // 2-shock at x=0 with speed +1, 1-shock at x=1 with speed -1
  // (eps small enough that both shocks ride the exact RH branch)
  Datum d = piecewise({0.0, 1.0}, {State{0.2, 0.2}, State{0.2, -0.2}, State{-0.2, -0.2}});
  RunConfig c = cfg(0.04, 0.02, 1.0);
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                             init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
  REQUIRE(log.interaction_count == 1);
  const EventRecord& e = log.events[0];
  CHECK(e.time == Catch::Approx(0.5).margin(1e-6));
  CHECK(e.x == Catch::Approx(0.5).margin(1e-6));
  REQUIRE(e.in.size() == 2);
  CHECK(e.in[0].family == 2);
  CHECK(e.in[1].family == 1);
  REQUIRE(e.out.size() == 2);
  CHECK(e.out[0].family == 1);
  CHECK(e.out[1].family == 2);
  // decoupled system: strengths pass through unchanged
  CHECK(e.out[0].strength == Catch::Approx(-0.4).margin(1e-12));
  CHECK(e.out[1].strength == Catch::Approx(-0.4).margin(1e-12));
}

TEST_CASE("run: triple collision splits into two binary interactions") {
  WaveCurveParams wc = WaveCurveParams::with(0.05);
  std::vector<double> levels{0.3, 0.1, -0.1, -0.3};
  WavePattern pat;
  pat.time = 0.0;
  pat.leftmost = {levels[0], 0.0};
  for (int k = 0; k < 3; ++k) {
    RiemannFan f =
        solve_riemann(burgers(), {levels[k], 0.0}, {levels[k + 1], 0.0}, wc);
    REQUIRE(f.fronts.size() == 1);
    Front fr = f.fronts[0];
    fr.position = -fr.speed;  // meet at (t,x) = (1, 0) in exact arithmetic
    pat.fronts.push_back(fr);
  }
  RunConfig c = cfg(0.05, 0.025, 1.5, 7);
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c, pat);
  REQUIRE(log.interaction_count == 2);
  CHECK(log.events[0].time != log.events[1].time);
  CHECK(std::abs(log.events[0].time - 1.0) < 1e-6);
  REQUIRE(log.final_pattern.fronts.size() == 1);
  CHECK(log.final_pattern.fronts[0].strength == Catch::Approx(-0.6).margin(1e-11));
}

TEST_CASE("interaction: same-family shock merge keeps a single outgoing shock") {
  Datum d = piecewise({0.0, 0.5}, {State{0.2, 0.0}, State{0.0, 0.0}, State{-0.2, 0.0}});
  RunConfig c = cfg(0.25, 0.1, 2.0);
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                             init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
  REQUIRE(log.interaction_count == 1);
  const EventRecord& e = log.events[0];
  REQUIRE(e.out.size() == 1);
  CHECK(e.out[0].family == 1);
  CHECK(e.out[0].strength == Catch::Approx(-0.4).margin(1e-12));
  CHECK(e.out[0].generation == 1);
}

TEST_CASE("interaction: rarefaction overtaken by a stronger shock (coupled)") {
  // family-1 rarefaction 0.05 then family-1 shock -0.12 catching it
  WaveCurveParams wc = WaveCurveParams::with(0.0025);
  RiemannCoords v0{-0.02, 0.03};
  State u0 = riemann_inverse(coupled(), v0);
  ProvisionFlags single1;
  single1.single_family1 = true;
  RiemannFan rare = solve_riemann(coupled(), u0, riemann_inverse(coupled(), rarefaction_point(1, 0.05, v0)), wc, single1);
  REQUIRE(rare.fronts.size() == 1);
  RiemannCoords v1 = rare.fronts[0].vright;
  RiemannFan shock = solve_riemann(coupled(), rare.fronts[0].right,
                                   riemann_inverse(coupled(), shock_point(coupled(), 1, -0.12, v1)), wc);
  REQUIRE(shock.fronts.size() == 1);
  WavePattern pat;
  pat.leftmost = u0;
  Front fa = rare.fronts[0];
  fa.position = 0.0;
  Front fb = shock.fronts[0];
  fb.position = 0.05;
  REQUIRE(fb.speed < fa.speed);  // approaching
  pat.fronts = {fa, fb};
  RunConfig c = cfg(0.0025, 0.00125, 3.0);
  EventLog log = run_tracker(coupled(), no_source(c.eps, c.tau), c, pat);
  REQUIRE(log.interaction_count >= 1);
  const EventRecord& e = log.events[0];
  double s1out = 0, s2out = 0;
  for (const Front& f : e.out) (f.family == 1 ? s1out : s2out) += f.strength;
  CHECK(s1out < 0.0);
  CHECK(s1out == Catch::Approx(-0.07).margin(5e-4));
  // transversal wave produced by the coupling is cubic-small
  CHECK(std::abs(s2out) < 1e-3);
  CHECK(std::abs(s2out) > 0.0);
}

TEST_CASE("splitting: pointwise update of a constant state") {
  SourceModel s;
  s.zero = false;
  s.T_star = 1.0;
  s.g = [](double, double, Vec2 u) { return Vec2{0.0, -u.y}; };
  s.omega1 = [](double) { return 0.0; };
  s.omega2 = [](double) { return 0.5; };
  s.x_var_lo = s.x_var_hi = 0.0;
  RunConfig c = cfg(0.02, 0.01, 0.01);
  DiscretizedSource ds = discretize_g(s, c.eps, c.tau);
  EventLog log = run_tracker(burgers(), ds, c,
                             init_approximation(burgers(), Datum::constant({0.1, 0.2}),
                                                WaveCurveParams::with(c.eps)));
  REQUIRE(log.splitting_count == 1);
  CHECK(log.final_pattern.leftmost.u1 == Catch::Approx(0.1).margin(1e-15));
  CHECK(log.final_pattern.leftmost.u2 == Catch::Approx(0.198).margin(1e-15));
  CHECK(log.final_pattern.fronts.empty());
}

TEST_CASE("splitting: x-dependent source creates fronts only at active cell cuts") {
  double eps = 0.1;
  SourceModel s;
  s.zero = false;
  s.T_star = 1.0;
  // g varies in x only inside [0, eps)
  s.g = [eps](double, double x, Vec2) {
    double w = (x < 0) ? 0.0 : (x >= eps ? 1.0 : x / eps);
    return Vec2{0.02 * w, 0.0};
  };
  s.omega1 = [eps](double x) { return (x >= 0 && x < eps) ? 0.25 / eps : 0.0; };
  s.omega2 = [](double) { return 0.1; };
  s.x_var_lo = 0.0;
  s.x_var_hi = eps * (1 - 1e-12);
  RunConfig c = cfg(eps, 0.05, 0.05);
  DiscretizedSource ds = discretize_g(s, c.eps, c.tau);
  EventLog log = run_tracker(burgers(), ds, c,
                             init_approximation(burgers(), Datum::constant({0.0, 0.0}),
                                                WaveCurveParams::with(c.eps)));
  REQUIRE(log.splitting_count == 1);
  REQUIRE(log.final_pattern.fronts.size() >= 1);
  for (const Front& f : log.final_pattern.fronts) {
    // fronts were born at x = 0 or x = eps and moved for zero time
    bool at_cut = std::abs(f.position - 0.0) < 1e-9 || std::abs(f.position - eps) < 1e-9;
    CHECK(at_cut);
    CHECK(std::abs(f.strength) < 0.05 * 0.1 * 1.0);
    CHECK(f.generation == 2);
  }
}

TEST_CASE("run invariants: chain consistency and conservation per event") {
  Datum d = piecewise({-0.4, 0.0, 0.3},
                      {State{0.05, -0.06}, State{-0.04, 0.05}, State{0.06, 0.02}, State{-0.02, -0.03}});
  RunConfig c = cfg(0.05, 0.025, 2.0);
  double lo = -0.4 - 2.0 * 1.6, hi = 0.3 + 2.0 * 1.6;
  std::vector<double> chain_resid;
  std::vector<double> cons_resid;
  std::vector<Monitor> mons;
  // conservation is exact across the event instant (the jump rearrangement has
  // zero width); advance the before-pattern to the event time and compare
  mons.push_back([&](const TrackerEvent& ev) {
    chain_resid.push_back(pattern_chain_residual(ev.after));
    WavePattern pre = ev.before;
    double dt = ev.record.time - pre.time;
    for (Front& f : pre.fronts) f.position += f.speed * dt;
    pre.time = ev.record.time;
    cons_resid.push_back(
        norm(pattern_integral(pre, lo, hi) - pattern_integral(ev.after, lo, hi)));
  });
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                             init_approximation(burgers(), d, WaveCurveParams::with(c.eps)), mons);
  REQUIRE(log.status == RunStatus::Completed);
  REQUIRE(log.interaction_count > 3);
  for (double r : chain_resid) CHECK(r < 1e-10);
  for (double r : cons_resid) CHECK(r < 1e-9);
}

TEST_CASE("run: deterministic for a fixed seed") {
  Datum d = piecewise({-0.2, 0.1}, {State{0.08, -0.05}, State{-0.06, 0.07}, State{0.02, 0.01}});
  RunConfig c = cfg(0.05, 0.025, 1.5, 12345);
  auto go = [&] {
    return run_tracker(burgers(), no_source(c.eps, c.tau), c,
                       init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
  };
  EventLog a = go();
  EventLog b = go();
  REQUIRE(a.events.size() == b.events.size());
  for (size_t k = 0; k < a.events.size(); ++k) {
    CHECK(std::memcmp(&a.events[k].time, &b.events[k].time, sizeof(double)) == 0);
    CHECK(a.events[k].kind == b.events[k].kind);
  }
  REQUIRE(a.final_pattern.fronts.size() == b.final_pattern.fronts.size());
  for (size_t k = 0; k < a.final_pattern.fronts.size(); ++k) {
    CHECK(std::memcmp(&a.final_pattern.fronts[k].position, &b.final_pattern.fronts[k].position,
                      sizeof(double)) == 0);
  }
}

TEST_CASE("pattern_at reconstructs intermediate states from the archive") {
  Datum d = piecewise({-0.2, 0.1}, {State{0.08, -0.05}, State{-0.06, 0.07}, State{0.02, 0.01}});
  RunConfig c = cfg(0.05, 0.025, 1.5, 5);
  EventLog full = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                              init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
  for (double t : {0.37, 0.81, 1.23}) {
    RunConfig c2 = c;
    c2.T = t;
    EventLog part = run_tracker(burgers(), no_source(c.eps, c.tau), c2,
                                init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
    WavePattern rec = pattern_at(full, t);
    REQUIRE(rec.fronts.size() == part.final_pattern.fronts.size());
    for (size_t k = 0; k < rec.fronts.size(); ++k) {
      CHECK(rec.fronts[k].position ==
            Catch::Approx(part.final_pattern.fronts[k].position).margin(1e-12));
      CHECK(rec.fronts[k].strength == part.final_pattern.fronts[k].strength);
    }
    CHECK(pattern_chain_residual(rec) < 1e-10);
  }
}

TEST_CASE("positive fronts stay O(eps) on a rarefaction run") {
  Datum d = piecewise({0.0}, {State{-0.1, -0.1}, State{0.1, 0.1}});
  RunConfig c = cfg(0.02, 0.01, 2.0);
  EventLog log = run_tracker(burgers(), no_source(c.eps, c.tau), c,
                             init_approximation(burgers(), d, WaveCurveParams::with(c.eps)));
  double worst = 0.0;
  for (const SegmentRecord& s : log.segments) worst = std::max(worst, s.f.strength);
  CHECK(worst <= 2.0 * c.eps);
}
