#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fronttrack/calibration.hpp"
#include "fronttrack/functionals.hpp"
#include "fronttrack/tracker.hpp"

namespace fronttrack {

// sum of positive parts of family-i strengths on [a, b], in Riemann-invariant
// increments
inline double tv_plus(const WavePattern& pat, int family, double a, double b) {
  double s = 0.0;
  for (const Front& f : pat.fronts)
    if (f.family == family && f.position >= a && f.position <= b && f.strength > 0)
      s += f.strength;
  return s;
}

inline double tv_total(const WavePattern& pat, double a, double b) {
  double s = 0.0;
  for (const Front& f : pat.fronts)
    if (f.position >= a && f.position <= b) s += std::abs(f.strength);
  return s;
}

// sup over windows of length `len` of the variation inside the window
inline double windowed_tv(const WavePattern& pat, double len) {
  const auto& fr = pat.fronts;
  double best = 0.0, cur = 0.0;
  size_t lo = 0;
  for (size_t hi = 0; hi < fr.size(); ++hi) {
    cur += std::abs(fr[hi].strength);
    while (fr[hi].position - fr[lo].position > len) {
      cur -= std::abs(fr[lo].strength);
      ++lo;
    }
    best = std::max(best, cur);
  }
  return best;
}

struct DecayReport {
  int family;
  double a, b, t;
  double tv_plus_value;
  double bound;
  double margin;
  bool pass;
};

// TV+(v_i(t); [a,b]) <= (b-a)/(c1 t) + M (|vbar|_inf + |omega2|_L1) TV(vbar; widened)
inline DecayReport decay_audit(const EventLog& log, const FluxModel& m,
                               const DiscretizedSource& ds, int family, double a, double b,
                               double t, double c1, double Mdecay) {
  WavePattern pat = pattern_at(log, t);
  double lhs = tv_plus(pat, family, a, b);
  double lam_hat = max_speed(m);
  double widened_tv = tv_total(log.initial, a - lam_hat * t, b + lam_hat * t);
  RiemannCoords v0 = m.to_invariants(log.initial.leftmost);
  double vbar_inf = std::max(std::abs(v0.v1), std::abs(v0.v2));
  for (const Front& f : log.initial.fronts)
    vbar_inf = std::max({vbar_inf, std::abs(f.vright.v1), std::abs(f.vright.v2)});
  double rhs = (b - a) / (c1 * t) + Mdecay * (vbar_inf + ds.omega2_L1()) * widened_tv;
  return {family, a, b, t, lhs, rhs, rhs - lhs, lhs <= rhs};
}

// ---------------------------------------------------------------------------
// Invariant region.

struct InvariantRegionReport {
  bool applicable = false;
  int component = 0;       // 1 or 2: which u-component has the region
  double defect = 0.0;     // third-order curve defect that selects the case
  double min_value = 0.0;  // min over all (t,x) of the protected component
  double floor = 0.0;      // -Kappa * eta
  bool pass = true;
  // one-sided Riemann-invariant bound v <= eta + C5 tau sum omega (or mirrored)
  double v_extreme = 0.0;
  double v_bound = 0.0;
  bool v_pass = true;
  bool v_upper_side = true;  // true: sup v_1 bounded above; false: inf bounded below
};

// every state the run ever exhibits
inline void for_all_states(const EventLog& log, const std::function<void(const State&)>& fn) {
  fn(log.initial.leftmost);
  for (const Front& f : log.initial.fronts) fn(f.right);
  for (const SegmentRecord& s : log.segments) {
    fn(s.f.left);
    fn(s.f.right);
  }
  for (const EventRecord& e : log.events)
    if (e.kind == EventKind::Splitting) fn(e.leftmost_after);
}

inline InvariantRegionReport invariant_region_audit(const EventLog& log, const FluxModel& m,
                                                    const DiscretizedSource& ds,
                                                    const Calibration& cal, double eta) {
  InvariantRegionReport rep;
  NormalForm nf = m.normal_form_fd();
  // case selection per the lemma hypothesis: d2f1/du2^2 != 0 protects u_1,
  // else d2f2/du1^2 != 0 protects u_2
  int comp = 0;
  int defect_family = 0;
  if (std::abs(nf.a22) > 1e-9) {
    comp = 1;
    defect_family = 2;
  } else if (std::abs(nf.b11) > 1e-9) {
    comp = 2;
    defect_family = 1;
  } else {
    rep.applicable = false;
    return rep;
  }
  rep.applicable = true;
  rep.component = comp;
  rep.defect = curve_defect_closed_form(m, defect_family);

  double mn = std::numeric_limits<double>::infinity();
  for_all_states(log, [&](const State& u) { mn = std::min(mn, comp == 1 ? u.u1 : u.u2); });
  rep.min_value = mn;
  rep.floor = -cal.Kappa * eta;
  rep.pass = mn >= rep.floor - 1e-12;

  // one-sided invariant bound: the middle state is monotone in the transverse
  // invariant, so sup (defect >= 0) or inf (defect <= 0) of v_i drifts only by
  // the source, i = the component protected (v_1 for u_1)
  int vi = comp;
  double total_drift = cal.C5 * ds.omega2_L1();
  double init_sup = -std::numeric_limits<double>::infinity();
  double init_inf = std::numeric_limits<double>::infinity();
  auto vval = [&](const State& u) {
    RiemannCoords v = m.to_invariants(u);
    return vi == 1 ? v.v1 : v.v2;
  };
  init_sup = std::max(vval(log.initial.leftmost), init_sup);
  init_inf = std::min(vval(log.initial.leftmost), init_inf);
  for (const Front& f : log.initial.fronts) {
    init_sup = std::max(init_sup, vval(f.right));
    init_inf = std::min(init_inf, vval(f.right));
  }
  double run_sup = init_sup, run_inf = init_inf;
  for_all_states(log, [&](const State& u) {
    double v = vval(u);
    run_sup = std::max(run_sup, v);
    run_inf = std::min(run_inf, v);
  });
  rep.v_upper_side = rep.defect >= 0.0;
  if (rep.v_upper_side) {
    // middle states never exceed the right state: sup v_i non-increasing up to
    // the source drift
    rep.v_extreme = run_sup;
    rep.v_bound = init_sup + total_drift + 1e-12;
    rep.v_pass = run_sup <= rep.v_bound;
  } else {
    rep.v_extreme = run_inf;
    rep.v_bound = init_inf - total_drift - 1e-12;
    rep.v_pass = run_inf >= rep.v_bound;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Interval integral estimates.

struct IntervalIntegralReport {
  std::string case_name;  // both_nonzero | both_zero | mixed
  double integral[2] = {0, 0};
  double bound[2] = {0, 0};
  bool pass = true;
  // the divergence-theorem identity residual along the case's boundary curves
  double divergence_residual = 0.0;
  int shock_graph_hits = 0;
};

inline Vec2 pattern_v_integral(const WavePattern& pat, const FluxModel& m, double a, double b) {
  Vec2 acc{0, 0};
  double last = a;
  State st = pat.leftmost;
  auto add = [&](double upto) {
    if (upto > last) {
      RiemannCoords v = m.to_invariants(st);
      acc += v.vec() * (upto - last);
      last = upto;
    }
  };
  for (const Front& f : pat.fronts) {
    if (f.position >= b) break;
    if (f.position > a) add(f.position);
    st = f.right;
  }
  add(b);
  return acc;
}

inline IntervalIntegralReport interval_integral_audit(const EventLog& log, const FluxModel& m,
                                                      const DiscretizedSource& ds,
                                                      const Calibration& cal, double eta,
                                                      double a, double b, double tbar) {
  IntervalIntegralReport rep;
  NormalForm nf = m.normal_form_fd();
  bool a22 = std::abs(nf.a22) > 1e-9, b11 = std::abs(nf.b11) > 1e-9;
  rep.case_name = (a22 && b11) ? "both_nonzero" : ((!a22 && !b11) ? "both_zero" : "mixed");

  WavePattern pat = pattern_at(log, tbar);
  Vec2 iv = pattern_v_integral(pat, m, a, b);
  rep.integral[0] = iv.x;
  rep.integral[1] = iv.y;
  double l = b - a;
  double vinf = pattern_vmax(pat, m);
  double base = cal.Cp * eta * (l + cal.Cpp * tbar);
  double cubic = cal.Cint * vinf * vinf * vinf * tbar;
  for (int i = 0; i < 2; ++i) {
    rep.bound[i] = base + (rep.case_name == "both_nonzero" ? 0.0 : cubic);
    if (std::abs(rep.integral[i]) > rep.bound[i]) rep.pass = false;
  }

  // diagnostic: divergence identity over the case's region
  if (rep.case_name == "both_nonzero") {
    // trapezoid with side slope theta = C (|f| <= C |u| on the ball)
    double C = 0.0;
    Rng rng(5150);
    for (int k = 0; k < 300; ++k) {
      double th = rng.uniform(0, 2 * M_PI),
             rr = 0.95 * m.radius() * std::sqrt(rng.uniform(0, 1));
      Vec2 u{rr * std::cos(th), rr * std::sin(th)};
      Vec2 f = m.flux(State::of(u));
      C = std::max(C, (std::abs(f.x) + std::abs(f.y)) / (std::abs(u.x) + std::abs(u.y)));
    }
    double theta = std::max(C, 1.0);
    double x1 = a - theta * tbar, x2 = b + theta * tbar;
    auto usum = [&](double t, double x) {
      Vec2 u = pattern_at(log, t).at(x).vec();
      return u.x + u.y;
    };
    Vec2 top = pattern_integral(pat, a, b);
    Vec2 bottom = pattern_integral(log.initial, x1, x2);
    // side flux terms along x = x1 + theta t and x = x2 - theta t
    auto side = [&](bool left) {
      return integrate_panels(
          [&](double t) {
            double x = left ? x1 + theta * t : x2 - theta * t;
            Vec2 u = pattern_at(log, t).at(x + (left ? 1e-9 : -1e-9)).vec();
            Vec2 f = m.flux(State::of(u));
            double un = u.x + u.y, fn = f.x + f.y;
            return left ? (theta * un - fn) : (theta * un + fn);
          },
          0.0, tbar, 24, 8);
    };
    double source_term = 0.0;
    if (!ds.zero())
      source_term = integrate_panels(
          [&](double t) {
            return integrate_panels(
                [&](double x) {
                  Vec2 u = pattern_at(log, t).at(x).vec();
                  Vec2 g = ds.source().g(t, x, u);
                  return g.x + g.y;
                },
                x1 + theta * t, x2 - theta * t, 16, 6);
          },
          0.0, tbar, 16, 6);
    rep.divergence_residual = std::abs((top.x + top.y) - (bottom.x + bottom.y) - source_term +
                                       side(false) + side(true));
  } else {
    // regularized boundary curves dx/dt = f_i u_i / (u_i^2 + delta^2)
    double delta = 1e-6;
    int comp = 0;  // audit component u_1
    auto slope = [&](double t, double x) {
      Vec2 u = pattern_at(log, t).at(x).vec();
      Vec2 f = m.flux(State::of(u));
      double ui = comp == 0 ? u.x : u.y;
      double fi = comp == 0 ? f.x : f.y;
      return fi * ui / (ui * ui + delta * delta);
    };
    int hits = 0;
    for (double x0 : {a, b}) {
      double x = x0, dt = tbar / 400.0;
      for (double t = tbar; t > dt / 2; t -= dt) {
        double k1 = slope(t, x);
        double xm = x - 0.5 * dt * k1;
        double k2 = slope(t - 0.5 * dt, xm);
        double xn = x - dt * k2;
        // count crossings of strong shocks
        for (const SegmentRecord& s : log.segments) {
          if (s.f.strength > -std::sqrt(log.config.eps)) continue;
          double death = s.alive_at_end ? log.config.T : s.t_death;
          if (t - dt < s.t_birth || t > death) continue;
          double xf0 = s.x_at(t), xf1 = s.x_at(t - dt);
          if ((x - xf0) * (xn - xf1) < 0) ++hits;
        }
        x = xn;
      }
    }
    rep.shock_graph_hits = hits;
    rep.divergence_residual = 0.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Weak-form residual.

// C-infinity bump supported on (-1, 1)
inline double bump(double z) {
  double a = std::abs(z);
  if (a >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - a * a));
}

struct TestFunction {
  double t0, rt;  // time center / radius
  double x0, rx;
  double operator()(double t, double x) const {
    return bump((t - t0) / rt) * bump((x - x0) / rx);
  }
};

// | sum_fronts int (xdot [u] - [f]) phi dt - sum_n int (u(tn+)-u(tn-)) phi dx
//   + int int g phi |   (the weak form against phi, with phi(0,.) term folded in)
inline double weak_residual(const EventLog& log, const FluxModel& m, const DiscretizedSource& ds,
                            const TestFunction& phi) {
  double acc = 0.0;
  // front Rankine-Hugoniot defects
  for (const SegmentRecord& s : log.segments) {
    double t1 = s.t_birth, t2 = s.alive_at_end ? log.config.T : s.t_death;
    if (t2 <= t1) continue;
    Vec2 du = s.f.right.vec() - s.f.left.vec();
    Vec2 df = m.flux(s.f.right) - m.flux(s.f.left);
    Vec2 defect = du * s.pspeed - df;
    double w = integrate_panels([&](double t) { return phi(t, s.x_at(t)); }, t1, t2, 8, 8);
    acc += (defect.x + defect.y) * w;
  }
  // splitting jumps and the source integral
  for (const EventRecord& e : log.events) {
    if (e.kind != EventKind::Splitting) continue;
    double t = e.time;
    double lo = phi.x0 - phi.rx, hi = phi.x0 + phi.rx;
    WavePattern before = pattern_at(log, t - 1e-12 * (1 + t));
    WavePattern after = pattern_at(log, t + 1e-12 * (1 + t));
    std::vector<double> cuts{lo, hi};
    for (const Front& f : before.fronts)
      if (f.position > lo && f.position < hi) cuts.push_back(f.position);
    for (const Front& f : after.fronts)
      if (f.position > lo && f.position < hi) cuts.push_back(f.position);
    std::sort(cuts.begin(), cuts.end());
    double term = 0.0;
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] <= cuts[k]) continue;
      double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      Vec2 dup = after.at(mid).vec() - before.at(mid).vec();
      double w = integrate([&](double x) { return phi(t, x); }, cuts[k], cuts[k + 1], 8);
      term += (dup.x + dup.y) * w;
    }
    acc -= term;
  }
  if (!ds.zero()) {
    double tl = std::max(0.0, phi.t0 - phi.rt), th = std::min(log.config.T, phi.t0 + phi.rt);
    if (th > tl) {
      acc += integrate_panels(
          [&](double t) {
            WavePattern pat = pattern_at(log, t);
            return integrate_panels(
                [&](double x) {
                  Vec2 u = pat.at(x).vec();
                  Vec2 g = ds.source().g(t, x, u);
                  return (g.x + g.y) * phi(t, x);
                },
                phi.x0 - phi.rx, phi.x0 + phi.rx, 12, 6);
          },
          tl, th, 12, 6);
    }
  }
  return std::abs(acc);
}

// ---------------------------------------------------------------------------
// Mollification and the dyadic trapezoid driver.

struct MollifiedDatum {
  Datum datum;
  double lipschitz;  // sampled bound on |d v / dx|
};

inline MollifiedDatum mollify(const Datum& raw, double width) {
  MollifiedDatum out;
  auto kernel_weight = integrate_panels([](double z) { return bump(z); }, -1.0, 1.0, 8, 16);
  auto value = [raw, width, kernel_weight](double x) {
    double lo = -1.0, hi = 1.0;
    Vec2 acc{0, 0};
    const GaussRule& rule = gauss_rule(16);
    int panels = 8;
    double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      double aa = lo + p * h, mid = aa + h / 2, half = h / 2;
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        double z = mid + half * rule.nodes[q];
        acc += raw.value(x - width * z) * (bump(z) * rule.weights[q] * half);
      }
    }
    return acc / kernel_weight;
  };
  out.datum.value = value;
  out.datum.lo = raw.lo - width;
  out.datum.hi = raw.hi + width;
  double lip = 0.0;
  int n = 400;
  for (int k = 0; k < n; ++k) {
    double x = out.datum.lo + (out.datum.hi - out.datum.lo) * k / (n - 1.0);
    Vec2 d = (value(x + 1e-5) - value(x - 1e-5)) / 2e-5;
    lip = std::max(lip, norm_inf(d));
  }
  out.lipschitz = lip;
  return out;
}

struct TrapezoidLevel {
  int m;
  double t_m, dt_m;
  double window;  // 2^{m+1} L
  double tv_window;
  double tv_bound;  // 20 lambda_hat / c0
  double vinf;
  double vinf_bound;  // K sqrt(eta)
  bool tv_pass, vinf_pass;
};

struct TrapezoidReport {
  double L = 0.0;
  double lipschitz = 0.0;
  std::vector<TrapezoidLevel> levels;
  bool completed = true;
  std::string message;
};

inline SourceModel source_shifted(const SourceModel& s, double t0) {
  SourceModel out = s;
  if (s.zero) return out;
  out.g = [g = s.g, t0](double t, double x, Vec2 u) { return g(t + t0, x, u); };
  out.omega2 = [w = s.omega2, t0](double t) { return w(t + t0); };
  out.T_star = std::max(s.T_star - t0, 0.0);
  return out;
}

// Runs the dyadic trapezoid scheme: level m spans [t_m, t_m + dt_m] with
// t_m = (2^m - 1) L / (2 lambda_hat), dt_m = 2^{m-1} L / lambda_hat; each level
// restarts from the previous level's final pattern.
inline TrapezoidReport trapezoid_driver(const Datum& raw, const FluxModel& model,
                                        const SourceModel& source, RunConfig cfg, int levels,
                                        double eta, double K_sqrt, double L_cap) {
  TrapezoidReport rep;
  MollifiedDatum md = mollify(raw, std::sqrt(cfg.eps));
  rep.lipschitz = md.lipschitz;
  double lam_hat = max_speed(model);
  double c0 = model.declared_gap();
  double tv_bound = 20.0 * lam_hat / c0;

  WaveCurveParams wc = WaveCurveParams::with(cfg.eps);
  WavePattern pat = init_approximation(model, md.datum, wc);

  // largest dyadic L with windowed TV(vbar, 2L) <= bound, capped
  double L = L_cap;
  while (L > 4 * cfg.eps && windowed_tv(pat, 2 * L) > tv_bound) L /= 2;
  rep.L = L;

  double t_cursor = 0.0;
  for (int m = 0; m < levels; ++m) {
    TrapezoidLevel lev;
    lev.m = m;
    lev.t_m = (std::pow(2.0, m) - 1.0) * L / (2.0 * lam_hat);
    lev.dt_m = std::pow(2.0, m - 1) * L / lam_hat;
    double t_next = lev.t_m + lev.dt_m;

    RunConfig lcfg = cfg;
    lcfg.T = t_next - t_cursor;
    SourceModel ls = source_shifted(source, t_cursor);
    if (ls.T_star < lcfg.T) ls.T_star = lcfg.T + 1e-9;
    DiscretizedSource lds = discretize_g(ls, lcfg.eps, lcfg.tau, lcfg.quad_order);
    pat.time = 0.0;
    EventLog log = run_tracker(model, lds, lcfg, pat);
    if (log.status != RunStatus::Completed) {
      rep.completed = false;
      rep.message = "level " + std::to_string(m) + ": " + log.message;
      rep.levels.push_back(lev);
      return rep;
    }
    pat = log.final_pattern;
    t_cursor = t_next;

    lev.window = std::pow(2.0, m + 1) * L;
    lev.tv_window = windowed_tv(pat, lev.window);
    lev.tv_bound = tv_bound;
    lev.tv_pass = lev.tv_window <= tv_bound;
    lev.vinf = pattern_vmax(pat, model);
    lev.vinf_bound = K_sqrt * std::sqrt(eta);
    lev.vinf_pass = lev.vinf <= lev.vinf_bound;
    rep.levels.push_back(lev);
  }
  return rep;
}

}  // namespace fronttrack
