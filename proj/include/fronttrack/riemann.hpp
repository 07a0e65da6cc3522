#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fronttrack/model.hpp"

namespace fronttrack {

// C-infinity cutoff: 1 for y <= -2, 0 for y >= -1, monotone in between with
// -2 <= xi' <= 0.
inline double default_cutoff(double y) {
  if (y <= -2.0) return 1.0;
  if (y >= -1.0) return 0.0;
  double z = 2.0 * y + 3.0;  // (-1, 1) on the transition
  return 0.5 * (1.0 - std::tanh(z / (1.0 - z * z)));
}

struct WaveCurveParams {
  double epsilon = 0.01;
  std::function<double(double)> cutoff = default_cutoff;

  double xi(double sigma) const { return cutoff(sigma / std::sqrt(epsilon)); }
  static WaveCurveParams with(double eps) { return WaveCurveParams{eps, default_cutoff}; }
};

struct Front {
  int family = 1;
  double position = 0.0;
  State left, right;
  RiemannCoords vleft, vright;
  double strength = 0.0;  // signed, in Riemann-invariant increments
  double speed = 0.0;
  int generation = 1;
  uint64_t id = 0;
};

struct RiemannFan {
  State left, right, middle;
  RiemannCoords vleft, vright, vmiddle;
  double sigma1 = 0.0, sigma2 = 0.0;
  std::vector<Front> fronts;  // speeds strictly increasing, family 1 first
};

// strengths below this are dropped everywhere
inline constexpr double kWaveDrop = 1e-12;

// ---------------------------------------------------------------------------
// Base curves.

inline RiemannCoords rarefaction_point(int family, double sigma, RiemannCoords v) {
  return family == 1 ? RiemannCoords{v.v1 + sigma, v.v2} : RiemannCoords{v.v1, v.v2 + sigma};
}

struct HugoniotPoint {
  RiemannCoords v;
  State u;
  double speed;  // Rankine-Hugoniot speed of the connection
};

// Family-i Hugoniot locus through v_base, parametrized by the jump sigma of
// the family's own Riemann invariant; Newton on the RH equations seeded from
// the rarefaction curve (cubic contact).
inline HugoniotPoint hugoniot(const FluxModel& m, int family, double sigma, RiemannCoords v_base) {
  State u0 = m.from_invariants(v_base);
  Vec2 f0 = m.flux(u0);
  RiemannCoords v_seed = rarefaction_point(family, sigma, v_base);
  State u_seed = m.from_invariants(v_seed);
  EigenPair e0 = m.eigen_at(u0);
  EigenPair es = m.eigen_at(u_seed);
  double lam0 = family == 1 ? e0.lam1 : e0.lam2;
  double lams = family == 1 ? es.lam1 : es.lam2;
  HugoniotPoint out{v_seed, u_seed, 0.5 * (lam0 + lams)};
  if (std::abs(sigma) < 1e-9) return out;

  double target = (family == 1 ? v_base.v1 : v_base.v2) + sigma;
  Vec2 u = u_seed.vec();
  double s = out.speed;
  auto residual = [&](Vec2 uu, double ss, double* res3) {
    Vec2 fu = m.flux(State::of(uu));
    Vec2 rh = fu - f0 - (uu - u0.vec()) * ss;
    RiemannCoords vv = m.to_invariants(State::of(uu));
    *res3 = (family == 1 ? vv.v1 : vv.v2) - target;
    return rh;
  };
  double r3 = 0.0;
  Vec2 rh = residual(u, s, &r3);
  double rn = std::max(norm_inf(rh), std::abs(r3));
  for (int it = 0; it < 50; ++it) {
    if (rn < 1e-13 * (1.0 + std::abs(sigma))) break;
    Mat2 dfu = m.jacobian(State::of(u));
    Vec2 grad = m.invariant_gradient(family, State::of(u));
    std::vector<double> A{dfu.a - s, dfu.b, -(u.x - u0.vec().x),
                          dfu.c, dfu.d - s, -(u.y - u0.vec().y),
                          grad.x, grad.y, 0.0};
    std::vector<double> b{-rh.x, -rh.y, -r3};
    solve_dense(A, b, 3);
    double step = 1.0;
    for (int half = 0; half < 8; ++half) {
      Vec2 ut = u + Vec2{b[0], b[1]} * step;
      double st = s + b[2] * step;
      double r3t;
      Vec2 rht;
      try {
        rht = residual(ut, st, &r3t);
      } catch (const Error&) {
        step *= 0.5;
        continue;
      }
      double rnt = std::max(norm_inf(rht), std::abs(r3t));
      if (rnt < rn || half == 7) {
        u = ut;
        s = st;
        rh = rht;
        r3 = r3t;
        rn = rnt;
        break;
      }
      step *= 0.5;
    }
  }
  require(rn < 1e-11 * (1.0 + std::abs(sigma)), ErrorKind::SolverDiverged,
          "Hugoniot Newton failed to converge");
  out.u = State::of(u);
  out.v = m.to_invariants(out.u);
  out.speed = s;
  return out;
}

inline RiemannCoords shock_point(const FluxModel& m, int family, double sigma, RiemannCoords v) {
  return hugoniot(m, family, sigma, v).v;
}

// public curve ops with validity-ball enforcement
inline RiemannCoords rarefaction_curve(const FluxModel& m, int family, double sigma,
                                       RiemannCoords v) {
  require(sigma >= 0.0, ErrorKind::Precondition, "rarefaction curve needs sigma >= 0");
  RiemannCoords out = rarefaction_point(family, sigma, v);
  require(m.in_ball(m.from_invariants(out), 1e-9), ErrorKind::OutOfDomain,
          "rarefaction curve left the validity ball");
  return out;
}

inline RiemannCoords shock_curve(const FluxModel& m, int family, double sigma, RiemannCoords v) {
  require(sigma <= 0.0, ErrorKind::Precondition, "shock curve needs sigma <= 0");
  HugoniotPoint h = hugoniot(m, family, sigma, v);
  require(m.in_ball(h.u, 1e-9), ErrorKind::OutOfDomain, "shock curve left the validity ball");
  return h.v;
}

// psi_i^eps: cutoff-blend of shock and rarefaction curves
inline RiemannCoords blended_point(const FluxModel& m, int family, double sigma, RiemannCoords v,
                                   const WaveCurveParams& p) {
  double xi = (sigma < 0.0) ? p.xi(sigma) : 0.0;
  RiemannCoords rare = rarefaction_point(family, sigma, v);
  if (xi <= 0.0) return rare;
  RiemannCoords shock = shock_point(m, family, sigma, v);
  return RiemannCoords::of(shock.vec() * xi + rare.vec() * (1.0 - xi));
}

inline RiemannCoords blended_curve(const FluxModel& m, int family, double sigma, RiemannCoords v,
                                   const WaveCurveParams& p) {
  RiemannCoords out = blended_point(m, family, sigma, v, p);
  require(m.in_ball(m.from_invariants(out), 1e-9), ErrorKind::OutOfDomain,
          "blended curve left the validity ball");
  return out;
}

// exact RH speed of the family-i Hugoniot connection from v_left
inline double lambda_s(const FluxModel& m, int family, double sigma, RiemannCoords v_left) {
  return hugoniot(m, family, sigma, v_left).speed;
}

// Measure-averaged rarefaction speed over the eps-grid cells covered by the
// invariant interval [own(v_left)+sigma, own(v_left)].  Each cell contributes
// lambda_i at its upper grid state, matching the wedge speeds of the fan
// partition (so the speed collapses to lambda_i(v_left) as sigma -> 0- from an
// on-grid left state).
inline double lambda_r(const FluxModel& m, int family, double sigma, RiemannCoords v_left,
                       double eps) {
  require(sigma < 0.0, ErrorKind::Precondition, "lambda_r needs sigma < 0");
  double hi = (family == 1) ? v_left.v1 : v_left.v2;
  double lo = hi + sigma;
  int ilo = static_cast<int>(std::floor(lo / eps));
  int ihi = static_cast<int>(std::floor(hi / eps));
  double acc = 0.0;
  for (int i = ilo; i <= ihi; ++i) {
    double a = std::max(lo, i * eps);
    double b = std::min(hi, (i + 1) * eps);
    if (b <= a) continue;
    double vg_own = (i + 1) * eps;
    RiemannCoords vg = (family == 1) ? RiemannCoords{vg_own, v_left.v2}
                                     : RiemannCoords{v_left.v1, vg_own};
    acc += (b - a) * m.lambda_v(family, vg);
  }
  return acc / std::abs(sigma);
}

inline double blended_shock_speed(const FluxModel& m, int family, double sigma,
                                  RiemannCoords v_left, const WaveCurveParams& p) {
  require(sigma < 0.0, ErrorKind::Precondition, "blended speed needs sigma < 0");
  double xi = p.xi(sigma);
  double s = 0.0;
  if (xi > 0.0) s += xi * lambda_s(m, family, sigma, v_left);
  if (xi < 1.0) s += (1.0 - xi) * lambda_r(m, family, sigma, v_left, p.epsilon);
  return s;
}

// ---------------------------------------------------------------------------
// Rarefaction fan partition on the eps-grid of the family invariant.

struct FanJump {
  double strength;
  RiemannCoords vright;
  double speed;  // lambda_i at the right state
};

inline std::vector<FanJump> fan_partition_states(const FluxModel& m, int family,
                                                 RiemannCoords v_l, double sigma, double eps) {
  require(sigma >= -kWaveDrop, ErrorKind::Precondition, "fan partition needs sigma >= 0");
  std::vector<FanJump> out;
  if (sigma <= kWaveDrop) return out;
  double lo = (family == 1) ? v_l.v1 : v_l.v2;
  double hi = lo + sigma;
  int j = static_cast<int>(std::floor(lo / eps));
  int k = static_cast<int>(std::floor(hi / eps));
  std::vector<double> levels{lo};
  for (int i = j + 1; i <= k; ++i) {
    double lev = i * eps;
    if (lev > levels.back() + kWaveDrop && lev < hi - kWaveDrop) levels.push_back(lev);
  }
  levels.push_back(hi);
  for (size_t q = 0; q + 1 < levels.size(); ++q) {
    double a = levels[q], b = levels[q + 1];
    RiemannCoords vr = (family == 1) ? RiemannCoords{b, v_l.v2} : RiemannCoords{v_l.v1, b};
    out.push_back({b - a, vr, m.lambda_v(family, vr)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Approximate Riemann solver.

struct ProvisionFlags {
  // emit a single front (speed lambda_i at the middle state) for a positive
  // outgoing wave of this family instead of a rarefaction fan
  bool single_family1 = false;
  bool single_family2 = false;

  bool single(int family) const { return family == 1 ? single_family1 : single_family2; }
};

inline RiemannFan solve_riemann(const FluxModel& m, State u_l, State u_r,
                                const WaveCurveParams& p, ProvisionFlags prov = {}) {
  RiemannFan fan;
  fan.left = u_l;
  fan.right = u_r;
  fan.vleft = m.to_invariants(u_l);
  fan.vright = m.to_invariants(u_r);

  Vec2 dv = fan.vright.vec() - fan.vleft.vec();
  double s1 = dv.x, s2 = dv.y;
  if (std::abs(s1) <= kWaveDrop && std::abs(s2) <= kWaveDrop) {
    fan.middle = u_l;
    fan.vmiddle = fan.vleft;
    return fan;
  }

  auto compose = [&](double a, double b, RiemannCoords* vm) {
    RiemannCoords m1 = blended_point(m, 1, a, fan.vleft, p);
    if (vm) *vm = m1;
    RiemannCoords m2 = blended_point(m, 2, b, m1, p);
    return m2.vec() - fan.vright.vec();
  };

  Vec2 res = compose(s1, s2, nullptr);
  double rn = norm_inf(res);
  for (int it = 0; it < 50 && rn > 1e-13 * (1.0 + norm(dv)); ++it) {
    double h1 = 1e-7 * (1.0 + std::abs(s1));
    double h2 = 1e-7 * (1.0 + std::abs(s2));
    Vec2 d1 = (compose(s1 + h1, s2, nullptr) - compose(s1 - h1, s2, nullptr)) / (2 * h1);
    Vec2 d2 = (compose(s1, s2 + h2, nullptr) - compose(s1, s2 - h2, nullptr)) / (2 * h2);
    Vec2 step = solve2(Mat2{d1.x, d2.x, d1.y, d2.y}, res);
    double damp = 1.0;
    bool accepted = false;
    for (int half = 0; half < 8; ++half) {
      double t1 = s1 - damp * step.x, t2 = s2 - damp * step.y;
      Vec2 rt;
      try {
        rt = compose(t1, t2, nullptr);
      } catch (const Error&) {
        damp *= 0.5;
        continue;
      }
      if (norm_inf(rt) < rn || half == 7) {
        s1 = t1;
        s2 = t2;
        res = rt;
        rn = norm_inf(rt);
        accepted = true;
        break;
      }
      damp *= 0.5;
    }
    require(accepted, ErrorKind::SolverDiverged, "Riemann middle-state Newton stalled");
  }
  require(rn <= 1e-11 * (1.0 + norm(dv)), ErrorKind::SolverDiverged,
          "Riemann middle-state Newton failed after 50 iterations");

  RiemannCoords vm;
  compose(s1, s2, &vm);
  State um = m.from_invariants(vm);
  require(m.in_ball(um, 1e-6), ErrorKind::OutOfDomain, "Riemann middle state outside ball");
  fan.middle = um;
  fan.vmiddle = vm;
  fan.sigma1 = (std::abs(s1) <= kWaveDrop) ? 0.0 : s1;
  fan.sigma2 = (std::abs(s2) <= kWaveDrop) ? 0.0 : s2;
  if (fan.sigma1 == 0.0) vm = fan.vleft;  // keep the chain exact when a wave is dropped

  // family 1
  if (fan.sigma1 > 0.0) {
    if (prov.single(1)) {
      Front f;
      f.family = 1;
      f.vleft = fan.vleft;
      f.vright = vm;
      f.left = u_l;
      f.right = um;
      f.strength = fan.sigma1;
      f.speed = m.lambda(1, um);
      fan.fronts.push_back(f);
    } else {
      RiemannCoords vprev = fan.vleft;
      State uprev = u_l;
      for (const FanJump& jmp : fan_partition_states(m, 1, fan.vleft, fan.sigma1, p.epsilon)) {
        Front f;
        f.family = 1;
        f.vleft = vprev;
        f.vright = jmp.vright;
        f.left = uprev;
        f.right = m.from_invariants(jmp.vright);
        f.strength = jmp.strength;
        f.speed = jmp.speed;
        fan.fronts.push_back(f);
        vprev = f.vright;
        uprev = f.right;
      }
    }
  } else if (fan.sigma1 < 0.0) {
    Front f;
    f.family = 1;
    f.vleft = fan.vleft;
    f.vright = vm;
    f.left = u_l;
    f.right = um;
    f.strength = fan.sigma1;
    f.speed = blended_shock_speed(m, 1, fan.sigma1, fan.vleft, p);
    fan.fronts.push_back(f);
  }

  // family 2
  if (fan.sigma2 > 0.0) {
    if (prov.single(2)) {
      Front f;
      f.family = 2;
      f.vleft = vm;
      f.vright = fan.vright;
      f.left = um;
      f.right = u_r;
      f.strength = fan.sigma2;
      f.speed = m.lambda(2, um);
      fan.fronts.push_back(f);
    } else {
      RiemannCoords vprev = vm;
      State uprev = um;
      auto jumps = fan_partition_states(m, 2, vm, fan.sigma2, p.epsilon);
      for (size_t q = 0; q < jumps.size(); ++q) {
        Front f;
        f.family = 2;
        f.vleft = vprev;
        f.vright = jumps[q].vright;
        f.left = uprev;
        f.right = m.from_invariants(jumps[q].vright);
        f.strength = jumps[q].strength;
        f.speed = jumps[q].speed;
        fan.fronts.push_back(f);
        vprev = f.vright;
        uprev = f.right;
      }
    }
  } else if (fan.sigma2 < 0.0) {
    Front f;
    f.family = 2;
    f.vleft = vm;
    f.vright = fan.vright;
    f.left = um;
    f.right = u_r;
    f.strength = fan.sigma2;
    f.speed = blended_shock_speed(m, 2, fan.sigma2, vm, p);
    fan.fronts.push_back(f);
  }

  // snap the outer right state so patterns chain exactly
  if (!fan.fronts.empty()) {
    Front& last = fan.fronts.back();
    if (last.family == 2 || fan.sigma2 == 0.0) {
      last.right = u_r;
      last.vright = fan.vright;
    }
    for (size_t q = 0; q + 1 < fan.fronts.size(); ++q) {
      require(fan.fronts[q].speed < fan.fronts[q + 1].speed + 1e-12, ErrorKind::SolverDiverged,
              "Riemann fan speeds not increasing");
    }
  }
  return fan;
}

// convenience: fronts positioned on the self-similar fan x = x0 + speed * t
inline std::vector<Front> rarefaction_fan_partition(const FluxModel& m, int family,
                                                    RiemannCoords v_l, RiemannCoords v_m,
                                                    double eps, double t, double x0 = 0.0) {
  double sigma = (family == 1) ? v_m.v1 - v_l.v1 : v_m.v2 - v_l.v2;
  std::vector<Front> out;
  RiemannCoords vprev = v_l;
  for (const FanJump& jmp : fan_partition_states(m, family, v_l, sigma, eps)) {
    Front f;
    f.family = family;
    f.vleft = vprev;
    f.vright = jmp.vright;
    f.left = m.from_invariants(vprev);
    f.right = m.from_invariants(jmp.vright);
    f.strength = jmp.strength;
    f.speed = jmp.speed;
    f.position = x0 + jmp.speed * t;
    out.push_back(f);
    vprev = jmp.vright;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Third-order shock/rarefaction defect, two routes.

struct CurveDefect {
  double measured;     // route (a): symmetric finite differences of the curves
  double closed_form;  // route (b): (1/2) <(Dlam r)(Dr r), r_j>/(lam_i - lam_j)
};

inline CurveDefect curve_third_order_defect_routes(const FluxModel& m, int family) {
  double h = 0.2 * m.radius();
  auto transverse_gap = [&](double sigma) {
    RiemannCoords s = shock_point(m, family, sigma, {0, 0});
    RiemannCoords r = rarefaction_point(family, sigma, {0, 0});
    return (family == 1) ? s.v2 - r.v2 : s.v1 - r.v1;
  };
  auto sym = [&](double hh) {
    return (transverse_gap(hh) - transverse_gap(-hh)) / (2.0 * hh * hh * hh);
  };
  double a1 = sym(h), a2 = sym(h / 2);
  double measured = 6.0 * (4.0 * a2 - a1) / 3.0;  // kill the h^2 term
  double closed = curve_defect_closed_form(m, family);
  return {measured, closed};
}

// the lemma's defect; throws NumericalInconsistency when the two routes differ
inline double curve_third_order_defect(const FluxModel& m, int family, double tol = 1e-4) {
  CurveDefect d = curve_third_order_defect_routes(m, family);
  require(std::abs(d.measured - d.closed_form) <= tol, ErrorKind::NumericalInconsistency,
          "curve defect routes disagree");
  return d.closed_form;
}

}  // namespace fronttrack
