#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fronttrack/errors.hpp"
#include "fronttrack/numerics.hpp"

namespace fronttrack {

struct State {
  double u1 = 0.0;
  double u2 = 0.0;
  Vec2 vec() const { return {u1, u2}; }
  static State of(Vec2 v) { return {v.x, v.y}; }
};

struct RiemannCoords {
  double v1 = 0.0;
  double v2 = 0.0;
  Vec2 vec() const { return {v1, v2}; }
  static RiemannCoords of(Vec2 v) { return {v.x, v.y}; }
  double comp(int family) const { return family == 1 ? v1 : v2; }
  double transverse(int family) const { return family == 1 ? v2 : v1; }
};

struct NormalForm {
  // second partials of f at the origin
  double a11 = 0, a12 = 0, a22 = 0;  // f1
  double b11 = 0, b12 = 0, b22 = 0;  // f2
};

struct EigenPair {
  double lam1, lam2;
  Vec2 r1, r2;  // unit, oriented so that grad(lam_i).r_i > 0 at the origin
};

namespace detail {

// Riemann-invariant chart built by integrating the eigenvector fields: v_i is
// the arclength parameter on the r_i-integral curve through the origin, and is
// constant along r_j-curves (j != i).  Evaluation goes through cached bicubic
// surfaces; the inverse map refines a cached seed by Newton on the forward
// surface so that J^-1(J(u)) = u to solver tolerance.
struct Chart {
  InterpGrid v1g, v2g;  // forward map on a u-grid
  InterpGrid u1g, u2g;  // inverse seeds on a v-grid
  double extent = 0.0;   // grids cover [-extent, extent]^2
  double residual = 0.0; // achieved orthogonality residual on samples

  RiemannCoords forward(Vec2 u) const {
    return {v1g.value(u.x, u.y), v2g.value(u.x, u.y)};
  }
  Vec2 gradient(int family, Vec2 u) const {
    auto e = (family == 1) ? v1g.eval(u.x, u.y) : v2g.eval(u.x, u.y);
    return {e.fx, e.fy};
  }
  Vec2 inverse(Vec2 v) const {
    Vec2 u{u1g.value(v.x, v.y), u2g.value(v.x, v.y)};
    for (int it = 0; it < 12; ++it) {
      auto e1 = v1g.eval(u.x, u.y);
      auto e2 = v2g.eval(u.x, u.y);
      Vec2 res{e1.f - v.x, e2.f - v.y};
      if (norm_inf(res) < 1e-14) break;
      Mat2 jac{e1.fx, e1.fy, e2.fx, e2.fy};
      u -= solve2(jac, res);
    }
    return u;
  }
};

struct AxisTable {
  // integral curve of r_own through 0, parametrized by arclength s; stored as
  // a graph over the linear coordinate w_own with tables for s and w_other
  std::vector<double> w_own, s, w_other;
  int own = 1;
};

struct ModelData {
  std::string name;
  double r = 0.0;
  double c0 = 0.0;
  std::function<Vec2(Vec2)> f;
  std::function<Mat2(Vec2)> df;
  std::optional<NormalForm> analytic_nf;
  bool identity_invariants = false;
  std::vector<std::pair<std::string, double>> params;

  // orientation references, fixed at construction
  Vec2 ref1{1, 0}, ref2{0, 1};

  mutable std::once_flag chart_once;
  mutable std::shared_ptr<const Chart> chart;
  mutable std::once_flag speed_once;
  mutable double lambda_hat = 0.0;
  mutable std::once_flag axes_once;
  mutable std::shared_ptr<const AxisTable> axis1, axis2;
};

}  // namespace detail

class FluxModel {
 public:
  FluxModel() = default;
  FluxModel(std::string name, double r, double c0, std::function<Vec2(Vec2)> f,
            std::function<Mat2(Vec2)> df, std::optional<NormalForm> nf = std::nullopt,
            bool identity_invariants = false,
            std::vector<std::pair<std::string, double>> params = {})
      : d_(std::make_shared<detail::ModelData>()) {
    d_->name = std::move(name);
    d_->r = r;
    d_->c0 = c0;
    d_->f = std::move(f);
    d_->df = std::move(df);
    d_->analytic_nf = nf;
    d_->identity_invariants = identity_invariants;
    d_->params = std::move(params);
    fix_orientation();
  }

  const std::string& name() const { return d_->name; }
  double radius() const { return d_->r; }
  double declared_gap() const { return d_->c0; }
  const std::vector<std::pair<std::string, double>>& params() const { return d_->params; }
  bool identity_invariants() const { return d_->identity_invariants; }

  Vec2 flux(State u) const { return d_->f(u.vec()); }
  Mat2 jacobian(State u) const { return d_->df(u.vec()); }

  EigenPair eigen_at(State u) const {
    check_domain(u.vec());
    return eigen_raw(u.vec());
  }

  double lambda(int family, State u) const {
    auto e = eigen_at(u);
    return family == 1 ? e.lam1 : e.lam2;
  }

  bool in_ball(State u, double slack = 1e-12) const {
    return norm(u.vec()) < d_->r * (1.0 + slack);
  }

  // sup of |lambda_i| over the ball, sampled, with safety factor 1.01
  double max_speed() const {
    std::call_once(d_->speed_once, [&] {
      double m = 0.0;
      const int na = 256, nr = 16;
      for (int ia = 0; ia < na; ++ia) {
        double th = 2.0 * M_PI * ia / na;
        for (int ir = 1; ir <= nr; ++ir) {
          double rr = d_->r * ir / nr;
          Vec2 u{rr * std::cos(th), rr * std::sin(th)};
          auto e = eigen_raw(u);
          m = std::max({m, std::abs(e.lam1), std::abs(e.lam2)});
        }
      }
      d_->lambda_hat = 1.01 * m;
    });
    return d_->lambda_hat;
  }

  RiemannCoords to_invariants(State u) const {
    check_domain(u.vec());
    if (d_->identity_invariants) return {u.u1, u.u2};
    return chart().forward(u.vec());
  }

  State from_invariants(RiemannCoords v) const {
    if (d_->identity_invariants) {
      State u{v.v1, v.v2};
      check_domain(u.vec());
      return u;
    }
    Vec2 u = chart().inverse(v.vec());
    require(norm(u) <= chart().extent, ErrorKind::OutOfDomain, "inverse invariant map left chart");
    return State::of(u);
  }

  Vec2 invariant_gradient(int family, State u) const {
    check_domain(u.vec());
    if (d_->identity_invariants) return family == 1 ? Vec2{1, 0} : Vec2{0, 1};
    return chart().gradient(family, u.vec());
  }

  double lambda_v(int family, RiemannCoords v) const {
    return lambda(family, from_invariants(v));
  }

  // slow reference evaluation by direct eigenvector-field tracing (used by
  // construction and by validation tests)
  RiemannCoords trace_invariants(State u) const {
    if (d_->identity_invariants) return {u.u1, u.u2};
    return trace_v(u.vec());
  }

  double chart_residual() const {
    if (d_->identity_invariants) return 0.0;
    return chart().residual;
  }

  // second partials of f at 0 by central differences
  NormalForm normal_form_fd() const {
    double h = 1e-4 * std::max(1.0, d_->r);
    auto fc = [&](double x, double y, int c) { return c == 0 ? d_->f({x, y}).x : d_->f({x, y}).y; };
    NormalForm nf;
    auto second = [&](int c, int i, int j) {
      if (i == j) {
        double a = (i == 0) ? h : 0.0, b = (i == 0) ? 0.0 : h;
        return (fc(a, b, c) - 2.0 * fc(0, 0, c) + fc(-a, -b, c)) / (h * h);
      }
      return (fc(h, h, c) - fc(h, -h, c) - fc(-h, h, c) + fc(-h, -h, c)) / (4.0 * h * h);
    };
    nf.a11 = second(0, 0, 0);
    nf.a12 = second(0, 0, 1);
    nf.a22 = second(0, 1, 1);
    nf.b11 = second(1, 0, 0);
    nf.b12 = second(1, 0, 1);
    nf.b22 = second(1, 1, 1);
    return nf;
  }

  std::optional<NormalForm> analytic_normal_form() const { return d_->analytic_nf; }

 private:
  EigenPair eigen_raw(Vec2 u) const {
    Eigen2 e = eigen2(d_->df(u));
    require(e.lam2 - e.lam1 > 1e-10, ErrorKind::ModelInvalid, "coincident eigenvalues");
    EigenPair out{e.lam1, e.lam2, e.r1, e.r2};
    if (dot(out.r1, d_->ref1) < 0) out.r1 = -out.r1;
    if (dot(out.r2, d_->ref2) < 0) out.r2 = -out.r2;
    return out;
  }

  void fix_orientation() {
    Eigen2 e0 = eigen2(d_->df({0, 0}));
    double h = 1e-6 * std::max(1.0, d_->r);
    auto gnl = [&](Vec2 dir, int fam) {
      Eigen2 ep = eigen2(d_->df(dir * h));
      Eigen2 em = eigen2(d_->df(dir * (-h)));
      double lp = fam == 1 ? ep.lam1 : ep.lam2;
      double lm = fam == 1 ? em.lam1 : em.lam2;
      return (lp - lm) / (2 * h);
    };
    double g1 = gnl(e0.r1, 1);
    double g2 = gnl(e0.r2, 2);
    d_->ref1 = (g1 < 0) ? -e0.r1 : e0.r1;
    d_->ref2 = (g2 < 0) ? -e0.r2 : e0.r2;
  }

  void check_domain(Vec2 u) const {
    require(norm(u) < d_->r * (1.0 + 1e-9), ErrorKind::OutOfDomain,
            "state outside validity ball of model " + d_->name);
  }

  const detail::Chart& chart() const {
    std::call_once(d_->chart_once, [&] { d_->chart = build_chart(); });
    return *d_->chart;
  }

  Vec2 field(int family, Vec2 u) const {
    auto e = eigen_raw(u);
    return family == 1 ? e.r1 : e.r2;
  }

  using AxisTable = detail::AxisTable;

  Mat2 linear_chart() const {
    // w = L u with L = [ref1 ref2]^-1, so the axes look like coordinate axes
    Mat2 m{d_->ref1.x, d_->ref2.x, d_->ref1.y, d_->ref2.y};
    double det = m.det();
    return Mat2{m.d / det, -m.b / det, -m.c / det, m.a / det};
  }

  AxisTable build_axis(int family, double reach) const {
    Mat2 L = linear_chart();
    AxisTable t;
    t.own = family;
    double hs = d_->r / 300.0;
    struct Sample {
      double s;
      Vec2 p;
    };
    std::vector<Sample> fwd{{0.0, {0, 0}}}, bwd;
    for (int dir = -1; dir <= 1; dir += 2) {
      Vec2 p{0, 0};
      double s = 0.0;
      auto fld = [&](Vec2 q) { return field(family, q) * double(dir); };
      for (int k = 0; k < 4000; ++k) {
        p = rk4_step(fld, p, hs);
        s += dir * hs;
        Vec2 w = L * p;
        (dir > 0 ? fwd : bwd).push_back({s, p});
        if (std::abs(family == 1 ? w.x : w.y) > reach) break;
      }
    }
    std::reverse(bwd.begin(), bwd.end());
    bwd.insert(bwd.end(), fwd.begin(), fwd.end());
    for (const auto& smp : bwd) {
      Vec2 w = L * smp.p;
      t.w_own.push_back(family == 1 ? w.x : w.y);
      t.w_other.push_back(family == 1 ? w.y : w.x);
      t.s.push_back(smp.s);
    }
    return t;
  }

  static double interp_table(const std::vector<double>& xs, const std::vector<double>& ys,
                             double x) {
    // cubic interpolation in a sorted table
    auto it = std::lower_bound(xs.begin(), xs.end(), x);
    int i = static_cast<int>(it - xs.begin());
    i = std::min(std::max(i, 2), static_cast<int>(xs.size()) - 2);
    // Lagrange cubic through points i-2..i+1
    double acc = 0.0;
    for (int a = i - 2; a <= i + 1; ++a) {
      double term = ys[a];
      for (int b = i - 2; b <= i + 1; ++b)
        if (b != a) term *= (x - xs[b]) / (xs[a] - xs[b]);
      acc += term;
    }
    return acc;
  }

  // trace the r_other flow from u to the family's own axis; returns the axis
  // arclength at the crossing = v_family(u)
  double trace_component(int family, Vec2 u, const AxisTable& axis, const Mat2& L) const {
    int other = 3 - family;
    auto cval = [&](Vec2 p) {
      Vec2 w = L * p;
      double wo = (family == 1) ? w.x : w.y;
      double wt = (family == 1) ? w.y : w.x;
      return wt - interp_table(axis.w_own, axis.w_other, wo);
    };
    double c0v = cval(u);
    if (std::abs(c0v) < 1e-15) {
      Vec2 w = L * u;
      return interp_table(axis.w_own, axis.s, family == 1 ? w.x : w.y);
    }
    // flow direction along r_other that decreases |c|
    double rate = (family == 1) ? (L * field(other, u)).y : (L * field(other, u)).x;
    double dir = (c0v * rate > 0) ? -1.0 : 1.0;
    auto fld = [&](Vec2 q) { return field(other, q) * dir; };
    double h = d_->r / 120.0;
    Vec2 p = u;
    double cp = c0v;
    for (int k = 0; k < 3000; ++k) {
      Vec2 pn = rk4_step(fld, p, h);
      double cn = cval(pn);
      if (cn == 0.0 || (cn < 0) != (cp < 0)) {
        // refine within [0, h] by bisection on partial steps from p
        double lo = 0.0, hi = h;
        for (int it = 0; it < 60; ++it) {
          double mid = 0.5 * (lo + hi);
          double cm = cval(rk4_step(fld, p, mid));
          if (cm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((cm < 0) == (cp < 0))
            lo = mid;
          else
            hi = mid;
        }
        Vec2 pc = rk4_step(fld, p, 0.5 * (lo + hi));
        Vec2 w = L * pc;
        return interp_table(axis.w_own, axis.s, family == 1 ? w.x : w.y);
      }
      p = pn;
      cp = cn;
    }
    fail(ErrorKind::ModelInvalid, "invariant trace failed to reach axis (model " + d_->name + ")");
  }

  RiemannCoords trace_v(Vec2 u) const {
    ensure_axes();
    Mat2 L = linear_chart();
    double v1 = trace_component(1, u, *d_->axis1, L);
    double v2 = trace_component(2, u, *d_->axis2, L);
    return {v1, v2};
  }

  void ensure_axes() const {
    std::call_once(d_->axes_once, [&] {
      double reach = 1.6 * 1.12 * d_->r;
      d_->axis1 = std::make_shared<AxisTable>(build_axis(1, reach));
      d_->axis2 = std::make_shared<AxisTable>(build_axis(2, reach));
    });
  }

  std::shared_ptr<const detail::Chart> build_chart() const {
    ensure_axes();
    Mat2 L = linear_chart();
    double R = 1.12 * d_->r;
    int n = 161;
    double h = 2.0 * R / (n - 1);
    std::vector<double> v1v(n * n), v2v(n * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Vec2 u{-R + i * h, -R + j * h};
        v1v[static_cast<size_t>(i) * n + j] = trace_component(1, u, *d_->axis1, L);
        v2v[static_cast<size_t>(i) * n + j] = trace_component(2, u, *d_->axis2, L);
      }
    }
    auto chart = std::make_shared<detail::Chart>();
    chart->extent = R;
    chart->v1g = InterpGrid(-R, -R, h, n, std::move(v1v));
    chart->v2g = InterpGrid(-R, -R, h, n, std::move(v2v));

    // inverse seeds by continuation from the center outward
    std::vector<double> u1v(n * n, 0.0), u2v(n * n, 0.0);
    int c = n / 2;
    auto newton_inv = [&](Vec2 v, Vec2 seed) {
      Vec2 u = seed;
      for (int it = 0; it < 30; ++it) {
        auto e1 = chart->v1g.eval(u.x, u.y);
        auto e2 = chart->v2g.eval(u.x, u.y);
        Vec2 res{e1.f - v.x, e2.f - v.y};
        if (norm_inf(res) < 1e-14) break;
        Mat2 jac{e1.fx, e1.fy, e2.fx, e2.fy};
        Vec2 du = solve2(jac, res);
        double lim = 2.0 * h;
        if (norm(du) > lim) du = du * (lim / norm(du));
        u -= du;
        u.x = std::clamp(u.x, -R, R);
        u.y = std::clamp(u.y, -R, R);
      }
      return u;
    };
    auto idx = [&](int i, int j) { return static_cast<size_t>(i) * n + j; };
    std::vector<char> done(n * n, 0);
    u1v[idx(c, c)] = 0.0;
    u2v[idx(c, c)] = 0.0;
    done[idx(c, c)] = 1;
    for (int ring = 1; ring <= c; ++ring) {
      for (int i = c - ring; i <= c + ring; ++i) {
        for (int j = c - ring; j <= c + ring; ++j) {
          if (i < 0 || j < 0 || i >= n || j >= n || done[idx(i, j)]) continue;
          if (std::max(std::abs(i - c), std::abs(j - c)) != ring) continue;
          int pi = std::clamp(i, c - ring + 1, c + ring - 1);
          int pj = std::clamp(j, c - ring + 1, c + ring - 1);
          Vec2 seed{u1v[idx(pi, pj)], u2v[idx(pi, pj)]};
          Vec2 v{-R + i * h, -R + j * h};
          Vec2 u = newton_inv(v, seed);
          u1v[idx(i, j)] = u.x;
          u2v[idx(i, j)] = u.y;
          done[idx(i, j)] = 1;
        }
      }
    }
    chart->u1g = InterpGrid(-R, -R, h, n, std::move(u1v));
    chart->u2g = InterpGrid(-R, -R, h, n, std::move(u2v));

    // validation: orthogonality residual on deterministic samples
    double worst = 0.0;
    Rng rng(20240901u);
    for (int k = 0; k < 200; ++k) {
      double th = rng.uniform(0, 2 * M_PI), rr = d_->r * std::sqrt(rng.uniform(0, 1));
      Vec2 u{rr * std::cos(th), rr * std::sin(th)};
      auto e = eigen_raw(u);
      Vec2 g1 = chart->gradient(1, u);
      Vec2 g2 = chart->gradient(2, u);
      worst = std::max({worst, std::abs(dot(g1, e.r2)), std::abs(dot(g2, e.r1))});
    }
    chart->residual = worst;
    return chart;
  }

  std::shared_ptr<detail::ModelData> d_;
};

// ---------------------------------------------------------------------------
// Spec operations on models.

inline EigenPair eigen(const FluxModel& m, State u) { return m.eigen_at(u); }

inline NormalForm normal_form_coefficients(const FluxModel& m) {
  NormalForm nf = m.normal_form_fd();
  if (auto a = m.analytic_normal_form()) {
    double tol = 1e-6;
    require(nearly_equal(nf.a11, a->a11, tol) && nearly_equal(nf.a12, a->a12, tol) &&
                nearly_equal(nf.a22, a->a22, tol) && nearly_equal(nf.b11, a->b11, tol) &&
                nearly_equal(nf.b12, a->b12, tol) && nearly_equal(nf.b22, a->b22, tol),
            ErrorKind::NumericalInconsistency, "normal-form coefficients disagree with analytic");
  }
  return nf;
}

// c0 estimate = 2 * min over sampled ball of min(-lam1, lam2); throws if the
// declared gap is violated.
inline double hyperbolicity_gap(const FluxModel& m, int samples = 10000) {
  require(samples >= 100, ErrorKind::Precondition, "hyperbolicity_gap needs samples >= 100");
  double worst = std::numeric_limits<double>::infinity();
  int na = std::max(64, static_cast<int>(std::sqrt(static_cast<double>(samples)) * 4));
  int nr = std::max(8, samples / na);
  for (int ia = 0; ia < na; ++ia) {
    double th = 2.0 * M_PI * ia / na;
    for (int ir = 0; ir <= nr; ++ir) {
      double rr = m.radius() * ir / nr;
      State u{rr * std::cos(th), rr * std::sin(th)};
      EigenPair e = m.eigen_at(u);
      require(e.lam1 < 0.0 && e.lam2 > 0.0, ErrorKind::ModelInvalid,
              "eigenvalue crossed zero inside the ball");
      worst = std::min(worst, std::min(-e.lam1, e.lam2));
    }
  }
  double est = 2.0 * worst;
  require(est >= m.declared_gap() * (1.0 - 1e-9), ErrorKind::ModelInvalid,
          "sampled hyperbolicity gap below declared c0");
  return est;
}

inline double max_speed(const FluxModel& m) { return m.max_speed(); }

inline RiemannCoords riemann_invariants(const FluxModel& m, State u) { return m.to_invariants(u); }
inline State riemann_inverse(const FluxModel& m, RiemannCoords v) { return m.from_invariants(v); }

// genuine-nonlinearity coefficient grad(lam_i).r_i at u (FD along r_i)
inline double gnl_coefficient(const FluxModel& m, int family, State u) {
  EigenPair e = m.eigen_at(u);
  Vec2 r = family == 1 ? e.r1 : e.r2;
  double h = 1e-6 * std::max(1.0, m.radius());
  double lp = m.lambda(family, State::of(u.vec() + r * h));
  double lm = m.lambda(family, State::of(u.vec() - r * h));
  return (lp - lm) / (2 * h);
}

// closed-form route for the third-order shock/rarefaction curve defect:
//   (1/2) <(D lam_i r_i)(D r_i r_i), r_j> / (lam_i - lam_j)   at the origin
// with unit eigenvector fields.  This equals the sigma^3 coefficient times 6
// of the transverse-invariant deviation of the family-i shock curve.
inline double curve_defect_closed_form(const FluxModel& m, int family) {
  double h = 1e-5 * std::max(1.0, m.radius());
  auto rfield = [&](Vec2 u) {
    EigenPair e = m.eigen_at(State::of(u));
    return family == 1 ? e.r1 : e.r2;
  };
  Vec2 r0 = rfield({0, 0});
  EigenPair e0 = m.eigen_at({0, 0});
  Vec2 rj = family == 1 ? e0.r2 : e0.r1;
  double lam_i = family == 1 ? e0.lam1 : e0.lam2;
  double lam_j = family == 1 ? e0.lam2 : e0.lam1;
  // (Dr r)(0) by central differences along the coordinate directions
  Vec2 drr{0, 0};
  Vec2 ex{1, 0}, ey{0, 1};
  drr += (rfield(ex * h) - rfield(ex * (-h))) * (r0.x / (2 * h));
  drr += (rfield(ey * h) - rfield(ey * (-h))) * (r0.y / (2 * h));
  double dlam = gnl_coefficient(m, family, {0, 0});
  return 0.5 * dlam * dot(drr, rj) / (lam_i - lam_j);
}

// ---------------------------------------------------------------------------
// Shipped models.

inline FluxModel make_decoupled_burgers(double r = 0.5) {
  auto f = [](Vec2 u) { return Vec2{-u.x + 0.5 * u.x * u.x, u.y + 0.5 * u.y * u.y}; };
  auto df = [](Vec2 u) { return Mat2{-1.0 + u.x, 0.0, 0.0, 1.0 + u.y}; };
  NormalForm nf{1, 0, 0, 0, 0, 1};
  return FluxModel("decoupled_burgers", r, 2.0 * (1.0 - r), f, df, nf, true,
                   {{"r", r}});
}

inline FluxModel make_coupled_quadratic(double a11 = 1.0, double a12 = 0.25, double a22 = 1.0,
                                        double b11 = 0.5, double b12 = 0.25, double b22 = 1.0,
                                        double r = 0.3, double c0 = 0.0) {
  auto f = [=](Vec2 u) {
    return Vec2{-u.x + 0.5 * a11 * u.x * u.x + a12 * u.x * u.y + 0.5 * a22 * u.y * u.y,
                u.y + 0.5 * b11 * u.x * u.x + b12 * u.x * u.y + 0.5 * b22 * u.y * u.y};
  };
  auto df = [=](Vec2 u) {
    return Mat2{-1.0 + a11 * u.x + a12 * u.y, a12 * u.x + a22 * u.y,
                b11 * u.x + b12 * u.y, 1.0 + b12 * u.x + b22 * u.y};
  };
  NormalForm nf{a11, a12, a22, b11, b12, b22};
  if (c0 <= 0.0) {
    // conservative declared gap from the linear variation of the eigenvalues
    double k = std::max(std::abs(a11) + std::abs(a12), std::abs(b11) + std::abs(b12)) +
               std::max(std::abs(a22) + std::abs(a12), std::abs(b22) + std::abs(b12));
    c0 = 2.0 * (1.0 - k * r);
    require(c0 > 0.0, ErrorKind::ModelInvalid, "coupled model radius too large for gap");
  }
  bool decoupled = (a12 == 0 && a22 == 0 && b11 == 0 && b12 == 0);
  return FluxModel("coupled_quadratic", r, c0, f, df, nf, decoupled,
                   {{"a11", a11}, {"a12", a12}, {"a22", a22},
                    {"b11", b11}, {"b12", b12}, {"b22", b22}, {"r", r}});
}

// p-system u_t - w_x = 0, w_t + p(v)_x = 0 around v=1, p(v) = v^-gamma / gamma,
// shifted so the base state is the origin and lambda_i(0) = -+1.
inline FluxModel make_p_system(double gamma = 1.4, double r = 0.3) {
  auto f = [=](Vec2 u) {
    return Vec2{-u.y, (std::pow(1.0 + u.x, -gamma) - 1.0) / gamma};
  };
  auto df = [=](Vec2 u) {
    return Mat2{0.0, -1.0, -std::pow(1.0 + u.x, -gamma - 1.0), 0.0};
  };
  NormalForm nf{0, 0, 0, gamma + 1.0, 0, 0};
  double c0 = 2.0 * std::pow(1.0 + r, -(gamma + 1.0) / 2.0) * (1.0 - 1e-9);
  return FluxModel("p_system", r, c0, f, df, nf, false,
                   {{"gamma", gamma}, {"r", r}});
}

// ---------------------------------------------------------------------------
// Source term.

struct SourceModel {
  std::function<Vec2(double t, double x, Vec2 u)> g;
  std::function<double(double)> omega1;  // space envelope, >= 0, integrable
  std::function<double(double)> omega2;  // time envelope, >= 0, integrable
  double T_star = 1.0;
  // interval outside which g does not vary in x (supp of omega1)
  double x_var_lo = 0.0, x_var_hi = 0.0;
  bool zero = true;

  Mat2 dg_du(double t, double x, Vec2 u) const {
    double h = 1e-6;
    Vec2 gx1 = (g(t, x, u + Vec2{h, 0}) - g(t, x, u - Vec2{h, 0})) / (2 * h);
    Vec2 gx2 = (g(t, x, u + Vec2{0, h}) - g(t, x, u - Vec2{0, h})) / (2 * h);
    return Mat2{gx1.x, gx2.x, gx1.y, gx2.y};
  }

  static SourceModel none(double T_star = 1.0) {
    SourceModel s;
    s.g = [](double, double, Vec2) { return Vec2{0, 0}; };
    s.omega1 = [](double) { return 0.0; };
    s.omega2 = [](double) { return 0.0; };
    s.T_star = T_star;
    s.zero = true;
    return s;
  }
};

struct EnvelopeAuditReport {
  int samples = 0;
  int value_violations = 0;      // |g| + |D_u g| <= omega2(t)
  int slope_violations = 0;      // |g_x| <= omega1(x) omega2(t)
  double worst_value_excess = 0.0;
  double worst_slope_excess = 0.0;
};

// sampled check of (H_g2); never throws, reports
inline EnvelopeAuditReport audit_envelopes(const SourceModel& s, const FluxModel& m,
                                           int samples = 10000, uint64_t seed = 7) {
  EnvelopeAuditReport rep;
  if (s.zero) return rep;
  Rng rng(seed);
  double xlo = s.x_var_lo - 1.0, xhi = s.x_var_hi + 1.0;
  for (int k = 0; k < samples; ++k) {
    double t = rng.uniform(0.0, s.T_star * (1 - 1e-9));
    double x = rng.uniform(xlo, xhi);
    double th = rng.uniform(0, 2 * M_PI), rr = m.radius() * std::sqrt(rng.uniform(0, 1));
    Vec2 u{rr * std::cos(th), rr * std::sin(th)};
    double w2 = s.omega2(t);
    Vec2 gv = s.g(t, x, u);
    double val = norm(gv) + s.dg_du(t, x, u).norm();
    if (val > w2 * (1 + 1e-6)) {
      rep.value_violations++;
      rep.worst_value_excess = std::max(rep.worst_value_excess, val - w2);
    }
    double h = 1e-6;
    Vec2 gxv = (s.g(t, x + h, u) - s.g(t, x - h, u)) / (2 * h);
    double bound = s.omega1(x) * w2;
    if (norm(gxv) > bound + 1e-7) {
      rep.slope_violations++;
      rep.worst_slope_excess = std::max(rep.worst_slope_excess, norm(gxv) - bound);
    }
    rep.samples++;
  }
  return rep;
}

}  // namespace fronttrack
