#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "fronttrack/errors.hpp"

namespace fronttrack {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double& operator[](int i) { return i == 0 ? x : y; }
  double operator[](int i) const { return i == 0 ? x : y; }

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm_inf(Vec2 a) { return std::max(std::abs(a.x), std::abs(a.y)); }

struct Mat2 {
  // row-major: [a b; c d]
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
  Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
  Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  double det() const { return a * d - b * c; }
  double norm() const { return std::sqrt(a * a + b * b + c * c + d * d); }
};

inline Vec2 solve2(const Mat2& m, Vec2 rhs) {
  double det = m.det();
  require(std::abs(det) > 1e-300, ErrorKind::SolverDiverged, "singular 2x2 system");
  return {(rhs.x * m.d - rhs.y * m.b) / det, (m.a * rhs.y - m.c * rhs.x) / det};
}

// Solve a small dense linear system in place (partial pivoting).
inline void solve_dense(std::vector<double>& A, std::vector<double>& b, int n) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A[i * n + k]) > std::abs(A[piv * n + k])) piv = i;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(A[k * n + j], A[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    require(std::abs(A[k * n + k]) > 1e-300, ErrorKind::SolverDiverged, "singular system");
    for (int i = k + 1; i < n; ++i) {
      double f = A[i * n + k] / A[k * n + k];
      for (int j = k; j < n; ++j) A[i * n + j] -= f * A[k * n + j];
      b[i] -= f * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A[i * n + j] * b[j];
    b[i] = s / A[i * n + i];
  }
}

struct Eigen2 {
  double lam1, lam2;  // lam1 < lam2
  Vec2 r1, r2;        // unit right eigenvectors (orientation fixed by caller)
};

// Eigen decomposition of a real 2x2 matrix with real distinct eigenvalues.
inline Eigen2 eigen2(const Mat2& m, double min_gap = 1e-12) {
  double tr = m.a + m.d;
  double disc = (m.a - m.d) * (m.a - m.d) + 4.0 * m.b * m.c;
  require(disc > min_gap * min_gap, ErrorKind::ModelInvalid,
          "eigenvalues not real and distinct");
  double sq = std::sqrt(disc);
  Eigen2 e;
  e.lam1 = (tr - sq) / 2.0;
  e.lam2 = (tr + sq) / 2.0;
  auto kernel_dir = [&](double lam) {
    Vec2 w1{-m.b, m.a - lam};
    Vec2 w2{m.d - lam, -m.c};
    Vec2 w = (norm(w1) >= norm(w2)) ? w1 : w2;
    double n = norm(w);
    require(n > 0.0, ErrorKind::ModelInvalid, "degenerate eigenvector");
    return w / n;
  };
  e.r1 = kernel_dir(e.lam1);
  e.r2 = kernel_dir(e.lam2);
  return e;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature on [-1,1]; nodes by Newton on Legendre polynomials.

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GaussRule& gauss_rule(int n) {
  static thread_local std::vector<GaussRule> cache(65);
  if (n < 1 || n > 64) fail(ErrorKind::Precondition, "gauss rule order out of range");
  GaussRule& r = cache[n];
  if (!r.nodes.empty()) return r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[n - 1 - i] = r.weights[i];
  }
  return r;
}

inline double integrate(const std::function<double(double)>& f, double a, double b, int order = 16) {
  const GaussRule& r = gauss_rule(order);
  double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
  return s * half;
}

// Panel-composite quadrature for integrands with kinks or compact support.
inline double integrate_panels(const std::function<double(double)>& f, double a, double b,
                               int panels, int order = 16) {
  double s = 0.0, h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) s += integrate(f, a + p * h, a + (p + 1) * h, order);
  return s;
}

// ---------------------------------------------------------------------------
// Tensor Lagrange interpolation through a 6x6 point stencil on a uniform grid:
// values O(h^6), gradients O(h^5).

class InterpGrid {
 public:
  InterpGrid() = default;
  // f(i,j) sampled at x = x0 + i*h, y = y0 + j*h, i,j in [0, n)
  InterpGrid(double x0, double y0, double h, int n, std::vector<double> values)
      : x0_(x0), y0_(y0), h_(h), n_(n), v_(std::move(values)) {
    require(static_cast<int>(v_.size()) == n_ * n_, ErrorKind::Precondition, "grid size mismatch");
    require(n_ >= 8, ErrorKind::Precondition, "grid too small");
  }

  bool contains(double x, double y) const {
    return x >= x0_ + 2 * h_ && x <= x0_ + (n_ - 4) * h_ && y >= y0_ + 2 * h_ &&
           y <= y0_ + (n_ - 4) * h_;
  }

  struct Eval {
    double f, fx, fy;
  };

  Eval eval(double x, double y) const {
    int i = static_cast<int>(std::floor((x - x0_) / h_));
    int j = static_cast<int>(std::floor((y - y0_) / h_));
    i = std::min(std::max(i, 2), n_ - 4);
    j = std::min(std::max(j, 2), n_ - 4);
    double tx = (x - x0_) / h_ - i;
    double ty = (y - y0_) / h_ - j;

    double g[6], gx[6], row[6];
    for (int dj = 0; dj < 6; ++dj) {
      int jj = j - 2 + dj;
      for (int di = 0; di < 6; ++di) row[di] = at(i - 2 + di, jj);
      double d;
      g[dj] = lagrange6(row, tx, &d);
      gx[dj] = d;
    }
    Eval out;
    double dfy, dummy;
    out.f = lagrange6(g, ty, &dfy);
    out.fy = dfy / h_;
    out.fx = lagrange6(gx, ty, &dummy) / h_;
    return out;
  }

  double value(double x, double y) const { return eval(x, y).f; }
  double h() const { return h_; }

 private:
  // value and t-derivative of the quintic through (k-2, f[k]) for k=0..5
  static double lagrange6(const double* f, double t, double* deriv) {
    // nodes t_k = k - 2; barycentric-style weights 1/prod(t_k - t_m)
    static constexpr double w[6] = {-1.0 / 120, 1.0 / 24, -1.0 / 12, 1.0 / 12, -1.0 / 24, 1.0 / 120};
    double dt[6];
    for (int k = 0; k < 6; ++k) dt[k] = t - (k - 2);
    double val = 0.0, der = 0.0;
    for (int k = 0; k < 6; ++k) {
      double prod = 1.0, dsum = 0.0;
      for (int m = 0; m < 6; ++m) {
        if (m == k) continue;
        prod *= dt[m];
      }
      for (int jx = 0; jx < 6; ++jx) {
        if (jx == k) continue;
        double p = 1.0;
        for (int m = 0; m < 6; ++m) {
          if (m == k || m == jx) continue;
          p *= dt[m];
        }
        dsum += p;
      }
      val += w[k] * f[k] * prod;
      der += w[k] * f[k] * dsum;
    }
    *deriv = der;
    return val;
  }

  double at(int i, int j) const { return v_[static_cast<size_t>(i) * n_ + j]; }

  double x0_ = 0, y0_ = 0, h_ = 1;
  int n_ = 0;
  std::vector<double> v_;
};

// ---------------------------------------------------------------------------
// ODE tracing (RK4 with fixed step count, plus step-doubling refinement).

inline Vec2 rk4_step(const std::function<Vec2(Vec2)>& field, Vec2 p, double h) {
  Vec2 k1 = field(p);
  Vec2 k2 = field(p + k1 * (h / 2));
  Vec2 k3 = field(p + k2 * (h / 2));
  Vec2 k4 = field(p + k3 * h);
  return p + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
}

inline Vec2 trace(const std::function<Vec2(Vec2)>& field, Vec2 p, double t, int steps) {
  double h = t / steps;
  for (int i = 0; i < steps; ++i) p = rk4_step(field, p, h);
  return p;
}

// ---------------------------------------------------------------------------
// Fits.

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::Precondition, "fit needs >=2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t n = xs.size();
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double den = n * sxx - sx * sx;
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// slope of log|y| vs log x; y entries must be nonzero
inline double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_line(lx, ly).slope;
}

// ---------------------------------------------------------------------------
// Deterministic hashing / RNG.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// deterministic value in [-1, 1]
inline double hash_unit(uint64_t key, uint64_t seed) {
  uint64_t h = splitmix64(key ^ splitmix64(seed));
  return 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed ^ 0x5bf0563a7c4d9d2dULL)) {}
  uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }
  double uniform(double a, double b) {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }

 private:
  uint64_t state_;
};

// ---------------------------------------------------------------------------
// Scalar root helpers.

inline double bisect(const std::function<double(double)>& f, double a, double b,
                     double tol = 1e-14, int maxit = 200) {
  double fa = f(a), fb = f(b);
  require(fa == 0.0 || fb == 0.0 || (fa < 0) != (fb < 0), ErrorKind::Precondition,
          "bisect: no sign change");
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  for (int i = 0; i < maxit && (b - a) > tol; ++i) {
    double m = 0.5 * (a + b), fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0) == (fa < 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

inline bool nearly_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace fronttrack
