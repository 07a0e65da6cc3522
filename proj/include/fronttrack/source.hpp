#pragma once

#include <cmath>
#include <vector>

#include "fronttrack/model.hpp"
#include "fronttrack/numerics.hpp"

namespace fronttrack {

// Cell/step averaged source on the (eps, tau) grid.  The state argument of g
// is never averaged; g_{n,j} is a function of u evaluated on demand.
class DiscretizedSource {
 public:
  DiscretizedSource() = default;

  DiscretizedSource(SourceModel src, double eps, double tau, int quad_order = 4)
      : src_(std::move(src)), eps_(eps), tau_(tau), quad_(quad_order) {
    require(eps_ > 0 && tau_ > 0, ErrorKind::Precondition, "discretize_g needs eps, tau > 0");
    n_steps_ = static_cast<int>(std::ceil(src_.T_star / tau_ - 1e-12));
    omega2_.assign(n_steps_ + 1, 0.0);  // index n = 1..n_steps
    for (int n = 1; n <= n_steps_; ++n) {
      double t0 = (n - 1) * tau_, t1 = std::min(n * tau_, src_.T_star);
      if (t1 > t0)
        omega2_[n] = integrate_panels([&](double t) { return src_.omega2(t); }, t0, t1, 8, 12) / tau_;
      require(std::isfinite(omega2_[n]), ErrorKind::SourceInvalid, "omega2 average not finite");
    }
    // canonical suffix sums so that W(t_n+) - W(t_n-) telescopes exactly
    omega2_suffix_.assign(n_steps_ + 2, 0.0);
    for (int n = n_steps_; n >= 1; --n)
      omega2_suffix_[n] = omega2_suffix_[n + 1] + tau_ * omega2_[n];
    omega2_l1_ = omega2_suffix_[1];

    if (!src_.zero && src_.x_var_hi > src_.x_var_lo) {
      j_lo_ = static_cast<int>(std::floor(src_.x_var_lo / eps_)) - 1;
      j_hi_ = static_cast<int>(std::floor(src_.x_var_hi / eps_)) + 1;
      omega1_.assign(j_hi_ - j_lo_ + 1, 0.0);
      for (int j = j_lo_; j <= j_hi_; ++j) {
        double a = j * eps_, b = (j + 1) * eps_;
        omega1_[j - j_lo_] =
            integrate_panels([&](double x) { return src_.omega1(x); }, a, b, 8, 12) / eps_;
        require(std::isfinite(omega1_[j - j_lo_]) && omega1_[j - j_lo_] >= -1e-12,
                ErrorKind::SourceInvalid, "omega1 average invalid");
      }
    }
    omega1_l1_ = 0.0;
    for (double w : omega1_) omega1_l1_ += eps_ * w;
  }

  const SourceModel& source() const { return src_; }
  double eps() const { return eps_; }
  double tau() const { return tau_; }
  bool zero() const { return src_.zero; }
  int n_steps() const { return n_steps_; }

  double omega2_step(int n) const { return (n >= 1 && n <= n_steps_) ? omega2_[n] : 0.0; }
  double omega1_cell(int j) const {
    if (j < j_lo_ || j > j_hi_) return 0.0;
    return omega1_[j - j_lo_];
  }

  double omega1_L1() const { return omega1_l1_; }
  double omega2_L1() const { return omega2_l1_; }

  // tau * sum_{k >= n} omega_{2,k}
  double omega2_tail(int n) const {
    int k = std::clamp(n, 1, n_steps_ + 1);
    return omega2_suffix_[k];
  }

  // integral of the discretized omega1 between two positions
  double omega1_L1_between(double xl, double xr) const {
    if (xr < xl) std::swap(xl, xr);
    int jl = static_cast<int>(std::floor(xl / eps_));
    int jr = static_cast<int>(std::floor(xr / eps_));
    double s = 0.0;
    for (int j = std::max(jl, j_lo_); j <= std::min(jr, j_hi_); ++j) {
      double a = std::max(xl, j * eps_), b = std::min(xr, (j + 1) * eps_);
      if (b > a) s += (b - a) * omega1_cell(j);
    }
    return s;
  }

  // grid cut positions x_j where the discretized g varies across cells
  std::vector<double> active_cuts() const {
    std::vector<double> out;
    if (omega1_.empty()) return out;
    for (int j = j_lo_; j <= j_hi_ + 1; ++j) out.push_back(j * eps_);
    return out;
  }
  int cell_of(double x) const { return static_cast<int>(std::floor(x / eps_)); }
  bool cell_active(int j) const { return j >= j_lo_ && j <= j_hi_; }

  // g_{n,j}(u): double average over the cell, u held fixed
  Vec2 g_cell(int n, int j, Vec2 u) const {
    if (src_.zero || n < 1 || n > n_steps_) return {0, 0};
    double t0 = (n - 1) * tau_, t1 = std::min(n * tau_, src_.T_star);
    if (t1 <= t0) return {0, 0};
    const GaussRule& rule = gauss_rule(quad_);
    double x0 = j * eps_, x1 = (j + 1) * eps_;
    double tm = 0.5 * (t0 + t1), th = 0.5 * (t1 - t0);
    double xm = 0.5 * (x0 + x1), xh = 0.5 * (x1 - x0);
    Vec2 acc{0, 0};
    for (size_t a = 0; a < rule.nodes.size(); ++a) {
      double t = tm + th * rule.nodes[a];
      Vec2 inner{0, 0};
      if (cell_active(j)) {
        for (size_t b = 0; b < rule.nodes.size(); ++b) {
          double x = xm + xh * rule.nodes[b];
          inner += src_.g(t, x, u) * rule.weights[b];
        }
        inner = inner * 0.5;  // weights sum to 2
      } else {
        inner = src_.g(t, xm, u);  // g does not vary in x on inactive cells
      }
      acc += inner * rule.weights[a];
    }
    return acc * (0.5 * (t1 - t0) / tau_);
  }

 private:
  SourceModel src_ = SourceModel::none();
  double eps_ = 1.0, tau_ = 1.0;
  int quad_ = 4;
  int n_steps_ = 0;
  int j_lo_ = 0, j_hi_ = -1;
  std::vector<double> omega2_;         // per step, 1-based
  std::vector<double> omega2_suffix_;  // suffix sums of tau * omega2
  std::vector<double> omega1_;  // cells j_lo..j_hi
  double omega1_l1_ = 0.0, omega2_l1_ = 0.0;
};

inline DiscretizedSource discretize_g(const SourceModel& s, double eps, double tau,
                                      int quad_order = 4) {
  return DiscretizedSource(s, eps, tau, quad_order);
}

struct DiscreteSourceAudit {
  int samples = 0;
  int value_violations = 0;        // |g_{n,j}(u)| <= omega_{2,n}
  int oscillation_violations = 0;  // |g_{n,j}-g_{n,j'}| <= omega_{2,n} sum eps omega_{1,k}
  int product_reading_violations = 0;  // the paper's display g <= omega1 omega2, reported only
  double worst_value_excess = 0.0;
  double worst_oscillation_excess = 0.0;
};

inline DiscreteSourceAudit audit_discretized_source(const DiscretizedSource& ds,
                                                    const FluxModel& m, int samples = 1000,
                                                    uint64_t seed = 13) {
  DiscreteSourceAudit rep;
  if (ds.zero()) return rep;
  Rng rng(seed);
  const SourceModel& s = ds.source();
  int jl = ds.cell_of(s.x_var_lo) - 2, jh = ds.cell_of(s.x_var_hi) + 2;
  for (int k = 0; k < samples; ++k) {
    int n = 1 + static_cast<int>(rng.uniform(0, 1) * ds.n_steps());
    n = std::min(n, ds.n_steps());
    int j = jl + static_cast<int>(rng.uniform(0, 1) * (jh - jl + 1));
    int j2 = jl + static_cast<int>(rng.uniform(0, 1) * (jh - jl + 1));
    double th = rng.uniform(0, 2 * M_PI), rr = m.radius() * std::sqrt(rng.uniform(0, 1)) * 0.95;
    Vec2 u{rr * std::cos(th), rr * std::sin(th)};
    double w2 = ds.omega2_step(n);
    Vec2 g1 = ds.g_cell(n, j, u);
    rep.samples++;
    if (norm(g1) > w2 * (1 + 1e-6) + 1e-14) {
      rep.value_violations++;
      rep.worst_value_excess = std::max(rep.worst_value_excess, norm(g1) - w2);
    }
    if (norm(g1) > ds.omega1_cell(j) * w2 * (1 + 1e-6) + 1e-14) rep.product_reading_violations++;
    Vec2 g2 = ds.g_cell(n, j2, u);
    double bound = w2 * ds.omega1_L1_between(std::min(j, j2) * ds.eps(),
                                             (std::max(j, j2) + 1) * ds.eps());
    if (norm(g1 - g2) > bound * (1 + 1e-6) + 1e-12) {
      rep.oscillation_violations++;
      rep.worst_oscillation_excess = std::max(rep.worst_oscillation_excess, norm(g1 - g2) - bound);
    }
  }
  return rep;
}

}  // namespace fronttrack
