#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "fronttrack/riemann.hpp"

namespace fronttrack {

// Empirically fitted constants (safety factor 2 over the observed maxima).
// The theory only proves such constants exist; every audit uses these values,
// never invented numbers.
struct Calibration {
  double C1 = 0.0;      // cubic interaction estimate
  double C2 = 0.0;      // splitting-step force estimate
  double C3 = 0.0;      // universal constant used by the functional coefficients
  double C5 = 0.0;      // invariant-region drift (C3 * |DJ|)
  double c1 = 0.0;      // positive-wave decay rate
  double Mdecay = 0.0;  // decay estimate offset constant
  double M_linf = 0.0;  // L-infinity propagation factor
  double K_sqrt = 0.0;  // trapezoid-scheme sqrt(eta) constant
  double Kappa = 0.0;   // invariant-region floor
  double Cp = 0.0;      // interval integral C'
  double Cpp = 0.0;     // interval integral C''
  double Cint = 0.0;    // interval integral cubic constant
  double C_RH = 0.0;    // trace Rankine-Hugoniot tolerance slope
  double c_star = 0.0;  // theta-shock Qhat decay constant

  std::map<std::string, double*> values() {
    return {{"C1", &C1},     {"C2", &C2},         {"C3", &C3},       {"C5", &C5},
            {"c1", &c1},     {"Mdecay", &Mdecay}, {"M_linf", &M_linf},
            {"K_sqrt", &K_sqrt}, {"Kappa", &Kappa},   {"Cp", &Cp},       {"Cpp", &Cpp},
            {"Cint", &Cint}, {"C_RH", &C_RH},     {"c_star", &c_star}};
  }

  void save(const std::string& path, const std::string& model_name) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::ConfigError, "cannot write calibration file " + path);
    out << "# calibration constants, fitted with safety factor 2\n";
    out << "model = " << model_name << "\n";
    for (auto& [k, p] : values()) out << k << " = " << *p << "\n";
  }

  static Calibration load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::ConfigError, "cannot read calibration file " + path);
    Calibration c;
    auto vals = c.values();
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(0, eq);
      key.erase(key.find_last_not_of(" \t") + 1);
      key.erase(0, key.find_first_not_of(" \t"));
      auto it = vals.find(key);
      if (it != vals.end()) *it->second = std::stod(line.substr(eq + 1));
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Micro-suite fits.

// C1: all three interaction types, strength sweep, several base points.
inline double fit_interaction_constant(const FluxModel& m) {
  WaveCurveParams p = WaveCurveParams::with(1e-8);  // pure shock branch everywhere
  ProvisionFlags single{true, true};                // strengths only, no fans
  double scale = std::min(1.0, m.radius() / 0.45);
  std::vector<double> mags;
  for (double s : {0.1, 0.05, 0.025, 0.0125}) mags.push_back(s * scale);
  std::vector<RiemannCoords> bases{{0, 0},
                                   {0.05 * scale, -0.04 * scale},
                                   {-0.06 * scale, 0.05 * scale}};
  double worst = 0.0;
  auto consider = [&](double lhs, double s1, double s2) {
    double denom = std::abs(s1 * s2) * (std::abs(s1) + std::abs(s2));
    if (denom > 0) worst = std::max(worst, lhs / denom);
  };
  for (const RiemannCoords& v0 : bases) {
    for (double s : mags) {
      // (i) 2-shock left of 1-shock
      {
        RiemannCoords vm = shock_point(m, 2, -s, v0);
        RiemannCoords vr = shock_point(m, 1, -s, vm);
        RiemannFan f = solve_riemann(m, m.from_invariants(v0), m.from_invariants(vr), p, single);
        consider(std::abs(f.sigma1 - (-s)) + std::abs(f.sigma2 - (-s)), s, s);
      }
      // (ii) two 1-waves: shock then shock, and shock absorbing a rarefaction
      {
        RiemannCoords vm = shock_point(m, 1, -s, v0);
        RiemannCoords vr = shock_point(m, 1, -s, vm);
        RiemannFan f = solve_riemann(m, m.from_invariants(v0), m.from_invariants(vr), p, single);
        consider(std::abs(f.sigma1 - (-2 * s)) + std::abs(f.sigma2), s, s);
      }
      {
        RiemannCoords vm = rarefaction_point(1, 0.5 * s, v0);
        RiemannCoords vr = shock_point(m, 1, -s, vm);
        RiemannFan f = solve_riemann(m, m.from_invariants(v0), m.from_invariants(vr), p, single);
        consider(std::abs(f.sigma1 - (-0.5 * s)) + std::abs(f.sigma2), 0.5 * s, s);
      }
      // (iii) two 2-waves
      {
        RiemannCoords vm = shock_point(m, 2, -s, v0);
        RiemannCoords vr = shock_point(m, 2, -s, vm);
        RiemannFan f = solve_riemann(m, m.from_invariants(v0), m.from_invariants(vr), p, single);
        consider(std::abs(f.sigma2 - (-2 * s)) + std::abs(f.sigma1), s, s);
      }
    }
  }
  return worst;
}

// C2: a single front perturbed by end-state updates u -> u + tau g.
inline double fit_force_constant(const FluxModel& m) {
  WaveCurveParams p = WaveCurveParams::with(1e-8);
  ProvisionFlags single{true, true};
  double scale = std::min(1.0, m.radius() / 0.45);
  double worst = 0.0;
  Rng rng(1009);
  for (int family : {1, 2}) {
    for (double s : {0.1 * scale, 0.05 * scale, 0.02 * scale}) {
      for (int k = 0; k < 12; ++k) {
        RiemannCoords v0{rng.uniform(-0.05, 0.05) * scale, rng.uniform(-0.05, 0.05) * scale};
        double sig = (k % 2 == 0) ? -s : 0.6 * s;
        RiemannCoords v1 = (sig < 0) ? shock_point(m, family, sig, v0)
                                     : rarefaction_point(family, sig, v0);
        State ul = m.from_invariants(v0), ur = m.from_invariants(v1);
        double tau = 0.01;
        double w2 = 0.5;
        Vec2 gl{w2 * rng.uniform(-1, 1) * 0.7, w2 * rng.uniform(-1, 1) * 0.7};
        Vec2 gr{w2 * rng.uniform(-1, 1) * 0.7, w2 * rng.uniform(-1, 1) * 0.7};
        State hul = State::of(ul.vec() + gl * tau);
        State hur = State::of(ur.vec() + gr * tau);
        RiemannFan f = solve_riemann(m, hul, hur, p, single);
        double shat = family == 1 ? f.sigma1 : f.sigma2;
        double d = norm(gr - gl);
        double denom = tau * (d + w2 * std::abs(sig));
        if (denom > 0) worst = std::max(worst, std::abs(shat - sig) / denom);
      }
    }
  }
  return worst;
}

// C3 raw ingredients: cubic v-change across transverse shocks and the
// invariant-map gradient bound.
inline double fit_crossing_constant(const FluxModel& m) {
  double scale = std::min(1.0, m.radius() / 0.45);
  double worst = 0.0;
  for (int family : {1, 2}) {
    int other = 3 - family;
    for (double s : {0.1 * scale, 0.05 * scale, 0.025 * scale}) {
      for (const RiemannCoords& v0 :
           {RiemannCoords{0, 0}, RiemannCoords{0.04 * scale, -0.05 * scale}}) {
        RiemannCoords sh = shock_point(m, other, -s, v0);
        double dev = std::abs((family == 1) ? sh.v1 - v0.v1 : sh.v2 - v0.v2);
        worst = std::max(worst, dev / (s * s * s));
      }
    }
  }
  return worst;
}

inline double fit_gradient_bound(const FluxModel& m) {
  Rng rng(2027);
  double worst = 0.0;
  for (int k = 0; k < 500; ++k) {
    double th = rng.uniform(0, 2 * M_PI), rr = 0.95 * m.radius() * std::sqrt(rng.uniform(0, 1));
    State u{rr * std::cos(th), rr * std::sin(th)};
    Vec2 g1 = m.invariant_gradient(1, u), g2 = m.invariant_gradient(2, u);
    worst = std::max({worst, norm(g1), norm(g2)});
  }
  return worst;
}

// interaction/crossing/force constants; run-derived constants (c1, Mdecay,
// M_linf, ...) are fitted by the analysis and structure drivers
inline Calibration calibrate_model(const FluxModel& m) {
  Calibration cal;
  double c1_raw = fit_interaction_constant(m);
  double c2_raw = fit_force_constant(m);
  double c3_raw = fit_crossing_constant(m);
  double grad = fit_gradient_bound(m);
  cal.C1 = 2.0 * std::max(c1_raw, 1e-6);
  cal.C2 = 2.0 * std::max(c2_raw, 1e-6);
  cal.C3 = 2.0 * std::max({c1_raw, c2_raw, c3_raw, grad});
  cal.C5 = cal.C3 * 2.0 * grad;
  return cal;
}

}  // namespace fronttrack
