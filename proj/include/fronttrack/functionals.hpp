#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "fronttrack/source.hpp"
#include "fronttrack/tracker.hpp"

namespace fronttrack {

// Glimm-functional coefficients.  Defaults follow the closing remark of the
// decreasing-functional lemma: R = 4C3, A0 = 2C3, Atilde = A = 4C3 M1^2 |vbar|^2,
// K = 8C3 M1 |vbar|, with C3 a calibrated constant.
struct FunctionalConfig {
  double K = 1.0;
  double R = 1.0;
  double A = 1.0;
  double A0 = 1.0;
  double Atilde = 1.0;
  double M1 = 1.0;        // TV ceiling
  double eta = 1e-2;      // smallness scale
  double C1 = 1.0, C2 = 1.0, C3 = 1.0;  // calibrated interaction constants
  double vbar_inf = 0.0;  // sup-norm of the initial invariants

  static FunctionalConfig remark(double C3, double M1, double vbar_inf, double eta,
                                 double C1 = 0.0, double C2 = 0.0) {
    FunctionalConfig c;
    c.C3 = C3;
    c.C1 = C1 > 0 ? C1 : C3;
    c.C2 = C2 > 0 ? C2 : C3;
    c.M1 = M1;
    c.vbar_inf = vbar_inf;
    c.eta = eta;
    c.R = 4.0 * C3;
    c.A0 = 2.0 * C3;
    c.Atilde = 4.0 * C3 * M1 * M1 * vbar_inf * vbar_inf;
    c.A = c.Atilde;
    c.K = 8.0 * C3 * M1 * vbar_inf;
    return c;
  }

  static double tol(double ref) { return 1e-12 * (1.0 + std::abs(ref)); }
};

struct FunctionalSnapshot {
  double time = 0.0;
  double V = 0.0;
  double Q = 0.0;
  double Qhat = 0.0;
  double Upsilon = 0.0;
  double W = 0.0;
  double muIC_total = 0.0;  // cumulative interaction-and-cancellation mass
  double vmax = 0.0;        // ||v(t)||_inf over the pattern
};

// a pair of fronts is approaching when the 2-wave lies left of the 1-wave or
// they share a family with at least one strictly negative strength
inline bool approaching(const Front& left, const Front& right) {
  if (left.family == right.family) return left.strength < 0.0 || right.strength < 0.0;
  return left.family == 2 && right.family == 1;
}

inline double compute_V(const WavePattern& pat) {
  double s = 0.0;
  for (const Front& f : pat.fronts) s += std::abs(f.strength);
  return s;
}

inline double compute_Q(const WavePattern& pat, const FunctionalConfig& cfg) {
  double s = 0.0;
  const auto& fr = pat.fronts;
  for (size_t i = 0; i < fr.size(); ++i)
    for (size_t j = i + 1; j < fr.size(); ++j)
      if (approaching(fr[i], fr[j])) s += std::abs(fr[i].strength * fr[j].strength);
  return cfg.K * s;
}

// W(t) = tau * sum over remaining steps; `next_step` is the first unapplied one
inline double compute_W(const DiscretizedSource& ds, int next_step) {
  return ds.omega2_tail(next_step);
}

inline double compute_Qhat(const WavePattern& pat, const DiscretizedSource& ds,
                           const FunctionalConfig& cfg, int next_step) {
  return compute_Q(pat, cfg) +
         cfg.R * (compute_V(pat) + ds.omega1_L1()) * compute_W(ds, next_step);
}

inline double pattern_vmax(const WavePattern& pat, const FluxModel& m) {
  RiemannCoords v0 = m.to_invariants(pat.leftmost);
  double s = std::max(std::abs(v0.v1), std::abs(v0.v2));
  for (const Front& f : pat.fronts)
    s = std::max({s, std::abs(f.vright.v1), std::abs(f.vright.v2)});
  return s;
}

// ---------------------------------------------------------------------------
// mu^IC: atomic measure on interactions and splitting updates.

struct MuAtom {
  double t, x, mass;
  uint64_t event;
};

inline double interaction_atom(const Front& a, const Front& b) {
  double mass = std::abs(a.strength * b.strength);
  if (a.family == b.family)
    mass += std::abs(a.strength) + std::abs(b.strength) - std::abs(a.strength + b.strength);
  return mass;
}

inline std::vector<MuAtom> accumulate_muIC(const EventLog& log, const DiscretizedSource& ds) {
  std::vector<MuAtom> atoms;
  for (const EventRecord& e : log.events) {
    if (e.kind == EventKind::Interaction) {
      atoms.push_back({e.time, e.x, interaction_atom(e.in[0], e.in[1]), e.index});
    } else {
      double tw = ds.tau() * e.omega2_n;
      for (const SplitJump& j : e.jumps) {
        double sig = j.has_incoming ? std::abs(j.incoming.strength) : 0.0;
        double mass = j.at_grid ? tw * (sig + ds.eps() * ds.omega1_cell(j.grid_j)) : tw * sig;
        if (mass > 0.0) atoms.push_back({e.time, j.x, mass, e.index});
      }
    }
  }
  return atoms;
}

// ---------------------------------------------------------------------------
// Per-event estimate audits.

struct EstimateAudit {
  std::string name;
  uint64_t event = 0;
  bool pass = true;
  bool applicable = true;
  double lhs = 0.0, rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
};

struct FunctionalSeries {
  std::vector<FunctionalSnapshot> snaps;   // snaps[0] initial, snaps[k+1] after event k
  std::vector<EstimateAudit> audits;       // flattened, tagged by event
  std::vector<MuAtom> atoms;
  double muIC_total = 0.0;
  bool upsilon_ok = true;     // the load-bearing estimate
  bool hypotheses_ok = true;  // the proposition's coefficient hypotheses
};

// Replays the event log and evaluates every functional and audit offline.
inline FunctionalSeries compute_functionals(const EventLog& log, const DiscretizedSource& ds,
                                            const FluxModel& m, const FunctionalConfig& cfg) {
  FunctionalSeries out;
  WavePattern pat = log.initial;  // replay positions are irrelevant; order matters
  int next_step = 1;
  double mu = 0.0;

  auto snapshot = [&](double t) {
    FunctionalSnapshot s;
    s.time = t;
    s.V = compute_V(pat);
    s.Q = compute_Q(pat, cfg);
    s.W = compute_W(ds, next_step);
    s.Qhat = s.Q + cfg.R * (s.V + ds.omega1_L1()) * s.W;
    s.Upsilon = s.V + s.Qhat;
    s.muIC_total = mu;
    s.vmax = pattern_vmax(pat, m);
    return s;
  };

  out.snaps.push_back(snapshot(0.0));

  auto find_front = [&](uint64_t id) {
    for (size_t k = 0; k < pat.fronts.size(); ++k)
      if (pat.fronts[k].id == id) return static_cast<int>(k);
    return -1;
  };

  for (const EventRecord& e : log.events) {
    const FunctionalSnapshot before = out.snaps.back();  // copy: push_back below reallocates
    if (e.kind == EventKind::Interaction) {
      int ia = find_front(e.in[0].id);
      int ib = find_front(e.in[1].id);
      require(ia >= 0 && ib == ia + 1, ErrorKind::Precondition, "replay lost an interaction pair");
      pat.fronts.erase(pat.fronts.begin() + ia, pat.fronts.begin() + ib + 1);
      pat.fronts.insert(pat.fronts.begin() + ia, e.out.begin(), e.out.end());
      mu += interaction_atom(e.in[0], e.in[1]);
    } else {
      // new order: kept and re-emitted fronts in jump order
      std::vector<Front> fronts;
      for (const SplitJump& j : e.jumps) {
        for (const Front& f : j.out) fronts.push_back(f);
        double tw = ds.tau() * e.omega2_n;
        double sig = j.has_incoming ? std::abs(j.incoming.strength) : 0.0;
        mu += j.at_grid ? tw * (sig + ds.eps() * ds.omega1_cell(j.grid_j)) : tw * sig;
      }
      pat.fronts = std::move(fronts);
      pat.leftmost = e.leftmost_after;
      next_step = e.step + 1;
    }
    FunctionalSnapshot after = snapshot(e.time);
    out.snaps.push_back(after);

    // audits
    auto push = [&](std::string name, double lhs, double rhs, bool applicable = true) {
      EstimateAudit a;
      a.name = std::move(name);
      a.event = e.index;
      a.applicable = applicable;
      a.lhs = lhs;
      a.rhs = rhs;
      a.margin = rhs - lhs;
      a.pass = !applicable || lhs <= rhs;
      out.audits.push_back(a);
      return a.pass;
    };

    double tol_u = FunctionalConfig::tol(before.Upsilon);
    if (!push("upsilon_decreasing", after.Upsilon - before.Upsilon, tol_u)) out.upsilon_ok = false;

    if (e.kind == EventKind::Interaction) {
      const Front& a = e.in[0];
      const Front& b = e.in[1];
      double ss = std::abs(a.strength * b.strength);
      push("qhat_interaction_decrement", after.Qhat - before.Qhat,
           -cfg.K / 4.0 * ss + FunctionalConfig::tol(before.Qhat));
      // cubic interaction error (lemma-1 taxonomy)
      double s1o = 0, s2o = 0;
      for (const Front& f : e.out) (f.family == 1 ? s1o : s2o) += f.strength;
      double cubic = cfg.C1 * ss * (std::abs(a.strength) + std::abs(b.strength));
      double lhs;
      if (a.family != b.family) {
        double s1i = (a.family == 1 ? a.strength : b.strength);
        double s2i = (a.family == 2 ? a.strength : b.strength);
        lhs = std::abs(s1o - s1i) + std::abs(s2o - s2i);
      } else if (a.family == 1) {
        lhs = std::abs(s1o - (a.strength + b.strength)) + std::abs(s2o);
      } else {
        lhs = std::abs(s2o - (a.strength + b.strength)) + std::abs(s1o);
      }
      push("interaction_cubic_error", lhs, cubic + FunctionalConfig::tol(cubic));
      // hypotheses of the Qhat proposition
      bool h1 = cfg.K >= 8.0 * cfg.R * cfg.C1 * before.vmax * before.W - 1e-15;
      bool h2 = cfg.R >= 4.0 * cfg.K * cfg.C3 * (before.V + 2.0 * ds.omega1_L1()) - 1e-15;
      if (!(h1 && h2)) out.hypotheses_ok = false;
      push("qhat_hypotheses", (h1 && h2) ? 0.0 : 1.0, 0.5);
    } else {
      double tw = ds.tau() * e.omega2_n;
      push("qhat_splitting_decrement", after.Qhat - before.Qhat,
           -cfg.R / 2.0 * (before.V + ds.omega1_L1()) * tw + FunctionalConfig::tol(before.Qhat));
      push("w_telescoping", std::abs((after.W - before.W) + tw), 1e-15 * (1.0 + tw));
      // per-jump force estimate |sigma_hat - sigma| <= C2 tau w2 (|sigma| + eps w1 + |du|)
      for (const SplitJump& j : e.jumps) {
        if (!j.has_incoming) continue;
        int fam = j.incoming.family;
        double shat = j.sigma_hat[fam - 1];
        double lhs = std::abs(shat - j.incoming.strength);
        double w1term = j.at_grid ? ds.eps() * ds.omega1_cell(j.grid_j) : 0.0;
        double du = norm(j.incoming.right.vec() - j.incoming.left.vec());
        double rhs =
            cfg.C2 * ds.tau() * e.omega2_n * (std::abs(j.incoming.strength) + w1term + du);
        push("split_force_estimate", lhs, rhs + FunctionalConfig::tol(rhs));
      }
    }
  }
  out.atoms = accumulate_muIC(log, ds);
  out.muIC_total = mu;
  return out;
}

// spec op: audits bracketing one event
inline std::vector<EstimateAudit> monitor_event(const FunctionalSeries& series, uint64_t event) {
  std::vector<EstimateAudit> out;
  for (const EstimateAudit& a : series.audits)
    if (a.event == event) out.push_back(a);
  return out;
}

}  // namespace fronttrack
