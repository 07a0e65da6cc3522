#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fronttrack/functionals.hpp"
#include "fronttrack/tracker.hpp"

namespace fronttrack {

enum class CrossingKind { TransverseFront, InteractionNode, SplitNode };

struct Crossing {
  CrossingKind kind = CrossingKind::TransverseFront;
  double t = 0.0;
  double x = 0.0;
  double v_later = 0.0;    // v_i(t+, y(t+)-)
  double v_earlier = 0.0;  // v_i(t-, y(t-)-)
  uint64_t front_id = 0;   // transverse crossings
  uint64_t event = kNoEvent;
  double sigma_j = 0.0;  // transverse front strength
  // splitting taxonomy
  bool at_grid = false;
  int grid_j = 0;
  int endpoint_family = 0;  // family of the pre-step front at the node (0: none)
  double endpoint_sigma = 0.0;
  double omega2_n = 0.0;
};

struct CharacteristicPath {
  int family = 1;
  double T = 0.0, X = 0.0;                         // anchor
  std::vector<std::pair<double, double>> samples;  // (t, x), increasing t
  std::vector<Crossing> crossings;                 // increasing t
  double v0 = 0.0;                                 // v_i value on the earliest piece

  double x_at(double t) const {
    if (samples.empty()) return X;
    if (t <= samples.front().first) return samples.front().second;
    if (t >= samples.back().first) return samples.back().second;
    auto it = std::lower_bound(
        samples.begin(), samples.end(), t,
        [](const std::pair<double, double>& s, double tt) { return s.first < tt; });
    auto prev = it - 1;
    double dt = it->first - prev->first;
    if (dt <= 0) return it->second;
    double w = (t - prev->first) / dt;
    return prev->second + w * (it->second - prev->second);
  }

  // v_i(t, y(t)-): step function jumping at crossings
  double v_at(double t) const {
    double v = v0;
    for (const Crossing& c : crossings) {
      if (c.t <= t)
        v = c.v_later;
      else
        break;
    }
    return v;
  }
};

// sum of transverse strengths on the approaching side of y
inline double compute_Qtilde(const WavePattern& pat, int family, double y) {
  double s = 0.0;
  for (const Front& f : pat.fronts) {
    if (family == 1 && f.family == 2 && f.position < y) s += std::abs(f.strength);
    if (family == 2 && f.family == 1 && f.position > y) s += std::abs(f.strength);
  }
  return s;
}

// state just left of x
inline State pattern_state_left(const WavePattern& pat, double x) {
  State s = pat.leftmost;
  for (const Front& f : pat.fronts) {
    if (f.position < x)
      s = f.right;
    else
      break;
  }
  return s;
}

inline double compute_Theta(const WavePattern& pat, const FluxModel& m, int family, double y,
                            const DiscretizedSource& ds, const FunctionalConfig& cfg,
                            int next_step) {
  RiemannCoords v = m.to_invariants(pattern_state_left(pat, y));
  double vi = family == 1 ? v.v1 : v.v2;
  double W = compute_W(ds, next_step);
  double Qt = compute_Qtilde(pat, family, y);
  double Qh = compute_Qhat(pat, ds, cfg, next_step);
  return (std::abs(vi) + cfg.vbar_inf + cfg.A0 * W) * std::exp(cfg.Atilde * Qt + cfg.A * Qh);
}

// ---------------------------------------------------------------------------
// Minimal backward characteristics on the segment archive.

namespace detail {

inline bool pos_close(double a, double b) { return std::abs(a - b) <= 1e-11 * (1.0 + std::abs(a)); }

class BackwardWalker {
 public:
  BackwardWalker(const EventLog& lg, const FluxModel& model, int family)
      : log_(lg), m_(model), family_(family) {
    leftmost_before_.resize(log_.events.size());
    State cur = log_.initial.leftmost;
    for (size_t k = 0; k < log_.events.size(); ++k) {
      leftmost_before_[k] = cur;
      if (log_.events[k].kind == EventKind::Splitting) cur = log_.events[k].leftmost_after;
    }
  }

  std::vector<CharacteristicPath> run(const std::vector<double>& anchors, double T) {
    build_alive_at(T);
    slab_leftmost_ = log_.initial.leftmost;
    for (size_t k = 0; k < log_.events.size(); ++k)
      if (log_.events[k].kind == EventKind::Splitting && log_.events[k].time <= T)
        slab_leftmost_ = log_.events[k].leftmost_after;

    for (double X : anchors) start_walk(X, T);

    std::vector<size_t> evs;
    for (size_t k = 0; k < log_.events.size(); ++k)
      if (log_.events[k].time <= T * (1 + 1e-15)) evs.push_back(k);

    for (size_t q = evs.size(); q > 0; --q) {
      const EventRecord& e = log_.events[evs[q - 1]];
      double t_lo = e.time;
      for (Walk& w : walks_)
        if (w.t > t_lo) advance_in_slab(w, t_lo);
      apply_event_backward(e);
      for (Walk& w : walks_) handle_node(w, e);
    }
    for (Walk& w : walks_)
      if (w.t > 0) advance_in_slab(w, 0.0);

    std::vector<CharacteristicPath> out;
    for (Walk& w : walks_) {
      w.path.v0 = w.v_cur;
      std::reverse(w.path.samples.begin(), w.path.samples.end());
      std::reverse(w.path.crossings.begin(), w.path.crossings.end());
      out.push_back(std::move(w.path));
    }
    return out;
  }

 private:
  struct Live {
    const SegmentRecord* s;
    double x_at(double t) const { return s->x_at(t); }
  };

  struct Walk {
    double t = 0, x = 0;
    bool on_front = false;
    uint64_t front_id = 0;
    int side_hint = 0;  // when x sits exactly on a line: -1 left of it, +1 right
    double v_cur = 0.0;
    CharacteristicPath path;
  };

  void build_alive_at(double T) {
    alive_.clear();
    for (const SegmentRecord& s : log_.segments) {
      double death = s.alive_at_end ? std::numeric_limits<double>::infinity() : s.t_death;
      if (s.t_birth <= T && T < death) alive_.push_back({&s});
      else if (s.alive_at_end && T >= s.t_death && s.t_birth <= T) alive_.push_back({&s});
    }
    std::stable_sort(alive_.begin(), alive_.end(),
                     [&](const Live& a, const Live& b) { return a.x_at(T) < b.x_at(T); });
  }

  double lam(const State& u) const { return m_.lambda(family_, u); }
  double vi_of(const State& u) const {
    RiemannCoords v = m_.to_invariants(u);
    return family_ == 1 ? v.v1 : v.v2;
  }

  void start_walk(double X, double T) {
    Walk w;
    w.t = T;
    w.x = X;
    w.path.family = family_;
    w.path.T = T;
    w.path.X = X;
    w.path.samples.push_back({T, X});
    for (const Live& lf : alive_) {
      if (!pos_close(lf.x_at(T), X)) continue;
      if (lf.s->f.family == family_) {
        if (lf.s->f.strength > 0) {
          w.on_front = true;
          w.front_id = lf.s->f.id;
        } else {
          w.side_hint = -1;  // minimal path peels left off a shock
        }
        break;
      }
      w.side_hint = -1;  // anchored on a transverse front: left limit
    }
    if (w.on_front) {
      w.v_cur = vi_of(log_.segment(w.front_id).f.left);
    } else {
      int r = locate(w, T);
      w.v_cur = vi_of(region_state(r));
    }
    walks_.push_back(std::move(w));
  }

  // index of the first alive front treated as strictly right of the walk
  int locate(const Walk& w, double t) const {
    int lo = 0, hi = static_cast<int>(alive_.size());
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      double xf = alive_[mid].x_at(t);
      bool right_of_walk;
      if (pos_close(xf, w.x))
        right_of_walk = (w.side_hint <= 0);
      else
        right_of_walk = xf > w.x;
      if (right_of_walk)
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  State region_state(int right_idx) const {
    if (right_idx == 0) return slab_leftmost_;
    return alive_[right_idx - 1].s->f.right;
  }

  void advance_in_slab(Walk& w, double t_lo) {
    int guard = 0;
    while (w.t > t_lo + 1e-15) {
      require(guard++ < 200000, ErrorKind::NonTermination, "characteristic walk stalled");
      if (w.on_front) {
        const SegmentRecord& s = log_.segment(w.front_id);
        double t_stop = std::max(t_lo, s.t_birth);
        w.t = t_stop;
        w.x = s.x_at(t_stop);
        w.path.samples.push_back({w.t, w.x});
        return;
      }
      int ridx = locate(w, w.t);
      State u = region_state(ridx);
      double slope = lam(u);
      double dt_min = 1e-13 * (1.0 + std::abs(w.t));
      double best_dt = w.t - t_lo;
      int hit = 0;
      if (ridx - 1 >= 0) {
        const Live& f = alive_[ridx - 1];
        double rel = slope - f.s->pspeed;
        double gap = w.x - f.x_at(w.t);
        if (rel < -1e-13 && gap >= 0) {
          double dt = gap / (-rel);
          if (dt > dt_min && dt < best_dt) {
            best_dt = dt;
            hit = -1;
          }
        }
      }
      if (ridx < static_cast<int>(alive_.size())) {
        const Live& f = alive_[ridx];
        double rel = slope - f.s->pspeed;
        double gap = f.x_at(w.t) - w.x;
        if (rel > 1e-13 && gap >= 0) {
          double dt = gap / rel;
          if (dt > dt_min && dt < best_dt) {
            best_dt = dt;
            hit = +1;
          }
        }
      }
      w.t -= best_dt;
      w.x -= slope * best_dt;
      w.path.samples.push_back({w.t, w.x});
      if (hit == 0) return;  // slab bottom
      int fidx = (hit < 0) ? ridx - 1 : ridx;
      const Live& f = alive_[fidx];
      w.x = f.x_at(w.t);  // snap onto the line
      if (f.s->f.family != family_) {
        // transverse crossing
        int new_ridx = (hit < 0) ? ridx - 1 : ridx + 1;
        State entered = region_state(new_ridx);
        Crossing c;
        c.kind = CrossingKind::TransverseFront;
        c.t = w.t;
        c.x = w.x;
        c.front_id = f.s->f.id;
        c.sigma_j = f.s->f.strength;
        c.v_later = w.v_cur;
        c.v_earlier = vi_of(entered);
        w.path.crossings.push_back(c);
        w.v_cur = c.v_earlier;
        w.side_hint = (hit < 0) ? +1 : -1;
        continue;
      }
      if (f.s->f.strength > 0) {
        w.on_front = true;
        w.front_id = f.s->f.id;
        w.v_cur = vi_of(f.s->f.left);
        continue;
      }
      // same-family shock: minimal continuation stays on its left
      w.side_hint = -1;
      w.v_cur = vi_of(f.s->f.left);
      continue;
    }
    w.t = t_lo;
  }

  void apply_event_backward(const EventRecord& e) {
    double tq = e.time - 1e-12 * (1 + std::abs(e.time));
    auto insert_sorted = [&](const SegmentRecord& s) {
      for (const Live& lf : alive_)
        if (lf.s->f.id == s.f.id) return;
      auto pos = std::lower_bound(alive_.begin(), alive_.end(), s.x_at(tq),
                                  [&](const Live& lf, double xx) { return lf.x_at(tq) < xx; });
      alive_.insert(pos, {&s});
    };
    auto remove_id = [&](uint64_t id) {
      alive_.erase(std::remove_if(alive_.begin(), alive_.end(),
                                  [&](const Live& lf) { return lf.s->f.id == id; }),
                   alive_.end());
    };
    if (e.kind == EventKind::Interaction) {
      for (const Front& f : e.out) remove_id(f.id);
      for (const Front& f : e.in) insert_sorted(log_.segment(f.id));
    } else {
      for (const SplitJump& j : e.jumps) {
        for (const Front& f : j.out)
          if (!(j.has_incoming && f.id == j.incoming.id)) remove_id(f.id);
      }
      for (const SplitJump& j : e.jumps)
        if (j.has_incoming) insert_sorted(log_.segment(j.incoming.id));
      slab_leftmost_ = leftmost_before_[e.index];
    }
  }

  // maximal admissible backward slope among pre-event incoming fronts and the
  // regions between them; ties prefer riding a front
  struct NodeChoice {
    bool on_front = false;
    uint64_t front_id = 0;
    double slope = 0.0;
    State region;
    int side_hint = 0;
  };

  NodeChoice node_continuation(const std::vector<const SegmentRecord*>& fronts,
                               const std::vector<State>& states) const {
    NodeChoice out;
    double best = -std::numeric_limits<double>::infinity();
    int n = static_cast<int>(fronts.size());
    // The path never ends up inside a region left of a same-family wave of
    // negative strength (it cannot cross such waves), but it may travel along
    // incoming same-family waves of nonnegative strength wherever they sit.
    int min_r = 0;
    for (int k = 0; k < n; ++k)
      if (fronts[k]->f.family == family_ && fronts[k]->f.strength < 0) min_r = k + 1;
    bool found = false;
    for (int r = min_r; r <= n; ++r) {
      double lo = (r == n) ? -std::numeric_limits<double>::infinity() : fronts[r]->pspeed;
      double hi = (r == 0) ? std::numeric_limits<double>::infinity() : fronts[r - 1]->pspeed;
      double lamr = lam(states[r]);
      if (lamr >= lo - 1e-12 && lamr <= hi + 1e-12 && lamr > best) {
        best = lamr;
        out = NodeChoice{false, 0, lamr, states[r], (r == n) ? -1 : +1};
        found = true;
      }
    }
    for (int k = 0; k < n; ++k) {
      if (fronts[k]->f.family != family_ || fronts[k]->f.strength < 0) continue;
      if (fronts[k]->pspeed >= best - 1e-13) {
        best = fronts[k]->pspeed;
        out = NodeChoice{true, fronts[k]->f.id, fronts[k]->pspeed, states[k], 0};
        found = true;
      }
    }
    if (!found) {
      // no wedge-consistent choice: fall back to the region right of the barrier
      out = NodeChoice{false, 0, lam(states[min_r]), states[min_r], (min_r == n) ? -1 : +1};
    }
    return out;
  }

  void apply_choice(Walk& w, const NodeChoice& c) {
    if (c.on_front) {
      w.on_front = true;
      w.front_id = c.front_id;
    } else {
      w.on_front = false;
      w.side_hint = c.side_hint;
      // detach from the node stack with a tiny explicit step
      double dt = 1e-12 * (1.0 + std::abs(w.t));
      if (w.t > dt) {
        w.t -= dt;
        w.x -= c.slope * dt;
        w.path.samples.push_back({w.t, w.x});
      }
    }
  }

  void handle_node(Walk& w, const EventRecord& e) {
    if (w.t > e.time + 1e-15) return;
    w.t = e.time;
    if (e.kind == EventKind::Interaction) {
      if (!pos_close(w.x, e.x)) return;
      std::vector<const SegmentRecord*> fronts;
      for (const Front& f : e.in) fronts.push_back(&log_.segment(f.id));
      std::sort(fronts.begin(), fronts.end(),
                [](const SegmentRecord* a, const SegmentRecord* b) {
                  return a->pspeed > b->pspeed;
                });
      std::vector<State> states;
      states.push_back(fronts.front()->f.left);
      for (const SegmentRecord* f : fronts) states.push_back(f->f.right);
      NodeChoice c = node_continuation(fronts, states);
      Crossing cr;
      cr.kind = CrossingKind::InteractionNode;
      cr.t = e.time;
      cr.x = w.x;
      cr.event = e.index;
      cr.v_later = w.v_cur;
      cr.v_earlier = c.on_front ? vi_of(log_.segment(c.front_id).f.left) : vi_of(c.region);
      w.path.crossings.push_back(cr);
      w.v_cur = cr.v_earlier;
      apply_choice(w, c);
    } else {
      // the path continues through t_n; its value generally changes
      Crossing cr;
      cr.kind = CrossingKind::SplitNode;
      cr.t = e.time;
      cr.x = w.x;
      cr.event = e.index;
      cr.omega2_n = e.omega2_n;
      cr.v_later = w.v_cur;
      const SplitJump* jp = nullptr;
      for (const SplitJump& j : e.jumps)
        if (pos_close(j.x, w.x)) jp = &j;
      cr.at_grid = jp ? jp->at_grid : false;
      cr.grid_j = jp ? jp->grid_j : 0;
      if (jp && jp->has_incoming) {
        cr.endpoint_family = jp->incoming.family;
        cr.endpoint_sigma = jp->incoming.strength;
      }
      if (jp && jp->has_incoming) {
        // the barrier rule inside node_continuation keeps the walk on the
        // right of a re-emitted same-family shock
        const SegmentRecord& inc = log_.segment(jp->incoming.id);
        std::vector<const SegmentRecord*> fronts{&inc};
        std::vector<State> states{inc.f.left, inc.f.right};
        NodeChoice c = node_continuation(fronts, states);
        cr.v_earlier = c.on_front ? vi_of(inc.f.left) : vi_of(c.region);
        w.path.crossings.push_back(cr);
        w.v_cur = cr.v_earlier;
        apply_choice(w, c);
      } else {
        // mid-region (or a fresh cut): same geometry, updated state
        int r = locate(w, e.time - 1e-12);
        cr.v_earlier = vi_of(region_state(r));
        w.path.crossings.push_back(cr);
        w.v_cur = cr.v_earlier;
        w.on_front = false;
      }
    }
  }

  const EventLog& log_;
  const FluxModel& m_;
  int family_;
  std::vector<Live> alive_;
  std::vector<State> leftmost_before_;
  State slab_leftmost_;
  std::vector<Walk> walks_;
};

}  // namespace detail

inline std::vector<CharacteristicPath> minimal_backward_multi(const EventLog& log,
                                                              const FluxModel& m, int family,
                                                              const std::vector<double>& anchors,
                                                              double T) {
  require(T <= log.final_pattern.time * (1 + 1e-12) + 1e-15, ErrorKind::Precondition,
          "anchor time beyond run horizon");
  detail::BackwardWalker bw(log, m, family);
  return bw.run(anchors, T);
}

inline CharacteristicPath minimal_backward(const EventLog& log, const FluxModel& m, int family,
                                           double T, double X) {
  return minimal_backward_multi(log, m, family, {X}, T)[0];
}

// ---------------------------------------------------------------------------
// Crossing classification against the v_i-change estimates.

struct CrossingAudit {
  Crossing crossing;
  std::string
      rule;  // transverse_cubic | node_cubic | split_plain | split_own | split_other (+ _grid)
  double lhs = 0.0, rhs = 0.0;
  bool pass = true;
};

inline std::vector<CrossingAudit> classify_crossings(const CharacteristicPath& path,
                                                     const EventLog& log,
                                                     const DiscretizedSource& ds, double C3) {
  std::vector<CrossingAudit> out;
  for (const Crossing& c : path.crossings) {
    CrossingAudit a;
    a.crossing = c;
    a.lhs = std::abs(c.v_later) - std::abs(c.v_earlier);
    double tol = 1e-12 * (1.0 + std::abs(c.v_earlier));
    switch (c.kind) {
      case CrossingKind::TransverseFront: {
        a.rule = "transverse_cubic";
        a.rhs = C3 * std::pow(std::abs(c.sigma_j), 3.0) + tol;
        break;
      }
      case CrossingKind::InteractionNode: {
        const EventRecord& e = log.events[c.event];
        double s = std::abs(e.in[0].strength) + std::abs(e.in[1].strength);
        a.rule = "node_cubic";
        a.rhs = C3 * s * s * s + tol;
        break;
      }
      case CrossingKind::SplitNode: {
        double tw = ds.tau() * c.omega2_n;
        double sig = std::abs(c.endpoint_sigma);
        if (c.endpoint_family == 0) {
          a.rule = c.at_grid ? "split_plain_grid" : "split_plain";
          double w1 = c.at_grid ? ds.eps() * ds.omega1_cell(c.grid_j) : 0.0;
          a.rhs = C3 * tw * (1.0 + w1) + tol;
        } else if (c.endpoint_family == path.family) {
          a.rule = c.at_grid ? "split_own_grid" : "split_own";
          a.rhs = C3 * tw * (1.0 + sig) + tol;
        } else {
          double w1 = c.at_grid ? ds.eps() * ds.omega1_cell(c.grid_j) : 0.0;
          a.rule = c.at_grid ? "split_other_grid" : "split_other";
          a.rhs = C3 * (tw + tw * (sig + w1) + sig * sig * sig) + tol;
        }
        break;
      }
    }
    a.pass = a.lhs <= a.rhs;
    out.push_back(a);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Theta and Qtilde audits along a path.

struct ThetaPoint {
  double t;
  bool is_event;
  uint64_t event = kNoEvent;
  double theta_before = 0.0, theta_after = 0.0;
  double qt_before = 0.0, qt_after = 0.0;
  bool pass = true;
  std::string qt_rule;
  bool qt_pass = true;
  double qt_lhs = 0.0, qt_rhs = 0.0;
};

struct ThetaAuditResult {
  std::vector<ThetaPoint> points;
  bool theta_ok = true;
  bool qtilde_ok = true;
};

// Evaluates Theta_i along a minimal backward characteristic across every event
// and every crossing; audits monotonicity and the Qtilde case estimates.
// Crossings are matched to events by index (several events can share a clock
// time when deferred collisions fire right after a splitting step).
inline ThetaAuditResult theta_audit(const EventLog& log, const DiscretizedSource& ds,
                                    const FluxModel& m, const FunctionalConfig& cfg,
                                    const FunctionalSeries& series,
                                    const CharacteristicPath& path) {
  ThetaAuditResult out;
  int family = path.family;

  std::vector<const SegmentRecord*> alive;
  for (const Front& f : log.initial.fronts) alive.push_back(&log.segment(f.id));

  auto qtilde_at = [&](double t, double y) {
    double s = 0.0;
    for (const SegmentRecord* sr : alive) {
      double xf = sr->x_at(t);
      if (family == 1 && sr->f.family == 2 && xf < y) s += std::abs(sr->f.strength);
      if (family == 2 && sr->f.family == 1 && xf > y) s += std::abs(sr->f.strength);
    }
    return s;
  };

  auto theta_of = [&](double qt, double qhat, double W, double v) {
    return (std::abs(v) + cfg.vbar_inf + cfg.A0 * W) * std::exp(cfg.Atilde * qt + cfg.A * qhat);
  };

  size_t ci = 0;          // next unconsumed crossing
  double cur_v = path.v0; // path value below the next crossing
  for (size_t k = 0; k < log.events.size(); ++k) {
    const EventRecord& e = log.events[k];
    if (e.time > path.T * (1 + 1e-15)) break;
    double dt = 1e-9 * (1.0 + std::abs(e.time));

    // plain transverse crossings strictly before this event
    while (ci < path.crossings.size() && path.crossings[ci].event == kNoEvent &&
           path.crossings[ci].t < e.time - dt) {
      const Crossing& c = path.crossings[ci];
      ThetaPoint p;
      p.t = c.t;
      p.is_event = false;
      double qb = qtilde_at(c.t - dt, path.x_at(c.t - dt));
      double qa = qtilde_at(c.t + dt, path.x_at(c.t + dt));
      const FunctionalSnapshot& snap = series.snaps[k];
      p.qt_before = qb;
      p.qt_after = qa;
      p.theta_before = theta_of(qb, snap.Qhat, snap.W, c.v_earlier);
      p.theta_after = theta_of(qa, snap.Qhat, snap.W, c.v_later);
      p.pass = p.theta_after <= p.theta_before + FunctionalConfig::tol(p.theta_before);
      p.qt_rule = "crossing_exact_drop";
      p.qt_lhs = std::abs((qa - qb) + std::abs(c.sigma_j));
      p.qt_rhs = 1e-9;
      p.qt_pass = p.qt_lhs <= p.qt_rhs;
      if (!p.pass) out.theta_ok = false;
      if (!p.qt_pass) out.qtilde_ok = false;
      out.points.push_back(p);
      cur_v = c.v_later;
      ++ci;
    }

    // value change attributed to exactly this event, if the path recorded one
    double vb = cur_v, va = cur_v;
    bool path_at_node = false;
    if (ci < path.crossings.size() && path.crossings[ci].event == e.index) {
      vb = path.crossings[ci].v_earlier;
      va = path.crossings[ci].v_later;
      path_at_node = (e.kind == EventKind::Interaction);
      cur_v = va;
      ++ci;
    }

    double y_b = path.x_at(e.time - dt);
    double y_a = path.x_at(e.time + dt);
    double qb = qtilde_at(e.time - dt, y_b);
    // apply the event to the alive set
    if (e.kind == EventKind::Interaction) {
      for (const Front& f : e.in)
        alive.erase(std::remove_if(alive.begin(), alive.end(),
                                   [&](const SegmentRecord* s) { return s->f.id == f.id; }),
                    alive.end());
      for (const Front& f : e.out) alive.push_back(&log.segment(f.id));
    } else {
      for (const SplitJump& j : e.jumps) {
        if (j.has_incoming) {
          bool kept = false;
          for (const Front& f : j.out)
            if (f.id == j.incoming.id) kept = true;
          if (!kept)
            alive.erase(std::remove_if(
                            alive.begin(), alive.end(),
                            [&](const SegmentRecord* s) { return s->f.id == j.incoming.id; }),
                        alive.end());
        }
        for (const Front& f : j.out) {
          bool present = false;
          for (const SegmentRecord* s : alive)
            if (s->f.id == f.id) present = true;
          if (!present) alive.push_back(&log.segment(f.id));
        }
      }
    }
    double qa = qtilde_at(e.time + dt, y_a);

    ThetaPoint p;
    p.t = e.time;
    p.is_event = true;
    p.event = e.index;
    p.qt_before = qb;
    p.qt_after = qa;
    const FunctionalSnapshot& sb = series.snaps[k];
    const FunctionalSnapshot& sa = series.snaps[k + 1];
    p.theta_before = theta_of(qb, sb.Qhat, sb.W, vb);
    p.theta_after = theta_of(qa, sa.Qhat, sa.W, va);
    p.pass = p.theta_after <= p.theta_before + FunctionalConfig::tol(p.theta_before);
    if (!p.pass) out.theta_ok = false;

    double tol = 1e-11 * (1.0 + qb);
    if (e.kind == EventKind::Interaction) {
      double ss = std::abs(e.in[0].strength * e.in[1].strength);
      double cubic = cfg.C1 * ss * (std::abs(e.in[0].strength) + std::abs(e.in[1].strength));
      if (path_at_node && e.in[0].family == e.in[1].family && e.in[0].family != family) {
        p.qt_rule = "node_two_transverse";
        p.qt_lhs = qa - qb;
        p.qt_rhs = -(std::abs(e.in[0].strength) + std::abs(e.in[1].strength)) + cubic + tol;
      } else {
        p.qt_rule = "interaction_cubic";
        p.qt_lhs = qa - qb;
        p.qt_rhs = cubic + tol;
      }
    } else {
      double tw = ds.tau() * e.omega2_n;
      p.qt_rule = "split_growth";
      p.qt_lhs = qa - qb;
      p.qt_rhs = cfg.C3 * tw * (sb.V + ds.omega1_L1()) + tol;
    }
    p.qt_pass = p.qt_lhs <= p.qt_rhs;
    if (!p.qt_pass) out.qtilde_ok = false;
    out.points.push_back(p);
  }

  // crossings above the last processed event
  size_t nevents = 0;
  for (const EventRecord& e : log.events)
    if (e.time <= path.T * (1 + 1e-15)) ++nevents;
  while (ci < path.crossings.size()) {
    const Crossing& c = path.crossings[ci];
    double dt = 1e-9 * (1.0 + std::abs(c.t));
    ThetaPoint p;
    p.t = c.t;
    p.is_event = false;
    double qb = qtilde_at(c.t - dt, path.x_at(c.t - dt));
    double qa = qtilde_at(c.t + dt, path.x_at(c.t + dt));
    const FunctionalSnapshot& snap = series.snaps[nevents];
    p.qt_before = qb;
    p.qt_after = qa;
    p.theta_before = theta_of(qb, snap.Qhat, snap.W, c.v_earlier);
    p.theta_after = theta_of(qa, snap.Qhat, snap.W, c.v_later);
    p.pass = p.theta_after <= p.theta_before + FunctionalConfig::tol(p.theta_before);
    if (!p.pass) out.theta_ok = false;
    out.points.push_back(p);
    ++ci;
  }
  return out;
}

}  // namespace fronttrack
