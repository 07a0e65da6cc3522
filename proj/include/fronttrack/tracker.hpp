#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <queue>
#include <string>
#include <vector>

#include "fronttrack/model.hpp"
#include "fronttrack/riemann.hpp"
#include "fronttrack/source.hpp"

namespace fronttrack {

struct RunConfig {
  double eps = 0.01;   // eps_nu
  double tau = 0.005;  // tau_nu
  double T = 1.0;
  double speed_perturbation_scale = -1.0;  // < 0: use 1e-9 * eps
  uint64_t seed = 0;
  uint64_t event_cap = 10'000'000;
  int quad_order = 4;

  double pscale() const {
    return speed_perturbation_scale < 0 ? 1e-9 * eps : speed_perturbation_scale;
  }
  void validate(double lambda_hat, double T_star) const {
    require(eps > 0 && tau > 0 && tau <= eps * (1 + 1e-12), ErrorKind::Precondition,
            "need 0 < tau <= eps");
    require(lambda_hat * tau < eps * (1 + 1e-12), ErrorKind::Precondition,
            "need lambda_hat * tau < eps");
    require(T <= T_star * (1 + 1e-12), ErrorKind::Precondition, "horizon exceeds T*");
  }
};

struct WavePattern {
  double time = 0.0;
  State leftmost;
  std::vector<Front> fronts;  // sorted by position (ties in emission order)

  State rightmost() const { return fronts.empty() ? leftmost : fronts.back().right; }

  // state just right of x
  State at(double x) const {
    State s = leftmost;
    for (const Front& f : fronts) {
      if (f.position <= x)
        s = f.right;
      else
        break;
    }
    return s;
  }
};

enum class EventKind { Interaction, Splitting };
enum class RunStatus { Completed, OutOfDomain, EventCap, SolverFailure };

struct SplitJump {
  double x = 0.0;
  bool at_grid = false;
  int grid_j = 0;  // cell index when at_grid (boundary between grid_j-1 and grid_j)
  bool has_incoming = false;
  Front incoming;
  std::vector<Front> out;
  double sigma_in[2] = {0, 0};
  double sigma_hat[2] = {0, 0};
};

struct EventRecord {
  uint64_t index = 0;
  EventKind kind = EventKind::Interaction;
  double time = 0.0;
  double x = std::numeric_limits<double>::quiet_NaN();
  std::vector<Front> in, out;
  int step = 0;
  double omega2_n = 0.0;
  std::vector<SplitJump> jumps;
  State leftmost_after;  // splitting steps update the far-left state
};

constexpr uint64_t kNoEvent = ~uint64_t{0};

struct SegmentRecord {
  Front f;         // position field unused; geometry from birth + pspeed
  double pspeed = 0.0;
  double t_birth = 0.0, x_birth = 0.0;
  double t_death = 0.0, x_death = 0.0;
  uint64_t birth_event = kNoEvent, death_event = kNoEvent;
  bool alive_at_end = false;

  double x_at(double t) const { return x_birth + pspeed * (t - t_birth); }
};

struct EventLog {
  RunConfig config;
  std::string model_name;
  RunStatus status = RunStatus::Completed;
  std::string message;
  WavePattern initial, final_pattern;
  std::vector<EventRecord> events;
  std::vector<SegmentRecord> segments;  // indexed by id - 1
  uint64_t interaction_count = 0;
  uint64_t splitting_count = 0;
  uint64_t single_front_provisions = 0;
  uint64_t fan_partitioned_waves = 0;

  const SegmentRecord& segment(uint64_t id) const { return segments[id - 1]; }
};

struct TrackerEvent {
  const WavePattern& before;
  const WavePattern& after;
  const EventRecord& record;
};

using Monitor = std::function<void(const TrackerEvent&)>;

// ---------------------------------------------------------------------------
// Initial datum.

struct Datum {
  std::function<Vec2(double)> value;
  double lo = 0.0, hi = 0.0;  // variation confined to [lo, hi]

  static Datum riemann(State ul, State ur, double x0 = 0.0) {
    Datum d;
    d.value = [=](double x) { return x < x0 ? ul.vec() : ur.vec(); };
    d.lo = x0 - 1e-9;
    d.hi = x0 + 1e-9;
    return d;
  }
  static Datum constant(State u) {
    Datum d;
    d.value = [=](double) { return u.vec(); };
    d.lo = d.hi = 0.0;
    return d;
  }
};

// piecewise-constant sampling on the x_j grid by cell midpoints, each jump
// resolved into its Riemann fan
inline WavePattern init_approximation(const FluxModel& m, const Datum& datum,
                                      const WaveCurveParams& p) {
  WavePattern pat;
  pat.time = 0.0;
  double eps = p.epsilon;
  int j0 = static_cast<int>(std::floor(datum.lo / eps)) - 1;
  int j1 = static_cast<int>(std::floor(datum.hi / eps)) + 1;
  std::vector<std::pair<double, State>> cells;  // (left edge, state)
  for (int j = j0; j <= j1; ++j) {
    Vec2 u = datum.value((j + 0.5) * eps);
    require(norm(u) < m.radius(), ErrorKind::OutOfDomain, "initial datum outside validity ball");
    cells.push_back({j * eps, State::of(u)});
  }
  pat.leftmost = cells.front().second;
  State prev = pat.leftmost;
  for (size_t k = 1; k < cells.size(); ++k) {
    State cur = cells[k].second;
    if (norm(cur.vec() - prev.vec()) > kWaveDrop) {
      RiemannFan fan = solve_riemann(m, prev, cur, p);
      for (Front f : fan.fronts) {
        f.position = cells[k].first;
        f.generation = 1;
        pat.fronts.push_back(f);
      }
    }
    prev = cur;
  }
  return pat;
}

// ---------------------------------------------------------------------------
// Pattern utilities.

inline Vec2 pattern_integral(const WavePattern& pat, double a, double b) {
  Vec2 acc{0, 0};
  double last = a;
  State st = pat.leftmost;
  for (const Front& f : pat.fronts) {
    if (f.position >= b) break;
    double xp = std::max(f.position, a);
    if (xp > last) {
      acc += st.vec() * (xp - last);
      last = xp;
    }
    st = f.right;
  }
  if (b > last) acc += st.vec() * (b - last);
  return acc;
}

inline double l1_distance(const WavePattern& A, const WavePattern& B, double a, double b) {
  // exact integral of |u_A - u_B| over [a, b]
  std::vector<double> cuts{a, b};
  for (const Front& f : A.fronts)
    if (f.position > a && f.position < b) cuts.push_back(f.position);
  for (const Front& f : B.fronts)
    if (f.position > a && f.position < b) cuts.push_back(f.position);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    Vec2 d = A.at(mid).vec() - B.at(mid).vec();
    acc += (std::abs(d.x) + std::abs(d.y)) * (cuts[k + 1] - cuts[k]);
  }
  return acc;
}

inline double pattern_chain_residual(const WavePattern& pat) {
  double worst = 0.0;
  State prev = pat.leftmost;
  for (const Front& f : pat.fronts) {
    worst = std::max(worst, norm(f.left.vec() - prev.vec()));
    prev = f.right;
  }
  return worst;
}

// ---------------------------------------------------------------------------
// The tracker.

namespace detail {

class Tracker {
 public:
  Tracker(const FluxModel& m, const DiscretizedSource& ds, const RunConfig& cfg)
      : m_(m), ds_(ds), cfg_(cfg), params_{cfg.eps, default_cutoff} {}

  EventLog run(WavePattern initial, const std::vector<Monitor>& monitors) {
    log_.config = cfg_;
    log_.model_name = m_.name();
    time_ = initial.time;
    leftmost_ = initial.leftmost;
    for (Front& f : initial.fronts) {
      f.id = next_id_++;
      live_.push_back(Rt{f, time_, f.position, perturbed(f)});
      open_segment(live_.back(), kNoEvent);
    }
    log_.initial = materialize();
    reindex();
    rebuild_queue();

    int step = 1;
    auto steps_left = [&] {
      return !ds_.zero() && step <= ds_.n_steps() && step * cfg_.tau <= cfg_.T * (1 + 1e-12);
    };
    try {
      for (;;) {
        if (log_.events.size() >= cfg_.event_cap) {
          log_.status = RunStatus::EventCap;
          log_.message = "event cap exceeded";
          break;
        }
        double t_split = steps_left() ? step * cfg_.tau : std::numeric_limits<double>::infinity();
        auto coll = next_collision();
        if (coll && coll->t < t_split && coll->t <= cfg_.T * (1 + 1e-12)) {
          process_interaction(*coll, monitors);
          continue;
        }
        if (steps_left()) {
          process_split(step, step * cfg_.tau, monitors);
          ++step;
          continue;
        }
        break;
      }
    } catch (const Error& e) {
      log_.status = (e.kind() == ErrorKind::OutOfDomain) ? RunStatus::OutOfDomain
                                                         : RunStatus::SolverFailure;
      log_.message = e.what();
    }
    if (log_.status == RunStatus::Completed) time_ = cfg_.T;
    for (const Rt& r : live_) {
      SegmentRecord& s = log_.segments[r.f.id - 1];
      s.alive_at_end = true;
      s.t_death = time_;
      s.x_death = r.x_at(time_);
    }
    log_.final_pattern = materialize();
    return std::move(log_);
  }

 private:
  // a live front: value data plus its kinematic line
  struct Rt {
    Front f;
    double t0 = 0.0, x0 = 0.0;  // birth anchor
    double ps = 0.0;            // perturbed speed (actual kinematics)
    double x_at(double t) const { return x0 + ps * (t - t0); }
  };

  struct Collision {
    double t;
    uint64_t a, b;
  };

  struct QEntry {
    double t;
    uint64_t a, b;
    bool operator>(const QEntry& o) const {
      if (t != o.t) return t > o.t;
      if (a != o.a) return a > o.a;
      return b > o.b;
    }
  };

  double perturbed(const Front& f) const {
    return f.speed + hash_unit(f.id, cfg_.seed) * cfg_.pscale();
  }

  WavePattern materialize() const {
    WavePattern pat;
    pat.time = time_;
    pat.leftmost = leftmost_;
    pat.fronts.reserve(live_.size());
    for (const Rt& r : live_) {
      Front f = r.f;
      f.position = r.x_at(time_);
      pat.fronts.push_back(f);
    }
    return pat;
  }

  void open_segment(const Rt& r, uint64_t birth_event) {
    SegmentRecord s;
    s.f = r.f;
    s.pspeed = r.ps;
    s.t_birth = r.t0;
    s.x_birth = r.x0;
    s.birth_event = birth_event;
    if (log_.segments.size() < r.f.id) log_.segments.resize(r.f.id);
    log_.segments[r.f.id - 1] = s;
  }

  void close_segment(uint64_t id, double t, double x, uint64_t death_event) {
    SegmentRecord& s = log_.segments[id - 1];
    s.t_death = t;
    s.x_death = x;
    s.death_event = death_event;
  }

  int index_of(uint64_t id) const {
    auto it = idx_.find(id);
    return it == idx_.end() ? -1 : it->second;
  }

  void reindex() {
    idx_.clear();
    idx_.reserve(2 * live_.size());
    for (size_t k = 0; k < live_.size(); ++k) idx_[live_[k].f.id] = static_cast<int>(k);
  }

  void schedule_pair(int ia) {
    if (ia < 0 || ia + 1 >= static_cast<int>(live_.size())) return;
    const Rt& a = live_[ia];
    const Rt& b = live_[ia + 1];
    if (a.ps <= b.ps) return;
    // intersection of the two kinematic lines
    double t = (b.x0 - b.ps * b.t0 - a.x0 + a.ps * a.t0) / (a.ps - b.ps);
    if (t < time_) t = time_;
    queue_.push(QEntry{t, a.f.id, b.f.id});
  }

  void rebuild_queue() {
    queue_ = {};
    reindex();
    for (int k = 0; k + 1 < static_cast<int>(live_.size()); ++k) schedule_pair(k);
  }

  std::optional<Collision> next_collision() {
    while (!queue_.empty()) {
      QEntry e = queue_.top();
      int ia = index_of(e.a), ib = index_of(e.b);
      if (ia < 0 || ib < 0 || ib != ia + 1) {
        queue_.pop();
        continue;
      }
      return Collision{std::max(e.t, time_), e.a, e.b};
    }
    return std::nullopt;
  }

  void process_interaction(const Collision& c, const std::vector<Monitor>& monitors) {
    WavePattern before;
    if (!monitors.empty()) before = materialize();
    queue_.pop();
    time_ = c.t;
    int ia = index_of(c.a);
    int ib = index_of(c.b);
    Front a = live_[ia].f;
    Front b = live_[ib].f;
    a.position = live_[ia].x_at(c.t);
    b.position = live_[ib].x_at(c.t);
    double x = 0.5 * (a.position + b.position);

    ProvisionFlags prov;
    prov.single_family1 = (a.family == 1 && a.strength > 0) || (b.family == 1 && b.strength > 0);
    prov.single_family2 = (a.family == 2 && a.strength > 0) || (b.family == 2 && b.strength > 0);
    RiemannFan fan = solve_riemann(m_, a.left, b.right, params_, prov);

    EventRecord rec;
    rec.index = log_.events.size();
    rec.kind = EventKind::Interaction;
    rec.time = c.t;
    rec.x = x;
    rec.in = {a, b};
    rec.leftmost_after = leftmost_;

    auto gen_for = [&](int family) {
      bool present = false;
      int g = std::numeric_limits<int>::max();
      for (const Front* f : {&a, &b})
        if (f->family == family) {
          present = true;
          g = std::min(g, f->generation);
        }
      if (present) return g;
      return std::max(a.generation, b.generation) + 1;
    };

    std::vector<Rt> outgoing;
    for (Front f : fan.fronts) {
      f.position = x;
      f.generation = gen_for(f.family);
      f.id = next_id_++;
      outgoing.push_back(Rt{f, c.t, x, perturbed(f)});
      rec.out.push_back(f);
    }
    if (fan.sigma1 > 0)
      (prov.single(1) ? log_.single_front_provisions : log_.fan_partitioned_waves)++;
    if (fan.sigma2 > 0)
      (prov.single(2) ? log_.single_front_provisions : log_.fan_partitioned_waves)++;

    close_segment(a.id, c.t, x, rec.index);
    close_segment(b.id, c.t, x, rec.index);
    for (const Rt& r : outgoing) open_segment(r, rec.index);

    live_.erase(live_.begin() + ia, live_.begin() + ib + 1);
    live_.insert(live_.begin() + ia, outgoing.begin(), outgoing.end());
    reindex();
    schedule_pair(ia - 1);
    schedule_pair(ia + static_cast<int>(outgoing.size()) - 1);

    log_.interaction_count++;
    log_.events.push_back(std::move(rec));
    fire(monitors, before);
  }

  void process_split(int step, double t, const std::vector<Monitor>& monitors) {
    time_ = t;
    WavePattern before;
    if (!monitors.empty()) before = materialize();

    EventRecord rec;
    rec.index = log_.events.size();
    rec.kind = EventKind::Splitting;
    rec.time = t;
    rec.step = step;
    rec.omega2_n = ds_.omega2_step(step);

    struct Boundary {
      double x;
      int front_idx;  // -1 for a fresh cut
      bool at_grid;
      int grid_j;  // cell just right of the boundary
    };
    std::vector<Boundary> bounds;
    for (size_t k = 0; k < live_.size(); ++k) {
      double x = live_[k].x_at(t);
      double nearest = std::round(x / cfg_.eps) * cfg_.eps;
      bool on_grid = std::abs(x - nearest) <= 1e-12 * (1.0 + std::abs(x));
      bounds.push_back({x, static_cast<int>(k), on_grid, ds_.cell_of(nearest + 0.5 * cfg_.eps)});
    }
    for (double xc : ds_.active_cuts()) {
      bool dup = false;
      for (const Boundary& b : bounds)
        if (std::abs(b.x - xc) <= 1e-12 * (1.0 + std::abs(xc))) {
          dup = true;
          break;
        }
      if (!dup) bounds.push_back({xc, -1, true, ds_.cell_of(xc + 0.5 * cfg_.eps)});
    }
    std::stable_sort(bounds.begin(), bounds.end(),
                     [](const Boundary& p, const Boundary& q) { return p.x < q.x; });

    int npieces = static_cast<int>(bounds.size()) + 1;
    std::vector<State> old_state(npieces), new_state(npieces);
    old_state[0] = leftmost_;
    for (int k = 0; k < static_cast<int>(bounds.size()); ++k)
      old_state[k + 1] =
          (bounds[k].front_idx >= 0) ? live_[bounds[k].front_idx].f.right : old_state[k];
    for (int k = 0; k < npieces; ++k) {
      double xl = (k == 0) ? -std::numeric_limits<double>::infinity() : bounds[k - 1].x;
      double xr = (k == npieces - 1) ? std::numeric_limits<double>::infinity() : bounds[k].x;
      double rep;
      if (std::isinf(xl) && std::isinf(xr))
        rep = 0.0;
      else if (std::isinf(xl))
        rep = xr - 0.5 * cfg_.eps;
      else if (std::isinf(xr))
        rep = xl + 0.5 * cfg_.eps;
      else
        rep = 0.5 * (xl + xr);
      int j = ds_.cell_of(rep);
      Vec2 u = old_state[k].vec();
      Vec2 un = u + ds_.g_cell(step, j, u) * cfg_.tau;
      require(norm(un) < m_.radius(), ErrorKind::OutOfDomain,
              "state left the validity ball at a splitting step");
      new_state[k] = State::of(un);
    }

    std::vector<Rt> new_live;
    for (int k = 0; k < static_cast<int>(bounds.size()); ++k) {
      const Boundary& b = bounds[k];
      SplitJump jump;
      jump.x = b.x;
      jump.at_grid = b.at_grid;
      jump.grid_j = b.grid_j;
      State ul = new_state[k], ur = new_state[k + 1];
      const Rt* incoming = (b.front_idx >= 0) ? &live_[b.front_idx] : nullptr;
      if (incoming) {
        jump.has_incoming = true;
        jump.incoming = incoming->f;
        jump.incoming.position = b.x;
        jump.sigma_in[incoming->f.family - 1] = incoming->f.strength;
      }
      bool unchanged = incoming != nullptr && old_state[k].vec().x == ul.vec().x &&
                       old_state[k].vec().y == ul.vec().y &&
                       old_state[k + 1].vec().x == ur.vec().x &&
                       old_state[k + 1].vec().y == ur.vec().y;
      if (unchanged) {
        jump.sigma_hat[incoming->f.family - 1] = incoming->f.strength;
        jump.out.push_back(jump.incoming);
        new_live.push_back(*incoming);
      } else {
        if (incoming) close_segment(incoming->f.id, t, b.x, rec.index);
        if (norm(ur.vec() - ul.vec()) > kWaveDrop * (1.0 + norm(ul.vec()))) {
          ProvisionFlags prov;
          if (incoming && incoming->f.strength > 0) {
            if (incoming->f.family == 1) prov.single_family1 = true;
            if (incoming->f.family == 2) prov.single_family2 = true;
          }
          RiemannFan fan = solve_riemann(m_, ul, ur, params_, prov);
          if (fan.sigma1 > 0)
            (prov.single(1) ? log_.single_front_provisions : log_.fan_partitioned_waves)++;
          if (fan.sigma2 > 0)
            (prov.single(2) ? log_.single_front_provisions : log_.fan_partitioned_waves)++;
          for (Front f : fan.fronts) {
            f.position = b.x;
            if (incoming) {
              f.generation = (f.family == incoming->f.family) ? incoming->f.generation
                                                              : incoming->f.generation + 1;
            } else {
              f.generation = 2;
            }
            f.id = next_id_++;
            jump.sigma_hat[f.family - 1] += f.strength;
            new_live.push_back(Rt{f, t, b.x, perturbed(f)});
            open_segment(new_live.back(), rec.index);
            jump.out.push_back(f);
          }
        }
      }
      rec.jumps.push_back(std::move(jump));
    }

    leftmost_ = new_state[0];
    live_ = std::move(new_live);
    rec.leftmost_after = leftmost_;
    rebuild_queue();

    log_.splitting_count++;
    log_.events.push_back(std::move(rec));
    fire(monitors, before);
  }

  void fire(const std::vector<Monitor>& monitors, const WavePattern& before) {
    if (monitors.empty()) return;
    WavePattern after = materialize();
    TrackerEvent ev{before, after, log_.events.back()};
    for (const Monitor& m : monitors) m(ev);
  }

  const FluxModel& m_;
  const DiscretizedSource& ds_;
  RunConfig cfg_;
  WaveCurveParams params_;
  double time_ = 0.0;
  State leftmost_;
  std::vector<Rt> live_;
  EventLog log_;
  uint64_t next_id_ = 1;
  std::unordered_map<uint64_t, int> idx_;
  std::priority_queue<QEntry, std::vector<QEntry>, std::greater<QEntry>> queue_;
};

}  // namespace detail

inline EventLog run_tracker(const FluxModel& m, const DiscretizedSource& ds, const RunConfig& cfg,
                            WavePattern initial, const std::vector<Monitor>& monitors = {}) {
  cfg.validate(max_speed(m), ds.source().T_star);
  detail::Tracker tr(m, ds, cfg);
  return tr.run(std::move(initial), monitors);
}

// pattern reconstructed from the segment archive at a non-event time
inline WavePattern pattern_at(const EventLog& log, double t) {
  WavePattern pat;
  pat.time = t;
  pat.leftmost = log.initial.leftmost;
  for (const EventRecord& e : log.events) {
    if (e.kind == EventKind::Splitting && e.time <= t) pat.leftmost = e.leftmost_after;
    if (e.time > t) break;
  }
  std::vector<Front> fronts;
  for (const SegmentRecord& s : log.segments) {
    double death = s.alive_at_end ? std::numeric_limits<double>::infinity() : s.t_death;
    if (s.t_birth <= t && t < death) {
      Front f = s.f;
      f.position = s.x_at(t);
      fronts.push_back(f);
    }
  }
  std::stable_sort(fronts.begin(), fronts.end(),
                   [](const Front& a, const Front& b) { return a.position < b.position; });
  pat.fronts = std::move(fronts);
  return pat;
}

}  // namespace fronttrack
