#include "auglab/dynamics.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace auglab {

std::vector<double> isotonic_fit(const std::vector<double>& y) {
  // Blocks of (sum, count); merge backwards while the block means decrease.
  std::vector<double> sum;
  std::vector<int> count;
  for (double v : y) {
    sum.push_back(v);
    count.push_back(1);
    while (sum.size() > 1) {
      const std::size_t b = sum.size() - 1;
      if (sum[b - 1] / count[b - 1] <= sum[b] / count[b]) break;
      sum[b - 1] += sum[b];
      count[b - 1] += count[b];
      sum.pop_back();
      count.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t b = 0; b < sum.size(); ++b) out.insert(out.end(), static_cast<std::size_t>(count[b]), sum[b] / count[b]);
  return out;
}

WStarMap::WStarMap(std::vector<double> grid, std::vector<Vec5> solved)
    : grid_(std::move(grid)), solved_(std::move(solved)), values_(solved_) {
  if (grid_.size() < 2 || grid_.size() != solved_.size()) {
    throw Error(ErrorCode::input, "W* map needs at least two nodes with one solution each");
  }
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw Error(ErrorCode::input, "W* map grid must be strictly ascending");
  }
  std::vector<bool> touched(grid_.size(), false);
  for (int k = 0; k < kDims; ++k) {
    std::vector<double> col(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) col[i] = solved_[i][k];
    const std::vector<double> fit = isotonic_fit(col);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (fit[i] != col[i]) touched[i] = true;
      values_[i][k] = fit[i];
    }
  }
  repaired_ = static_cast<int>(std::count(touched.begin(), touched.end(), true));
}

Vec5 WStarMap::operator()(double ha) const {
  if (!contains(ha)) {
    throw Error(ErrorCode::domain, fmt::format("H^A = {} outside the W* map range [{}, {}]", ha, lo(), hi()));
  }
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), ha);
  if (it == grid_.end()) return values_.back();
  const auto i = static_cast<std::size_t>(it - grid_.begin()) - 1;
  const double t = (ha - grid_[i]) / (grid_[i + 1] - grid_[i]);
  return values_[i] + t * (values_[i + 1] - values_[i]);
}

namespace {

std::vector<Vec5> solve_nodes(const FirmState& fs_template, const ModelParams& p, const std::vector<double>& nodes,
                              const SolverOptions& opts) {
  std::vector<Vec5> out;
  out.reserve(nodes.size());
  for (double ha : nodes) {
    const OptimizationResult r = optimize_design(fs_template.with_ha(ha), p, opts);
    if (!r.converged) {
      throw Error(ErrorCode::convergence, fmt::format("design optimum did not converge at H^A = {}", ha));
    }
    out.push_back(r.w_star.values());
  }
  return out;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  g.back() = hi;
  return g;
}

}  // namespace

WStarMap build_w_star_map(const FirmState& fs_template, const ModelParams& p, const std::vector<double>& ha_grid,
                          const SolverOptions& opts) {
  if (ha_grid.size() < 50) throw Error(ErrorCode::input, "W* map grid needs at least 50 nodes");
  return WStarMap(ha_grid, solve_nodes(fs_template, p, ha_grid, opts));
}

double psi(double ha, const DynamicsParams& dp, const WStarMap& map) {
  const Vec5 w = map(ha);
  return dp.accumulation(w) * dp.edu_investment / dp.depreciation(w) - ha;
}

const char* to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

Eigen::Matrix<double, 6, 6> full_jacobian(double ha, const DynamicsParams& dp, const WStarMap& map, double fd_step) {
  const double up = std::min(ha + fd_step, map.hi()), dn = std::max(ha - fd_step, map.lo());
  const Vec5 slope = (map(up) - map(dn)) / (up - dn);
  const Vec5 w = map(ha);
  const Vec5 b = dp.accumulation_gradient(w) * dp.edu_investment - ha * dp.depreciation_gradient(w);
  Eigen::Matrix<double, 6, 6> j = Eigen::Matrix<double, 6, 6>::Zero();
  j.topLeftCorner<5, 5>() = -dp.adjust_speed * Eigen::Matrix<double, 5, 5>::Identity();
  j.topRightCorner<5, 1>() = dp.adjust_speed * slope;
  j.bottomLeftCorner<1, 5>() = b.transpose();
  j(5, 5) = -dp.depreciation(w);
  return j;
}

std::optional<std::size_t> EquilibriumSet::nearest(double ha, double tol) const {
  std::optional<std::size_t> best;
  double dist = tol;
  for (std::size_t i = 0; i < equilibria.size(); ++i) {
    const double d = std::abs(equilibria[i].ha - ha);
    if (d <= dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

EquilibriumSet classify_steady_states(const DynamicsParams& dp, const WStarMap& map, const SteadyStateOptions& opts) {
  dp.validate();
  const double lo = std::max(opts.lo, map.lo());
  const double hi = std::min(opts.hi < 0.0 ? dp.ha_max : opts.hi, map.hi());
  if (!(hi > lo)) throw Error(ErrorCode::input, "steady-state search range is empty");

  EquilibriumSet set;
  set.map = map;
  auto f = [&](double h) { return psi(h, dp, map); };
  const std::vector<double> scan = uniform_grid(lo, hi, opts.scan_points);
  std::vector<double> roots;
  double f_prev = f(scan[0]);
  if (f_prev == 0.0) roots.push_back(scan[0]);
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const double f_cur = f(scan[i]);
    if (f_cur == 0.0) {
      roots.push_back(scan[i]);
    } else if (f_prev * f_cur < 0.0) {
      double a = scan[i - 1], b = scan[i], fa = f_prev;
      while (b - a > opts.bisect_tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fa < 0.0) == (fm < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    f_prev = f_cur;
  }

  for (double r : roots) {
    Equilibrium e;
    e.ha = r;
    e.w = map(r);
    e.psi_value = f(r);
    const double up = std::min(r + opts.fd_step, hi), dn = std::max(r - opts.fd_step, lo);
    e.psi_slope = (f(up) - f(dn)) / (up - dn);
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(full_jacobian(r, dp, map, opts.fd_step));
    e.jacobian_eigen_max_real = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 6; ++i) {
      e.eigenvalues.push_back(es.eigenvalues()[i]);
      e.jacobian_eigen_max_real = std::max(e.jacobian_eigen_max_real, es.eigenvalues()[i].real());
    }
    e.stability = e.psi_slope < 0.0 ? Stability::stable : Stability::unstable;
    const bool jacobian_stable = e.jacobian_eigen_max_real < 0.0;
    if (jacobian_stable != (e.stability == Stability::stable)) {
      throw Error(ErrorCode::inconsistency,
                  fmt::format("stability disagreement at H^A = {}: psi' = {}, max Re(eig) = {}", r, e.psi_slope,
                              e.jacobian_eigen_max_real));
    }
    if (e.stability == Stability::unstable && !set.unstable_threshold) set.unstable_threshold = r;
    set.equilibria.push_back(std::move(e));
  }
  return set;
}

EquilibriumSet find_steady_states(const FirmState& fs_template, const ModelParams& p, const DynamicsParams& dp,
                                  const SolverOptions& solver, const SteadyStateOptions& opts) {
  dp.validate();
  const double hi = opts.hi < 0.0 ? dp.ha_max : opts.hi;
  std::vector<double> grid = uniform_grid(opts.lo, hi, opts.initial_nodes);
  std::vector<Vec5> solved = solve_nodes(fs_template, p, grid, solver);
  EquilibriumSet set = classify_steady_states(dp, WStarMap(grid, solved), opts);

  for (int level = 0; level < opts.max_doublings; ++level) {
    std::vector<double> mids;
    for (std::size_t i = 1; i < grid.size(); ++i) mids.push_back(0.5 * (grid[i - 1] + grid[i]));
    const std::vector<Vec5> mid_solved = solve_nodes(fs_template, p, mids, solver);
    std::vector<double> g2;
    std::vector<Vec5> s2;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      g2.push_back(grid[i]);
      s2.push_back(solved[i]);
      if (i < mids.size()) {
        g2.push_back(mids[i]);
        s2.push_back(mid_solved[i]);
      }
    }
    grid = std::move(g2);
    solved = std::move(s2);
    EquilibriumSet next = classify_steady_states(dp, WStarMap(grid, solved), opts);
    const bool same_count = next.equilibria.size() == set.equilibria.size();
    double shift = same_count ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; same_count && i < next.equilibria.size(); ++i) {
      shift = std::max(shift, std::abs(next.equilibria[i].ha - set.equilibria[i].ha));
    }
    set = std::move(next);
    set.last_root_shift = shift;
    if (shift < opts.root_shift_tol) {
      set.map_converged = true;
      break;
    }
  }
  return set;
}

// ---------------------------------------------------------------------------

double max_time_step(const DynamicsParams& dp) { return 0.1 / std::max(dp.adjust_speed, dp.delta0); }

namespace {

struct State {
  Vec5 w;
  double ha;
};

State rhs(const State& s, const DynamicsParams& dp, const WStarMap& map, const Forcing& forcing) {
  Vec5 target = (forcing.map ? *forcing.map : map)(s.ha);
  if (forcing.w_floor) target = target.cwiseMax(*forcing.w_floor);
  return State{dp.adjust_speed * (target - s.w),
               dp.accumulation(s.w) * dp.edu_investment * forcing.edu_multiplier - dp.depreciation(s.w) * s.ha};
}

State axpy(const State& s, double a, const State& d) { return State{s.w + a * d.w, s.ha + a * d.ha}; }

}  // namespace

Trajectory integrate_trajectory(const Vec5& w0, double ha0, const DynamicsParams& dp, const WStarMap& map,
                                const IntegrationOptions& opts, const Forcing& forcing) {
  dp.validate();
  const double dt = opts.time_step < 0.0 ? dp.time_step : opts.time_step;
  const double horizon = opts.horizon < 0.0 ? dp.horizon : opts.horizon;
  const double limit = max_time_step(dp);
  if (!(dt > 0.0) || dt > limit) {
    throw Error(ErrorCode::params, fmt::format("time step {} too large; use at most {}", dt, limit));
  }
  if (!(ha0 >= 0.0)) throw Error(ErrorCode::domain, fmt::format("initial H^A must be nonnegative, got {}", ha0));
  const auto steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
  const int every = std::max(1, opts.record_every);

  Trajectory tr;
  State s{w0, ha0};
  auto record = [&](double t) {
    tr.t.push_back(t);
    tr.w.push_back(s.w);
    tr.ha.push_back(s.ha);
  };
  record(0.0);
  for (long i = 0; i < steps; ++i) {
    const double h = std::min(dt, horizon - i * dt);
    const State k1 = rhs(s, dp, map, forcing);
    const State k2 = rhs(axpy(s, 0.5 * h, k1), dp, map, forcing);
    const State k3 = rhs(axpy(s, 0.5 * h, k2), dp, map, forcing);
    const State k4 = rhs(axpy(s, h, k3), dp, map, forcing);
    s.w += h / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    s.ha += h / 6.0 * (k1.ha + 2.0 * k2.ha + 2.0 * k3.ha + k4.ha);
    if ((i + 1) % every == 0 || i + 1 == steps) record(i + 1 == steps ? horizon : (i + 1) * dt);
  }
  return tr;
}

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::edu_push: return "edu_push";
    case PolicyKind::design_subsidy: return "design_subsidy";
    case PolicyKind::regulatory_min: return "regulatory_min";
  }
  return "unknown";
}

double neutral_magnitude(PolicyKind k) { return k == PolicyKind::regulatory_min ? 0.0 : 1.0; }

PolicyOutcome policy_experiment(PolicyKind kind, double magnitude, double duration, const Vec5& w0, double ha0,
                                const PolicyContext& ctx) {
  if (ctx.equilibria == nullptr || ctx.equilibria->equilibria.empty()) {
    throw Error(ErrorCode::input, "policy experiment needs the steady states of the base economy");
  }
  const bool floor_kind = kind == PolicyKind::regulatory_min;
  if (!(floor_kind ? magnitude >= 0.0 : magnitude > 0.0) || !(duration >= 0.0)) {
    throw Error(ErrorCode::domain, fmt::format("{} magnitude {} or duration {} out of range", to_string(kind),
                                               magnitude, duration));
  }
  const EquilibriumSet& eq = *ctx.equilibria;
  const WStarMap& map = eq.map;
  const DynamicsParams& dp = ctx.dyn;

  PolicyOutcome out;
  out.kind = kind;
  out.magnitude = magnitude;
  out.duration = duration;

  Forcing forcing;
  WStarMap subsidized;
  Vec5 w_start = w0;
  switch (kind) {
    case PolicyKind::edu_push: forcing.edu_multiplier = magnitude; break;
    case PolicyKind::design_subsidy: {
      ModelParams q = ctx.params;
      q.cost_coeffs /= magnitude;
      // Coarsened copy of the base grid keeps repeated rebuilds affordable.
      const std::vector<double>& g = map.grid();
      const std::size_t stride = std::max<std::size_t>(1, g.size() / 240);
      std::vector<double> nodes;
      for (std::size_t i = 0; i < g.size(); i += stride) nodes.push_back(g[i]);
      if (nodes.back() != g.back()) nodes.push_back(g.back());
      subsidized = build_w_star_map(ctx.fs_template, q, nodes, ctx.solver);
      forcing.map = &subsidized;
      break;
    }
    case PolicyKind::regulatory_min:
      forcing.w_floor = Vec5(magnitude * ctx.params.w_auto);
      w_start = w_start.cwiseMax(*forcing.w_floor);
      break;
  }

  IntegrationOptions phase1;
  phase1.horizon = duration;
  phase1.record_every = 1 << 30;
  Vec5 w = w_start;
  double ha = ha0;
  if (duration > 0.0) {
    const Trajectory a = integrate_trajectory(w, ha, dp, map, phase1, forcing);
    w = a.w.back();
    ha = a.ha.back();
  }
  IntegrationOptions phase2;
  phase2.horizon = std::max(dp.horizon - duration, 0.0);
  phase2.record_every = 1 << 30;
  if (phase2.horizon > 0.0) {
    const Trajectory b = integrate_trajectory(w, ha, dp, map, phase2);
    w = b.w.back();
    ha = b.ha.back();
  }
  out.final_w = w;
  out.final_ha = ha;
  out.final_equilibrium = eq.nearest(ha, ctx.settle_tol);
  out.settled = out.final_equilibrium.has_value() &&
                (w - eq.equilibria[*out.final_equilibrium].w).lpNorm<Eigen::Infinity>() <= ctx.settle_tol;
  std::optional<std::size_t> top;
  for (std::size_t i = 0; i < eq.equilibria.size(); ++i) {
    if (eq.equilibria[i].stability == Stability::stable) top = i;
  }
  out.escaped = out.settled && top && *out.final_equilibrium == *top && eq.unstable_threshold &&
                eq.equilibria[*top].ha > *eq.unstable_threshold;
  return out;
}

MinimalMagnitude minimal_escape_magnitude(PolicyKind kind, double duration, const Vec5& w0, double ha0,
                                          const PolicyContext& ctx, double upper, double tol) {
  MinimalMagnitude mm;
  auto escapes = [&](double m) {
    ++mm.evaluations;
    return policy_experiment(kind, m, duration, w0, ha0, ctx).escaped;
  };
  mm.lo = neutral_magnitude(kind);
  mm.hi = upper;
  if (!(upper > mm.lo)) throw Error(ErrorCode::domain, "upper magnitude must exceed the neutral magnitude");
  if (escapes(mm.lo)) {
    mm.found = true;
    mm.magnitude = mm.hi = mm.lo;
    return mm;
  }
  if (!escapes(upper)) return mm;
  while (mm.hi - mm.lo > tol) {
    const double mid = 0.5 * (mm.lo + mm.hi);
    (escapes(mid) ? mm.hi : mm.lo) = mid;
  }
  mm.found = true;
  mm.magnitude = mm.hi;
  return mm;
}

}  // namespace auglab
