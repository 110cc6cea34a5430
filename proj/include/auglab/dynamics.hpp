#pragma once

#include "auglab/firm.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace auglab {

// Piecewise-linear H^A -> W*(H^A), componentwise nondecreasing after isotonic repair.
class WStarMap {
 public:
  WStarMap() = default;
  WStarMap(std::vector<double> grid, std::vector<Vec5> solved);

  Vec5 operator()(double ha) const;  // throws Error(domain) outside [lo, hi]
  double lo() const { return grid_.front(); }
  double hi() const { return grid_.back(); }
  bool contains(double ha) const { return !grid_.empty() && ha >= lo() && ha <= hi(); }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<Vec5>& solved() const { return solved_; }  // raw solver output
  const std::vector<Vec5>& values() const { return values_; }  // after repair
  int repaired_nodes() const { return repaired_; }

 private:
  std::vector<double> grid_;
  std::vector<Vec5> solved_;
  std::vector<Vec5> values_;
  int repaired_ = 0;
};

/// Pool-adjacent-violators fit of a nondecreasing sequence (least squares, equal weights).
std::vector<double> isotonic_fit(const std::vector<double>& y);

/// Solves the design problem at every grid node with H^A set to the node value.
/// Throws Error(convergence) naming the first node whose solve fails.
WStarMap build_w_star_map(const FirmState& fs_template, const ModelParams& p, const std::vector<double>& ha_grid,
                          const SolverOptions& opts = {});

/// Net accumulation at the design-slaved state: beta(W*) I / delta(W*) - H^A.
double psi(double ha, const DynamicsParams& dp, const WStarMap& map);

enum class Stability { stable, unstable };
const char* to_string(Stability s);

struct Equilibrium {
  double ha = 0.0;
  Vec5 w = Vec5::Zero();
  Stability stability = Stability::stable;
  double psi_value = 0.0;
  double psi_slope = 0.0;
  double jacobian_eigen_max_real = 0.0;
  std::vector<std::complex<double>> eigenvalues;
};

struct EquilibriumSet {
  std::vector<Equilibrium> equilibria;  // ascending in ha
  std::optional<double> unstable_threshold;
  WStarMap map;
  bool map_converged = false;  // roots stable under the last grid doubling
  double last_root_shift = 0.0;

  // Index of the equilibrium closest to ha, if within tol.
  std::optional<std::size_t> nearest(double ha, double tol) const;
};

struct SteadyStateOptions {
  double lo = 0.0;
  double hi = -1.0;        // negative: use dp.ha_max
  int initial_nodes = 121;
  int max_doublings = 8;
  double root_shift_tol = 1e-6;
  int scan_points = 2000;
  double bisect_tol = 1e-10;
  double fd_step = 1e-4;
};

/// 6x6 Jacobian of (dW/dt, dH^A/dt) at (W*(ha), ha) with W*' taken by central difference of the map.
Eigen::Matrix<double, 6, 6> full_jacobian(double ha, const DynamicsParams& dp, const WStarMap& map, double fd_step);

/// Roots of psi on a fixed map; stability from psi' and from the Jacobian spectrum.
/// Throws Error(inconsistency) if the two classifications disagree.
EquilibriumSet classify_steady_states(const DynamicsParams& dp, const WStarMap& map,
                                      const SteadyStateOptions& opts = {});

/// Builds the W* map, doubling the grid until every root moves less than root_shift_tol.
EquilibriumSet find_steady_states(const FirmState& fs_template, const ModelParams& p, const DynamicsParams& dp,
                                  const SolverOptions& solver = {}, const SteadyStateOptions& opts = {});

struct Trajectory {
  std::vector<double> t;
  std::vector<Vec5> w;
  std::vector<double> ha;
};

// Temporary changes to the law of motion.
struct Forcing {
  double edu_multiplier = 1.0;
  std::optional<Vec5> w_floor;
  const WStarMap* map = nullptr;  // replaces the base map when set
};

struct IntegrationOptions {
  double time_step = -1.0;  // negative: dp.time_step
  double horizon = -1.0;    // negative: dp.horizon
  int record_every = 1;
};

/// Largest admissible step, 0.1 / max(alpha, delta0).
double max_time_step(const DynamicsParams& dp);

/// Classical RK4 path of the full system. Throws Error(params) if the step exceeds max_time_step.
Trajectory integrate_trajectory(const Vec5& w0, double ha0, const DynamicsParams& dp, const WStarMap& map,
                                const IntegrationOptions& opts = {}, const Forcing& forcing = {});

enum class PolicyKind { edu_push, design_subsidy, regulatory_min };
const char* to_string(PolicyKind k);
// Magnitude that leaves the economy unchanged: 1 for multipliers, 0 for the design floor.
double neutral_magnitude(PolicyKind k);

struct PolicyOutcome {
  PolicyKind kind = PolicyKind::edu_push;
  double magnitude = 1.0;
  double duration = 0.0;
  bool escaped = false;
  bool settled = false;  // ended within tolerance of a known equilibrium
  std::optional<std::size_t> final_equilibrium;
  double final_ha = 0.0;
  Vec5 final_w = Vec5::Zero();
};

struct PolicyContext {
  FirmState fs_template;
  ModelParams params;
  DynamicsParams dyn;
  SolverOptions solver;
  const EquilibriumSet* equilibria = nullptr;
  double settle_tol = 1e-3;
};

/// Applies the intervention on [0, duration], reverts, and integrates to the horizon.
PolicyOutcome policy_experiment(PolicyKind kind, double magnitude, double duration, const Vec5& w0, double ha0,
                                const PolicyContext& ctx);

struct MinimalMagnitude {
  bool found = false;
  double magnitude = 0.0;  // smallest escaping magnitude (upper end of the final bracket)
  double lo = 0.0;
  double hi = 0.0;
  int evaluations = 0;
};

/// Bisects between the neutral magnitude and `upper` for the smallest escaping magnitude.
MinimalMagnitude minimal_escape_magnitude(PolicyKind kind, double duration, const Vec5& w0, double ha0,
                                          const PolicyContext& ctx, double upper, double tol = 1e-3);

}  // namespace auglab
