#pragma once

#include "auglab/firm.hpp"

#include <vector>

namespace auglab {

/// AI energy use e0 D (1 + e1 W1).
double energy(double d, double w1, const EnergyParams& ep);

struct KktResiduals {
  double stationarity = 0.0;  // max |projected gradient of the Lagrangian| over (W, D)
  double primal = 0.0;        // max(0, E - budget)
  double dual = 0.0;          // max(0, -mu)
  double slackness = 0.0;     // |mu (budget - E)|

  double worst() const;
};

struct ConstrainedResult {
  DesignVector w_star;
  double d_star = 0.0;
  double shadow_price = 0.0;
  double energy_used = 0.0;
  bool binding = false;
  double profit = 0.0;
  KktResiduals kkt;
  bool converged = false;
  int outer_iterations = 0;
};

struct ConstrainedOptions {
  double d_max = 1000.0;  // box bound on D
  double penalty = 10.0;
  int max_outer = 50;
  double outer_tol = 1e-6;  // feasibility at which the multiplier loop hands over to the polish
};

/// Joint (W, D) optimum without the energy limit.
ConstrainedResult optimize_joint(const FirmState& fs, const ModelParams& p, const SolverOptions& opts = {},
                                 const ConstrainedOptions& copts = {});

/// Maximizes profit over (W, D) subject to energy <= budget. Multiplier updates on an augmented
/// objective locate the active set; a reduced solve on the active constraint then drives the KKT
/// residuals to solver precision.
ConstrainedResult optimize_constrained(const FirmState& fs, const ModelParams& p, const EnergyParams& ep,
                                       const SolverOptions& opts = {}, const ConstrainedOptions& copts = {});

struct FrontierPoint {
  double budget = 0.0;
  ConstrainedResult result;
};

struct Frontier {
  std::vector<FrontierPoint> points;
  double unconstrained_energy = 0.0;  // budget at which mu reaches 0
};

Frontier tradeoff_frontier(const FirmState& fs, const ModelParams& p, const EnergyParams& ep,
                           const std::vector<double>& budgets, const SolverOptions& opts = {},
                           const ConstrainedOptions& copts = {});

}  // namespace auglab
