#pragma once

#include "auglab/model.hpp"
#include "auglab/params.hpp"
#include "auglab/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace auglab {

// Evaluated firm decision at a given design.
struct FirmOutcome {
  OutputEval output;
  std::array<double, 3> labor{};  // labor actually employed (optimized or fixed)
  double design_cost = 0.0;
  double profit = 0.0;
};

/// Labor demand in optimized mode: L^P and L^A solve w_j = P dY/dL^j (with corners at 0);
/// L^C stays at the state value. In fixed mode the state labor is returned unchanged.
std::array<double, 3> labor_demand(const FirmState& fs, const DesignVector& w, const ModelParams& p);

FirmOutcome evaluate_firm(const FirmState& fs, const DesignVector& w, const ModelParams& p);

/// P Y - c_D D - c_W(W) - sum_j w_j L^j.
double profit(const FirmState& fs, const DesignVector& w, const ModelParams& p);

struct ProfitGradient {
  Vec5 gradient = Vec5::Zero();
  bool clipped = false;  // augmentation part is zero because g is clipped
};

/// Analytic dProfit/dW. In optimized labor mode labor is held at its optimum (envelope theorem).
ProfitGradient profit_gradient_w(const FirmState& fs, const DesignVector& w, const ModelParams& p);

/// dProfit/dD at fixed W (labor at its optimum in optimized mode).
double profit_gradient_d(const FirmState& fs, const DesignVector& w, const ModelParams& p);

/// Benefit side of the design FOC: P F3 phi0(D) dg/dW_k L^A H^A D.
double marginal_return(const DesignVector& w, int k, const FirmState& fs, const ModelParams& p);

// Additional smooth term added to the design objective (externalities, subsidies).
using DesignTerm = std::function<double(const Vec5& w, Vec5& grad)>;

struct OptimizationResult {
  DesignVector w_star;
  double d_star = 0.0;
  std::optional<std::array<double, 3>> labor_star;
  double profit = 0.0;
  double objective = 0.0;  // profit plus any extra design term
  Vec5 foc_residual = Vec5::Zero();
  int iterations = 0;
  bool converged = false;
  std::array<bool, kDims> boundary_flags{};
  bool clipped = false;
  int starts_converged = 0;
};

/// Start points: init, W^min, W^auto, then seeded Halton points, deduplicated and truncated to opts.starts.
std::vector<Vec5> multistart_points(const ModelParams& p, const Vec5& init, const SolverOptions& opts);

/// Multistart projected quasi-Newton ascent over [0, w_max]^5 at the state's D.
/// Ties within 1e-12 in objective go to the lexicographically smallest W.
OptimizationResult optimize_design(const FirmState& fs, const ModelParams& p, const DesignVector& init,
                                   const SolverOptions& opts = {}, const DesignTerm& extra = {});

OptimizationResult optimize_design(const FirmState& fs, const ModelParams& p, const SolverOptions& opts = {});

enum class ThresholdKind { interior, always, never };

struct DimensionThreshold {
  ThresholdKind kind = ThresholdKind::interior;
  double share = 0.0;  // midpoint of the final bracket (0 for always, 1 for never)
  double lo = 0.0;
  double hi = 1.0;
};

struct ThresholdResult {
  double theta_star = 0.0;
  ThresholdKind kind = ThresholdKind::interior;
  std::array<DimensionThreshold, kDims> per_dimension{};
  double bracket_lo = 0.0;
  double bracket_hi = 1.0;
  double tolerance = 1e-4;
  int solves = 0;
};

struct ThresholdOptions {
  double tolerance = 1e-4;
  double share_lo = 1e-4;
  double share_hi = 1.0 - 1e-4;
};

/// Per dimension, bisects the share s = H^A/(H^A+H^C) for the event W*_k >= W^auto_k; theta* is the max.
ThresholdResult find_theta_star(const FirmState& fs_template, const ModelParams& p, const SolverOptions& opts = {},
                                const ThresholdOptions& topts = {});

enum class StaticsTarget { ai_stock, augmentable_hc, cost_coeff, price, wage_augmentable };

struct StaticsReport {
  StaticsTarget target = StaticsTarget::ai_stock;
  int cost_index = 0;
  double step = 0.01;
  Vec5 w_base = Vec5::Zero();
  Vec5 delta = Vec5::Zero();  // W*(x(1+step)) - W*(x(1-step))
  std::array<int, kDims> sign{};     // -1, 0, +1
  std::array<bool, kDims> indeterminate{};
  std::array<int, kDims> expected{};  // 0 where no sign is predicted
  bool matches = false;
};

StaticsReport comparative_statics(const FirmState& fs, const ModelParams& p, StaticsTarget which, int cost_index = 0,
                                  const SolverOptions& opts = {}, double step = 0.01);

const char* to_string(StaticsTarget t);
const char* to_string(ThresholdKind k);

}  // namespace auglab
