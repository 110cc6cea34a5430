#pragma once

#include "auglab/firm.hpp"

namespace auglab {

struct ExternalityValue {
  double value = 0.0;
  Vec5 gradient = Vec5::Zero();
};

/// Mobility (on W4) + spillover (through the design aggregator) + health (on W5) benefits
/// not captured by the firm. L^A is taken from the firm state.
ExternalityValue externality_value(const DesignVector& w, const FirmState& fs, const ExternalityParams& xp,
                                   const ModelParams& p);

/// Maximizes profit + externality value with the same multistart ascent.
OptimizationResult optimize_social(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                                   const SolverOptions& opts = {});

struct WedgeReport {
  OptimizationResult private_opt;
  OptimizationResult social_opt;
  Vec5 wedge = Vec5::Zero();  // W^soc - W^priv
  std::array<bool, kDims> indeterminate{};
  Vec5 subsidy = Vec5::Zero();  // marginal externality at W^soc
};

WedgeReport underinvestment_wedge(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                                  const SolverOptions& opts = {});

/// Marginal externality at the social optimum, the per-dimension corrective subsidy.
Vec5 optimal_subsidy(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                     const SolverOptions& opts = {});

/// Private optimum when the firm is paid subsidy_k per unit of W_k.
OptimizationResult optimize_subsidized(const FirmState& fs, const ModelParams& p, const Vec5& subsidy,
                                       const SolverOptions& opts = {});

}  // namespace auglab
