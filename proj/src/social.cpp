#include "auglab/social.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace auglab {

ExternalityValue externality_value(const DesignVector& w, const FirmState& fs, const ExternalityParams& xp,
                                   const ModelParams& p) {
  ExternalityValue out;
  const double la = fs.labor[2];

  // Workers leaving with skill gain h0 W4^h1.
  const double mobility = xp.mobility_rate * xp.mobility_value * xp.skill_gain_coeff * la;
  out.value += mobility * std::pow(w[3], xp.skill_gain_exponent);
  // The power form has an infinite slope at 0; evaluate it just inside.
  const double w4 = std::max(w[3], 1e-12);
  out.gradient[3] += mobility * xp.skill_gain_exponent * std::pow(w4, xp.skill_gain_exponent - 1.0);

  // Competitors learn from design innovations beyond the neutral design.
  const double spill = xp.competitor_count * xp.spillover_rate * xp.spillover_scale;
  const double G = design_aggregator(w.values(), p);
  out.value += spill * (G - design_aggregator(p.w_auto, p));
  for (int k = 0; k < kDims; ++k) out.gradient[k] += spill * p.g_exponents[k] * G / (1.0 + w[k]);

  // Health costs borne outside the firm.
  const double health = (1.0 - xp.health_cost_share) * xp.total_workers * xp.health_coeff;
  out.value += health * std::log1p(w[4]);
  out.gradient[4] += health / (1.0 + w[4]);
  return out;
}

OptimizationResult optimize_social(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                                   const SolverOptions& opts) {
  xp.validate();
  DesignTerm term = [&](const Vec5& w, Vec5& grad) {
    const ExternalityValue e = externality_value(DesignVector(w, p.w_max), fs, xp, p);
    grad = e.gradient;
    return e.value;
  };
  return optimize_design(fs, p, DesignVector(p.w_auto, p.w_max), opts, term);
}

OptimizationResult optimize_subsidized(const FirmState& fs, const ModelParams& p, const Vec5& subsidy,
                                       const SolverOptions& opts) {
  if ((subsidy.array() < 0.0).any()) throw Error(ErrorCode::domain, "subsidies must be nonnegative");
  DesignTerm term = [&](const Vec5& w, Vec5& grad) {
    grad = subsidy;
    return subsidy.dot(w);
  };
  return optimize_design(fs, p, DesignVector(p.w_auto, p.w_max), opts, term);
}

WedgeReport underinvestment_wedge(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                                  const SolverOptions& opts) {
  WedgeReport rep;
  rep.private_opt = optimize_design(fs, p, opts);
  rep.social_opt = optimize_social(fs, p, xp, opts);
  if (!rep.private_opt.converged || !rep.social_opt.converged) {
    throw Error(ErrorCode::convergence, "private or social design optimum did not converge");
  }
  rep.wedge = rep.social_opt.w_star.values() - rep.private_opt.w_star.values();
  for (std::size_t k = 0; k < kDims; ++k) {
    rep.indeterminate[k] = rep.private_opt.boundary_flags[k] || rep.social_opt.boundary_flags[k];
  }
  rep.subsidy = externality_value(rep.social_opt.w_star, fs, xp, p).gradient;
  return rep;
}

Vec5 optimal_subsidy(const FirmState& fs, const ModelParams& p, const ExternalityParams& xp,
                     const SolverOptions& opts) {
  const OptimizationResult soc = optimize_social(fs, p, xp, opts);
  if (!soc.converged) throw Error(ErrorCode::convergence, "social design optimum did not converge");
  return externality_value(soc.w_star, fs, xp, p).gradient;
}

}  // namespace auglab
