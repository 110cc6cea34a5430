#pragma once

#include "auglab/params.hpp"
#include "auglab/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace auglab {

enum class Clip { none, floor, ceiling };

struct DesignMultiplier {
  double value = 1.0;
  double unclipped = 1.0;
  Clip clip = Clip::none;
};

struct DesignGradient {
  Vec5 partials = Vec5::Zero();
  bool clipped = false;
};

struct OutputEval {
  double output = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double z3 = 0.0;
  double phi = 0.0;  // phi(D, W) = phi0(D) * g(W, H^A)
  bool degenerate = false;
};

struct DesignCost {
  double cost = 0.0;
  Vec5 gradient = Vec5::Zero();
};

/// Technology multiplier 1 + (bound - 1)(1 - exp(-rate d)). Throws Error(domain) for d < 0.
double eval_phi0(double d, const ModelParams& p);
double eval_phi0_derivative(double d, const ModelParams& p);

/// Inner aggregator prod_k (1 + w_k)^{a_k}.
double design_aggregator(const Vec5& w, const ModelParams& p);

/// Slope of g in the aggregator; rises with H^A and saturates at base + slope.
double composition_slope(double ha, const ModelParams& p);
double composition_slope_derivative(double ha, const ModelParams& p);

/// g(W, H^A) = clip(1 + beta(H^A) (G(W) - G(W^auto)), floor, ceiling).
DesignMultiplier eval_g(const DesignVector& w, double ha, const ModelParams& p);

/// Analytic partials of g in W. Clipped points report zero partials and the clip flag.
DesignGradient grad_g(const DesignVector& w, double ha, const ModelParams& p);

OutputEval eval_output(const FirmState& fs, const DesignVector& w, const ModelParams& p);

DesignCost eval_design_cost(const DesignVector& w, const ModelParams& p);

// --- property suite -------------------------------------------------------

struct SampleRegion {
  Vec5 w_lo = Vec5::Constant(0.2);
  Vec5 w_hi = Vec5::Constant(3.0);
  double ha_lo = 0.1;
  double ha_hi = 5.0;
  int points = 200;
  double step = 1e-4;
  std::uint64_t seed = 0;
};

struct PropertyCheck {
  std::string name;
  bool passed = false;
  int evaluated = 0;
  int violations = 0;
  double worst = 0.0;  // most adverse sampled value of the tested quantity
  std::string detail;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool region_shrunk = false;
  int rejected_points = 0;

  bool all_passed() const;
};

/// Finite-difference verification of range (P1), monotonicity (P2), concavity (P3),
/// pairwise complementarity (P4) and design-composition complementarity (P5).
PropertyReport check_property_suite(const ModelParams& p, const SampleRegion& region = {});

}  // namespace auglab
