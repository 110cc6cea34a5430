#pragma once

#include "auglab/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace auglab {

enum class LaborMode { fixed, optimized };

// Structural parameters of the augmentation economy.
struct ModelParams {
  double phi0_bound = 3.0;  // upper bound of the technology multiplier
  double phi0_rate = 0.5;   // saturation rate in the AI stock
  double g_floor = 0.5858;
  double g_ceiling = 4.0;
  Vec5 g_exponents = (Vec5() << 0.12, 0.11, 0.10, 0.09, 0.08).finished();
  double g_comp_base = 1.0;   // slope of g in G at H^A = 0
  double g_comp_slope = 0.5;  // additional slope reached as H^A grows
  Vec5 w_auto = Vec5::Ones();
  Vec5 w_min = Vec5::Zero();
  double w_max = kDefaultWMax;
  Vec5 cost_coeffs = (Vec5() << 0.156, 0.14586, 0.1274, 0.11817, 0.10296).finished();
  double ai_unit_cost = 0.8;
  double output_price = 1.0;
  std::array<double, 3> wages{0.5, 0.5, 1.6};          // physical, routine, augmentable
  std::array<double, 3> prod_shares{0.3, 0.2, 0.5};    // Cobb-Douglas exponents
  double robot_rate = 0.5;
  LaborMode labor_mode = LaborMode::fixed;

  // Throws Error(params) naming the first violated invariant.
  void validate() const;
};

struct FirmState {
  double capital_k = 1.0;
  double robot_capital = 1.0;
  std::array<double, 3> labor{1.0, 1.0, 1.0};           // L^P, L^C, L^A
  std::array<double, 3> human_capital{1.0, 1.0, 2.0};   // H^P, H^C, H^A
  double ai_stock = 2.0;

  double ha() const { return human_capital[2]; }
  double hc() const { return human_capital[1]; }
  FirmState with_ha(double ha) const;
  // H^A implied by an augmentable share s = H^A / (H^A + H^C).
  FirmState with_share(double share) const;
  double share() const { return ha() / (ha() + hc()); }

  void validate() const;
};

struct ExternalityParams {
  double mobility_rate = 0.2;      // lambda
  double mobility_value = 0.3;     // v0, value per skill unit carried out
  double skill_gain_coeff = 1.0;   // h0
  double skill_gain_exponent = 0.5;  // h1
  double spillover_rate = 0.1;     // sigma
  double competitor_count = 5.0;   // M
  double spillover_scale = 0.1;    // s0
  double health_cost_share = 0.6;  // tau, share borne by the firm
  double health_coeff = 0.05;
  double total_workers = 3.0;      // L_f

  static ExternalityParams none();
  void validate() const;
};

struct DynamicsParams {
  double adjust_speed = 0.5;      // alpha
  double edu_investment = 0.1;    // I_edu
  double beta0 = 0.1;
  double beta3 = 1.0;
  double beta4 = 1.0;
  double delta0 = 0.2;
  double delta_slope = 1.0;
  double time_step = 0.05;
  double horizon = 400.0;
  double ha_max = 12.0;           // upper end of the H^A analysis range

  double accumulation(const Vec5& w) const;
  double depreciation(const Vec5& w) const;
  Vec5 accumulation_gradient(const Vec5& w) const;
  Vec5 depreciation_gradient(const Vec5& w) const;

  void validate() const;
};

struct EnergyParams {
  double base_rate = 1.0;          // e0
  double transparency_rate = 0.3;  // e1
  double budget = 4.0;

  void validate() const;
};

struct SolverOptions {
  double grad_tol = 1e-8;
  int max_iter = 500;
  int starts = 8;
  std::uint64_t seed = 0;
};

// Everything a parameter file can set.
struct Calibration {
  ModelParams model;
  FirmState firm;
  ExternalityParams externality;
  DynamicsParams dynamics;
  EnergyParams energy;
  SolverOptions solver;
  std::string name = "calibration-default";
  int version = 1;

  void validate() const;
};

// key=value text, one per line, '#' comments. Vector values are comma separated.
// Keys not present keep the built-in default; unknown keys are rejected.
Calibration parse_calibration(const std::string& text);
Calibration load_calibration(const std::filesystem::path& file);
std::string format_calibration(const Calibration& cal);

const char* to_string(LaborMode mode);

}  // namespace auglab
