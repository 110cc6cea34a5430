#pragma once

#include "auglab/dynamics.hpp"

#include <Eigen/Dense>

#include <array>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace auglab {

/// Management Quality Composite: mean of KPI, target, bonus and promotion-merit intensities.
double mqc_composite(double kpi, double target, double bonus, double promote);

struct SectorRecord {
  std::string sector_id;
  double kpi = 0.0;
  double target = 0.0;
  double bonus = 0.0;
  double promote = 0.0;
  double mqc = 0.0;
  double tii = 0.0;  // technology investment intensity, > 0
  double hcq = 0.0;
  double innov_share = 0.0;
  int n_firms = 0;
};

/// Named numeric field of a record: kpi, target, bonus, promote, mqc, tii, ln_tii, hcq, innov_share, n_firms.
double record_field(const SectorRecord& r, const std::string& field);

std::string format_records(const std::vector<SectorRecord>& records);
std::vector<SectorRecord> parse_records(const std::string& csv_text);
std::vector<SectorRecord> load_records(const std::filesystem::path& file);

// Dynamics shared by every population drawn from one calibration.
struct PopulationModel {
  Calibration cal;
  EquilibriumSet equilibria;
  bool complementarity = true;
};

/// complementarity=false is the placebo economy: g_comp_slope = 0 and an innovation map without W.
PopulationModel build_population_model(const Calibration& cal, bool complementarity,
                                       const SteadyStateOptions& ss = {});

enum class InitialSpread { mixed, above_threshold, below_threshold };
const char* to_string(InitialSpread s);
InitialSpread parse_initial_spread(const std::string& s);

struct PopulationOptions {
  int n_sectors = 200;
  InitialSpread spread = InitialSpread::mixed;
  double edu_jitter = 0.015;    // log-SD of sector education investment
  double ai_jitter = 0.15;      // log-SD of sector AI stock around the calibration D
  double mqc_noise = 0.01;      // SD added to each management component
  double innov_noise = 0.3;     // SD inside the logistic
  double innov_slope = 0.8;
  double innov_intercept = -1.1;
  double horizon = 400.0;
  double settle_tol = 1e-4;     // |dH^A/dt| accepted as converged
  // Services-type heterogeneity knob: scales terminal HCQ; 1 leaves it unchanged.
  double hcq_scale = 1.0;
};

struct Population {
  std::vector<SectorRecord> records;
  std::vector<std::string> warnings;
  int excluded = 0;
  std::vector<double> terminal_ha;
};

/// Deterministic for a given seed.
Population generate_population(const PopulationModel& model, const PopulationOptions& opts, std::uint64_t seed);

struct RegressionOutput {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd robust_se;
  Eigen::MatrixXd hc1_covariance;
  Eigen::VectorXd residuals;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double f_stat = 0.0;
  int n = 0;
  int k = 0;
  int excluded_rows = 0;

  double coefficient(const std::string& name) const;
  double se(const std::string& name) const;
};

/// OLS by Householder QR with HC1 covariance n/(n-k) (X'X)^-1 X' diag(e^2) X (X'X)^-1.
/// The F statistic tests all slopes against an intercept-only model (first column must be the constant).
/// Rank deficiency raises Error(input) naming the dependent columns.
RegressionOutput ols_hc1(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names);

/// innov_share on (const, mqc, ln_tii, mqc_x_ln_tii, hcq); rows with tii <= 0 are excluded and counted.
RegressionOutput run_interaction_spec(const std::vector<SectorRecord>& records);

std::string format_regression(const RegressionOutput& r);

struct QuartileRow {
  int quartile = 1;
  int count = 0;
  std::vector<double> means;  // one per requested stat
};

struct QuartileTable {
  std::string by;
  std::vector<std::string> stats;
  std::vector<QuartileRow> rows;
};

/// Rank-based quartiles of `by` (ties broken by sector_id); sizes differ by at most one.
QuartileTable quartile_crosstab(const std::vector<SectorRecord>& records, const std::string& by,
                                const std::vector<std::string>& stats);

std::string format_crosstab(const QuartileTable& t);

struct CorrelationMatrix {
  std::vector<std::string> fields;
  // Lower triangle including the diagonal; empty where a variance is zero.
  std::vector<std::vector<std::optional<double>>> values;
};

CorrelationMatrix correlation_matrix(const std::vector<SectorRecord>& records, const std::vector<std::string>& fields);
std::string format_correlations(const CorrelationMatrix& c);

struct BimodalityOptions {
  int restarts = 50;
  double tol = 1e-8;
  int max_iter = 2000;
  double min_variance = 1e-10;
  double collapse_ratio = 1e-3;  // component variance floor, as a share of the sample variance
};

struct BimodalityResult {
  int preferred_modes = 1;
  double bic_1 = 0.0;
  double bic_2 = 0.0;
  double loglik_1 = 0.0;
  double loglik_2 = 0.0;
  std::array<double, 2> weights{};
  std::array<double, 2> means{};
  std::array<double, 2> variances{};
  int degenerate_restarts = 0;
};

/// One- versus two-component Gaussian mixture by EM (k-means++ starts), compared by BIC.
BimodalityResult bimodality_test(const std::vector<double>& values, std::uint64_t seed,
                                 const BimodalityOptions& opts = {});

// One replication of the prediction bench.
struct Replication {
  std::uint64_t seed = 0;
  Population population;
  RegressionOutput regression;
  QuartileTable quartiles;     // innov_share by mqc
  BimodalityResult mqc_modes;  // on terminal mqc
};

/// Replications for seeds first..first+count-1, run on `threads` workers (0: hardware concurrency).
/// Output is in seed order and does not depend on the thread count.
std::vector<Replication> run_replications(const PopulationModel& model, const PopulationOptions& opts,
                                          std::uint64_t first, int count, unsigned threads = 0);

}  // namespace auglab
