#include "auglab/econlab.hpp"

#include "auglab/csv.hpp"
#include "auglab/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <limits>
#include <atomic>
#include <random>
#include <thread>
#include <sstream>

namespace auglab {

namespace {

void require_share(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::domain, fmt::format("{} must lie in [0, 1], got {}", what, v));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

}  // namespace

double mqc_composite(double kpi, double target, double bonus, double promote) {
  require_share(kpi, "kpi");
  require_share(target, "target");
  require_share(bonus, "bonus");
  require_share(promote, "promote");
  return (kpi + target + bonus + promote) / 4.0;
}

double record_field(const SectorRecord& r, const std::string& field) {
  if (field == "kpi") return r.kpi;
  if (field == "target") return r.target;
  if (field == "bonus") return r.bonus;
  if (field == "promote") return r.promote;
  if (field == "mqc") return r.mqc;
  if (field == "tii") return r.tii;
  if (field == "ln_tii") return std::log(r.tii);
  if (field == "hcq") return r.hcq;
  if (field == "innov_share") return r.innov_share;
  if (field == "n_firms") return r.n_firms;
  throw Error(ErrorCode::input, fmt::format("unknown sector field '{}'", field));
}

std::string format_records(const std::vector<SectorRecord>& records) {
  CsvWriter out({"sector_id", "kpi", "target", "bonus", "promote", "mqc", "tii", "hcq", "innov_share", "n_firms"});
  for (const auto& r : records) {
    out.add_row({r.sector_id, format_number(r.kpi), format_number(r.target), format_number(r.bonus),
                 format_number(r.promote), format_number(r.mqc), format_number(r.tii), format_number(r.hcq),
                 format_number(r.innov_share), std::to_string(r.n_firms)});
  }
  return out.str();
}

std::vector<SectorRecord> parse_records(const std::string& csv_text) {
  const CsvTable t = parse_csv(csv_text, "sector records");
  const std::size_t c_id = t.column("sector_id"), c_kpi = t.column("kpi"), c_target = t.column("target"),
                    c_bonus = t.column("bonus"), c_promote = t.column("promote"), c_tii = t.column("tii"),
                    c_hcq = t.column("hcq"), c_innov = t.column("innov_share");
  const auto has = [&](const char* name) { return std::find(t.header.begin(), t.header.end(), name) != t.header.end(); };
  const bool with_mqc = has("mqc"), with_firms = has("n_firms");

  std::vector<SectorRecord> out;
  for (const auto& row : t.rows) {
    SectorRecord r;
    r.sector_id = row[c_id];
    r.kpi = parse_number(row[c_kpi], "kpi");
    r.target = parse_number(row[c_target], "target");
    r.bonus = parse_number(row[c_bonus], "bonus");
    r.promote = parse_number(row[c_promote], "promote");
    r.tii = parse_number(row[c_tii], "tii");
    r.hcq = parse_number(row[c_hcq], "hcq");
    r.innov_share = parse_number(row[c_innov], "innov_share");
    try {
      r.mqc = mqc_composite(r.kpi, r.target, r.bonus, r.promote);
      require_share(r.hcq, "hcq");
      require_share(r.innov_share, "innov_share");
    } catch (const Error& e) {
      throw Error(ErrorCode::input, fmt::format("sector {}: {}", r.sector_id, e.what()));
    }
    if (with_mqc) {
      const double given = parse_number(row[t.column("mqc")], "mqc");
      if (std::abs(given - r.mqc) > 1e-12) {
        throw Error(ErrorCode::input,
                    fmt::format("sector {}: mqc {} is not the mean of its components ({})", r.sector_id, given, r.mqc));
      }
    }
    if (with_firms) r.n_firms = static_cast<int>(parse_number(row[t.column("n_firms")], "n_firms"));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SectorRecord> load_records(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot read {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_records(ss.str());
}

// ---------------------------------------------------------------------------

PopulationModel build_population_model(const Calibration& cal, bool complementarity, const SteadyStateOptions& ss) {
  PopulationModel m;
  m.cal = cal;
  m.complementarity = complementarity;
  if (!complementarity) m.cal.model.g_comp_slope = 0.0;
  m.cal.validate();
  m.equilibria = find_steady_states(m.cal.firm, m.cal.model, m.cal.dynamics, m.cal.solver, ss);
  return m;
}

const char* to_string(InitialSpread s) {
  switch (s) {
    case InitialSpread::mixed: return "mixed";
    case InitialSpread::above_threshold: return "above";
    case InitialSpread::below_threshold: return "below";
  }
  return "?";
}

InitialSpread parse_initial_spread(const std::string& s) {
  if (s == "mixed") return InitialSpread::mixed;
  if (s == "above") return InitialSpread::above_threshold;
  if (s == "below") return InitialSpread::below_threshold;
  throw Error(ErrorCode::input, fmt::format("unknown initial spread '{}' (mixed, above, below)", s));
}

namespace {

// Management components as affine images of W-bar/(1+W-bar); intercepts and loadings put the
// high-basin sector near the manufacturing profile (strong KPI/target use, weak promotion merit).
constexpr std::array<double, 4> kComponentBase{0.35, 0.45, 0.15, 0.10};
constexpr std::array<double, 4> kComponentLoad{0.50, 0.55, 0.35, 0.20};

struct Terminal {
  Vec5 w;
  double ha;
  double ai;
  bool settled;
};

}  // namespace

Population generate_population(const PopulationModel& model, const PopulationOptions& opts, std::uint64_t seed) {
  if (opts.n_sectors < 2) throw Error(ErrorCode::input, "a population needs at least two sectors");
  const Calibration& cal = model.cal;
  const WStarMap& map = model.equilibria.map;
  const double ref = model.equilibria.unstable_threshold.value_or(1.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<int> firms(20);

  // Multiples of the unstable threshold; the single-basin ranges keep clear of it because
  // sector-level education draws move the threshold.
  double lo = 0.5 * ref, hi = 4.0 * ref;
  if (opts.spread == InitialSpread::above_threshold) {
    lo = 2.0 * ref;
  } else if (opts.spread == InitialSpread::below_threshold) {
    lo = 0.0;
    hi = 0.5 * ref;
  }
  hi = std::min(hi, map.hi());

  Population pop;
  std::vector<Terminal> term;
  std::vector<int> draws_firms;
  IntegrationOptions io;
  io.horizon = opts.horizon;
  io.record_every = 1 << 30;
  for (int s = 0; s < opts.n_sectors; ++s) {
    // Every draw happens whether or not the sector survives so later sectors do not shift.
    const double ha0 = lo + (hi - lo) * unit(rng);
    Vec5 w0 = map(ha0);
    for (int k = 0; k < kDims; ++k) w0[k] = std::clamp(w0[k] * std::exp(0.05 * normal(rng)), 0.0, cal.model.w_max);
    DynamicsParams dp = cal.dynamics;
    dp.edu_investment *= std::exp(opts.edu_jitter * normal(rng));
    const double ai = cal.firm.ai_stock * std::exp(opts.ai_jitter * normal(rng));
    draws_firms.push_back(1 + firms(rng));

    const Trajectory tr = integrate_trajectory(w0, ha0, dp, map, io);
    const Vec5 w = tr.w.back();
    const double ha = tr.ha.back();
    const double drift = std::abs(dp.accumulation(w) * dp.edu_investment - dp.depreciation(w) * ha);
    const bool settled = drift <= opts.settle_tol * std::max(1.0, ha);
    if (!settled) {
      ++pop.excluded;
      pop.warnings.push_back(fmt::format("sector s{:03d} excluded: dH^A/dt = {:.3g} at the horizon", s, drift));
    }
    term.push_back({w, ha, ai, settled});
  }

  // Innovation index over the retained sectors, standardized across the population.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < term.size(); ++i) {
    if (term[i].settled) kept.push_back(i);
  }
  if (kept.size() < 2) throw Error(ErrorCode::convergence, "fewer than two sectors settled before the horizon");
  std::vector<double> index(kept.size());
  if (model.complementarity) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const Terminal& t = term[kept[j]];
      const double g = eval_g(DesignVector(t.w, cal.model.w_max), t.ha, cal.model).value;
      index[j] = eval_phi0(t.ai, cal.model) * g * t.ha * t.ai;
    }
    standardize(index);
  } else {
    std::vector<double> tech(kept.size()), skill(kept.size());
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const Terminal& t = term[kept[j]];
      tech[j] = eval_phi0(t.ai, cal.model) * t.ai;
      skill[j] = t.ha;
    }
    standardize(tech);
    standardize(skill);
    for (std::size_t j = 0; j < kept.size(); ++j) index[j] = tech[j] + skill[j];
  }

  // Outcome noise is drawn for every sector, again so exclusions do not shift the stream.
  std::size_t j = 0;
  for (std::size_t i = 0; i < term.size(); ++i) {
    std::array<double, 4> eps{};
    for (double& e : eps) e = normal(rng);
    const double innov_eps = normal(rng);
    if (!term[i].settled) continue;
    const Terminal& t = term[i];
    SectorRecord r;
    r.sector_id = fmt::format("s{:03d}", i);
    const double wbar = t.w.mean();
    const double level = wbar / (1.0 + wbar);
    std::array<double, 4> c{};
    for (std::size_t k = 0; k < 4; ++k) {
      c[k] = std::clamp(kComponentBase[k] + kComponentLoad[k] * level + opts.mqc_noise * eps[k], 0.0, 1.0);
    }
    r.kpi = c[0];
    r.target = c[1];
    r.bonus = c[2];
    r.promote = c[3];
    r.mqc = mqc_composite(r.kpi, r.target, r.bonus, r.promote);
    r.tii = t.ai;
    r.hcq = std::clamp(opts.hcq_scale * t.ha / (t.ha + cal.firm.hc()), 0.0, 1.0);
    r.innov_share = logistic(opts.innov_intercept + opts.innov_slope * index[j] + opts.innov_noise * innov_eps);
    r.n_firms = draws_firms[i];
    pop.records.push_back(std::move(r));
    pop.terminal_ha.push_back(t.ha);
    ++j;
  }
  return pop;
}

// ---------------------------------------------------------------------------

double RegressionOutput::coefficient(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return coefficients[static_cast<Eigen::Index>(i)];
  }
  throw Error(ErrorCode::input, fmt::format("no regressor named '{}'", name));
}

double RegressionOutput::se(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return robust_se[static_cast<Eigen::Index>(i)];
  }
  throw Error(ErrorCode::input, fmt::format("no regressor named '{}'", name));
}

RegressionOutput ols_hc1(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names) {
  const Eigen::Index n = x.rows(), k = x.cols();
  if (static_cast<Eigen::Index>(names.size()) != k) throw Error(ErrorCode::input, "one name per regressor required");
  if (y.size() != n) throw Error(ErrorCode::input, fmt::format("{} outcomes for {} design rows", y.size(), n));
  if (n <= k) throw Error(ErrorCode::input, fmt::format("{} observations cannot identify {} coefficients", n, k));
  if (!y.allFinite() || !x.allFinite()) throw Error(ErrorCode::input, "regression data contain non-finite values");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::string cols;
    for (Eigen::Index i = qr.rank(); i < k; ++i) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<std::size_t>(qr.colsPermutation().indices()[i])];
    }
    throw Error(ErrorCode::input, fmt::format("design is rank deficient ({} of {}): collinear column(s) {}",
                                              qr.rank(), k, cols));
  }

  RegressionOutput out;
  out.names = names;
  out.n = static_cast<int>(n);
  out.k = static_cast<int>(k);
  out.coefficients = qr.solve(y);
  out.residuals = y - x * out.coefficients;

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd p = qr.colsPermutation();
  const Eigen::MatrixXd bread = p * r_inv * r_inv.transpose() * p.transpose();
  const Eigen::MatrixXd meat = x.transpose() * out.residuals.array().square().matrix().asDiagonal() * x;
  Eigen::MatrixXd cov = static_cast<double>(n) / static_cast<double>(n - k) * bread * meat * bread;
  out.hc1_covariance = 0.5 * (cov + cov.transpose());
  out.robust_se = out.hc1_covariance.diagonal().cwiseMax(0.0).cwiseSqrt();

  const double ssr = out.residuals.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  out.r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  out.adj_r2 = 1.0 - (1.0 - out.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);
  if (k > 1) {
    const double num = (sst - ssr) / static_cast<double>(k - 1);
    const double den = ssr / static_cast<double>(n - k);
    out.f_stat = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
  }
  return out;
}

RegressionOutput run_interaction_spec(const std::vector<SectorRecord>& records) {
  std::vector<const SectorRecord*> rows;
  int excluded = 0;
  for (const auto& r : records) {
    if (r.tii > 0.0 && std::isfinite(r.tii)) rows.push_back(&r);
    else ++excluded;
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, 5);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const SectorRecord& r = *rows[static_cast<std::size_t>(i)];
    const double lt = std::log(r.tii);
    x.row(i) << 1.0, r.mqc, lt, r.mqc * lt, r.hcq;
    y[i] = r.innov_share;
  }
  RegressionOutput out = ols_hc1(y, x, {"const", "mqc", "ln_tii", "mqc_x_ln_tii", "hcq"});
  out.excluded_rows = excluded;
  return out;
}

std::string format_regression(const RegressionOutput& r) {
  CsvWriter out({"term", "coefficient", "robust_se", "t_stat"});
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const double se = r.robust_se[j];
    out.add_row({r.names[i], format_number(r.coefficients[j]), format_number(se),
                 se > 0.0 ? format_number(r.coefficients[j] / se) : "nan"});
  }
  out.add_row({"n", std::to_string(r.n), "", ""});
  out.add_row({"r2", format_number(r.r2), "", ""});
  out.add_row({"adj_r2", format_number(r.adj_r2), "", ""});
  out.add_row({"f_stat", format_number(r.f_stat), "", ""});
  out.add_row({"excluded_rows", std::to_string(r.excluded_rows), "", ""});
  return out.str();
}

// ---------------------------------------------------------------------------

QuartileTable quartile_crosstab(const std::vector<SectorRecord>& records, const std::string& by,
                                const std::vector<std::string>& stats) {
  if (records.size() < 4) throw Error(ErrorCode::input, "quartiles need at least four records");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) key[i] = record_field(records[i], by);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    return records[a].sector_id < records[b].sector_id;
  });

  QuartileTable t;
  t.by = by;
  t.stats = stats;
  for (int q = 1; q <= 4; ++q) t.rows.push_back({q, 0, std::vector<double>(stats.size(), 0.0)});
  const std::size_t n = records.size();
  for (std::size_t rank = 0; rank < n; ++rank) {
    QuartileRow& row = t.rows[4 * rank / n];
    ++row.count;
    for (std::size_t s = 0; s < stats.size(); ++s) row.means[s] += record_field(records[order[rank]], stats[s]);
  }
  for (auto& row : t.rows) {
    for (double& m : row.means) m /= row.count;
  }
  return t;
}

std::string format_crosstab(const QuartileTable& t) {
  std::vector<std::string> header{"quartile", "count"};
  for (const auto& s : t.stats) header.push_back(s);
  CsvWriter out(header);
  for (const auto& row : t.rows) {
    std::vector<std::string> cells{fmt::format("Q{}", row.quartile), std::to_string(row.count)};
    for (double m : row.means) cells.push_back(format_number(m));
    out.add_row(cells);
  }
  return out.str();
}

CorrelationMatrix correlation_matrix(const std::vector<SectorRecord>& records, const std::vector<std::string>& fields) {
  if (records.size() < 3) throw Error(ErrorCode::input, "correlations need at least three records");
  const std::size_t m = fields.size();
  const double n = static_cast<double>(records.size());
  std::vector<std::vector<double>> centered(m);
  std::vector<double> ss(m, 0.0);
  for (std::size_t f = 0; f < m; ++f) {
    for (const auto& r : records) centered[f].push_back(record_field(r, fields[f]));
    const double mean = std::accumulate(centered[f].begin(), centered[f].end(), 0.0) / n;
    for (double& v : centered[f]) {
      v -= mean;
      ss[f] += v * v;
    }
  }
  CorrelationMatrix c;
  c.fields = fields;
  c.values.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (!(ss[i] > 0.0 && ss[j] > 0.0)) {
        c.values[i].push_back(std::nullopt);
        continue;
      }
      double cross = 0.0;
      for (std::size_t r = 0; r < records.size(); ++r) cross += centered[i][r] * centered[j][r];
      c.values[i].push_back(i == j ? 1.0 : std::clamp(cross / std::sqrt(ss[i] * ss[j]), -1.0, 1.0));
    }
  }
  return c;
}

std::string format_correlations(const CorrelationMatrix& c) {
  std::vector<std::string> header{"field"};
  for (const auto& f : c.fields) header.push_back(f);
  CsvWriter out(header);
  for (std::size_t i = 0; i < c.fields.size(); ++i) {
    std::vector<std::string> cells{c.fields[i]};
    for (std::size_t j = 0; j < c.fields.size(); ++j) {
      if (j > i) cells.emplace_back();
      else cells.push_back(c.values[i][j] ? format_number(*c.values[i][j]) : "NA");
    }
    out.add_row(cells);
  }
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_normal(double x, double mean, double var) {
  return -0.5 * (kLog2Pi + std::log(var) + (x - mean) * (x - mean) / var);
}

struct Mixture {
  std::array<double, 2> w{}, mu{}, var{};
  double loglik = -std::numeric_limits<double>::infinity();
  bool degenerate = false;
};

// Component variances are held at or above `var_floor` so a handful of near-equal
// values cannot buy unbounded likelihood. Exact collapse still restarts.
Mixture fit_two(const std::vector<double>& x, std::mt19937_64& rng, const BimodalityOptions& opts, double var_floor) {
  const std::size_t n = x.size();
  Mixture m;
  // k-means++ seeding
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double c0 = x[pick(rng)];
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x[i] - c0) * (x[i] - c0);
  if (std::accumulate(d2.begin(), d2.end(), 0.0) <= 0.0) {
    m.degenerate = true;
    return m;
  }
  std::discrete_distribution<std::size_t> weighted(d2.begin(), d2.end());
  const double c1 = x[weighted(rng)];

  std::array<double, 2> sum{}, sq{}, cnt{};
  for (double v : x) {
    const std::size_t c = std::abs(v - c0) <= std::abs(v - c1) ? 0 : 1;
    sum[c] += v;
    sq[c] += v * v;
    cnt[c] += 1.0;
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (cnt[c] < 1.0) {
      m.degenerate = true;
      return m;
    }
    m.w[c] = cnt[c] / static_cast<double>(n);
    m.mu[c] = sum[c] / cnt[c];
    m.var[c] = sq[c] / cnt[c] - m.mu[c] * m.mu[c];
    if (!(m.var[c] >= opts.min_variance)) {
      m.degenerate = true;
      return m;
    }
    m.var[c] = std::max(m.var[c], var_floor);
  }

  std::vector<double> resp(n);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    // log w_c N(x; mu_c, var_c) = k_c - (x - mu_c)^2 / (2 var_c)
    const double k0 = std::log(m.w[0]) - 0.5 * (kLog2Pi + std::log(m.var[0]));
    const double k1 = std::log(m.w[1]) - 0.5 * (kLog2Pi + std::log(m.var[1]));
    const double h0 = 0.5 / m.var[0], h1 = 0.5 / m.var[1];
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = k0 - h0 * (x[i] - m.mu[0]) * (x[i] - m.mu[0]);
      const double b = k1 - h1 * (x[i] - m.mu[1]) * (x[i] - m.mu[1]);
      const double e = std::exp(-std::abs(a - b));
      resp[i] = a >= b ? 1.0 / (1.0 + e) : e / (1.0 + e);
      ll += std::max(a, b) + std::log1p(e);
    }
    m.loglik = ll;
    if (std::abs(ll - prev) <= opts.tol * std::max(1.0, std::abs(ll))) break;
    prev = ll;

    double r0 = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r0 += resp[i];
      s0 += resp[i] * x[i];
      s1 += (1.0 - resp[i]) * x[i];
    }
    const double r1 = static_cast<double>(n) - r0;
    if (r0 <= 0.0 || r1 <= 0.0) {
      m.degenerate = true;
      return m;
    }
    m.mu = {s0 / r0, s1 / r1};
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v0 += resp[i] * (x[i] - m.mu[0]) * (x[i] - m.mu[0]);
      v1 += (1.0 - resp[i]) * (x[i] - m.mu[1]) * (x[i] - m.mu[1]);
    }
    m.var = {v0 / r0, v1 / r1};
    m.w = {r0 / static_cast<double>(n), r1 / static_cast<double>(n)};
    if (!(m.var[0] >= opts.min_variance && m.var[1] >= opts.min_variance)) {
      m.degenerate = true;
      return m;
    }
    m.var = {std::max(m.var[0], var_floor), std::max(m.var[1], var_floor)};
  }
  return m;
}

}  // namespace

BimodalityResult bimodality_test(const std::vector<double>& values, std::uint64_t seed, const BimodalityOptions& opts) {
  if (values.size() < 30) {
    throw Error(ErrorCode::input, fmt::format("bimodality test needs at least 30 values, got {}", values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::input, "bimodality test received a non-finite value");
  }
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var >= opts.min_variance)) throw Error(ErrorCode::input, "values have (near) zero variance");

  BimodalityResult out;
  out.loglik_1 = 0.0;
  for (double v : values) out.loglik_1 += log_normal(v, mean, var);
  out.bic_1 = -2.0 * out.loglik_1 + 2.0 * std::log(n);

  const double var_floor = std::max(opts.min_variance, opts.collapse_ratio * var);
  std::mt19937_64 rng(seed);
  Mixture best;
  for (int r = 0; r < opts.restarts; ++r) {
    Mixture m = fit_two(values, rng, opts, var_floor);
    if (m.degenerate) {
      ++out.degenerate_restarts;
      continue;
    }
    if (m.loglik > best.loglik) best = m;
  }
  if (!std::isfinite(best.loglik)) {
    throw Error(ErrorCode::convergence, fmt::format("all {} mixture restarts were degenerate", opts.restarts));
  }
  if (best.mu[0] > best.mu[1]) {
    std::swap(best.mu[0], best.mu[1]);
    std::swap(best.var[0], best.var[1]);
    std::swap(best.w[0], best.w[1]);
  }
  out.loglik_2 = best.loglik;
  out.bic_2 = -2.0 * best.loglik + 5.0 * std::log(n);
  out.weights = best.w;
  out.means = best.mu;
  out.variances = best.var;
  out.preferred_modes = out.bic_2 < out.bic_1 ? 2 : 1;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Replication> run_replications(const PopulationModel& model, const PopulationOptions& opts,
                                          std::uint64_t first, int count, unsigned threads) {
  if (count <= 0) return {};
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));

  std::vector<Replication> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      const auto slot = static_cast<std::size_t>(i);
      try {
        Replication& r = out[slot];
        r.seed = first + static_cast<std::uint64_t>(i);
        r.population = generate_population(model, opts, r.seed);
        r.regression = run_interaction_spec(r.population.records);
        r.quartiles = quartile_crosstab(r.population.records, "mqc", {"innov_share"});
        std::vector<double> mqc;
        for (const auto& rec : r.population.records) mqc.push_back(rec.mqc);
        r.mqc_modes = bimodality_test(mqc, r.seed);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace auglab
