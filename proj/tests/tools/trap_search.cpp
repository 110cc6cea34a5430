// Grid search for a dynamics calibration with an automation trap: three steady states,
// the low one below the neutral design and the high one above it.
//
// For each (g_comp_base, g_comp_slope, cost scale) the W* map is solved once; the
// accumulation/depreciation coefficients are then scanned on the cached map.
// Usage: trap_search [base.params]
#include "auglab/dynamics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace auglab;

namespace {

struct Candidate {
  double margin;
  double base, slope, cost_scale, level, loading, delta_slope;
  std::vector<double> roots;
};

}  // namespace

int main(int argc, char** argv) {
  Calibration cal = argc > 1 ? load_calibration(argv[1]) : Calibration{};
  const Vec5 cost_shape = cal.model.cost_coeffs.cwiseQuotient(cal.model.g_exponents) / 1.3;
  cal.model.g_floor = 0.01;

  std::vector<double> grid;
  for (int i = 0; i <= 120; ++i) grid.push_back(0.1 * i);

  std::vector<Candidate> found;
  for (double base : {0.02, 0.05, 0.1, 0.2}) {
    for (double slope : {2.0, 3.0, 5.0}) {
      for (double cs : {0.8, 1.3, 2.0}) {
        ModelParams p = cal.model;
        p.g_comp_base = base;
        p.g_comp_slope = slope;
        p.cost_coeffs = cs * p.g_exponents.cwiseProduct(cost_shape);
        const WStarMap map = build_w_star_map(cal.firm, p, grid, cal.solver);
        for (double loading : {0.5, 1.0, 2.0, 4.0}) {
          for (double ds : {1.0, 2.0, 4.0, 8.0, 16.0}) {
            for (int j = 0; j < 30; ++j) {
              // level = beta0 I / delta0
              const double level = 0.01 * std::pow(100.0, j / 29.0);
              std::vector<double> ps(grid.size());
              for (std::size_t i = 0; i < grid.size(); ++i) {
                const Vec5 w = map.values()[i];
                ps[i] = level * (1.0 + loading * (w[2] + w[3])) * (1.0 + ds * w.mean()) - grid[i];
              }
              std::vector<std::size_t> cross;
              for (std::size_t i = 1; i < ps.size(); ++i) {
                if ((ps[i - 1] > 0) != (ps[i] > 0)) cross.push_back(i - 1);
              }
              if (cross.size() != 3) continue;
              const Vec5 wl = map.values()[cross[0]], wh = map.values()[cross[2] + 1];
              if (!(wl.maxCoeff() < 1.0 && wh.minCoeff() > 1.0)) continue;
              double dip = 0.0, bump = 0.0;
              for (std::size_t i = cross[0] + 1; i <= cross[1]; ++i) dip = std::max(dip, -ps[i]);
              for (std::size_t i = cross[1] + 1; i <= cross[2]; ++i) bump = std::max(bump, ps[i]);
              found.push_back({std::min(dip, bump), base, slope, cs, level, loading, ds,
                               {grid[cross[0]], grid[cross[1]], grid[cross[2]]}});
            }
          }
        }
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) { return a.margin > b.margin; });
  fmt::print("margin,g_comp_base,g_comp_slope,cost_scale,level,loading,delta_slope,root_lo,root_mid,root_hi\n");
  for (std::size_t i = 0; i < std::min<std::size_t>(found.size(), 25); ++i) {
    const Candidate& c = found[i];
    fmt::print("{:.4f},{},{},{},{:.5f},{},{},{:.2f},{:.2f},{:.2f}\n", c.margin, c.base, c.slope, c.cost_scale, c.level,
               c.loading, c.delta_slope, c.roots[0], c.roots[1], c.roots[2]);
  }
  return found.empty() ? 1 : 0;
}
