#include "psqkd/keyrate_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "psqkd/errors.hpp"

namespace psqkd::keyrate_engine {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double gauss(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-d * d / (2.0 * variance)) / std::sqrt(kTwoPi * variance);
}

// 1 - sqrt(1 - f^2) without cancellation for small f.
double deficit_arg(double f) {
  const double s = std::sqrt(std::max(0.0, (1.0 - f) * (1.0 + f)));
  return f * f / (1.0 + s);
}

double delta_i_individual(const Channel& ch, const AnnouncedPair& pt) {
  const double pe = info_theory::error_probability(ch, pt);
  const auto f = eve_model::normalized_overlaps(ch, pt);
  // delta_i = (1 - D_B) - (1 - D_E) with D the deficits from 1 bit; the
  // hazardous near-saturation subtraction cancels exactly.
  const double d_b = info_theory::phi_deficit(2.0 * pe);
  const double d_e =
      (1.0 - pe) * info_theory::phi_deficit(deficit_arg(f.f_match)) +
      pe * info_theory::phi_deficit(deficit_arg(f.f_mismatch));
  return d_e - d_b;
}

double delta_i_collective(const Channel& ch, const AnnouncedPair& pt) {
  const double pe = info_theory::error_probability(ch, pt);
  const double i_ab = 1.0 - info_theory::phi_deficit(2.0 * pe);
  return i_ab - eve_model::eve_info(ch, pt, Attack::collective).bits;
}

// ---- adaptive secure-rate integration --------------------------------------

constexpr double kGl7X[7] = {-0.9491079123427585, -0.7415311855993945,
                             -0.4058451513773972, 0.0,
                             0.4058451513773972,  0.7415311855993945,
                             0.9491079123427585};
constexpr double kGl7W[7] = {0.1294849661688697, 0.2797053914892766,
                             0.3818300505051189, 0.4179591836734694,
                             0.3818300505051189, 0.2797053914892766,
                             0.1294849661688697};
constexpr double kGl3X[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGl3W[3] = {0.5555555555555556, 0.8888888888888889,
                             0.5555555555555556};

struct Cell {
  double x0, y0, dx, dy;
  int depth;
};

struct CellEval {
  double integral;  // GL 7x7
  double error;     // |GL7x7 - GL3x3|
};

template <class F>
CellEval eval_cell(F& f, const Cell& c) {
  const double hx = 0.5 * c.dx;
  const double hy = 0.5 * c.dy;
  const double cx = c.x0 + hx;
  const double cy = c.y0 + hy;
  double i7 = 0.0;
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      i7 += kGl7W[i] * kGl7W[j] * f(cx + hx * kGl7X[i], cy + hy * kGl7X[j]);
    }
  }
  i7 *= hx * hy;
  double i3 = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      i3 += kGl3W[i] * kGl3W[j] * f(cx + hx * kGl3X[i], cy + hy * kGl3X[j]);
    }
  }
  i3 *= hx * hy;
  return {i7, std::abs(i7 - i3)};
}

constexpr int kMaxDepth = 20;
constexpr int kInitCells = 8;  // kInitCells x kInitCells starting grid

SecureRateResult secure_rate_impl(const Channel& ch, const Modulation& mod,
                                  Attack attack, double tol, bool parallel) {
  if (!(tol > 0.0)) throw std::invalid_argument("secure_rate: tol > 0");
  eve_model::require_cloner_domain(ch);
  const double s_max = 8.0 * std::sqrt(mod.v_a);
  const double m_max = 8.0 * std::sqrt(ch.eta * mod.v_a + 1.0 + ch.xi);
  const double total_area = s_max * m_max;
  const double root_eta = std::sqrt(ch.eta);
  const double noise_var = 1.0 + ch.xi;

  // Folded full-plane weight: the four sign combinations of (S_A, m_B) all
  // collapse onto the announced magnitudes.
  auto integrand = [&](double s, double m) {
    const double di = delta_i_value(ch, AnnouncedPair(s, m), attack);
    if (di <= 0.0) return 0.0;
    const double w = 2.0 * gauss(s, 0.0, mod.v_a) *
                     (gauss(m, root_eta * s, noise_var) +
                      gauss(m, -root_eta * s, noise_var));
    return w * di;
  };

  std::vector<Cell> wave;
  wave.reserve(kInitCells * kInitCells);
  const double dx0 = s_max / kInitCells;
  const double dy0 = m_max / kInitCells;
  for (int i = 0; i < kInitCells; ++i) {
    for (int j = 0; j < kInitCells; ++j) {
      wave.push_back({i * dx0, j * dy0, dx0, dy0, 0});
    }
  }

  SecureRateResult out{0.0, mod.v_a, attack, 0.0, true, 0};
  std::vector<CellEval> evals;
  std::vector<Cell> next;
  while (!wave.empty()) {
    evals.assign(wave.size(), CellEval{});
    const std::int64_t n = static_cast<std::int64_t>(wave.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
      for (std::int64_t c = 0; c < n; ++c) {
        evals[c] = eval_cell(integrand, wave[c]);
      }
    } else {
      for (std::int64_t c = 0; c < n; ++c) {
        evals[c] = eval_cell(integrand, wave[c]);
      }
    }
    // Accept or split, in deterministic queue order.
    next.clear();
    for (std::int64_t c = 0; c < n; ++c) {
      const Cell& cell = wave[c];
      const double budget = tol * (cell.dx * cell.dy) / total_area;
      if (evals[c].error <= budget || cell.depth >= kMaxDepth) {
        if (evals[c].error > budget) out.converged = false;
        out.delta_i_total += evals[c].integral;
        out.integration_estimate_error += evals[c].error;
        ++out.cells;
      } else {
        const double hx = 0.5 * cell.dx;
        const double hy = 0.5 * cell.dy;
        const int d = cell.depth + 1;
        next.push_back({cell.x0, cell.y0, hx, hy, d});
        next.push_back({cell.x0 + hx, cell.y0, hx, hy, d});
        next.push_back({cell.x0, cell.y0 + hy, hx, hy, d});
        next.push_back({cell.x0 + hx, cell.y0 + hy, hx, hy, d});
      }
    }
    wave.swap(next);
  }
  out.delta_i_total = std::max(0.0, out.delta_i_total);
  return out;
}

double golden_va_search(const Channel& ch, Attack attack, double tol,
                        bool parallel, bool& boundary_pinned) {
  constexpr double kInvGold = 0.61803398874989485;
  double a = std::log(0.1);
  double b = std::log(100.0);
  const double lo = a;
  const double hi = b;
  auto rate_at = [&](double t) {
    return secure_rate_impl(ch, Modulation(std::exp(t)), attack, tol, parallel)
        .delta_i_total;
  };
  double c = b - kInvGold * (b - a);
  double d = a + kInvGold * (b - a);
  double fc = rate_at(c);
  double fd = rate_at(d);
  while (b - a > 1e-3) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGold * (b - a);
      fc = rate_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGold * (b - a);
      fd = rate_at(d);
    }
  }
  const double t_opt = 0.5 * (a + b);
  boundary_pinned = (t_opt - lo < 2e-3) || (hi - t_opt < 2e-3);
  return std::exp(t_opt);
}

}  // namespace

RateBreakdown delta_i_point(const Channel& ch, const AnnouncedPair& pt,
                            Attack attack) {
  const double i_ab = info_theory::mutual_info_ab(ch, pt);
  const auto ei = eve_model::eve_info(ch, pt, attack);
  return {i_ab, ei.bits, i_ab - ei.bits, attack, ei.target_used};
}

double delta_i_value(const Channel& ch, const AnnouncedPair& pt,
                     Attack attack) {
  return attack == Attack::individual ? delta_i_individual(ch, pt)
                                      : delta_i_collective(ch, pt);
}

bool postselect_keep(const Channel& ch, const AnnouncedPair& pt,
                     Attack attack) {
  return delta_i_value(ch, pt, attack) > 0.0;
}

namespace {

RegionMap region_map_impl(const Channel& ch, Attack attack, double s_max,
                          double m_max, std::size_t n_s, std::size_t n_m,
                          bool parallel) {
  if (!(s_max > 0.0) || !(m_max > 0.0) || n_s < 2 || n_m < 2) {
    throw std::invalid_argument(
        "region_map: positive extents, at least 2 points per axis");
  }
  eve_model::require_cloner_domain(ch);
  RegionMap map;
  map.s_grid.resize(n_s);
  map.m_grid.resize(n_m);
  for (std::size_t i = 0; i < n_s; ++i) {
    map.s_grid[i] = s_max * static_cast<double>(i) / (n_s - 1);
  }
  for (std::size_t j = 0; j < n_m; ++j) {
    map.m_grid[j] = m_max * static_cast<double>(j) / (n_m - 1);
  }
  map.values.resize(n_s * n_m);
  map.kept.resize(n_s * n_m);
  const std::int64_t rows = static_cast<std::int64_t>(n_s);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n_m; ++j) {
      const double di = delta_i_value(
          ch, AnnouncedPair(map.s_grid[i], map.m_grid[j]), attack);
      map.values[i * n_m + j] = di;
      map.kept[i * n_m + j] = di > 0.0 ? 1 : 0;
    }
  }
  return map;
}

}  // namespace

RegionMap region_map(const Channel& ch, Attack attack, double s_max,
                     double m_max, std::size_t n_s, std::size_t n_m) {
  return region_map_impl(ch, attack, s_max, m_max, n_s, n_m, true);
}

RegionMap region_map_serial(const Channel& ch, Attack attack, double s_max,
                            double m_max, std::size_t n_s, std::size_t n_m) {
  return region_map_impl(ch, attack, s_max, m_max, n_s, n_m, false);
}

std::optional<std::pair<double, double>> asymptote_slopes(const Channel& ch) {
  if (!(ch.xi > 0.0)) {
    throw std::invalid_argument("asymptote_slopes: requires xi > 0");
  }
  const double eta = ch.eta;
  const double xi = ch.xi;
  const double disc =
      eta * (1.0 + xi) * (1.0 + xi) - xi * (xi + 2.0) * (xi + 1.0 - eta);
  if (disc < 0.0) return std::nullopt;  // no secure asymptotes
  const double denom = xi * (2.0 + xi);
  const double first = std::sqrt(eta) * (1.0 + xi);
  const double root = std::sqrt(disc);
  return std::make_pair((first - root) / denom, (first + root) / denom);
}

double noise_threshold(double eta) {
  if (!std::isfinite(eta) || eta <= 0.0 || eta > 1.0) {
    throw std::invalid_argument("noise_threshold: 0 < eta <= 1");
  }
  auto g = [eta](double xi) {
    return eta * (1.0 + xi) * (1.0 + xi) -
           xi * (xi + 2.0) * (xi + 1.0 - eta);
  };
  double lo = 1e-6;
  double hi = 2.0 * eta - 1e-6;
  if (!(hi > lo) || !(g(lo) > 0.0) || !(g(hi) < 0.0)) {
    throw no_convergence("noise_threshold: bisection bracket failed",
                         std::numeric_limits<double>::quiet_NaN());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double separability_bound(double eta) {
  if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("separability_bound: 0 <= eta <= 1");
  }
  return 2.0 * eta;
}

SecureRateResult secure_rate(const Channel& ch, const Modulation& mod,
                             Attack attack, double tol) {
  return secure_rate_impl(ch, mod, attack, tol, true);
}

SecureRateResult secure_rate_serial(const Channel& ch, const Modulation& mod,
                                    Attack attack, double tol) {
  return secure_rate_impl(ch, mod, attack, tol, false);
}

OptimizeResult optimize_modulation(const Channel& ch, Attack attack,
                                   double tol, bool parallel) {
  if (!(ch.xi < noise_threshold(ch.eta))) {
    throw std::invalid_argument(
        "optimize_modulation: channel is insecure (xi >= threshold)");
  }
  OptimizeResult out;
  out.v_a_opt =
      golden_va_search(ch, attack, tol, parallel, out.boundary_pinned);
  out.rate = secure_rate_impl(ch, Modulation(out.v_a_opt), attack, tol,
                              parallel);
  return out;
}

std::vector<SweepPoint> sweep_noise(double eta,
                                    const std::vector<double>& xi_list,
                                    Attack attack, VaPolicy policy,
                                    double fixed_va) {
  const double xi0 = noise_threshold(eta);
  std::vector<SweepPoint> curve;
  curve.reserve(xi_list.size());
  for (double xi : xi_list) {
    const Channel ch(eta, xi);
    SweepPoint p{xi, 0.0, 0.0, 0.0, xi < xi0};
    if (p.secure) {
      double va = fixed_va;
      if (policy == VaPolicy::optimize_individual) {
        va = optimize_modulation(ch, Attack::individual).v_a_opt;
      } else if (policy == VaPolicy::optimize_per_attack) {
        va = optimize_modulation(ch, attack).v_a_opt;
      }
      const auto r = secure_rate(ch, Modulation(va), attack);
      p.v_a_used = va;
      p.rate = r.delta_i_total;
      p.integration_error = r.integration_estimate_error;
    }
    curve.push_back(p);
  }
  return curve;
}

ContourTable contour_grid(const std::vector<double>& eta_grid,
                          const std::vector<double>& xi_grid, Attack attack) {
  ContourTable table;
  table.eta_grid = eta_grid;
  table.xi_grid = xi_grid;
  table.cells.resize(eta_grid.size() * xi_grid.size());

  // Thresholds once per eta row.
  std::vector<double> xi0(eta_grid.size());
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    xi0[i] = noise_threshold(eta_grid[i]);
  }

  // Surface every domain error before the parallel loop (see
  // require_cloner_domain): validate each cell that will be evaluated.
  for (std::size_t ie = 0; ie < eta_grid.size(); ++ie) {
    for (double xi : xi_grid) {
      if (xi < xi0[ie]) {
        eve_model::require_cloner_domain(Channel(eta_grid[ie], xi));
      }
    }
  }

  const std::int64_t total =
      static_cast<std::int64_t>(eta_grid.size() * xi_grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const std::size_t ie = idx / xi_grid.size();
    const std::size_t ix = idx % xi_grid.size();
    const double eta = eta_grid[ie];
    const double xi = xi_grid[ix];
    ContourCell cell{0.0, 0.0, xi >= xi0[ie], xi >= 2.0 * eta};
    if (!cell.insecure) {
      const Channel ch(eta, xi);
      bool pinned = false;
      // Serial inner evaluation: the cells themselves are the parallel axis.
      const double va = golden_va_search(ch, attack, 1e-6, false, pinned);
      const auto r =
          secure_rate_impl(ch, Modulation(va), attack, 1e-6, false);
      cell.rate = r.delta_i_total;
      cell.v_a_used = va;
    }
    table.cells[idx] = cell;
  }
  return table;
}

}  // namespace psqkd::keyrate_engine
