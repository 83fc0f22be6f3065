#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "psqkd/eve_model.hpp"
#include "psqkd/info_theory.hpp"

namespace psqkd::keyrate_engine {

using eve_model::Attack;
using eve_model::Target;
using info_theory::AnnouncedPair;
using info_theory::Channel;
using info_theory::Modulation;

// Per-point information budget at an announced pair.
struct RateBreakdown {
  double i_ab;       // Alice-Bob mutual information, bits
  double i_e;        // Eve's bound (max over targets), bits
  double delta_i;    // i_ab - i_e, definitionally
  Attack attack;
  Target target_used;
};

RateBreakdown delta_i_point(const Channel& ch, const AnnouncedPair& pt,
                            Attack attack);

// Cancellation-safe evaluation of delta_i alone.  For individual attacks the
// subtraction is rearranged into deficits from 1 bit, which stays accurate
// far out on the |S|,|m| plane where both informations saturate.
double delta_i_value(const Channel& ch, const AnnouncedPair& pt,
                     Attack attack);

bool postselect_keep(const Channel& ch, const AnnouncedPair& pt,
                     Attack attack);

// Dense delta_i evaluation over a magnitude grid.
struct RegionMap {
  std::vector<double> s_grid;
  std::vector<double> m_grid;
  std::vector<double> values;        // row-major, [is * m_grid.size() + im]
  std::vector<unsigned char> kept;   // values > 0

  double value_at(std::size_t is, std::size_t im) const {
    return values[is * m_grid.size() + im];
  }
  bool kept_at(std::size_t is, std::size_t im) const {
    return kept[is * m_grid.size() + im] != 0;
  }
};

// OpenMP over grid rows; `region_map_serial` is the reference implementation,
// bit-identical by construction (independent slot writes, no reductions).
RegionMap region_map(const Channel& ch, Attack attack, double s_max,
                     double m_max, std::size_t n_s, std::size_t n_m);
RegionMap region_map_serial(const Channel& ch, Attack attack, double s_max,
                            double m_max, std::size_t n_s, std::size_t n_m);

// Slopes (minus, plus) of the two rays the kept-region boundary approaches
// at large |S_A|.  Requires xi > 0; nullopt once the discriminant turns
// negative (no secure asymptotes, the region has closed).
std::optional<std::pair<double, double>> asymptote_slopes(const Channel& ch);

// Unique root xi_0 in (0, 2 eta) of eta(1+xi)^2 = xi(xi+2)(xi+1-eta);
// beyond it no announced pair retains an information advantage.
double noise_threshold(double eta);

// xi >= 2 eta renders the joint state separable: no key from any protocol.
double separability_bound(double eta);

struct SecureRateResult {
  double delta_i_total;              // bits per sifted symbol
  double v_a_used;
  Attack attack;
  double integration_estimate_error;
  bool converged;
  std::int64_t cells;                // accepted integration cells
};

// Post-selected key rate: the joint-density-weighted integral of delta_i
// over the kept region, by adaptive cell refinement (Gauss-Legendre 7x7 per
// cell, cells split where the kept-region boundary defeats the local error
// budget).  Deterministic for any worker count.
SecureRateResult secure_rate(const Channel& ch, const Modulation& mod,
                             Attack attack, double tol = 1e-6);
SecureRateResult secure_rate_serial(const Channel& ch, const Modulation& mod,
                                    Attack attack, double tol = 1e-6);

struct OptimizeResult {
  double v_a_opt;
  SecureRateResult rate;
  bool boundary_pinned;  // optimum ran into the search-interval edge
};

// Golden-section maximization of secure_rate over log V_A in [0.1, 100],
// to 1e-3 relative in V_A.
OptimizeResult optimize_modulation(const Channel& ch, Attack attack,
                                   double tol = 1e-6, bool parallel = true);

enum class VaPolicy {
  optimize_individual,  // per-xi optimum of the individual bound, shared
  optimize_per_attack,  // per-xi optimum of the evaluated attack's bound
  fixed,
};

struct SweepPoint {
  double xi;
  double v_a_used;
  double rate;
  double integration_error;
  bool secure;  // xi < noise_threshold(eta)
};

std::vector<SweepPoint> sweep_noise(double eta,
                                    const std::vector<double>& xi_list,
                                    Attack attack, VaPolicy policy,
                                    double fixed_va = 1.0);

struct ContourCell {
  double rate;
  double v_a_used;
  bool insecure;   // xi >= noise_threshold(eta)
  bool separable;  // xi >= 2 eta
};

struct ContourTable {
  std::vector<double> eta_grid;
  std::vector<double> xi_grid;
  std::vector<ContourCell> cells;  // row-major, [ie * xi_grid.size() + ix]

  const ContourCell& at(std::size_t ie, std::size_t ix) const {
    return cells[ie * xi_grid.size() + ix];
  }
};

// Optimized secure_rate per (eta, xi) cell, parallel over cells.
ContourTable contour_grid(const std::vector<double>& eta_grid,
                          const std::vector<double>& xi_grid, Attack attack);

}  // namespace psqkd::keyrate_engine
