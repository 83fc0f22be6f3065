#pragma once

namespace psqkd::info_theory {

// Gaussian channel in shot-noise units (vacuum quadrature variance V_V = 1):
// a fraction eta of the signal survives, and the output carries excess
// Gaussian noise of variance xi on top of the vacuum contribution.
struct Channel {
  double eta;  // transmission, 0 < eta <= 1
  double xi;   // excess noise variance, xi >= 0

  Channel(double eta_, double xi_);
};

// Alice's per-quadrature encoding variance.  Both quadratures are modulated
// with the same variance, so a single number suffices.
struct Modulation {
  double v_a;  // > 0, shot-noise units

  explicit Modulation(double v_a_);
};

// The publicly announced magnitudes |S_A| (Alice's encoding) and |m_B|
// (Bob's homodyne outcome).  Every per-symbol bound is indexed by this pair.
struct AnnouncedPair {
  double abs_s;
  double abs_m;

  AnnouncedPair(double abs_s_, double abs_m_);
};

// Binary-channel capacity kernel: ½[(1+x)log₂(1+x) + (1−x)log₂(1−x)],
// the x = 1 endpoint taken in the limit sense.  Domain [0, 1].
double phi(double x);

// 1 − phi(1 − eps), evaluated without cancellation for small eps.  Used
// wherever two near-unity information quantities are subtracted.
double phi_deficit(double eps);

// Probability that the signs of S_A and m_B disagree given the announced
// magnitudes: 1/(1 + exp(2√η|S·m|/(1+ξ))).  In (0, 0.5]; never NaN (the
// large-argument tail underflows to 0 smoothly).
double error_probability(const Channel& ch, const AnnouncedPair& pt);

// Alice-Bob mutual information per announced pair: phi(1 − 2 P_e).
double mutual_info_ab(const Channel& ch, const AnnouncedPair& pt);

// Gaussian density of m_b given s_a: mean √η·s_a, variance 1 + ξ.
double conditional_density(const Channel& ch, double s_a, double m_b);

// Gaussian(s_a; 0, V_A) · conditional_density(ch, s_a, m_b).
double joint_density(const Channel& ch, const Modulation& mod, double s_a,
                     double m_b);

}  // namespace psqkd::info_theory
