#include "psqkd/info_theory.hpp"

#include <cmath>
#include <stdexcept>

namespace psqkd::info_theory {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double gaussian_density(double x, double mean, double variance) {
  const double d = x - mean;
  return std::exp(-d * d / (2.0 * variance)) / std::sqrt(kTwoPi * variance);
}

}  // namespace

Channel::Channel(double eta_, double xi_) : eta(eta_), xi(xi_) {
  if (!std::isfinite(eta) || !std::isfinite(xi) || eta <= 0.0 || eta > 1.0 ||
      xi < 0.0) {
    throw std::invalid_argument(
        "Channel: require 0 < eta <= 1 and xi >= 0 (finite)");
  }
}

Modulation::Modulation(double v_a_) : v_a(v_a_) {
  if (!std::isfinite(v_a) || v_a <= 0.0) {
    throw std::invalid_argument("Modulation: require v_a > 0 (finite)");
  }
}

AnnouncedPair::AnnouncedPair(double abs_s_, double abs_m_)
    : abs_s(abs_s_), abs_m(abs_m_) {
  if (!std::isfinite(abs_s) || !std::isfinite(abs_m) || abs_s < 0.0 ||
      abs_m < 0.0) {
    throw std::invalid_argument(
        "AnnouncedPair: magnitudes must be finite and non-negative");
  }
}

double phi(double x) {
  if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
    throw std::domain_error("phi: argument must lie in [0, 1]");
  }
  if (1.0 - x < 1e-15) return 1.0;
  if (x == 0.0) return 0.0;
  const double p = 1.0 + x;
  const double q = 1.0 - x;
  return 0.5 * (p * std::log2(p) + q * std::log2(q));
}

double phi_deficit(double eps) {
  if (!std::isfinite(eps) || eps < 0.0 || eps > 2.0) {
    throw std::domain_error("phi_deficit: argument must lie in [0, 2]");
  }
  if (eps == 0.0) return 0.0;
  // 1 - phi(1-eps) expanded so no term cancels:
  //   eps/2 - (eps/2) log2(eps) - ((2-eps)/2) log2(1 - eps/2)
  const double log2e = 1.4426950408889634073599246810019;
  // At eps = 2 the last term is 0 * log(0); take its (vanishing) limit.
  const double tail =
      eps == 2.0 ? 0.0 : 0.5 * (2.0 - eps) * std::log1p(-0.5 * eps) * log2e;
  return 0.5 * eps - 0.5 * eps * std::log2(eps) - tail;
}

double error_probability(const Channel& ch, const AnnouncedPair& pt) {
  // 1/(1+e^x) written as e^-x/(1+e^-x): x >= 0 here, so nothing overflows
  // and the far tail underflows to 0 instead of producing NaN.
  const double x =
      2.0 * std::sqrt(ch.eta) * pt.abs_s * pt.abs_m / (1.0 + ch.xi);
  const double e = std::exp(-x);
  return e / (1.0 + e);
}

double mutual_info_ab(const Channel& ch, const AnnouncedPair& pt) {
  return phi(1.0 - 2.0 * error_probability(ch, pt));
}

double conditional_density(const Channel& ch, double s_a, double m_b) {
  return gaussian_density(m_b, std::sqrt(ch.eta) * s_a, 1.0 + ch.xi);
}

double joint_density(const Channel& ch, const Modulation& mod, double s_a,
                     double m_b) {
  return gaussian_density(s_a, 0.0, mod.v_a) *
         conditional_density(ch, s_a, m_b);
}

}  // namespace psqkd::info_theory
