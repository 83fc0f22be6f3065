#include "psqkd/eve_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "psqkd/errors.hpp"
#include "psqkd/quadrature.hpp"

namespace psqkd::eve_model {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double sign_of_bit(int bit) { return bit == 0 ? 1.0 : -1.0; }

// Exponent of the closed-form overlap.  Derivation sketch: write both
// two-mode wavefunctions in position representation, rotate to the
// EPR-diagonal coordinates x2 = (u+v)/sqrt2, x3 = (u-v)/sqrt2, and carry out
// the resulting 2-D Gaussian integral.  With
//   t  = M /sqrt(eta) - A        (ket shift)
//   t' = M'/sqrt(eta) - A'       (bra shift)
//   D  = sqrt(1-eta) (M - M')
//   Q  = [[V, W], [W, k^2 + V]],  k^2 = (1-eta)/eta,  W = (v_s - 1/v_s)/2
// the integral collapses to exp(b^T Q^-1 b / 2 - c) / sqrt(2 pi (1+xi)),
// using det Q = (1+xi)/eta.
double overlap_exponent(const EveWavefunctionParams& p, BitPair i, BitPair j) {
  const double eta = p.channel.eta;
  const double s = p.point.abs_s;
  const double m = p.point.abs_m;

  const double a_bra = sign_of_bit(i.a) * s;
  const double m_bra = sign_of_bit(i.b) * m;
  const double a_ket = sign_of_bit(j.a) * s;
  const double m_ket = sign_of_bit(j.b) * m;

  const double sqrt_eta = std::sqrt(eta);
  const double k = std::sqrt((1.0 - eta) / eta);
  const double w = 0.5 * (p.v_s - 1.0 / p.v_s);
  const double v = 0.5 * (p.v_s + 1.0 / p.v_s);

  const double t_ket = m_ket / sqrt_eta - a_ket;
  const double t_bra = m_bra / sqrt_eta - a_bra;
  const double d = std::sqrt(1.0 - eta) * (m_ket - m_bra);

  const double b0 = 0.5 * w * d;
  const double b1 = 0.5 * (k * (t_ket + t_bra + k * d) + v * d);
  const double c =
      0.25 * ((t_bra + k * d) * (t_bra + k * d) + v * d * d + t_ket * t_ket);

  // Solve Q x = b for the 2x2 symmetric Q.
  const double q00 = v;
  const double q01 = w;
  const double q11 = k * k + v;
  const double det = q00 * q11 - q01 * q01;  // equals (1+xi)/eta
  const double x0 = (q11 * b0 - q01 * b1) / det;
  const double x1 = (q00 * b1 - q01 * b0) / det;

  return 0.5 * (b0 * x0 + b1 * x1) - c;
}

double log_norm_const(double xi) { return -0.5 * std::log(kTwoPi * (1.0 + xi)); }

// Normalized overlap exp(e_ij - (e_ii + e_jj)/2) with the result clamped
// into [0, 1] against last-ulp excursions.
double normalized_from_exponents(double e_ij, double e_ii, double e_jj) {
  const double e = e_ij - 0.5 * (e_ii + e_jj);
  return std::min(1.0, std::exp(std::min(e, 0.0)));
}

struct NormalizedGram {
  Eigen::Matrix4d g;
  double p_e;
};

NormalizedGram normalized_gram(const Channel& ch, const AnnouncedPair& pt) {
  const EveWavefunctionParams params(ch, pt);
  double e[4][4];
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      e[i][j] = overlap_exponent(
          params, BitPair(kBitPairOrder[i][0], kBitPairOrder[i][1]),
          BitPair(kBitPairOrder[j][0], kBitPairOrder[j][1]));
    }
  }
  NormalizedGram out;
  for (int i = 0; i < 4; ++i) {
    out.g(i, i) = 1.0;
    for (int j = i + 1; j < 4; ++j) {
      const double f = normalized_from_exponents(e[i][j], e[i][i], e[j][j]);
      out.g(i, j) = f;
      out.g(j, i) = f;
    }
  }
  out.p_e = info_theory::error_probability(ch, pt);
  return out;
}

// Entropy of a two-state sub-ensemble with weights (w0, w1) and normalized
// overlap f: eigenvalues in closed form, cheaper than the 4x4 path.
double entropy_two_state(double w0, double w1, double f) {
  const double c = std::sqrt(w0 * w1) * f;
  const double disc = std::sqrt((w0 - w1) * (w0 - w1) + 4.0 * c * c);
  const double l0 = 0.5 * (w0 + w1 + disc);
  const double l1 = 0.5 * (w0 + w1 - disc);
  double h = 0.0;
  for (double l : {l0, l1}) {
    if (l > 1e-15) h -= l * std::log2(l);
  }
  return h;
}

double holevo_from_gram(const NormalizedGram& ng, Target target) {
  const double pe = ng.p_e;
  Eigen::VectorXd w4(4);
  w4 << 0.5 * (1.0 - pe), 0.5 * pe, 0.5 * pe, 0.5 * (1.0 - pe);
  const double s_total = entropy_from_gram(w4, ng.g);

  // Sub-ensembles conditioned on the target bit, internal weights renormalized
  // to the equal prior 1/2 per bit value.
  int g0a, g0b, g1a, g1b;
  if (target == Target::alice) {
    g0a = 0; g0b = 1; g1a = 2; g1b = 3;  // split by Alice's bit
  } else {
    g0a = 0; g0b = 2; g1a = 1; g1b = 3;  // split by Bob's bit
  }
  const double s0 = entropy_two_state(1.0 - pe, pe, ng.g(g0a, g0b));
  const double s1 = entropy_two_state(pe, 1.0 - pe, ng.g(g1a, g1b));

  return std::max(0.0, s_total - 0.5 * (s0 + s1));
}

}  // namespace

BitPair::BitPair(int a_, int b_) : a(a_), b(b_) {
  if ((a != 0 && a != 1) || (b != 0 && b != 1)) {
    throw std::invalid_argument("BitPair: bits must be 0 or 1");
  }
}

EveWavefunctionParams::EveWavefunctionParams(const Channel& ch,
                                             const AnnouncedPair& pt)
    : channel(ch), point(pt), v_s(1.0) {
  if (ch.eta == 1.0) {
    if (ch.xi > 0.0) {
      throw model_domain_error(
          "entangling cloner undefined at eta = 1 with xi > 0 "
          "(no beamsplitter path to carry the excess noise)");
    }
    // eta = 1, xi = 0: the EPR arm degenerates to vacuum, v_s = 1.
    return;
  }
  const double v = (1.0 - ch.eta + ch.xi) / (1.0 - ch.eta);
  v_s = v + std::sqrt(v * v - 1.0);
}

double log_overlap(const EveWavefunctionParams& params, BitPair i, BitPair j) {
  return overlap_exponent(params, i, j) + log_norm_const(params.channel.xi);
}

double overlap(const EveWavefunctionParams& params, BitPair i, BitPair j) {
  return std::exp(log_overlap(params, i, j));
}

double oracle_overlap(const EveWavefunctionParams& params, BitPair i,
                      BitPair j, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("oracle_overlap: tol > 0");

  const double eta = params.channel.eta;
  const double s = params.point.abs_s;
  const double m = params.point.abs_m;
  const double v_s = params.v_s;
  const double sqrt_eta = std::sqrt(eta);
  const double c = std::sqrt((1.0 - eta) / (2.0 * eta));
  const double norm = 1.0 / std::pow(kTwoPi, 0.75);  // 1/(sqrt(eta)(2pi)^{3/4}) * sqrt(eta)

  // Position wavefunction of the ket |psi_b^a> over Eve's two retained
  // coordinates (e1, e2), transcribed from the two-mode construction.
  // Exponent and prefactor kept separate so the peak search below can work
  // on the (exactly quadratic) log-integrand without underflow.
  auto psi_expo = [&](int a, int b, double e1, double e2) {
    const double big_a = sign_of_bit(a) * s;
    const double big_m = sign_of_bit(b) * m;
    const double u = e1;
    const double v = -sqrt_eta * e2 - std::sqrt(1.0 - eta) * big_m;
    const double x2 = (u + v) / std::sqrt(2.0);
    const double x3 = (u - v) / std::sqrt(2.0);
    const double lin = big_m / sqrt_eta - big_a - c * (x3 - x2);
    return -0.25 * (lin * lin + v_s * x2 * x2 + x3 * x3 / v_s);
  };
  auto f = [&](double e1, double e2) {
    return norm * norm *
           std::exp(psi_expo(i.a, i.b, e1, e2) + psi_expo(j.a, j.b, e1, e2));
  };

  // The integrand is one anisotropic Gaussian whose center drifts far off
  // the origin as eta -> 1 and whose principal widths split as v_s grows.
  // A fixed axis-aligned box either clips the peak or puts sample nodes
  // coarser than the narrow width, so locate the peak and the principal
  // axes from finite differences of the quadratic exponent (h-exact) and
  // integrate in peak-centered principal coordinates instead.
  auto q = [&](double e1, double e2) {
    return -(psi_expo(i.a, i.b, e1, e2) + psi_expo(j.a, j.b, e1, e2));
  };
  const double h = 1.0;
  const double q0 = q(0.0, 0.0);
  const double gx = (q(h, 0.0) - q(-h, 0.0)) / (2.0 * h);
  const double gy = (q(0.0, h) - q(0.0, -h)) / (2.0 * h);
  const double hxx = (q(h, 0.0) - 2.0 * q0 + q(-h, 0.0)) / (h * h);
  const double hyy = (q(0.0, h) - 2.0 * q0 + q(0.0, -h)) / (h * h);
  const double hxy =
      (q(h, h) - q(h, -h) - q(-h, h) + q(-h, -h)) / (4.0 * h * h);
  const double det = hxx * hyy - hxy * hxy;  // > 0: normalizable Gaussian
  const double c1 = -(hyy * gx - hxy * gy) / det;
  const double c2 = -(hxx * gy - hxy * gx) / det;
  // Principal curvatures and axes of the 2x2 Hessian.
  const double half_tr = 0.5 * (hxx + hyy);
  const double split = std::sqrt(std::max(0.0, half_tr * half_tr - det));
  const double l1 = half_tr - split;
  const double l2 = half_tr + split;
  double r1x, r1y;  // axis of curvature l1
  if (std::abs(hxy) > 1e-14 * (std::abs(hxx) + std::abs(hyy))) {
    r1x = hxy;
    r1y = l1 - hxx;
    const double len = std::hypot(r1x, r1y);
    r1x /= len;
    r1y /= len;
  } else if (hxx <= hyy) {
    r1x = 1.0;
    r1y = 0.0;
  } else {
    r1x = 0.0;
    r1y = 1.0;
  }
  const double r2x = -r1y, r2y = r1x;  // rotation: unit Jacobian

  // f(center + u r1 + v r2) ~ exp(-l1 u^2 / 2 - l2 v^2 / 2); +-12 sigma per
  // axis truncates at exp(-72), far below the requested tolerance.
  const double lim_u = 12.0 / std::sqrt(l1);
  const double lim_v = 12.0 / std::sqrt(l2);
  auto f_rot = [&](double uu, double vv) {
    return f(c1 + uu * r1x + vv * r2x, c2 + uu * r1y + vv * r2y);
  };
  const auto res = quadrature::adaptive_simpson_2d(f_rot, -lim_u, lim_u,
                                                   -lim_v, lim_v, tol);
  if (!res.converged) {
    throw no_convergence("oracle_overlap: adaptive refinement stalled",
                         res.value);
  }
  return res.value;
}

GramMatrix4 gram_matrix(const Channel& ch, const AnnouncedPair& pt) {
  const EveWavefunctionParams params(ch, pt);
  GramMatrix4 g{};
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      const double val = overlap(
          params, BitPair(kBitPairOrder[i][0], kBitPairOrder[i][1]),
          BitPair(kBitPairOrder[j][0], kBitPairOrder[j][1]));
      g.entries[i][j] = val;
      g.entries[j][i] = val;
    }
  }
  return g;
}

NormalizedOverlaps normalized_overlaps(const Channel& ch,
                                       const AnnouncedPair& pt) {
  const EveWavefunctionParams params(ch, pt);
  const BitPair p00(0, 0), p01(0, 1), p10(1, 0), p11(1, 1);
  const double e00 = overlap_exponent(params, p00, p00);
  const double e11 = overlap_exponent(params, p11, p11);
  const double e01 = overlap_exponent(params, p01, p01);
  const double e10 = overlap_exponent(params, p10, p10);
  NormalizedOverlaps out;
  out.f_match = normalized_from_exponents(overlap_exponent(params, p00, p11),
                                          e00, e11);
  out.f_mismatch = normalized_from_exponents(
      overlap_exponent(params, p01, p10), e01, e10);
  return out;
}

std::optional<double> critical_line(const Channel& ch, double abs_s) {
  if (ch.xi == 0.0) return std::nullopt;
  const double r = (1.0 + ch.xi - ch.eta) /
                   ((1.0 + ch.xi) * (1.0 + ch.xi) - 1.0);
  return std::sqrt(r) * abs_s;
}

double levitin_bound(const Channel& ch, const AnnouncedPair& pt,
                     Target /*target*/) {
  // Both targets reduce to distinguishing the same two pure-state pairs:
  // the matched-bit pair with probability 1-P_e and the mismatched pair
  // with probability P_e.
  const auto f = normalized_overlaps(ch, pt);
  const double pe = info_theory::error_probability(ch, pt);
  const auto arg = [](double fv) {
    // sqrt(1-f^2) without cancellation near f = 1.
    return std::sqrt(std::max(0.0, (1.0 - fv) * (1.0 + fv)));
  };
  return (1.0 - pe) * info_theory::phi(arg(f.f_match)) +
         pe * info_theory::phi(arg(f.f_mismatch));
}

double holevo_bound(const Channel& ch, const AnnouncedPair& pt,
                    Target target) {
  return holevo_from_gram(normalized_gram(ch, pt), target);
}

EveInfo eve_info(const Channel& ch, const AnnouncedPair& pt, Attack attack) {
  if (attack == Attack::individual) {
    const double bits = levitin_bound(ch, pt, Target::alice);
    // Value is target-independent; report the side of the critical line to
    // document which target an optimal Eve would pick.
    Target used = Target::alice;
    if (const auto mc = critical_line(ch, pt.abs_s); mc && pt.abs_m > *mc) {
      used = Target::bob;
    }
    return {bits, used};
  }
  const NormalizedGram ng = normalized_gram(ch, pt);
  const double via_alice = holevo_from_gram(ng, Target::alice);
  const double via_bob = holevo_from_gram(ng, Target::bob);
  if (via_bob > via_alice) return {via_bob, Target::bob};
  return {via_alice, Target::alice};
}

double entropy_from_gram(const Eigen::VectorXd& weights,
                         const Eigen::MatrixXd& gram) {
  const auto n = weights.size();
  if (gram.rows() != n || gram.cols() != n) {
    throw std::invalid_argument("entropy_from_gram: dimension mismatch");
  }
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weights[i] < 0.0) {
      throw std::invalid_argument("entropy_from_gram: negative weight");
    }
    wsum += weights[i];
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("entropy_from_gram: weights must sum to 1");
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = std::sqrt(weights[i] * weights[j]) * gram(i, j);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double l = solver.eigenvalues()[i];
    if (l < -1e-9) {
      throw std::runtime_error(
          "entropy_from_gram: eigenvalue below -1e-9, numerical failure");
    }
    l = std::clamp(l, 0.0, 1.0);
    if (l > 1e-15) h -= l * std::log2(l);
  }
  return h;
}

}  // namespace psqkd::eve_model
