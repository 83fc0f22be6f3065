#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>

#include "psqkd/info_theory.hpp"

namespace psqkd::eve_model {

using info_theory::AnnouncedPair;
using info_theory::Channel;

enum class Target { alice, bob };
enum class Attack { individual, collective };

// Alice's encoded bit a and Bob's measured bit b, each 0 or 1.
struct BitPair {
  int a;
  int b;

  BitPair(int a_, int b_);
};

// Fixed index order used throughout: (a,b) = (0,0), (0,1), (1,0), (1,1).
inline constexpr std::array<std::array<int, 2>, 4> kBitPairOrder = {
    {{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

// 4x4 symmetric matrix of unnormalized overlaps <psi_{b_i}^{a_i}|psi_{b_j}^{a_j}>
// among Eve's four conditional pure states, in kBitPairOrder.
struct GramMatrix4 {
  std::array<std::array<double, 4>, 4> entries;

  double at(int i, int j) const { return entries[i][j]; }
};

// Parameters of Eve's two-mode conditional wavefunctions.  The EPR arm's
// squeezing v_s solves (v_s + 1/v_s)/2 = (1 - eta + xi)/(1 - eta); the root
// >= 1 is taken (the other root relabels the same state).  eta = 1 is only
// meaningful for xi = 0 (v_s -> 1, Eve keeps nothing but vacuum).
struct EveWavefunctionParams {
  Channel channel;
  AnnouncedPair point;
  double v_s;

  EveWavefunctionParams(const Channel& ch, const AnnouncedPair& pt);
};

// Entry guard for the batch kernels: constructing the cloner throws
// model_domain_error at eta = 1 with xi > 0, and that must happen before
// any OpenMP region is entered — an exception cannot cross a parallel-for
// boundary, it just terminates the process.
inline void require_cloner_domain(const Channel& ch) {
  EveWavefunctionParams probe(ch, AnnouncedPair(1.0, 1.0));
  (void)probe;
}

// Closed-form unnormalized overlap, from analytic Gaussian integration of
// the two-mode wavefunctions over both of Eve's coordinates.
double overlap(const EveWavefunctionParams& params, BitPair i, BitPair j);

// log of overlap(), kept in exponent form so ratios of overlaps stay finite
// far outside the double range of the overlaps themselves.
double log_overlap(const EveWavefunctionParams& params, BitPair i, BitPair j);

// Same quantity by direct 2-D adaptive quadrature of the position-space
// wavefunction product.  Independent of the closed-form derivation; throws
// psqkd::no_convergence if refinement stalls before tol.
double oracle_overlap(const EveWavefunctionParams& params, BitPair i,
                      BitPair j, double tol);

GramMatrix4 gram_matrix(const Channel& ch, const AnnouncedPair& pt);

// Normalized cross overlaps used by both bounds: f_match between the
// equal-bit pair of states, f_mismatch between the differing-bit pair.
// Computed in log space, so they underflow gracefully instead of dividing
// two denormals.
struct NormalizedOverlaps {
  double f_match;     // <psi^0_0|psi^1_1> normalized
  double f_mismatch;  // <psi^0_1|psi^1_0> normalized
};
NormalizedOverlaps normalized_overlaps(const Channel& ch,
                                       const AnnouncedPair& pt);

// |m_B| at which all four cross-overlaps coincide and Eve's information
// about Alice equals her information about Bob.  No finite value for xi = 0
// (the line recedes to infinity), hence the optional.
std::optional<double> critical_line(const Channel& ch, double abs_s);

// Accessible-information bound for an individual attack: Eve distinguishes
// two pure states per announced match/mismatch side information,
// (1-P_e)·phi(sqrt(1-f1^2)) + P_e·phi(sqrt(1-f2^2)).  The two targets reduce
// to the same state pairs, so the value is target-independent; the parameter
// is kept for symmetry with holevo_bound.
double levitin_bound(const Channel& ch, const AnnouncedPair& pt,
                     Target target);

// Holevo bound for a collective attack on the chosen target bit: the
// four-state ensemble is split into two equal-prior sub-ensembles by the
// target bit, and chi = S(total) - S(sub0)/2 - S(sub1)/2, entropies taken
// from weighted-Gram spectra.
double holevo_bound(const Channel& ch, const AnnouncedPair& pt, Target target);

struct EveInfo {
  double bits;
  Target target_used;
};

// Eve's bound maximized over the target choice (Alice or Bob).
EveInfo eve_info(const Channel& ch, const AnnouncedPair& pt, Attack attack);

// -sum lambda log2 lambda over the spectrum of M_ij = sqrt(w_i w_j) g_ij,
// where g has unit diagonal and the weights sum to 1.  Eigenvalues within
// 1e-9 of [0,1] are clipped; anything further out throws.
double entropy_from_gram(const Eigen::VectorXd& weights,
                         const Eigen::MatrixXd& gram);

}  // namespace psqkd::eve_model
