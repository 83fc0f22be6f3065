#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psqkd/eve_model.hpp"
#include "psqkd/info_theory.hpp"

namespace psqkd::simulator {

using eve_model::Attack;
using info_theory::Channel;
using info_theory::Modulation;

// Alice's two-quadrature encoding for one channel use.
struct RawRecord {
  std::uint64_t index;
  double s_x;
  double s_p;
};

// Both quadratures after the channel; Bob's basis choice happens at sift.
struct TransmittedRecord {
  std::uint64_t index;
  double s_x, s_p;
  double m_x, m_p;
};

// One sifted symbol: the measured quadrature's encoding and outcome plus the
// sign bits.  Bit convention: 0 for positive values, 1 for negative,
// matching the state-labeling convention of the eavesdropper model.
struct SiftedRecord {
  std::uint64_t index;
  char quadrature;  // 'X' or 'P'
  double s_a;
  double m_b;
  int bit_a;
  int bit_b;
};

struct ChannelEstimate {
  double eta_hat;
  double sigma_eta;
  double xi_hat;
  double sigma_xi;
  std::size_t n_used;
  double gaussianity_stat;  // excess kurtosis of regression residuals
  bool xi_clamped;          // raw estimate was negative and clamped to 0
};

struct EmpiricalRate {
  double delta_i_exp;  // mean over all records of max(0, delta_i), bits
  double std_error;    // sample sd of that summand / sqrt(n_total)
  std::size_t n_kept;
  std::size_t n_total;
  // Diagnostics from the aggregate error count over kept records, as opposed
  // to the per-sample Shannon weights above.
  double aggregate_error_rate;
  double aggregate_i_ab;
};

// Deterministic for a fixed seed: every draw is indexed, not sequenced, so
// worker count cannot reorder anything.
std::vector<RawRecord> generate(const Modulation& mod, std::size_t n,
                                std::uint64_t seed);

std::vector<TransmittedRecord> transmit(const Channel& ch,
                                        const std::vector<RawRecord>& records,
                                        std::uint64_t seed);

struct SiftResult {
  std::vector<SiftedRecord> records;
  std::size_t n_dropped_zero;  // exact-zero encodings/outcomes (sign undefined)
};
SiftResult sift(const std::vector<TransmittedRecord>& pairs,
                std::uint64_t seed);

// Through-origin regression of m on s: slope^2 estimates eta, residual
// variance minus 1 estimates xi.  Requires at least 100 records.
ChannelEstimate estimate_channel(const std::vector<SiftedRecord>& records);

// Clamp an estimate into the Channel domain (finite samples can put eta_hat
// slightly above 1 or xi_hat below 0).
Channel to_channel(const ChannelEstimate& est);

EmpiricalRate empirical_rate(const std::vector<SiftedRecord>& records,
                             const Channel& ch, Attack attack);
EmpiricalRate empirical_rate_serial(const std::vector<SiftedRecord>& records,
                                    const Channel& ch, Attack attack);
EmpiricalRate empirical_rate(const std::vector<SiftedRecord>& records,
                             const ChannelEstimate& est, Attack attack);

struct ExperimentResult {
  ChannelEstimate estimate;
  EmpiricalRate rate;  // over the key records, using the estimated channel
  std::size_t n_total;
  std::size_t n_key;
  std::size_t n_estimation;
  std::size_t n_dropped_zero;
  std::string dataset_path;     // empty when not persisted
  std::string estimation_path;
  std::string sidecar_path;
};

// Full pipeline: generate -> transmit -> sift -> round values to the CSV's
// 12 significant digits -> split off a 10% estimation subset -> estimate the
// channel -> empirical rate on the remaining key records.  When `out_stem`
// is non-empty, writes <stem>.csv (key records), <stem>_estimation.csv and
// <stem>.json; reruns with the same seed are byte-identical.
ExperimentResult run_experiment(const Channel& ch, const Modulation& mod,
                                std::size_t n, std::uint64_t seed,
                                Attack attack, const std::string& out_stem = "",
                                const std::string& rate_convention = "sifted");

}  // namespace psqkd::simulator
