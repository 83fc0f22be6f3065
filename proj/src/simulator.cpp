#include "psqkd/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

#include "psqkd/dataset_io.hpp"
#include "psqkd/keyrate_engine.hpp"
#include "psqkd/rng.hpp"

namespace psqkd::simulator {

namespace {

// Stream purposes under one run seed.  Keeping them distinct makes every
// draw in the pipeline independent of every other by construction.
constexpr std::uint32_t kPurposeGenerate = 0;
constexpr std::uint32_t kPurposeTransmit = 1;
constexpr std::uint32_t kPurposeSiftBasis = 2;
constexpr std::uint32_t kPurposeEstimationSubset = 3;

const char* attack_name(Attack attack) {
  return attack == Attack::individual ? "individual" : "collective";
}

}  // namespace

std::vector<RawRecord> generate(const Modulation& mod, std::size_t n,
                                std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("generate: n must be >= 1");
  }
  std::vector<RawRecord> out(n);
  const rng::Stream stream(seed, kPurposeGenerate);
  const double sd = std::sqrt(mod.v_a);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto [z_x, z_p] = stream.normal_pair(static_cast<std::uint64_t>(i));
    out[i] = RawRecord{static_cast<std::uint64_t>(i), sd * z_x, sd * z_p};
  }
  return out;
}

std::vector<TransmittedRecord> transmit(const Channel& ch,
                                        const std::vector<RawRecord>& records,
                                        std::uint64_t seed) {
  std::vector<TransmittedRecord> out(records.size());
  const rng::Stream stream(seed, kPurposeTransmit);
  const double root_eta = std::sqrt(ch.eta);
  const double noise_sd = std::sqrt(1.0 + ch.xi);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(records.size()); ++i) {
    const RawRecord& r = records[i];
    const auto [n_x, n_p] = stream.normal_pair(r.index);
    out[i] = TransmittedRecord{r.index, r.s_x, r.s_p,
                               root_eta * r.s_x + noise_sd * n_x,
                               root_eta * r.s_p + noise_sd * n_p};
  }
  return out;
}

SiftResult sift(const std::vector<TransmittedRecord>& pairs,
                std::uint64_t seed) {
  SiftResult res;
  res.records.reserve(pairs.size());
  res.n_dropped_zero = 0;
  const rng::Stream stream(seed, kPurposeSiftBasis);
  for (const TransmittedRecord& p : pairs) {
    const bool measure_x = stream.uniform(p.index) < 0.5;
    const double s = measure_x ? p.s_x : p.s_p;
    const double m = measure_x ? p.m_x : p.m_p;
    if (s == 0.0 || m == 0.0) {
      // Sign bit undefined; essentially impossible but representable.
      ++res.n_dropped_zero;
      continue;
    }
    res.records.push_back(SiftedRecord{p.index, measure_x ? 'X' : 'P', s, m,
                                       s > 0.0 ? 0 : 1, m > 0.0 ? 0 : 1});
  }
  return res;
}

ChannelEstimate estimate_channel(const std::vector<SiftedRecord>& records) {
  const std::size_t n = records.size();
  if (n < 100) {
    throw std::invalid_argument(
        "estimate_channel: need at least 100 records, got " +
        std::to_string(n));
  }
  double sum_ss = 0.0, sum_sm = 0.0;
  for (const SiftedRecord& r : records) {
    sum_ss += r.s_a * r.s_a;
    sum_sm += r.s_a * r.m_b;
  }
  if (sum_ss <= 0.0) {
    throw std::invalid_argument("estimate_channel: degenerate encodings");
  }
  const double beta = sum_sm / sum_ss;  // estimates sqrt(eta)

  double sum_r = 0.0;
  for (const SiftedRecord& r : records) {
    sum_r += r.m_b - beta * r.s_a;
  }
  const double mean_r = sum_r / static_cast<double>(n);
  double rss = 0.0, m2 = 0.0, m4 = 0.0;
  for (const SiftedRecord& r : records) {
    const double resid = r.m_b - beta * r.s_a;
    rss += resid * resid;
    const double c = resid - mean_r;
    const double c2 = c * c;
    m2 += c2;
    m4 += c2 * c2;
  }
  const double dof = static_cast<double>(n - 1);
  const double sigma2 = rss / dof;  // estimates 1 + xi

  ChannelEstimate est{};
  est.eta_hat = beta * beta;
  est.sigma_eta = 2.0 * std::fabs(beta) * std::sqrt(sigma2 / sum_ss);
  const double xi_raw = sigma2 - 1.0;
  est.xi_clamped = xi_raw < 0.0;
  est.xi_hat = est.xi_clamped ? 0.0 : xi_raw;
  est.sigma_xi = sigma2 * std::sqrt(2.0 / dof);
  est.n_used = n;
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  est.gaussianity_stat = m4 / (m2 * m2) - 3.0;
  return est;
}

Channel to_channel(const ChannelEstimate& est) {
  const double eta = std::min(std::max(est.eta_hat, 1e-12), 1.0);
  const double xi = std::max(est.xi_hat, 0.0);
  return Channel(eta, xi);
}

namespace {

EmpiricalRate empirical_rate_impl(const std::vector<SiftedRecord>& records,
                                  const Channel& ch, Attack attack,
                                  bool parallel) {
  eve_model::require_cloner_domain(ch);
  const std::size_t n = records.size();
  std::vector<double> vals(n);
  std::vector<unsigned char> kept(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const SiftedRecord& r = records[i];
    const info_theory::AnnouncedPair pt(std::fabs(r.s_a), std::fabs(r.m_b));
    const double d = keyrate_engine::delta_i_value(ch, pt, attack);
    vals[i] = d > 0.0 ? d : 0.0;
    kept[i] = d > 0.0 ? 1 : 0;
  }

  // Ordered serial reduction: the sums below are what make the result
  // independent of the worker count above.
  EmpiricalRate rate{};
  rate.n_total = n;
  double sum = 0.0;
  std::size_t n_err = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += vals[i];
    if (kept[i]) {
      ++rate.n_kept;
      if (records[i].bit_a != records[i].bit_b) ++n_err;
    }
  }
  const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
  rate.delta_i_exp = mean;
  if (n >= 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = vals[i] - mean;
      ss += d * d;
    }
    rate.std_error = std::sqrt(ss / static_cast<double>(n - 1)) /
                     std::sqrt(static_cast<double>(n));
  }
  if (rate.n_kept > 0) {
    rate.aggregate_error_rate =
        static_cast<double>(n_err) / static_cast<double>(rate.n_kept);
    rate.aggregate_i_ab =
        info_theory::phi(std::max(0.0, 1.0 - 2.0 * rate.aggregate_error_rate));
  }
  return rate;
}

}  // namespace

EmpiricalRate empirical_rate(const std::vector<SiftedRecord>& records,
                             const Channel& ch, Attack attack) {
  return empirical_rate_impl(records, ch, attack, true);
}

EmpiricalRate empirical_rate_serial(const std::vector<SiftedRecord>& records,
                                    const Channel& ch, Attack attack) {
  return empirical_rate_impl(records, ch, attack, false);
}

EmpiricalRate empirical_rate(const std::vector<SiftedRecord>& records,
                             const ChannelEstimate& est, Attack attack) {
  return empirical_rate_impl(records, to_channel(est), attack, true);
}

ExperimentResult run_experiment(const Channel& ch, const Modulation& mod,
                                std::size_t n, std::uint64_t seed,
                                Attack attack, const std::string& out_stem,
                                const std::string& rate_convention) {
  if (rate_convention != "sifted" && rate_convention != "channel-use") {
    throw std::invalid_argument("run_experiment: rate_convention must be "
                                "'sifted' or 'channel-use'");
  }
  const auto raw = generate(mod, n, seed);
  const auto pairs = transmit(ch, raw, seed);
  SiftResult sifted = sift(pairs, seed);
  auto& recs = sifted.records;

  // Freeze values to the file format's 12 significant digits up front: the
  // persisted text and every number used below are then the same doubles,
  // and re-running the rate from the CSV is exact.
  for (SiftedRecord& r : recs) {
    r.s_a = dataset_io::round_sig(r.s_a);
    r.m_b = dataset_io::round_sig(r.m_b);
  }

  const std::size_t n_sift = recs.size();
  const std::size_t k = n_sift / 10;
  std::vector<std::uint32_t> pos(n_sift);
  std::iota(pos.begin(), pos.end(), 0u);
  const rng::Stream pick(seed, kPurposeEstimationSubset);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(pick.uniform_below(i, n_sift - i));
    std::swap(pos[i], pos[j]);
  }
  std::vector<unsigned char> is_est(n_sift, 0);
  for (std::size_t i = 0; i < k; ++i) is_est[pos[i]] = 1;

  std::vector<SiftedRecord> key_recs, est_recs;
  key_recs.reserve(n_sift - k);
  est_recs.reserve(k);
  for (std::size_t i = 0; i < n_sift; ++i) {
    (is_est[i] ? est_recs : key_recs).push_back(recs[i]);
  }

  ExperimentResult result{};
  result.estimate = estimate_channel(est_recs);
  result.rate = empirical_rate(key_recs, result.estimate, attack);
  result.n_total = n;
  result.n_key = key_recs.size();
  result.n_estimation = est_recs.size();
  result.n_dropped_zero = sifted.n_dropped_zero;

  if (!out_stem.empty()) {
    using dataset_io::format_sig;
    dataset_io::MetadataList meta = {
        {"generator", std::string("psqkd ") + PSQKD_VERSION},
        {"seed", std::to_string(seed)},
        {"eta", format_sig(ch.eta, 17)},
        {"xi", format_sig(ch.xi, 17)},
        {"v_a", format_sig(mod.v_a, 17)},
        {"n", std::to_string(n)},
        {"attack", attack_name(attack)},
        {"rate_convention", rate_convention},
    };
    auto key_meta = meta;
    key_meta.emplace_back("role", "key");
    result.dataset_path = out_stem + ".csv";
    dataset_io::write_sifted_csv(result.dataset_path, key_recs, key_meta);

    auto est_meta = meta;
    est_meta.emplace_back("role", "estimation");
    result.estimation_path = out_stem + "_estimation.csv";
    dataset_io::write_sifted_csv(result.estimation_path, est_recs, est_meta);

    dataset_io::json j;
    j["seed"] = seed;
    j["eta"] = ch.eta;
    j["xi"] = ch.xi;
    j["v_a"] = mod.v_a;
    j["n"] = n;
    j["eta_hat"] = result.estimate.eta_hat;
    j["xi_hat"] = result.estimate.xi_hat;
    j["delta_i_exp"] = result.rate.delta_i_exp;
    j["std_error"] = result.rate.std_error;
    j["rate_convention"] = rate_convention;
    j["sigma_eta"] = result.estimate.sigma_eta;
    j["sigma_xi"] = result.estimate.sigma_xi;
    j["gaussianity_stat"] = result.estimate.gaussianity_stat;
    j["xi_clamped"] = result.estimate.xi_clamped;
    j["attack"] = attack_name(attack);
    j["n_total"] = n;
    j["n_key"] = result.n_key;
    j["n_estimation"] = result.n_estimation;
    j["n_kept"] = result.rate.n_kept;
    j["n_dropped_zero"] = result.n_dropped_zero;
    j["aggregate_error_rate"] = result.rate.aggregate_error_rate;
    j["aggregate_i_ab"] = result.rate.aggregate_i_ab;
    j["tool_version"] = PSQKD_VERSION;
    result.sidecar_path = out_stem + ".json";
    dataset_io::write_json_file(result.sidecar_path, j);
  }
  return result;
}

}  // namespace psqkd::simulator
