// psqkd: key-rate analysis and protocol simulation for post-selected
// continuous-variable QKD over a Gaussian loss/excess-noise channel.
//
// Exit codes: 0 success, 2 usage error, 3 model-domain error,
// 4 numerical non-convergence.

#include <omp.h>

#include <boost/program_options.hpp>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psqkd/dataset_io.hpp"
#include "psqkd/errors.hpp"
#include "psqkd/eve_model.hpp"
#include "psqkd/info_theory.hpp"
#include "psqkd/keyrate_engine.hpp"
#include "psqkd/simulator.hpp"

namespace po = boost::program_options;

using psqkd::dataset_io::format_sig;
using psqkd::dataset_io::Table;
using psqkd::eve_model::Attack;
using psqkd::info_theory::Channel;
using psqkd::info_theory::Modulation;

namespace {

constexpr const char* kUsage =
    "usage: psqkd <command> [options]\n"
    "\n"
    "commands:\n"
    "  rate       post-selected key rate at one channel point\n"
    "  region     delta-I map over the announced (|s|,|m|) plane\n"
    "  threshold  noise threshold xi0 and separability bound over eta\n"
    "  sweep      key rate vs excess noise at fixed eta\n"
    "  contour    key rate over an (eta, xi) grid\n"
    "  simulate   Monte Carlo protocol run with channel estimation\n"
    "  estimate   channel estimation on an existing CSV dataset\n"
    "\n"
    "run `psqkd <command> --help` for the command's options.\n";

struct CommonArgs {
  std::string out;
  std::string format = "csv";
  std::string rate_convention = "sifted";
  int threads = 0;
};

std::string convention_label(const std::string& rc) {
  return rc == "channel-use" ? "bits per channel use" : "bits per sifted symbol";
}

Attack parse_single_attack(const std::string& s) {
  if (s == "individual") return Attack::individual;
  if (s == "collective") return Attack::collective;
  throw std::invalid_argument("attack must be 'individual' or 'collective'");
}

std::vector<Attack> parse_attack_list(const std::string& s) {
  if (s == "both") return {Attack::individual, Attack::collective};
  return {parse_single_attack(s)};
}

const char* attack_label(Attack a) {
  return a == Attack::individual ? "individual" : "collective";
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) {
    throw std::invalid_argument("grid needs at least 2 points and max > min");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return g;
}

// Command line wins over config file: values stored first take precedence.
po::variables_map parse_args(const std::vector<std::string>& args,
                             const po::options_description& desc) {
  po::variables_map vm;
  po::store(po::command_line_parser(args).options(desc).run(), vm);
  // Help short-circuits before notify(), or required options would reject
  // `<command> --help` on its own.
  if (vm.count("help")) return vm;
  if (vm.count("config")) {
    std::ifstream cfg(vm["config"].as<std::string>());
    if (!cfg) {
      throw std::invalid_argument("cannot open config file " +
                                  vm["config"].as<std::string>());
    }
    po::store(po::parse_config_file(cfg, desc), vm);
  }
  po::notify(vm);
  return vm;
}

void add_common(po::options_description& desc) {
  desc.add_options()
      ("help,h", "show this help")
      ("config", po::value<std::string>(), "config file with key = value defaults")
      ("out", po::value<std::string>()->default_value(""),
       "output file path (default: stdout)")
      ("format", po::value<std::string>()->default_value("csv"),
       "output format: csv|json")
      ("rate-convention", po::value<std::string>()->default_value("sifted"),
       "rate unit label: sifted|channel-use")
      ("threads", po::value<int>()->default_value(0),
       "worker threads (0 = library default; results identical for any N)");
}

CommonArgs apply_common(const po::variables_map& vm) {
  CommonArgs c;
  c.out = vm["out"].as<std::string>();
  c.format = vm["format"].as<std::string>();
  if (c.format != "csv" && c.format != "json") {
    throw std::invalid_argument("format must be 'csv' or 'json'");
  }
  c.rate_convention = vm["rate-convention"].as<std::string>();
  if (c.rate_convention != "sifted" && c.rate_convention != "channel-use") {
    throw std::invalid_argument(
        "rate-convention must be 'sifted' or 'channel-use'");
  }
  c.threads = vm["threads"].as<int>();
  if (c.threads < 0) {
    throw std::invalid_argument("threads must be >= 0");
  }
  if (c.threads > 0) omp_set_num_threads(c.threads);
  return c;
}

void emit_table(const Table& table, const CommonArgs& c) {
  if (c.format == "json") {
    const auto j = psqkd::dataset_io::table_to_json(table);
    if (c.out.empty()) {
      std::cout << j.dump(2) << "\n";
    } else {
      psqkd::dataset_io::write_json_file(c.out, j);
      std::cout << "wrote " << c.out << "\n";
    }
  } else {
    if (c.out.empty()) {
      psqkd::dataset_io::write_table_csv(std::cout, table);
    } else {
      psqkd::dataset_io::write_table_csv(c.out, table);
      std::cout << "wrote " << c.out << "\n";
    }
  }
}

psqkd::dataset_io::MetadataList base_metadata(const std::string& command,
                                              const CommonArgs& c) {
  return {{"tool", std::string("psqkd ") + PSQKD_VERSION},
          {"command", command},
          {"rate_unit", convention_label(c.rate_convention)}};
}

int run_rate(const std::vector<std::string>& args) {
  po::options_description desc("rate options");
  add_common(desc);
  desc.add_options()
      ("eta", po::value<double>()->required(), "channel transmission, (0,1]")
      ("xi", po::value<double>()->required(), "excess noise, >= 0")
      ("va", po::value<double>(), "modulation variance V_A")
      ("optimize-va", po::bool_switch(), "maximize the rate over V_A")
      ("attack", po::value<std::string>()->default_value("individual"),
       "individual|collective|both")
      ("tol", po::value<double>()->default_value(1e-6),
       "integration tolerance, bits");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  const bool optimize = vm["optimize-va"].as<bool>();
  if (optimize && vm.count("va")) {
    throw std::invalid_argument("--va and --optimize-va are exclusive");
  }
  const Channel ch(vm["eta"].as<double>(), vm["xi"].as<double>());
  const double tol = vm["tol"].as<double>();
  const auto attacks = parse_attack_list(vm["attack"].as<std::string>());
  const double xi0 = psqkd::keyrate_engine::noise_threshold(ch.eta);

  Table table;
  table.metadata = base_metadata("rate", common);
  table.metadata.emplace_back("eta", format_sig(ch.eta, 17));
  table.metadata.emplace_back("xi", format_sig(ch.xi, 17));
  table.metadata.emplace_back("xi_threshold", format_sig(xi0, 17));
  table.metadata.emplace_back("attack_codes", "0=individual 1=collective");
  table.columns = {"attack", "v_a_used", "rate", "integration_error"};

  bool all_converged = true;
  for (Attack attack : attacks) {
    double va_used = 0.0, rate = 0.0, err = 0.0;
    if (ch.xi >= xi0) {
      std::cout << attack_label(attack)
                << ": rate = 0 (insecure: xi >= threshold, xi0 = "
                << format_sig(xi0, 6) << ")\n";
    } else {
      psqkd::keyrate_engine::SecureRateResult r;
      if (optimize) {
        const auto opt =
            psqkd::keyrate_engine::optimize_modulation(ch, attack, tol);
        r = opt.rate;
        if (opt.boundary_pinned) {
          std::cerr << "note: V_A optimum pinned to the search boundary\n";
        }
      } else {
        const Modulation mod(vm.count("va") ? vm["va"].as<double>() : 1.0);
        r = psqkd::keyrate_engine::secure_rate(ch, mod, attack, tol);
      }
      all_converged = all_converged && r.converged;
      va_used = r.v_a_used;
      rate = r.delta_i_total;
      err = r.integration_estimate_error;
      std::cout << attack_label(attack) << ": rate = " << format_sig(rate, 10)
                << " " << convention_label(common.rate_convention)
                << " (V_A = " << format_sig(va_used, 6)
                << ", integration error " << format_sig(err, 3) << ")\n";
    }
    table.rows.push_back(
        {attack == Attack::individual ? 0.0 : 1.0, va_used, rate, err});
  }
  if (!common.out.empty() || common.format == "json") emit_table(table, common);
  if (!all_converged) {
    std::cerr << "error: integration did not reach the requested tolerance\n";
    return 4;
  }
  return 0;
}

int run_region(const std::vector<std::string>& args) {
  po::options_description desc("region options");
  add_common(desc);
  desc.add_options()
      ("eta", po::value<double>()->required(), "channel transmission, (0,1]")
      ("xi", po::value<double>()->required(), "excess noise, >= 0")
      ("attack", po::value<std::string>()->default_value("individual"),
       "individual|collective")
      ("s-max", po::value<double>()->default_value(10.0), "|s| grid maximum")
      ("m-max", po::value<double>()->default_value(10.0), "|m| grid maximum")
      ("ns", po::value<std::size_t>()->default_value(201), "|s| grid points")
      ("nm", po::value<std::size_t>()->default_value(201), "|m| grid points");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  const Channel ch(vm["eta"].as<double>(), vm["xi"].as<double>());
  const Attack attack = parse_single_attack(vm["attack"].as<std::string>());
  const auto map = psqkd::keyrate_engine::region_map(
      ch, attack, vm["s-max"].as<double>(), vm["m-max"].as<double>(),
      vm["ns"].as<std::size_t>(), vm["nm"].as<std::size_t>());

  std::optional<std::pair<double, double>> slopes;
  if (ch.xi > 0.0) slopes = psqkd::keyrate_engine::asymptote_slopes(ch);
  const double nan = std::nan("");

  Table table;
  table.metadata = base_metadata("region", common);
  table.metadata.emplace_back("eta", format_sig(ch.eta, 17));
  table.metadata.emplace_back("xi", format_sig(ch.xi, 17));
  table.metadata.emplace_back("attack", attack_label(attack));
  if (slopes) {
    table.metadata.emplace_back("asymptote_slope_minus",
                                format_sig(slopes->first, 17));
    table.metadata.emplace_back("asymptote_slope_plus",
                                format_sig(slopes->second, 17));
  }
  table.columns = {"s", "m", "delta_i", "kept", "m_crit", "m_minus", "m_plus"};
  table.rows.reserve(map.s_grid.size() * map.m_grid.size());
  for (std::size_t is = 0; is < map.s_grid.size(); ++is) {
    const double s = map.s_grid[is];
    const auto crit = psqkd::eve_model::critical_line(ch, s);
    const double m_crit = crit ? *crit : nan;
    const double m_minus = slopes ? slopes->first * s : nan;
    const double m_plus = slopes ? slopes->second * s : nan;
    for (std::size_t im = 0; im < map.m_grid.size(); ++im) {
      table.rows.push_back({s, map.m_grid[im], map.value_at(is, im),
                            map.kept_at(is, im) ? 1.0 : 0.0, m_crit, m_minus,
                            m_plus});
    }
  }
  emit_table(table, common);
  return 0;
}

int run_threshold(const std::vector<std::string>& args) {
  po::options_description desc("threshold options");
  add_common(desc);
  desc.add_options()
      ("eta-min", po::value<double>()->default_value(0.01), "grid minimum")
      ("eta-max", po::value<double>()->default_value(0.99), "grid maximum")
      ("steps", po::value<std::size_t>()->default_value(99), "grid points");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  const auto etas = linspace(vm["eta-min"].as<double>(),
                             vm["eta-max"].as<double>(),
                             vm["steps"].as<std::size_t>());
  Table table;
  table.metadata = base_metadata("threshold", common);
  table.columns = {"eta", "xi_threshold", "separability_bound"};
  for (double eta : etas) {
    table.rows.push_back({eta, psqkd::keyrate_engine::noise_threshold(eta),
                          psqkd::keyrate_engine::separability_bound(eta)});
  }
  emit_table(table, common);
  return 0;
}

int run_sweep(const std::vector<std::string>& args) {
  po::options_description desc("sweep options");
  add_common(desc);
  desc.add_options()
      ("eta", po::value<double>()->required(), "channel transmission, (0,1]")
      ("xi-min", po::value<double>()->default_value(0.0), "grid minimum")
      ("xi-max", po::value<double>(), "grid maximum (default: 2*eta)")
      ("steps", po::value<std::size_t>()->default_value(25), "grid points")
      ("va", po::value<double>(), "fixed modulation variance V_A")
      ("optimize-va", po::bool_switch(),
       "per-point V_A from the individual-attack optimum (default)")
      ("attack", po::value<std::string>()->default_value("both"),
       "individual|collective|both");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  if (vm["optimize-va"].as<bool>() && vm.count("va")) {
    throw std::invalid_argument("--va and --optimize-va are exclusive");
  }
  const double eta = vm["eta"].as<double>();
  const double xi0 = psqkd::keyrate_engine::noise_threshold(eta);
  const double xi_max = vm.count("xi-max")
                            ? vm["xi-max"].as<double>()
                            : psqkd::keyrate_engine::separability_bound(eta);
  const auto xis = linspace(vm["xi-min"].as<double>(), xi_max,
                            vm["steps"].as<std::size_t>());
  const auto attacks = parse_attack_list(vm["attack"].as<std::string>());
  const auto policy = vm.count("va")
                          ? psqkd::keyrate_engine::VaPolicy::fixed
                          : psqkd::keyrate_engine::VaPolicy::optimize_individual;
  const double fixed_va = vm.count("va") ? vm["va"].as<double>() : 1.0;

  Table table;
  table.metadata = base_metadata("sweep", common);
  table.metadata.emplace_back("eta", format_sig(eta, 17));
  table.metadata.emplace_back("xi_threshold", format_sig(xi0, 17));
  table.metadata.emplace_back(
      "va_policy", vm.count("va") ? "fixed" : "optimized (individual bound)");
  table.columns = {"xi", "v_a_used", "secure"};
  for (Attack a : attacks) {
    table.columns.push_back(std::string("rate_") + attack_label(a));
    table.columns.push_back(std::string("err_") + attack_label(a));
  }

  std::vector<std::vector<psqkd::keyrate_engine::SweepPoint>> curves;
  for (Attack a : attacks) {
    curves.push_back(
        psqkd::keyrate_engine::sweep_noise(eta, xis, a, policy, fixed_va));
  }
  for (std::size_t i = 0; i < xis.size(); ++i) {
    std::vector<double> row = {xis[i], curves[0][i].v_a_used,
                               curves[0][i].secure ? 1.0 : 0.0};
    for (const auto& curve : curves) {
      row.push_back(curve[i].rate);
      row.push_back(curve[i].integration_error);
    }
    table.rows.push_back(std::move(row));
  }
  emit_table(table, common);
  return 0;
}

int run_contour(const std::vector<std::string>& args) {
  po::options_description desc("contour options");
  add_common(desc);
  desc.add_options()
      ("eta-min", po::value<double>()->default_value(0.05), "eta grid minimum")
      ("eta-max", po::value<double>()->default_value(0.95), "eta grid maximum")
      ("eta-steps", po::value<std::size_t>()->default_value(19),
       "eta grid points")
      ("xi-min", po::value<double>()->default_value(0.01), "xi grid minimum")
      ("xi-max", po::value<double>()->default_value(1.0), "xi grid maximum")
      ("xi-steps", po::value<std::size_t>()->default_value(20),
       "xi grid points")
      ("attack", po::value<std::string>()->default_value("individual"),
       "individual|collective");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  const Attack attack = parse_single_attack(vm["attack"].as<std::string>());
  const auto etas = linspace(vm["eta-min"].as<double>(),
                             vm["eta-max"].as<double>(),
                             vm["eta-steps"].as<std::size_t>());
  const auto xis = linspace(vm["xi-min"].as<double>(),
                            vm["xi-max"].as<double>(),
                            vm["xi-steps"].as<std::size_t>());
  const auto grid = psqkd::keyrate_engine::contour_grid(etas, xis, attack);

  Table table;
  table.metadata = base_metadata("contour", common);
  table.metadata.emplace_back("attack", attack_label(attack));
  table.metadata.emplace_back("va_policy", "optimized (individual bound)");
  table.columns = {"eta", "xi", "rate", "v_a_used", "insecure", "separable"};
  for (std::size_t ie = 0; ie < etas.size(); ++ie) {
    for (std::size_t ix = 0; ix < xis.size(); ++ix) {
      const auto& cell = grid.at(ie, ix);
      table.rows.push_back({etas[ie], xis[ix], cell.rate, cell.v_a_used,
                            cell.insecure ? 1.0 : 0.0,
                            cell.separable ? 1.0 : 0.0});
    }
  }
  emit_table(table, common);
  return 0;
}

int run_simulate(const std::vector<std::string>& args) {
  po::options_description desc("simulate options");
  add_common(desc);
  desc.add_options()
      ("eta", po::value<double>()->required(), "channel transmission, (0,1]")
      ("xi", po::value<double>()->required(), "excess noise, >= 0")
      ("va", po::value<double>(), "modulation variance V_A (default 1)")
      ("optimize-va", po::bool_switch(),
       "use the individual-bound optimal V_A for this channel")
      ("attack", po::value<std::string>()->default_value("individual"),
       "individual|collective")
      ("n", po::value<std::size_t>()->default_value(2400000),
       "number of channel uses")
      ("seed", po::value<std::uint64_t>()->default_value(1), "RNG seed");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  if (vm["optimize-va"].as<bool>() && vm.count("va")) {
    throw std::invalid_argument("--va and --optimize-va are exclusive");
  }
  const Channel ch(vm["eta"].as<double>(), vm["xi"].as<double>());
  const Attack attack = parse_single_attack(vm["attack"].as<std::string>());
  double va = vm.count("va") ? vm["va"].as<double>() : 1.0;
  if (vm["optimize-va"].as<bool>()) {
    va = psqkd::keyrate_engine::optimize_modulation(ch, Attack::individual)
             .v_a_opt;
  }
  const auto result = psqkd::simulator::run_experiment(
      ch, Modulation(va), vm["n"].as<std::size_t>(),
      vm["seed"].as<std::uint64_t>(), attack, common.out,
      common.rate_convention);

  const auto& est = result.estimate;
  const auto& rate = result.rate;
  std::cout << "v_a = " << format_sig(va, 10) << "\n"
            << "eta_hat = " << format_sig(est.eta_hat, 10) << " +/- "
            << format_sig(est.sigma_eta, 3) << "\n"
            << "xi_hat = " << format_sig(est.xi_hat, 10) << " +/- "
            << format_sig(est.sigma_xi, 3)
            << (est.xi_clamped ? "  (clamped from negative)" : "") << "\n"
            << "residual excess kurtosis = "
            << format_sig(est.gaussianity_stat, 3) << "\n"
            << "delta_i_exp = " << format_sig(rate.delta_i_exp, 10) << " +/- "
            << format_sig(rate.std_error, 3) << " "
            << convention_label(common.rate_convention) << "\n"
            << "kept " << rate.n_kept << " of " << rate.n_total
            << " key symbols (" << result.n_estimation << " used for estimation";
  if (result.n_dropped_zero > 0) {
    std::cout << ", " << result.n_dropped_zero << " zero-valued dropped";
  }
  std::cout << ")\n";
  if (!result.dataset_path.empty()) {
    std::cout << "wrote " << result.dataset_path << ", "
              << result.estimation_path << ", " << result.sidecar_path << "\n";
  }
  return 0;
}

int run_estimate(const std::vector<std::string>& args) {
  po::options_description desc("estimate options");
  add_common(desc);
  desc.add_options()
      ("in", po::value<std::string>()->required(), "sifted-record CSV to read");
  const auto vm = parse_args(args, desc);
  if (vm.count("help")) {
    std::cout << desc << "\n";
    return 0;
  }
  const auto common = apply_common(vm);
  const auto ds = psqkd::dataset_io::read_sifted_csv(vm["in"].as<std::string>());
  const auto est = psqkd::simulator::estimate_channel(ds.records);

  std::cout << "eta_hat = " << format_sig(est.eta_hat, 10) << " +/- "
            << format_sig(est.sigma_eta, 3) << "\n"
            << "xi_hat = " << format_sig(est.xi_hat, 10) << " +/- "
            << format_sig(est.sigma_xi, 3)
            << (est.xi_clamped ? "  (clamped from negative)" : "") << "\n"
            << "residual excess kurtosis = "
            << format_sig(est.gaussianity_stat, 3) << "\n"
            << "n_used = " << est.n_used << "\n";

  if (!common.out.empty() || common.format == "json") {
    Table table;
    table.metadata = base_metadata("estimate", common);
    table.metadata.emplace_back("input", vm["in"].as<std::string>());
    table.columns = {"eta_hat", "sigma_eta", "xi_hat", "sigma_xi",
                     "n_used", "gaussianity_stat", "xi_clamped"};
    table.rows.push_back({est.eta_hat, est.sigma_eta, est.xi_hat, est.sigma_xi,
                          static_cast<double>(est.n_used),
                          est.gaussianity_stat, est.xi_clamped ? 1.0 : 0.0});
    emit_table(table, common);
  }
  return 0;
}

int dispatch(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return 2;
  }
  const std::string command = argv[1];
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return 0;
  }
  const std::vector<std::string> args(argv + 2, argv + argc);
  if (command == "rate") return run_rate(args);
  if (command == "region") return run_region(args);
  if (command == "threshold") return run_threshold(args);
  if (command == "sweep") return run_sweep(args);
  if (command == "contour") return run_contour(args);
  if (command == "simulate") return run_simulate(args);
  if (command == "estimate") return run_estimate(args);
  std::cerr << "unknown command '" << command << "'\n\n" << kUsage;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const psqkd::model_domain_error& e) {
    std::cerr << "model-domain error: " << e.what() << "\n";
    return 3;
  } catch (const psqkd::no_convergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 4;
  } catch (const po::error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
