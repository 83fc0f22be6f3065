// The OpenMP kernels must match their serial reference implementations
// bit for bit, for every worker count.  Anything weaker would make results
// depend on the machine that produced them.

#include <omp.h>

#include <catch2/catch_amalgamated.hpp>
#include <vector>

#include "psqkd/keyrate_engine.hpp"
#include "psqkd/simulator.hpp"

using namespace psqkd::keyrate_engine;
using psqkd::simulator::empirical_rate;
using psqkd::simulator::empirical_rate_serial;

namespace {

const std::vector<int> kThreadCounts = {1, 2, 3, 8};

struct ThreadGuard {
  int saved;
  ThreadGuard() : saved(omp_get_max_threads()) {}
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("region_map equals its serial reference for any worker count") {
  ThreadGuard guard;
  const Channel ch(0.5, 0.2);
  const auto ref = region_map_serial(ch, Attack::individual, 6.0, 8.0, 73, 59);
  for (int t : kThreadCounts) {
    omp_set_num_threads(t);
    const auto par = region_map(ch, Attack::individual, 6.0, 8.0, 73, 59);
    REQUIRE(par.values.size() == ref.values.size());
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
      REQUIRE(par.values[i] == ref.values[i]);
      REQUIRE(par.kept[i] == ref.kept[i]);
    }
  }
}

TEST_CASE("secure_rate equals its serial reference for any worker count") {
  ThreadGuard guard;
  const Channel ch(0.47, 0.1);
  const Modulation mod(3.0);
  for (Attack attack : {Attack::individual, Attack::collective}) {
    const auto ref = secure_rate_serial(ch, mod, attack);
    for (int t : kThreadCounts) {
      omp_set_num_threads(t);
      const auto par = secure_rate(ch, mod, attack);
      REQUIRE(par.delta_i_total == ref.delta_i_total);
      REQUIRE(par.integration_estimate_error == ref.integration_estimate_error);
      REQUIRE(par.cells == ref.cells);
      REQUIRE(par.converged == ref.converged);
    }
  }
}

TEST_CASE("empirical_rate equals its serial reference for any worker count") {
  ThreadGuard guard;
  const Channel ch(0.5, 0.2);
  const auto sifted = psqkd::simulator::sift(
      psqkd::simulator::transmit(
          ch, psqkd::simulator::generate(psqkd::info_theory::Modulation(2.0),
                                         100000, 31),
          31),
      31);
  const auto ref =
      empirical_rate_serial(sifted.records, ch, Attack::individual);
  for (int t : kThreadCounts) {
    omp_set_num_threads(t);
    const auto par = empirical_rate(sifted.records, ch, Attack::individual);
    REQUIRE(par.delta_i_exp == ref.delta_i_exp);
    REQUIRE(par.std_error == ref.std_error);
    REQUIRE(par.n_kept == ref.n_kept);
    REQUIRE(par.aggregate_error_rate == ref.aggregate_error_rate);
  }
}

TEST_CASE("simulation pipeline is invariant under the worker count") {
  ThreadGuard guard;
  omp_set_num_threads(1);
  const auto base = psqkd::simulator::run_experiment(
      Channel(0.6, 0.2), psqkd::info_theory::Modulation(2.0), 20000, 17,
      Attack::individual);
  for (int t : {2, 8}) {
    omp_set_num_threads(t);
    const auto again = psqkd::simulator::run_experiment(
        Channel(0.6, 0.2), psqkd::info_theory::Modulation(2.0), 20000, 17,
        Attack::individual);
    REQUIRE(again.rate.delta_i_exp == base.rate.delta_i_exp);
    REQUIRE(again.rate.std_error == base.rate.std_error);
    REQUIRE(again.estimate.eta_hat == base.estimate.eta_hat);
    REQUIRE(again.estimate.xi_hat == base.estimate.xi_hat);
  }
}
