// Serial reference kernels against their OpenMP versions.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "drsae/estimator.hpp"
#include "drsae/nuisance.hpp"
#include "drsae/oracle.hpp"
#include "drsae/simulation.hpp"

using namespace drsae;

namespace {

double best_of(int runs, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < runs; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.4f %10.4f %8.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int runs = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "omp s", "speedup");

  {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const Eigen::Index n = 20000, p = 4, J = 50;
    Matrix X(n, p), probs(n, J);
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (Eigen::Index k = 1; k < p; ++k) X(i, k) = nd(rng);
      for (Eigen::Index a = 0; a < J; ++a) probs(i, a) = u(rng);
      probs.row(i) /= probs.row(i).sum();
    }
    double s = best_of(runs, [&] { multinomial_information_serial(X, probs); });
    double o = best_of(runs, [&] { multinomial_information(X, probs); });
    row("multinomial_information", s, o);
  }

  {
    auto cfg = sim::config_for_dgp(1);
    auto pop = sim::generate_population(cfg, 11);
    auto data = sim::draw_sample(cfg, pop, 12);
    auto aux = sim::known_auxiliary(cfg, pop, data);
    auto nuis = cross_fit(data, make_folds(data.n(), cfg.folds, 13));
    EstimateOptions opts;
    double s = best_of(runs, [&] { estimate_areas_serial(data, nuis, aux, opts); });
    double o = best_of(runs, [&] { estimate_areas(data, nuis, aux, opts); });
    row("estimate_areas", s, o);
  }

  {
    auto cfg = sim::config_for_dgp(1);
    cfg.N = 40000;
    cfg.J = 10;
    cfg.R = 16;
    double s = best_of(runs, [&] { sim::run_replications_serial(cfg); });
    double o = best_of(runs, [&] { sim::run_replications(cfg); });
    row("run_replications", s, o);
  }

  {
    auto w = oracle::reference_world();
    double s = best_of(runs, [&] { oracle::monte_carlo_ht_variance_serial(w, 1, 100000, 4000, 3); });
    double o = best_of(runs, [&] { oracle::monte_carlo_ht_variance(w, 1, 100000, 4000, 3); });
    row("monte_carlo_ht_variance", s, o);
  }
  return 0;
}
