#include <doctest.h>

#include <cmath>

#include "drsae/error.hpp"
#include "drsae/oracle.hpp"

using namespace drsae;
using namespace drsae::oracle;

namespace {

using Law = std::vector<double>;

// Sets the outcome laws for every (x, z, a) from per-(x, z) laws.
void set_outcomes(DiscreteWorld& w, const std::vector<std::vector<Law>>& control,
                  const std::vector<std::vector<Law>>& treated) {
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& src = t == 0 ? control : treated;
    for (std::size_t x = 0; x < w.nx(); ++x) {
      for (std::size_t z = 0; z < w.nz(); ++z) {
        for (int a = 0; a < w.areas; ++a) w.outcome[t][x][z][static_cast<std::size_t>(a)] = src[x][z];
      }
    }
  }
}

DiscreteWorld constant_effect_world() {
  auto w = reference_world();
  w.y_support = {0.0, 1.0, 2.0, 3.0};
  std::vector<std::vector<Law>> c = {{{0.5, 0.3, 0.2, 0.0}, {0.2, 0.5, 0.3, 0.0}},
                                     {{0.1, 0.6, 0.3, 0.0}, {0.3, 0.3, 0.4, 0.0}}};
  auto t = c;
  for (auto& byz : t)
    for (auto& law : byz) law = {0.0, law[0], law[1], law[2]};
  set_outcomes(w, c, t);
  return w;
}

// Two-term expression summed directly from the primitives of the world.
double stated_bound_by_hand(const DiscreteWorld& w, int j) {
  const auto jj = static_cast<std::size_t>(j - 1);
  double pj = 0.0;
  for (std::size_t x = 0; x < w.nx(); ++x) pj += w.x_mass[x] * w.area_given_x[x][jj];
  double tau = exact_tau_enumerated(w, j);
  double first = 0.0, second = 0.0;
  for (std::size_t x = 0; x < w.nx(); ++x) {
    for (std::size_t z = 0; z < w.nz(); ++z) {
      double pop = 0.0, smp = 0.0;
      std::vector<double> joint(static_cast<std::size_t>(w.areas));
      for (std::size_t a = 0; a < joint.size(); ++a) {
        pop += w.x_mass[x] * w.area_given_x[x][a] * w.z_given_x_area[x][a][z];
        joint[a] = w.x_mass[x] * w.area_given_x[x][a] * w.z_given_x_area[x][a][z] * w.sample_given_x_area[x][a];
        smp += joint[a];
      }
      double mean[2] = {0, 0}, sq[2] = {0, 0};
      for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t a = 0; a < joint.size(); ++a) {
          for (std::size_t k = 0; k < w.y_support.size(); ++k) {
            double pr = joint[a] / smp * w.outcome[t][x][z][a][k];
            mean[t] += pr * w.y_support[k];
            sq[t] += pr * w.y_support[k] * w.y_support[k];
          }
        }
      }
      double var1 = sq[1] - mean[1] * mean[1], var0 = sq[0] - mean[0] * mean[0];
      double pa = joint[jj] / smp;
      double e = w.treat_given_x_z[x][z];
      double ps = w.sample_given_x_area[x][jj];
      first += pop * pa * pa / (ps * pj * pj) * (var1 / e + var0 / (1 - e));
      second += pop * pa / (ps * pj * pj) * std::pow(mean[1] - mean[0] - tau, 2);
    }
  }
  return first + second;
}

}  // namespace

TEST_CASE("reference world is valid and keeps every probability in [0.1, 0.9]") {
  auto w = reference_world();
  CHECK_NOTHROW(w.validate());
  CHECK(w.area_ignorable());
  auto in_range = [](double v) { return v >= 0.1 && v <= 0.9; };
  for (std::size_t x = 0; x < w.nx(); ++x) {
    for (int a = 0; a < w.areas; ++a) {
      CHECK(in_range(w.area_given_x[x][static_cast<std::size_t>(a)]));
      CHECK(in_range(w.sample_given_x_area[x][static_cast<std::size_t>(a)]));
    }
    for (std::size_t z = 0; z < w.nz(); ++z) CHECK(in_range(w.treat_given_x_z[x][z]));
  }
  auto eta = true_nuisances(w);
  for (const auto& byz : eta.pi_a)
    for (const auto& row : byz)
      for (double v : row) CHECK(in_range(v));
}

TEST_CASE("conditional-mean and enumerated effects agree") {
  for (const auto& w : {reference_world(), single_area_world(), break_area_ignorability(reference_world())}) {
    for (int j = 1; j <= w.areas; ++j) CHECK(std::abs(exact_tau(w, j) - exact_tau_enumerated(w, j)) < 1e-12);
  }
}

TEST_CASE("area probabilities sum to one") {
  auto w = reference_world();
  double s = 0.0;
  for (int j = 1; j <= w.areas; ++j) s += p_area(w, j);
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p_area(w, 1) == doctest::Approx(0.45 * 0.5 + 0.55 * 0.25));
}

TEST_CASE("a constant shift of one gives tau = 1 in every area") {
  auto w = constant_effect_world();
  CHECK_NOTHROW(w.validate());
  for (int j = 1; j <= w.areas; ++j) {
    CHECK(exact_tau_enumerated(w, j) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(check_pooled_ipw(w, j).discrepancy < 1e-10);
    CHECK(check_area_split(w, j).discrepancy < 1e-10);
  }
}

TEST_CASE("identical arms give a null effect") {
  auto w = reference_world();
  w.outcome[1] = w.outcome[0];
  for (int j = 1; j <= w.areas; ++j) {
    CHECK(std::abs(exact_tau_enumerated(w, j)) < 1e-14);
    CHECK(std::abs(check_pooled_ipw(w, j).value) < 1e-10);
  }
}

TEST_CASE("identification checks hold on the reference world") {
  auto w = reference_world();
  for (int j = 1; j <= w.areas; ++j) {
    CHECK(check_pooled_ipw(w, j).discrepancy < 1e-10);
    auto split = check_area_split(w, j);
    CHECK(split.discrepancy < 1e-10);
    CHECK(std::abs(split.term_other_areas) > 1e-3);
    CHECK(check_direct_formula(w, j).discrepancy < 1e-10);
    CHECK(std::abs(expected_score(w, j, true_nuisances(w)) - exact_tau(w, j)) < 1e-10);
  }
}

TEST_CASE("a single area needs no transport term") {
  auto w = single_area_world();
  CHECK_NOTHROW(w.validate());
  auto split = check_area_split(w, 1);
  CHECK(std::abs(split.term_other_areas) < 1e-15);
  CHECK(check_pooled_ipw(w, 1).discrepancy < 1e-10);
}

TEST_CASE("double robustness needs one correct block") {
  auto w = reference_world();
  double worst_both = 0.0;
  for (int j = 1; j <= w.areas; ++j) {
    CHECK(check_double_robustness(w, j, Perturb::Outcome).discrepancy < 1e-10);
    CHECK(check_double_robustness(w, j, Perturb::Weights).discrepancy < 1e-10);
    worst_both = std::max(worst_both, check_double_robustness(w, j, Perturb::Both).discrepancy);
  }
  CHECK(worst_both > 0.01);
}

TEST_CASE("area-dependent outcomes break identification but not the within-area formula") {
  auto w = break_area_ignorability(reference_world());
  CHECK_FALSE(w.area_ignorable());
  double worst = 0.0;
  for (int j = 1; j <= w.areas; ++j) {
    worst = std::max(worst, check_pooled_ipw(w, j).discrepancy);
    CHECK(check_direct_formula(w, j).discrepancy < 1e-10);
  }
  CHECK(worst > 1e-3);
  auto lines = run_checks(w, true);
  for (const auto& l : lines) CHECK(l.passed);
}

TEST_CASE("stated bound vanishes without outcome noise or effect heterogeneity") {
  auto w = reference_world();
  std::vector<std::vector<Law>> c(2, std::vector<Law>(2, Law{0, 1, 0, 0}));
  std::vector<std::vector<Law>> t(2, std::vector<Law>(2, Law{0, 0, 1, 0}));
  set_outcomes(w, c, t);
  for (int j = 1; j <= w.areas; ++j) {
    auto b = efficiency_bound(w, j);
    CHECK(std::abs(b.stated_form) < 1e-12);
    CHECK(std::abs(b.heterogeneity_term) < 1e-12);
  }
}

TEST_CASE("stated bound equals an independent summation of the two terms") {
  for (const auto& w : {reference_world(), constant_effect_world()}) {
    for (int j = 1; j <= w.areas; ++j) {
      auto b = efficiency_bound(w, j);
      CHECK(b.stated_form == doctest::Approx(stated_bound_by_hand(w, j)).epsilon(1e-12));
      CHECK(b.outcome_term > 0.0);
    }
  }
}

TEST_CASE("sampled-law bound matches the enumerated score variance") {
  for (const auto& w : {reference_world(), constant_effect_world(), single_area_world()}) {
    for (int j = 1; j <= w.areas; ++j) {
      auto b = efficiency_bound(w, j);
      CHECK(std::abs(b.enumerated - b.sampled_form) < 1e-10 * std::max(1.0, b.enumerated));
      CHECK(b.enumerated > 0.0);
    }
  }
}

TEST_CASE("Monte Carlo variance is thread-count independent and near the enumerated value") {
  auto w = reference_world();
  double par = monte_carlo_ht_variance(w, 2, 2000, 400, 99);
  double ser = monte_carlo_ht_variance_serial(w, 2, 2000, 400, 99);
  CHECK(par == ser);
  double exact = efficiency_bound(w, 2).enumerated;
  CHECK(std::abs(par - exact) < 0.25 * exact);
}

TEST_CASE("world JSON round trip preserves the law") {
  auto w = break_area_ignorability(reference_world());
  auto back = world_from_json(world_to_json(w));
  CHECK(back.areas == w.areas);
  CHECK(back.x_mass == w.x_mass);
  CHECK(back.outcome == w.outcome);
  CHECK(back.sample_given_x_area == w.sample_given_x_area);
  for (int j = 1; j <= w.areas; ++j) CHECK(exact_tau(back, j) == exact_tau(w, j));
}

TEST_CASE("invalid worlds are rejected") {
  auto w = reference_world();
  w.sample_given_x_area[0][1] = 0.01;
  CHECK_THROWS_AS(w.validate(), InputError);
  w = reference_world();
  w.x_mass = {0.5, 0.6};
  CHECK_THROWS_AS(w.validate(), InputError);
  w = reference_world();
  w.area_given_x.pop_back();
  CHECK_THROWS_AS(w.validate(), InputError);
  w = reference_world();
  w.outcome[1][0][0][0] = {0.5, 0.5};
  CHECK_THROWS_AS(w.validate(), InputError);
  CHECK_THROWS_AS(world_from_json("{ not json"), InputError);
  CHECK_THROWS_AS(world_from_json(R"({"areas": 2})"), InputError);
}
