#include <doctest.h>

#include <cmath>
#include <random>

#include "drsae/error.hpp"
#include "drsae/estimator.hpp"
#include "drsae/oracle.hpp"
#include "test_util.hpp"

using namespace drsae;

namespace {

ScoreRow row_with(double phi, double w1 = 1.0) {
  ScoreRow r;
  r.phi = phi;
  r.w1 = w1;
  r.area = 1;
  return r;
}

AuxiliaryProbabilities flat_aux(const SurveyDataset& data, double frame) {
  AuxiliaryProbabilities aux;
  const int J = data.j_count();
  aux.p_area.assign(static_cast<std::size_t>(J), 0.0);
  for (const auto& r : data.records()) aux.p_area[static_cast<std::size_t>(r.area - 1)] += 1.0;
  for (auto& v : aux.p_area) v /= static_cast<double>(data.n());
  for (const auto& r : data.records()) aux.p_sample.push_back(1.0 / *r.weight);
  aux.frame_size = frame;
  return aux;
}

}  // namespace

TEST_CASE("score of a single hand-worked unit") {
  ScoreInputs in{10.0, 1, 8.0, 3.0, 0.5, 0.4, 0.5, 0.2, true};
  auto r = score_row(in);
  CHECK(r.w1 == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(r.phi1 == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(r.w2 == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(r.phi2 == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(r.phi == doctest::Approx(66.0).epsilon(1e-14));
}

TEST_CASE("score of a control unit outside the target area") {
  ScoreInputs in{2.0, 0, 5.0, 1.0, 0.75, 0.2, 0.25, 0.5, false};
  auto r = score_row(in);
  // phi1 = -(2-1)/0.25 + 4 = 0; w1 = 0.2/0.125; w2 = -0.2/0.125
  CHECK(std::abs(r.phi1) < 1e-14);
  CHECK(r.w1 == doctest::Approx(1.6));
  CHECK(r.w2 == doctest::Approx(-1.6));
  CHECK(r.phi == doctest::Approx(-1.6 * 4.0));
}

TEST_CASE("with one area the score reduces to the AIPW score") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    ScoreInputs in{nd(rng), i % 2, nd(rng), nd(rng), u(rng), 1.0, 1.0, 1.0, true};
    auto r = score_row(in);
    double aipw = in.t * (in.y - in.m1) / in.e - (1 - in.t) * (in.y - in.m0) / (1 - in.e) + in.m1 - in.m0;
    CHECK(std::abs(r.phi - aipw) < 1e-12 * std::max(1.0, std::abs(aipw)));
    CHECK(r.w2 == 0.0);
  }
}

TEST_CASE("score regroups into in-area and transported parts") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    ScoreInputs in{nd(rng), i % 2, nd(rng), nd(rng), u(rng), u(rng), u(rng), u(rng), i % 3 == 0};
    auto r = score_row(in);
    double alt = (in.pi_a * (r.phi1 - r.phi2) + (in.in_area ? 1.0 : 0.0) * r.phi2) / (in.pi_s * in.p_area);
    CHECK(std::abs(r.phi - alt) < 1e-12 * std::max(1.0, std::abs(alt)));
  }
}

TEST_CASE("zero residuals and equal arms give a zero score") {
  ScoreInputs in{3.0, 1, 3.0, 3.0, 0.3, 0.5, 0.2, 0.1, true};
  CHECK(score_row(in).phi == 0.0);
}

TEST_CASE("Horvitz-Thompson and Hajek on hand-built rows") {
  std::vector<ScoreRow> rows{row_with(2.0), row_with(4.0)};
  auto ht = ht_estimate(rows, 2.0);
  CHECK(ht.tau_hat == doctest::Approx(3.0));
  CHECK(ht.var_hat == doctest::Approx(0.5));  // (1 + 1) / 4
  std::vector<ScoreRow> c(5, row_with(1.7));
  CHECK(ht_estimate(c, 5.0).tau_hat == doctest::Approx(1.7));
  CHECK(ht_estimate(c, 5.0).var_hat == doctest::Approx(0.0));

  std::vector<ScoreRow> hr{row_with(6.0, 2.0), row_with(2.0, 2.0)};
  auto hj = hajek_estimate(hr);
  CHECK(hj.tau_hat == doctest::Approx(2.0));
  // sum (phi - 2 w1)^2 = 4 + 4, divided by n^2 wbar^2 = 16
  CHECK(hj.var_hat == doctest::Approx(0.5));
}

TEST_CASE("HT divisor counts units outside the stored rows") {
  std::vector<ScoreRow> rows{row_with(2.0), row_with(4.0)};
  auto ht = ht_estimate(rows, 4.0);
  CHECK(ht.tau_hat == doctest::Approx(1.5));
  // (0.25 + 6.25 + 2 * 2.25) / 16
  CHECK(ht.var_hat == doctest::Approx(11.0 / 16.0));
}

TEST_CASE("Hajek equals HT when w1 is one and w2 zero") {
  std::vector<ScoreRow> rows;
  for (double v : {1.0, -2.0, 3.5, 0.25}) rows.push_back(row_with(v));
  CHECK(hajek_estimate(rows).tau_hat == doctest::Approx(ht_estimate(rows, 4.0).tau_hat).epsilon(1e-14));
}

TEST_CASE("Hajek is invariant to a global rescaling of the sampling probabilities") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  std::normal_distribution<double> nd(0.0, 2.0);
  std::vector<ScoreRow> base, scaled;
  for (int i = 0; i < 200; ++i) {
    ScoreInputs in{nd(rng), i % 2, nd(rng), nd(rng), u(rng), u(rng), u(rng) * 0.1, 0.3, i % 4 == 0};
    base.push_back(score_row(in));
    in.pi_s *= 7.0;
    scaled.push_back(score_row(in));
  }
  double a = hajek_estimate(base).tau_hat, b = hajek_estimate(scaled).tau_hat;
  CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
}

TEST_CASE("trimming is strict and never grows the used set") {
  std::vector<ScoreRow> rows{row_with(900.0), row_with(800.0), row_with(-801.0), row_with(5.0)};
  auto t = trim_scores(rows, 800.0);
  CHECK(t[0].trimmed);
  CHECK_FALSE(t[1].trimmed);
  CHECK(t[2].trimmed);
  CHECK_FALSE(t[3].trimmed);
  auto est = ht_estimate(t, 4.0);
  CHECK(est.n_trimmed == 2);
  CHECK(est.n_used == 2);
  std::size_t prev = rows.size() + 1;
  for (double thr : {1e4, 900.0, 850.0, 100.0, 1.0}) {
    auto tt = trim_scores(rows, thr);
    std::size_t used = 0;
    for (const auto& r : tt) used += !r.trimmed;
    CHECK(used <= prev);
    prev = used;
  }
  CHECK_THROWS_AS(trim_scores(rows, 0.0), InputError);
}

TEST_CASE("estimators reject empty or degenerate input") {
  std::vector<ScoreRow> none;
  CHECK_THROWS_AS(ht_estimate(none, 1.0), InputError);
  CHECK_THROWS_AS(hajek_estimate(none), InputError);
  std::vector<ScoreRow> zero{row_with(1.0, 0.0)};
  CHECK_THROWS_AS(hajek_estimate(zero), NumericError);
}

TEST_CASE("parallel and serial area loops agree exactly") {
  auto data = testutil::synthetic_survey(600, 4, 11);
  auto nuis = cross_fit(data, make_folds(data.n(), 5, 12));
  auto aux = flat_aux(data, 12000.0);
  EstimateOptions opts;
  auto a = estimate_areas(data, nuis, aux, opts);
  auto b = estimate_areas_serial(data, nuis, aux, opts);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].area == b[i].area);
    CHECK(a[i].method == b[i].method);
    CHECK(a[i].tau_hat == b[i].tau_hat);
    CHECK(a[i].var_hat == b[i].var_hat);
  }
}

TEST_CASE("with one area the direct and Hajek estimators coincide") {
  auto data = testutil::synthetic_survey(400, 1, 21);
  auto nuis = cross_fit(data, make_folds(data.n(), 4, 22));
  auto aux = flat_aux(data, 8000.0);
  auto est = estimate_areas(data, nuis, aux, EstimateOptions{});
  REQUIRE(est.size() == 3);
  CHECK(est[2].method == Method::Direct);
  CHECK(est[2].tau_hat == doctest::Approx(est[1].tau_hat).epsilon(1e-10));
}

TEST_CASE("an area with one treatment arm makes the direct estimator infeasible") {
  auto base = testutil::synthetic_survey(300, 3, 31);
  auto recs = base.records();
  for (auto& r : recs) {
    if (r.area == 3) r.t = 1;
  }
  SurveyDataset data(recs, 3);
  auto nuis = cross_fit(data, make_folds(data.n(), 3, 32));
  auto aux = flat_aux(data, 6000.0);
  CHECK_THROWS_AS(direct_estimate(data, aux, 3, nuis.folds, 0.01), InfeasibleError);
  auto est = estimate_areas(data, nuis, aux, EstimateOptions{});
  CHECK_FALSE(est.back().feasible);
  CHECK(est.back().area == 3);
  CHECK(est[est.size() - 2].feasible);  // Hajek for area 3 still formed
}

TEST_CASE("HT with exact nuisances on draws from a finite world is within 3 SE of the truth") {
  auto w = oracle::reference_world();
  auto eta = oracle::true_nuisances(w);
  const std::size_t n = 100000;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](const std::vector<double>& p) {
    double v = u(rng);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      v -= p[k];
      if (v < 0.0) return k;
    }
    return p.size() - 1;
  };
  std::vector<std::vector<ScoreRow>> rows(static_cast<std::size_t>(w.areas));
  for (std::size_t i = 0; i < n; ++i) {
    auto x = draw(w.x_mass);
    auto a = draw(w.area_given_x[x]);
    auto z = draw(w.z_given_x_area[x][a]);
    if (u(rng) >= w.sample_given_x_area[x][a]) continue;
    int t = u(rng) < w.treat_given_x_z[x][z] ? 1 : 0;
    double y = w.y_support[draw(w.outcome[static_cast<std::size_t>(t)][x][z][a])];
    for (int j = 1; j <= w.areas; ++j) {
      const auto jj = static_cast<std::size_t>(j - 1);
      ScoreInputs in{y,
                     t,
                     eta.m1[x][z],
                     eta.m0[x][z],
                     eta.e[x][z],
                     eta.pi_a[x][z][jj],
                     w.sample_given_x_area[x][jj],
                     oracle::p_area(w, j),
                     static_cast<int>(a) == j - 1};
      auto r = score_row(in);
      r.area = j;
      rows[jj].push_back(r);
    }
  }
  for (int j = 1; j <= w.areas; ++j) {
    auto est = ht_estimate(rows[static_cast<std::size_t>(j - 1)], static_cast<double>(n));
    double tau = oracle::exact_tau(w, j);
    CHECK(std::abs(est.tau_hat - tau) < 3.0 * est.se());
    CHECK(est.se() < 0.05);
  }
}
