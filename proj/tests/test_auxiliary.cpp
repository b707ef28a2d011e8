#include <doctest.h>

#include <cmath>
#include <random>

#include "drsae/auxiliary.hpp"
#include "drsae/error.hpp"
#include "drsae/oracle.hpp"

using namespace drsae;

namespace {

SurveyRecord rec(double x, int area, double weight = 10.0) {
  SurveyRecord r;
  r.x = {x};
  r.area = area;
  r.weight = weight;
  r.t = area % 2;
  return r;
}

}  // namespace

TEST_CASE("sampling probability combines the three factors") {
  CHECK(sampling_prob(0.1, 0.5, 0.25) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(sampling_prob(0.3, 0.4, 0.4) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(sampling_prob(0.001, 0.5, 0.5, 0.01) == 0.01);
  CHECK(sampling_prob(0.9, 0.9, 0.3) == 1.0);
  CHECK_THROWS_AS(sampling_prob(0.1, 0.5, 0.0), OverlapError);
}

TEST_CASE("a single area reduces to P(S=1|X)") {
  for (double ps : {0.02, 0.3, 0.77}) CHECK(sampling_prob(ps, 1.0, 1.0) == ps);
}

TEST_CASE("sampling probability is monotone in the sampled area share") {
  double prev = 0.0;
  for (double q = 0.05; q < 1.0; q += 0.05) {
    double v = sampling_prob(0.2, q, 0.6);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("sampling probability recovers the exact P(S=1|X,A) of a finite world") {
  auto w = oracle::reference_world();
  for (std::size_t x = 0; x < w.nx(); ++x) {
    double ps = 0.0;
    for (int a = 0; a < w.areas; ++a) ps += w.area_given_x[x][a] * w.sample_given_x_area[x][a];
    for (int a = 0; a < w.areas; ++a) {
      double pa_s = w.area_given_x[x][a] * w.sample_given_x_area[x][a] / ps;
      CHECK(sampling_prob(ps, pa_s, w.area_given_x[x][a]) ==
            doctest::Approx(w.sample_given_x_area[x][a]).epsilon(1e-14));
    }
  }
}

TEST_CASE("cell area shares are smoothed by half a count") {
  SurveyDataset data({rec(1, 1), rec(1, 1), rec(1, 2), rec(2, 2)}, 2);
  auto t = estimate_pA_sample(data, CovariateCellScheme::passthrough(1));
  REQUIRE(t.size() == 2);
  CHECK(t.at("1")[0] == doctest::Approx(0.625));
  CHECK(t.at("1")[1] == doctest::Approx(0.375));
  CHECK(t.at("2")[0] == doctest::Approx(0.25));
  auto none = estimate_pA_sample(data, CovariateCellScheme::passthrough(1), 0.0);
  CHECK(none.at("1")[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("heavy smoothing tends to the uniform distribution") {
  SurveyDataset data({rec(1, 1), rec(1, 1), rec(1, 3)}, 3);
  auto t = estimate_pA_sample(data, CovariateCellScheme::passthrough(1), 1e4);
  for (double v : t.at("1")) CHECK(std::abs(v - 1.0 / 3.0) < 0.02);
}

TEST_CASE("sampling probability from survey weights") {
  CHECK(sampling_prob_from_weights(rec(0, 1, 50.0)) == doctest::Approx(0.02));
  CHECK(sampling_prob_from_weights(rec(0, 1, 1.0)) == 1.0);
  CHECK(sampling_prob_from_weights(rec(0, 1, 500.0), 0.01) == 0.01);
  CHECK_THROWS_AS(sampling_prob_from_weights(rec(0, 1, 0.5)), InputError);
  SurveyRecord r;
  CHECK_THROWS_AS(sampling_prob_from_weights(r), InputError);
}

TEST_CASE("assembled auxiliary probabilities use the population table") {
  std::vector<PopulationCell> cells{{"1", 1, 300, 0.1}, {"1", 2, 100, 0.1}, {"2", 1, 200, 0.2}, {"2", 2, 400, 0.2}};
  PopulationTable pop(cells, 2);
  SurveyDataset data({rec(1, 1), rec(1, 1), rec(1, 2), rec(2, 2), rec(2, 1)}, 2);
  auto scheme = CovariateCellScheme::passthrough(1);
  auto aux = assemble_auxiliary(data, pop, scheme);
  CHECK(aux.frame_size == 1000);
  CHECK(aux.p(1) == doctest::Approx(0.5));
  CHECK(aux.p_sample[0] == 0.1);
  CHECK(aux.p_sample[3] == 0.2);
  // cell 1: sampled shares (2.5, 1.5)/4, population shares (0.75, 0.25)
  CHECK(aux.pi_s(0, 1) == doctest::Approx(0.1 * 0.625 / 0.75));
  CHECK(aux.pi_s(0, 2) == doctest::Approx(0.1 * 0.375 / 0.25));
  CHECK(aux.p_sample_source == ProbSource::PopulationTable);
}

TEST_CASE("assembly falls back to weights and reports missing cells") {
  std::vector<PopulationCell> cells{{"1", 1, 30}, {"1", 2, 10}};
  PopulationTable pop(cells, 2);
  auto scheme = CovariateCellScheme::passthrough(1);
  SurveyDataset data({rec(1, 1, 20.0), rec(1, 2, 40.0)}, 2);
  auto aux = assemble_auxiliary(data, pop, scheme);
  CHECK(aux.p_sample_source == ProbSource::SurveyWeights);
  CHECK(aux.p_sample[1] == doctest::Approx(0.025));

  SurveyDataset outside({rec(1, 1), rec(3, 2)}, 2);
  CHECK_THROWS_AS(assemble_auxiliary(outside, pop, scheme), OverlapError);

  SurveyRecord bare;
  bare.x = {1};
  bare.area = 2;
  SurveyDataset unweighted({bare}, 2);
  CHECK_THROWS_AS(assemble_auxiliary(unweighted, pop, scheme), InputError);
}

TEST_CASE("multinomial area shares are proper distributions") {
  std::vector<PopulationCell> cells;
  for (int c = 1; c <= 4; ++c)
    for (int a = 1; a <= 3; ++a) cells.push_back({std::to_string(c), a, 100.0 + 10 * a * c, 0.05});
  PopulationTable pop(cells, 3);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cx(1, 4), ca(1, 3);
  std::vector<SurveyRecord> recs;
  for (int i = 0; i < 200; ++i) recs.push_back(rec(cx(rng), ca(rng)));
  SurveyDataset data(recs, 3);
  auto aux = assemble_auxiliary(data, pop, CovariateCellScheme::passthrough(1), 0.01, AreaSampleModel::Multinomial);
  CHECK(aux.p_area_sample_source == ProbSource::SurveyMultinomial);
  for (const auto& row : aux.p_area_sample) {
    double s = 0.0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}
