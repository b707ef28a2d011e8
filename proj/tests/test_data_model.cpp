#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "drsae/csv.hpp"
#include "drsae/data_model.hpp"
#include "drsae/error.hpp"
#include "test_util.hpp"

using namespace drsae;

TEST_CASE("three-row survey loads with inferred schema") {
  auto path = testutil::temp_file("s3.csv", "y,t,area,x_1,z_1\n1.5,1,1,0.2,3\n2.5,0,2,0.4,1\n-1,1,2,1.0,0\n");
  auto d = load_survey_csv(path);
  CHECK(d.n() == 3);
  CHECK(d.dim_x() == 1);
  CHECK(d.dim_z() == 1);
  CHECK(d.j_count() == 2);
  CHECK(d[2].y == -1.0);
  CHECK_FALSE(d.has_weights());
}

TEST_CASE("explicit schema with custom column names") {
  auto path = testutil::temp_file("s_schema.csv", "out,trt,a,age,ideo\n1,1,1,30,2\n2,0,1,40,3\n");
  SurveySchema s;
  s.y = "out";
  s.t = "trt";
  s.area = "a";
  s.x = {"age"};
  s.z = {"ideo"};
  auto d = load_survey_csv(path, s);
  CHECK(d.n() == 2);
  CHECK(d[1].x[0] == 40.0);
}

TEST_CASE("string area labels map through a dictionary") {
  auto path = testutil::temp_file("s_labels.csv", "y,t,area,x_1\n1,1,Ohio,0\n2,0,Iowa,1\n");
  SurveySchema s;
  s.x = {"x_1"};
  s.area_labels = {{"Iowa", 1}, {"Ohio", 2}};
  auto d = load_survey_csv(path, s);
  CHECK(d[0].area == 2);
  CHECK(d[1].area == 1);
  s.area_labels = {{"Iowa", 1}};
  CHECK_THROWS_AS(load_survey_csv(path, s), InputError);
}

TEST_CASE("treatment 2 is rejected with the line number") {
  auto path = testutil::temp_file("s_t2.csv", "y,t,area,x_1,z_1\n1,1,1,0,0\n1,2,1,0,0\n");
  try {
    load_survey_csv(path);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("area above declared J is rejected") {
  auto path = testutil::temp_file("s_a51.csv", "y,t,area,x_1\n1,1,51,0\n1,0,3,0\n");
  CHECK_THROWS_AS(load_survey_csv(path, 50), InputError);
  CHECK_NOTHROW(load_survey_csv(path, 51));
}

TEST_CASE("missing column, bad value and empty file") {
  CHECK_THROWS_AS(load_survey_csv(testutil::temp_file("s_nocol.csv", "y,area,x_1\n1,1,0\n")), InputError);
  CHECK_THROWS_AS(load_survey_csv(testutil::temp_file("s_nan.csv", "y,t,area,x_1\nnan,1,1,0\n")), InputError);
  CHECK_THROWS_AS(load_survey_csv(testutil::temp_file("s_miss.csv", "y,t,area,x_1\n,1,1,0\n")), InputError);
  CHECK_THROWS_AS(load_survey_csv(testutil::temp_file("s_empty.csv", "")), InputError);
  CHECK_THROWS_AS(load_survey_csv(testutil::temp_file("s_hdr.csv", "y,t,area\n")), InputError);
}

TEST_CASE("dataset invariants") {
  SurveyRecord a{1.0, 1, {0.0}, {}, 1, std::nullopt};
  SurveyRecord b{1.0, 0, {0.0, 1.0}, {}, 1, std::nullopt};
  CHECK_THROWS_AS(SurveyDataset({a, b}), InputError);
  SurveyRecord c = a;
  c.weight = 0.0;
  CHECK_THROWS_AS(SurveyDataset({c}), InputError);
  SurveyRecord d = a;
  d.area = 0;
  CHECK_THROWS_AS(SurveyDataset({d}), InputError);
  CHECK_THROWS_AS(SurveyDataset(std::vector<SurveyRecord>{}), InputError);
}

TEST_CASE("write and reload preserves values") {
  auto d = testutil::synthetic_survey(200, 4, 9);
  auto path = testutil::temp_file("s_round.csv", "");
  write_survey_csv(d, path);
  auto e = load_survey_csv(path);
  REQUIRE(e.n() == d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    CHECK(e[i].y == d[i].y);
    CHECK(e[i].x[0] == d[i].x[0]);
    CHECK(e[i].z[0] == d[i].z[0]);
    CHECK(e[i].area == d[i].area);
    CHECK(e[i].t == d[i].t);
    CHECK(*e[i].weight == *d[i].weight);
  }
}

TEST_CASE("population shares from counts") {
  PopulationTable t({{"1", 1, 10}, {"1", 2, 30}, {"2", 1, 20}, {"2", 2, 40}});
  CHECK(t.p_area(1) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(t.p_area(2) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(t.p_area_given_cell("1")[0] == doctest::Approx(0.25));
  CHECK(t.p_area_given_cell("2")[1] == doctest::Approx(40.0 / 60.0));
  CHECK(t.total() == 100.0);
  CHECK_THROWS_AS(t.p_area_given_cell("3"), OverlapError);
}

TEST_CASE("degenerate single cell single area") {
  PopulationTable t({{"1", 1, 5}});
  CHECK(t.p_area(1) == 1.0);
  CHECK(t.p_area_given_cell("1")[0] == 1.0);
}

TEST_CASE("area with zero total count is an overlap error") {
  CHECK_THROWS_AS(PopulationTable({{"1", 1, 10}, {"1", 2, 0}}), OverlapError);
  CHECK_THROWS_AS(PopulationTable({{"1", 1, 10}}, 2), OverlapError);
}

TEST_CASE("random population tables are normalized") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cnt(1, 1000);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<PopulationCell> cells;
    for (int c = 1; c <= 7; ++c) {
      for (int j = 1; j <= 5; ++j) cells.push_back({std::to_string(c), j, static_cast<double>(cnt(rng))});
    }
    PopulationTable t(cells);
    double s = 0.0;
    for (double p : t.p_area()) s += p;
    CHECK(std::fabs(s - 1.0) < 1e-12);
    for (const auto& k : t.cell_keys()) {
      double r = 0.0;
      for (double p : t.p_area_given_cell(k)) r += p;
      CHECK(std::fabs(r - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("population csv with p_sample") {
  auto path = testutil::temp_file("pop.csv", "cell_id,area,count,p_sample\n1,1,10,0.1\n1,2,30,0.1\n2,1,20,0.2\n2,2,40,0.2\n");
  auto t = load_population_csv(path, CovariateCellScheme::passthrough(1));
  CHECK(t.p_area(1) == doctest::Approx(0.3));
  CHECK(t.p_sample("2").value() == 0.2);
  auto bad = testutil::temp_file("pop_bad.csv", "cell_id,area,count\n1,1,-3\n");
  CHECK_THROWS_AS(load_population_csv(bad, CovariateCellScheme::passthrough(1)), InputError);
  auto zero = testutil::temp_file("pop_zero.csv", "cell_id,area,count\n1,1,3\n1,2,0\n");
  CHECK_THROWS_AS(load_population_csv(zero, CovariateCellScheme::passthrough(1)), OverlapError);
  auto dims = testutil::temp_file("pop_dims.csv", "cell_id,area,count\n1:2,1,3\n");
  CHECK_THROWS_AS(load_population_csv(dims, CovariateCellScheme::passthrough(1)), InputError);
  auto incons = testutil::temp_file("pop_inc.csv", "cell_id,area,count,p_sample\n1,1,3,0.1\n1,2,3,0.2\n");
  CHECK_THROWS_AS(load_population_csv(incons, CovariateCellScheme::passthrough(1)), InputError);
}

TEST_CASE("cell binning with right-closed intervals") {
  auto s = CovariateCellScheme::from_cuts({{-1.0, 0.0, 1.0}});
  CHECK(s.bin(0, 0.0) == 2);
  CHECK(s.bin(0, -5.0) == 1);
  CHECK(s.bin(0, -1.0) == 1);
  CHECK(s.bin(0, 0.5) == 3);
  CHECK(s.bin(0, 1.0) == 3);
  CHECK(s.bin(0, 7.0) == 4);
  const std::vector<double> x{0.0};
  CHECK(cell_of(x, s) == "2");
  CHECK(cell_of(x, s) == cell_of(x, s));
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(cell_of(bad, s), InputError);
  const std::vector<double> two{0.0, 1.0};
  CHECK_THROWS_AS(cell_of(two, s), InputError);
  CHECK_THROWS_AS(CovariateCellScheme::from_cuts({{1.0, 0.0}}), InputError);
}

TEST_CASE("bins partition the line") {
  auto s = CovariateCellScheme::from_cuts({{-2.0, -0.5, 0.3, 4.0}});
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double v = nd(rng);
    const int b = s.bin(0, v);
    const auto& cuts = s.dimensions()[0].cuts;
    const double lo = b == 1 ? -INFINITY : cuts[static_cast<std::size_t>(b - 2)];
    const double hi = b == 5 ? INFINITY : cuts[static_cast<std::size_t>(b - 1)];
    CHECK(v > lo);
    CHECK(v <= hi);
  }
}

TEST_CASE("deciles and pass-through") {
  std::vector<double> col;
  for (int i = 1; i <= 100; ++i) col.push_back(i);
  auto s = CovariateCellScheme::deciles({col});
  CHECK(s.dimensions()[0].cuts.size() == 9);
  CHECK(s.bin(0, 1.0) == 1);
  CHECK(s.bin(0, 100.0) == 10);
  auto ties = CovariateCellScheme::deciles({std::vector<double>(50, 3.0)});
  CHECK(ties.dimensions()[0].cuts.size() == 1);
  auto p = CovariateCellScheme::passthrough(2);
  const std::vector<double> x{3.0, 1.0};
  CHECK(cell_of(x, p) == "3:1");
  const std::vector<double> frac{3.5, 1.0};
  CHECK_THROWS_AS(cell_of(frac, p), InputError);
}
