#include <gtest/gtest.h>

#include <cmath>

#include "causalfm/error.hpp"
#include "causalfm/learners.hpp"
#include "causalfm/rng.hpp"
#include "test_util.hpp"

using namespace causalfm;
using causalfm::fixtures::make_dataset;

namespace {

// Noiseless y = 1 + x1 - 2 x2 + a (0.5 + x1).
Dataset realizable(std::size_t n, std::uint64_t seed, double treated_share = 0.5) {
  Rng rng(seed);
  std::vector<std::vector<double>> x;
  std::vector<double> a, y;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = rng.normal(), x2 = rng.normal();
    const double t = rng.uniform() < treated_share ? 1.0 : 0.0;
    x.push_back({x1, x2});
    a.push_back(t);
    y.push_back(1.0 + x1 - 2.0 * x2 + t * (0.5 + x1));
  }
  return make_dataset(2, x, a, y);
}

QuerySet grid_queries() {
  QuerySet q;
  q.d_x = 2;
  for (double x1 : {-1.0, 0.0, 2.0}) {
    for (double x2 : {-0.5, 1.5}) q.x.insert(q.x.end(), {x1, x2});
  }
  return q;
}

}  // namespace

TEST(Ridge, RecoversLinearFunction) {
  RidgeRegressor r(1e-9);
  const std::vector<double> x{0, 0, 1, 0, 0, 1, 1, 1, 2, 3};
  std::vector<double> y;
  for (std::size_t i = 0; i < 5; ++i) y.push_back(3.0 + 2.0 * x[2 * i] - x[2 * i + 1]);
  r.fit(x, 2, y);
  EXPECT_NEAR(r.intercept(), 3.0, 1e-6);
  EXPECT_NEAR(r.weights()[0], 2.0, 1e-6);
  EXPECT_NEAR(r.predict(std::vector<double>{5, 5}), 8.0, 1e-6);
}

TEST(Knn, AveragesNearestWithIndexTieBreak) {
  KnnRegressor r(2);
  r.fit(std::vector<double>{0, 1, 1, 5}, 1, std::vector<double>{10, 20, 30, 40});
  // Distances from 1: 1, 0, 0, 4 -> rows 1 and 2.
  EXPECT_DOUBLE_EQ(r.predict(std::vector<double>{1}), 25.0);
  KnnRegressor big(10);
  big.fit(std::vector<double>{0, 1}, 1, std::vector<double>{2, 4});
  EXPECT_DOUBLE_EQ(big.predict(std::vector<double>{7}), 3.0);
}

TEST(TLearner, RealizableLinearIsExact) {
  const Dataset d = realizable(200, 1);
  const QuerySet q = grid_queries();
  const auto cate = t_learner(d, q, RegressorSpec::ridge(1e-10));
  for (std::size_t i = 0; i < q.m(); ++i) EXPECT_NEAR(cate[i], 0.5 + q.x[2 * i], 1e-6);
}

TEST(TLearner, ConstantOutcomeGivesZero) {
  const std::vector<std::vector<double>> x{{0}, {1}, {2}, {3}};
  const Dataset d = make_dataset(1, x, {0, 1, 0, 1}, {4, 4, 4, 4});
  QuerySet q{1, {0.5, 9.0}};
  for (const auto& spec : {RegressorSpec::ridge(), RegressorSpec::knn(2)}) {
    for (double c : t_learner(d, q, spec)) EXPECT_NEAR(c, 0.0, 1e-12);
  }
}

TEST(TLearner, EmptyArmNamesArm) {
  const Dataset d = make_dataset(1, {{0}, {1}}, {1, 1}, {1, 2});
  try {
    t_learner(d, QuerySet{1, {0.0}});
    FAIL();
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("control"), std::string::npos) << e.what();
  }
}

TEST(SLearner, FlagsLowOverlap) {
  const Dataset balanced = realizable(400, 2);
  EXPECT_FALSE(s_learner(balanced, grid_queries()).low_overlap);
  const Dataset skewed = realizable(400, 3, 0.02);
  EXPECT_TRUE(s_learner(skewed, grid_queries()).low_overlap);
}

TEST(SLearner, RidgeIsConstantEffect) {
  const Dataset d = realizable(300, 4);
  const auto r = s_learner(d, grid_queries());
  for (double c : r.cate) EXPECT_NEAR(c, r.cate.front(), 1e-9);
}

TEST(Learners, NonBinaryTreatmentRejected) {
  const Dataset d = make_dataset(1, {{0}, {1}, {2}}, {0, 0.5, 1}, {1, 2, 3});
  EXPECT_THROW(t_learner(d, QuerySet{1, {0.0}}), InputError);
}
