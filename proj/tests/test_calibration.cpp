#include <cmath>

#include <gtest/gtest.h>

#include "platctl/calibration.hpp"
#include "platctl/normal.hpp"

using namespace platctl;

namespace {

const Boundaries kCase1{{2.330, 2.197}, {0.777, 2.197}};
const Boundaries kCase2{{2.358, 2.223}, {0.786, 2.223}};
TrialDesign case1() { return common_start_design(3, 2, 43); }
TrialDesign case2() { return TrialDesign{3, 2, 43, {0, 0, 0, 43}, 1.0}; }

Calibration fixed(double c) {
  Calibration cal;
  cal.shape = {ShapeKind::triangular, c};
  cal.bounds = shape_boundaries(cal.shape, 2);
  return cal;
}

}  // namespace

TEST(Shapes, Triangular) {
  const Boundaries b = shape_boundaries({ShapeKind::triangular, 1.098565}, 2);
  EXPECT_NEAR(b.u(1), 2.330, 5e-4);
  EXPECT_NEAR(b.u(2), 2.197, 5e-4);
  EXPECT_NEAR(b.l(1), 0.777, 5e-4);
  EXPECT_EQ(b.l(2), b.u(2));
  for (double c : {0.5, 1.3}) {
    const Boundaries one = shape_boundaries({ShapeKind::triangular, c}, 1);
    EXPECT_DOUBLE_EQ(one.u(1), 2.0 * c);
    EXPECT_DOUBLE_EQ(one.l(1), 2.0 * c);
  }
}

TEST(Shapes, OBrienFleming) {
  const Boundaries b = shape_boundaries({ShapeKind::obrien_fleming, 2.0}, 2);
  EXPECT_NEAR(b.u(1), 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(b.u(2), 2.0, 1e-12);
  EXPECT_NEAR(b.l(1), -2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(b.l(2), 2.0, 1e-12);
}

TEST(Shapes, Parsing) {
  EXPECT_EQ(parse_shape("triangular"), ShapeKind::triangular);
  EXPECT_EQ(parse_shape("obrien-fleming"), ShapeKind::obrien_fleming);
  EXPECT_THROW(parse_shape("pocock"), DesignError);
  EXPECT_THROW(shape_boundaries({ShapeKind::triangular, -1.0}, 2), DesignError);
}

TEST(Fwer, SingleArmOneLook) {
  const TrialDesign d = common_start_design(1, 1, 10);
  EXPECT_NEAR(fwer(d, Boundaries{{1.6449}, {1.6449}}).value, 0.05, 1e-4);
}

TEST(Fwer, PublishedBoundaries) {
  FwerOptions o;
  o.mvn.abs_tol = 1e-5;
  const Probability a = fwer(case1(), kCase1, o);
  EXPECT_NEAR(a.value, 0.05, 5e-4);
  EXPECT_NEAR(fwer_by_control_change(case1(), kCase1, o).value, a.value, 3e-5);
  const Probability b = fwer(case2(), kCase2, o);
  EXPECT_NEAR(b.value, 0.05, 5e-4);
  EXPECT_NEAR(fwer_by_control_change(case2(), kCase2, o).value, b.value, 3e-5);
}

TEST(Fwer, FallsAsBoundariesRise) {
  FwerOptions o;
  o.mvn.abs_tol = 1e-5;
  double last = 1.0;
  for (double c : {0.8, 1.0, 1.2, 1.4}) {
    const double f = fwer(case1(), shape_boundaries({ShapeKind::triangular, c}, 2), o).value;
    EXPECT_LT(f, last);
    last = f;
  }
}

TEST(Calibrate, MedianForOneCoinFlip) {
  const Calibration c = calibrate_c(common_start_design(1, 1, 10), ShapeKind::triangular, 0.5);
  EXPECT_NEAR(c.bounds.u(1), 0.0, 1e-3);
  EXPECT_NEAR(c.fwer, 0.5, 5e-5);
}

TEST(Calibrate, SmallDesignHitsAlpha) {
  const TrialDesign d = common_start_design(2, 2, 20);
  for (ShapeKind k : {ShapeKind::triangular, ShapeKind::obrien_fleming}) {
    const Calibration c = calibrate_c(d, k, 0.025);
    EXPECT_NEAR(c.fwer, 0.025, 5e-5);
    EXPECT_NEAR(fwer(d, c.bounds).value, 0.025, 1e-4);
  }
}

TEST(Calibrate, RejectsBadAlpha) {
  EXPECT_THROW(calibrate_c(case1(), ShapeKind::triangular, 0.0), DesignError);
  EXPECT_THROW(calibrate_c(case1(), ShapeKind::triangular, 1.0), DesignError);
}

TEST(PairwisePower, Examples) {
  EXPECT_GE(pairwise_power(case1(), kCase1, 0.545), 0.90);
  EXPECT_GT(pairwise_power(case1(), kCase1, 5.0), 0.9999);
  EXPECT_LE(pairwise_power(case1(), kCase1, 0.0), 0.05);
  EXPECT_LT(pairwise_power(common_start_design(3, 2, 42), kCase1, 0.545), 0.90);
}

TEST(SampleSize, PublishedDesigns) {
  const SampleSize a = find_sample_size(template_of(case1()), fixed(1.098565), 0.9, 0.545);
  EXPECT_EQ(a.n, 43);
  EXPECT_EQ(a.total, 344);
  const SampleSize b = find_sample_size(template_of(case2()), fixed(1.111468), 0.9, 0.545);
  EXPECT_EQ(b.n, 43);
  EXPECT_EQ(b.total, 387);
}

TEST(SampleSize, FloorOfOne) {
  const SampleSize s = find_sample_size(template_of(common_start_design(1, 1, 1)), ShapeKind::triangular, 0.05, 0.5, 10.0);
  EXPECT_EQ(s.n, 1);
}

TEST(SampleSize, Template) {
  const DesignTemplate t = template_of(case2());
  EXPECT_EQ(t.entry_stages, (std::vector<long>{0, 0, 0, 1}));
  EXPECT_EQ(t.with_n(10).entry, (std::vector<long>{0, 0, 0, 10}));
  EXPECT_THROW(find_sample_size(t, fixed(1.1), 1.5, 0.5), DesignError);
  EXPECT_THROW(find_sample_size(t, fixed(1.1), 0.9, -0.5), DesignError);
}
