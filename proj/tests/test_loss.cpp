#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "geoinv/loss.hpp"
#include "geoinv/rng.hpp"

using namespace geoinv;

namespace {

OccupancyField field_from(std::vector<double> v) {
  OccupancyField f = OccupancyField::zeros(1, 1, static_cast<int>(v.size()));
  f.values = std::move(v);
  return f;
}

FieldMap map_from(std::vector<double> v, const VoxelDomain& d) {
  const auto p = SensorPlane::make(0, 1, 0, static_cast<double>(v.size()), 1,
                                   static_cast<int>(v.size()), -0.5, d);
  FieldMap f = FieldMap::zeros(p);
  f.values = std::move(v);
  return f;
}

}  // namespace

TEST_CASE("dice basics") {
  const std::vector<double> a = {1.0, 0.0}, b = {1.0, 1.0};
  CHECK(dice(a, a) == doctest::Approx(1.0));
  CHECK(dice(a, b) == doctest::Approx(2.0 / 3.0));
  CHECK(dice(b, a) == dice(a, b));  // symmetric, bit-exact
  const std::vector<double> d1 = {1.0, 0.0, 0.0}, d2 = {0.0, 1.0, 1.0};
  CHECK(dice(d1, d2) == 0.0);
  const std::vector<double> z2 = {0.0, 0.0};
  CHECK(dice(z2, z2) == 1.0);  // identical empties by convention
  CHECK_THROWS_AS(dice(a, d1), std::invalid_argument);
}

TEST_CASE("dice range and scale law") {
  CounterRng rng(3);
  SUBCASE("range [0,1] on random nonnegative vectors") {
    for (int t = 0; t < 200; ++t) {
      std::vector<double> a(16), b(16);
      for (auto& v : a) v = rng.next_double();
      for (auto& v : b) v = rng.next_double() < 0.3 ? 0.0 : rng.next_double();
      const double d = dice(a, b);
      CHECK(d >= 0.0);
      CHECK(d <= 1.0);
    }
  }
  SUBCASE("dice(c*a, a) = 2c/(1+c^2) for binary a") {
    std::vector<double> a(32, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.next_double() < 0.5 ? 1.0 : 0.0;
    a[0] = 1.0;  // nonzero
    for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      std::vector<double> ca(a);
      for (auto& v : ca) v *= c;
      const double expect = 2.0 * c / (1.0 + c * c);
      CHECK(std::abs(dice(ca, a) - expect) <= 1e-12);
    }
  }
}

TEST_CASE("soft dice gradient matches central differences") {
  CounterRng rng(17);
  std::vector<double> a(12), b(12);
  for (auto& v : a) v = 0.05 + 0.9 * rng.next_double();
  for (auto& v : b) v = rng.next_double() < 0.5 ? 1.0 : 0.0;
  std::vector<double> grad(a.size());
  dice_loss_grad(a, b, grad);
  const double h = 1e-6;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<double> ap(a), am(a);
    ap[i] += h;
    am[i] -= h;
    const double fd = ((1.0 - dice(ap, b)) - (1.0 - dice(am, b))) / (2.0 * h);
    CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("loss_separate") {
  const auto ones = field_from({1.0, 1.0, 0.0});
  const auto disj = field_from({0.0, 0.0, 1.0});
  CHECK(loss_separate({ones}, {ones}) == doctest::Approx(0.0));
  CHECK(loss_separate({ones}, {disj}) == doctest::Approx(1.0));
  CHECK(loss_separate({ones, ones}, {ones, disj}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loss_separate({ones}, {ones, disj}), std::invalid_argument);
}

TEST_CASE("loss_joint: reductions and decomposition invariant") {
  const auto x = field_from({1.0, 0.0, 0.0});
  const auto y = field_from({0.0, 1.0, 1.0});

  SUBCASE("alpha=0 reduces to the averaged separate losses") {
    const auto lb = loss_joint({x}, {y}, {y}, {y}, 0.0);
    CHECK(lb.total == doctest::Approx(0.5 * lb.loss_grav + 0.5 * lb.loss_mag).epsilon(1e-15));
    CHECK(lb.structural_term > 0.0);  // computed but unweighted
  }
  SUBCASE("perfect everywhere is zero for any alpha") {
    for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
      const auto lb = loss_joint({x}, {x}, {x}, {x}, alpha);
      CHECK(lb.total == doctest::Approx(0.0));
    }
  }
  SUBCASE("perfect separates, disjoint cross, alpha=1, batch 1 -> total 1") {
    const auto lb = loss_joint({x}, {x}, {y}, {y}, 1.0);
    CHECK(lb.loss_grav == doctest::Approx(0.0));
    CHECK(lb.loss_mag == doctest::Approx(0.0));
    CHECK(lb.structural_term == doctest::Approx(1.0));
    CHECK(lb.total == doctest::Approx(1.0));
  }
  SUBCASE("total decomposition holds to 1e-12 with random batches") {
    CounterRng rng(29);
    for (double alpha : {0.0, 0.3, 1.0}) {
      std::vector<OccupancyField> pg, tg, pm, tm;
      for (int k = 0; k < 4; ++k) {
        auto rnd = [&rng] {
          std::vector<double> v(9);
          for (auto& x2 : v) x2 = rng.next_double();
          return v;
        };
        pg.push_back(field_from(rnd()));
        tg.push_back(field_from(rnd()));
        pm.push_back(field_from(rnd()));
        tm.push_back(field_from(rnd()));
      }
      const auto lb = loss_joint(pg, tg, pm, tm, alpha);
      CHECK(std::abs(lb.total - (0.5 * lb.loss_grav + 0.5 * lb.loss_mag +
                                 alpha * lb.structural_term)) <= 1e-12);
      CHECK(lb.loss_grav >= 0.0);
      CHECK(lb.loss_mag >= 0.0);
      CHECK(lb.structural_term >= 0.0);
    }
  }
  SUBCASE("monotone in alpha when the structural term is positive") {
    double prev = -1.0;
    for (double alpha : {0.0, 0.5, 1.0, 1.5}) {
      const auto lb = loss_joint({x}, {x}, {y}, {y}, alpha);
      CHECK(lb.total > prev);
      prev = lb.total;
    }
  }
}

TEST_CASE("residual d1") {
  const auto d = VoxelDomain::make(0, 1, 0, 4, 0, 1, 1, 4, 1);
  const auto x = map_from({1.0, 2.0, -1.0, 0.5}, d);
  const auto y = map_from({0.0, 0.0, 0.0, 0.0}, d);
  CHECK(residual_d1(x, x) == 0.0);
  const double v1 = residual_d1(x, y);
  auto x2 = x;
  for (double& v : x2.values) v *= 2.0;
  CHECK(residual_d1(x2, y) == doctest::Approx(4.0 * v1).epsilon(1e-15));

  // independent-summation oracle (reverse order)
  CounterRng rng(31);
  auto a = map_from({0, 0, 0, 0}, d);
  auto b = map_from({0, 0, 0, 0}, d);
  for (auto& v : a.values) v = rng.uniform(-2, 2);
  for (auto& v : b.values) v = rng.uniform(-2, 2);
  double rev = 0.0;
  for (int i = static_cast<int>(a.values.size()) - 1; i >= 0; --i) {
    const double diff = a.values[i] - b.values[i];
    rev += diff * diff;
  }
  CHECK(residual_d1(a, b) == doctest::Approx(rev).epsilon(1e-14));
}

TEST_CASE("residual d2") {
  const auto d = VoxelDomain::make(0, 1, 0, 2, 0, 1, 1, 2, 1);
  const auto x = map_from({1.0, 0.0}, d);
  const auto y = map_from({1.0, 1.0}, d);
  CHECK(residual_d2(x, x) == 0.0);
  CHECK(residual_d2(x, y) == doctest::Approx(1.0 / 3.0));

  const auto d3 = VoxelDomain::make(0, 1, 0, 3, 0, 1, 1, 3, 1);
  const auto p = map_from({1.0, 0.0, 0.0}, d3);
  const auto q = map_from({0.0, 1.0, 1.0}, d3);
  CHECK(residual_d2(p, q) == doctest::Approx(1.0));

  // signed maps are shifted by the joint minimum before dice
  const auto s1 = map_from({-1.0, 0.0}, d);
  const auto s2 = map_from({-1.0, 0.0}, d);
  CHECK(residual_d2(s1, s2) == doctest::Approx(0.0));
  const double v = residual_d2(map_from({-1.0, 1.0}, d), map_from({1.0, -1.0}, d));
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}
