#include "unrisk/models.hpp"

#include "support/oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace unrisk;

namespace {

ViewLossModel tiny_logistic(int k, std::array<int, 3> dims, Vec theta) {
  return ViewLossModel::logistic(k, dims, std::move(theta));
}

Views zero_views(const ViewLossModel& m) {
  return {Vec::Zero(std::max(0, m.view_dim(0))), Vec::Zero(std::max(0, m.view_dim(1))),
          Vec::Zero(std::max(0, m.view_dim(2)))};
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("logistic loss vector at theta = 0 is zero") {
  auto m = tiny_logistic(3, {2, 1, 2}, Vec::Zero(15));
  Vec x(2);
  x << 0.7, -1.3;
  CHECK(m.loss_vector(x, 0).isZero(0.0));
}

TEST_CASE("block one-hot embedding picks the per-class theta block") {
  Vec theta(2);
  theta << 1.0, 2.0;
  auto m = tiny_logistic(2, {1, 0, 0}, theta);
  Vec x(1);
  x << 1.0;
  const Vec h = m.loss_vector(x, 0);
  CHECK(h[0] == doctest::Approx(1.0));
  CHECK(h[1] == doctest::Approx(2.0));
}

TEST_CASE("modified hinge loss vector from per-view scores (0, 1)") {
  Vec theta(2);
  theta << 0.0, 1.0;
  auto m = ViewLossModel::modified_hinge(2, {1, 0, 0}, theta);
  Vec x(1);
  x << 1.0;
  const Vec h = m.loss_vector(x, 0);
  CHECK(h[0] == doctest::Approx(-2.0));
  CHECK(h[1] == doctest::Approx(0.0));
}

TEST_CASE("base term") {
  SUBCASE("uniform softmax: all scores zero, k = 3") {
    auto m = tiny_logistic(3, {1, 1, 1}, Vec::Zero(9));
    CHECK(m.base_term(zero_views(m)) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("modified hinge has A identically zero") {
    auto m = ViewLossModel::modified_hinge(3, {2, 2, 2}, Vec::Random(18));
    Views x = {Vec::Random(2), Vec::Random(2), Vec::Random(2)};
    CHECK(m.base_term(x) == 0.0);
  }
  SUBCASE("log-sum-exp identity at total scores (10, 10)") {
    Vec theta(2);
    theta << 10.0, 10.0;
    auto m = tiny_logistic(2, {1, 0, 0}, theta);
    Views x = {Vec::Ones(1), Vec(0), Vec(0)};
    CHECK(m.base_term(x) == doctest::Approx(10.0 + std::log(2.0)).epsilon(1e-13));
  }
  SUBCASE("extreme scores do not overflow") {
    Vec theta(2);
    theta << 900.0, -900.0;
    auto m = tiny_logistic(2, {1, 0, 0}, theta);
    Views x = {Vec::Ones(1), Vec(0), Vec(0)};
    CHECK(m.base_term(x) == doctest::Approx(900.0).epsilon(1e-12));
  }
}

TEST_CASE("logistic gradient equals the feature matrix, independent of theta") {
  Rng rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto m = tiny_logistic(3, {2, 2, 1}, Vec::Random(15));
  for (int v = 0; v < 3; ++v) {
    Vec x(m.view_dim(v));
    for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
    CHECK((m.grad_loss_vector(x, v) - m.features(x, v)).norm() == doctest::Approx(0.0));
    const Vec other = Vec::Random(15);
    CHECK((m.with_theta(other).grad_loss_vector(x, v) - m.features(x, v)).norm() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("gradients match central finite differences") {
  Rng rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec theta(8);
    for (int i = 0; i < 8; ++i) theta[i] = gauss(rng);
    auto m = tiny_logistic(2, {2, 1, 1}, theta);
    for (int v = 0; v < 3; ++v) {
      Vec x(m.view_dim(v));
      for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
      const Mat g = m.grad_loss_vector(x, v);
      const Mat fd = oracle::fd_loss_gradient(m, x, v);
      CHECK((g - fd).norm() <= 1e-5 * (1.0 + fd.norm()));
    }
  }
}

TEST_CASE("constant d = 1 features give the constant column") {
  Vec c(3);
  c << 0.5, -1.0, 2.0;
  auto feat = [c](const Vec&) { return Mat(c); };
  auto m = ViewLossModel::with_features(ModelKind::Logistic, 3, 1, {feat, feat, feat},
                                        {1, 1, 1}, Vec::Ones(1));
  const Mat g = m.grad_loss_vector(Vec::Zero(1), 0);
  CHECK((g - Mat(c)).norm() == doctest::Approx(0.0));
}

TEST_CASE("builders") {
  SUBCASE("logistic with zero parameters has A = log 2 everywhere") {
    auto m = tiny_logistic(2, {2, 2, 2}, Vec::Zero(12));
    for (int trial = 0; trial < 5; ++trial) {
      Views x = {Vec::Random(2), Vec::Random(2), Vec::Random(2)};
      CHECK(m.base_term(x) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
  }
  SUBCASE("additive scorer over fixed tables reproduces softmax log loss") {
    // per-view score tables indexed by a single integer input
    Mat tables[3];
    Rng rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& t : tables) {
      t = Mat(4, 3);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = gauss(rng);
    }
    std::array<std::function<Vec(const Vec&)>, 3> scorers;
    for (int v = 0; v < 3; ++v) {
      const Mat t = tables[v];
      scorers[v] = [t](const Vec& x) { return Vec(t.row(static_cast<int>(x[0])).transpose()); };
    }
    auto m = ViewLossModel::additive_scorer(3, scorers);
    Views x = {Vec::Constant(1, 2.0), Vec::Constant(1, 0.0), Vec::Constant(1, 3.0)};
    Vec total = tables[0].row(2) + tables[1].row(0) + tables[2].row(3);
    for (int y = 0; y < 3; ++y) {
      const double expected = log_sum_exp(total) - total[y];
      CHECK(m.loss(x, y) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  SUBCASE("unknown kind and bad dimensions are rejected") {
    CHECK_THROWS_AS(kind_from_name("bogus"), InputError);
    CHECK_THROWS_AS(tiny_logistic(1, {1, 1, 1}, Vec::Zero(3)), InputError);
    CHECK_THROWS_AS(tiny_logistic(2, {1, 1, 1}, Vec::Zero(5)), InputError);
  }
}

TEST_CASE("additive identity L = A - sum_v f_v on random instances") {
  Rng rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> pick_y(0, 2);
  Vec theta(9);
  for (int trial = 0; trial < 1000; ++trial) {
    for (int i = 0; i < 9; ++i) theta[i] = gauss(rng);
    const bool hinge = trial % 2 == 0;
    auto m = hinge ? ViewLossModel::modified_hinge(3, {1, 1, 1}, theta)
                   : tiny_logistic(3, {1, 1, 1}, theta);
    Views x = {Vec::Zero(1), Vec::Zero(1), Vec::Zero(1)};
    for (int v = 0; v < 3; ++v) x[v][0] = gauss(rng);
    const int y = pick_y(rng);
    double f_sum = 0.0;
    for (int v = 0; v < 3; ++v) f_sum += m.loss_vector(x[v], v)[y];
    const double lhs = m.loss(x, y);
    const double rhs = m.base_term(x) - f_sum;
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("logistic normalization: sum_j exp(sum_v h_v - A) = 1") {
  Rng rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec theta(8);
  for (int trial = 0; trial < 200; ++trial) {
    for (int i = 0; i < 8; ++i) theta[i] = 3.0 * gauss(rng);
    auto m = tiny_logistic(2, {2, 1, 1}, theta);
    Views x = {Vec::Random(2), Vec::Random(1), Vec::Random(1)};
    Vec total = Vec::Zero(2);
    for (int v = 0; v < 3; ++v) total += m.loss_vector(x[v], v);
    const double a = m.base_term(x);
    CHECK(std::abs((total.array() - a).exp().sum() - 1.0) <= 1e-10);
  }
}

TEST_CASE("JSON descriptor round-trip") {
  Vec theta = Vec::LinSpaced(12, -1.0, 1.0);
  auto m = tiny_logistic(2, {2, 2, 2}, theta);
  const auto j = m.to_json();
  CHECK(j.at("kind") == "logistic");
  const auto back = ViewLossModel::from_json(j);
  CHECK(back.k() == 2);
  CHECK(back.d() == 12);
  CHECK((back.theta() - theta).norm() == doctest::Approx(0.0));
  Views x = {Vec::Random(2), Vec::Random(2), Vec::Random(2)};
  CHECK(back.loss(x, 1) == doctest::Approx(m.loss(x, 1)));
}

TEST_CASE("input errors") {
  auto m = tiny_logistic(2, {2, 1, 1}, Vec::Zero(8));
  CHECK_THROWS_AS(m.loss_vector(Vec::Zero(3), 0), InputError);  // dimension mismatch
  CHECK_THROWS_AS(m.loss_vector(Vec::Zero(2), 5), InputError);  // bad view index
  Vec bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(m.loss_vector(bad, 0), NumericError);
}

TEST_SUITE_END();
