#include "doctest.h"

#include <cmath>

#include "hebb/errors.hpp"
#include "hebb/hebbian.hpp"
#include "oracles.hpp"

using namespace hebb;

namespace {

constexpr HebbRule kRules[] = {HebbRule::PlainHebb, HebbRule::Instar, HebbRule::Oja};

PlasticityBatch make_batch(const Tensor4& x, const WeightTensor& w, const Tensor4& y) {
  return PlasticityBatch{x, conv2d_valid(x, w), y};
}

PlasticityBatch random_batch(Rng& rng, const WeightTensor& w, int n, int h, int wd) {
  const Tensor4 x = oracle::random_tensor(Shape4{n, w.in_channels(), h, wd}, rng);
  const Shape4 ys{n, w.out_channels(), h - w.kernel_h() + 1, wd - w.kernel_w() + 1};
  return make_batch(x, w, oracle::random_binary(ys, rng));
}

// Sum of -y_real * s(w), with s the surrogate written out in double from the
// rule formulas: the loss with dL/ds frozen at its overwritten value.
double linearized_loss(HebbRule rule, const Tensor4& x, const std::vector<double>& w, const Shape4& ws,
                       const Tensor4& y) {
  const int fan = ws.c * ws.h * ws.w;
  double acc = 0;
  for (int b = 0; b < y.batch(); ++b)
    for (int o = 0; o < y.channels(); ++o) {
      double sq = 0;
      for (int k = 0; k < fan; ++k) sq += w[o * fan + k] * w[o * fan + k];
      for (int i = 0; i < y.height(); ++i)
        for (int j = 0; j < y.width(); ++j) {
          const double yy = y(b, o, i, j);
          double pre = 0;
          for (int c = 0; c < ws.c; ++c)
            for (int u = 0; u < ws.h; ++u)
              for (int v = 0; v < ws.w; ++v) pre += w[((o * ws.c + c) * ws.h + u) * ws.w + v] * x(b, c, i + u, j + v);
          double sur = pre;
          if (rule == HebbRule::Instar) sur -= 0.5 * sq;
          if (rule == HebbRule::Oja) sur -= 0.5 * sq * yy;
          acc += -yy * sur;
        }
    }
  return acc;
}

}  // namespace

TEST_CASE("surrogate_value") {
  Rng rng(1);
  WeightTensor w = oracle::random_weights(Shape4{3, 2, 2, 2}, rng);
  for (int o = 0; o < 3; ++o) {
    const double n = w.filter_norm(o);
    for (float& v : w.filter(o)) v = static_cast<float>(v / n);
  }
  const Tensor4 preact = oracle::random_tensor(Shape4{2, 3, 4, 4}, rng);
  const Tensor4 y = oracle::random_binary(preact.shape(), rng);

  CHECK(surrogate_value(HebbRule::PlainHebb, preact, w, y) == preact);

  const Tensor4 instar = surrogate_value(HebbRule::Instar, preact, w, y);
  for (std::size_t k = 0; k < preact.size(); ++k) CHECK(instar.data()[k] == doctest::Approx(preact.data()[k] - 0.5));

  const Tensor4 zeros(preact.shape(), 0.0f);
  CHECK(surrogate_value(HebbRule::Oja, preact, w, zeros) == preact);

  CHECK_THROWS_AS(surrogate_value(HebbRule::Oja, preact, w, Tensor4(Shape4{2, 3, 4, 3})), ShapeError);
}

TEST_CASE("direct update: hand-evaluated scalar case") {
  // 1x1 conv, x = 2, w = 0.5, y = 1.
  const Tensor4 x(Shape4{1, 1, 1, 1}, 2.0f);
  const WeightTensor w(Shape4{1, 1, 1, 1}, 0.5f);
  const PlasticityBatch batch = make_batch(x, w, Tensor4(Shape4{1, 1, 1, 1}, 1.0f));
  CHECK(hebbian_update_direct(HebbRule::PlainHebb, batch, w).data()[0] == 2.0f);
  CHECK(hebbian_update_direct(HebbRule::Instar, batch, w).data()[0] == 1.5f);
  CHECK(hebbian_update_direct(HebbRule::Oja, batch, w).data()[0] == 1.5f);
  for (HebbRule r : kRules) {
    CHECK(hebbian_update_via_gradient(r, batch, w).data()[0] == hebbian_update_direct(r, batch, w).data()[0]);
  }
}

TEST_CASE("no winners, no plasticity") {
  Rng rng(2);
  const WeightTensor w = oracle::random_weights(Shape4{4, 2, 3, 3}, rng);
  const Tensor4 x = oracle::random_tensor(Shape4{2, 2, 6, 6}, rng);
  const PlasticityBatch batch = make_batch(x, w, Tensor4(Shape4{2, 4, 4, 4}, 0.0f));
  for (HebbRule r : kRules) {
    for (float v : oracle::values(hebbian_update_direct(r, batch, w))) CHECK(v == 0.0f);
    for (float v : oracle::values(hebbian_update_via_gradient(r, batch, w))) CHECK(v == 0.0f);
  }
}

TEST_CASE("direct update matches the raw-index loop oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const WeightTensor w = oracle::random_weights(Shape4{3, 2, 3, 2}, rng);
    const PlasticityBatch b = random_batch(rng, w, 2, 5, 6);
    for (HebbRule r : kRules) {
      const std::vector<double> ref = oracle::hebb_update_loops(r, b.x, b.y_real, w);
      CHECK(oracle::rel_diff(hebbian_update_direct(r, b, w).data(), ref) < 1e-6);
    }
  }
}

TEST_CASE("gradient path equals direct path") {
  Rng rng(4);
  for (int trial = 0; trial < 25; ++trial) {
    const int cin = 1 + static_cast<int>(rng.below(4));
    const int cout = 1 + static_cast<int>(rng.below(5));
    const int k = 1 + static_cast<int>(rng.below(4));
    const WeightTensor w = oracle::random_weights(Shape4{cout, cin, k, k}, rng);
    const PlasticityBatch b = random_batch(rng, w, 1 + static_cast<int>(rng.below(3)), k + 3, k + 2);
    for (HebbRule r : kRules) {
      CHECK(oracle::rel_diff(hebbian_update_via_gradient(r, b, w).data(), hebbian_update_direct(r, b, w).data()) <
            1e-5);
    }
  }
}

TEST_CASE("plain Hebb at a single position is y * x_patch exactly") {
  Rng rng(5);
  const WeightTensor w = oracle::random_weights(Shape4{2, 3, 3, 3}, rng);
  const Tensor4 x = oracle::random_tensor(Shape4{1, 3, 3, 3}, rng);
  Tensor4 y(Shape4{1, 2, 1, 1}, 0.0f);
  y(0, 1, 0, 0) = 1.0f;
  const WeightTensor d = hebbian_update_via_gradient(HebbRule::PlainHebb, make_batch(x, w, y), w);
  for (float v : d.filter(0)) CHECK(v == 0.0f);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(d.filter(1)[k] == x.data()[k]);
}

TEST_CASE("gradient matches central finite differences of the surrogate loss") {
  Rng rng(6);
  for (HebbRule rule : {HebbRule::PlainHebb, HebbRule::Instar, HebbRule::Oja}) {
    for (int trial = 0; trial < 5; ++trial) {
      const WeightTensor w = oracle::random_weights(Shape4{2, 2, 2, 2}, rng);
      const PlasticityBatch b = random_batch(rng, w, 2, 4, 4);
      const WeightTensor delta = hebbian_update_via_gradient(rule, b, w);
      std::vector<double> wd(w.data().begin(), w.data().end());
      const double h = 1e-4;
      for (std::size_t k = 0; k < wd.size(); ++k) {
        const double orig = wd[k];
        wd[k] = orig + h;
        const double up = linearized_loss(rule, b.x, wd, w.shape(), b.y_real);
        wd[k] = orig - h;
        const double down = linearized_loss(rule, b.x, wd, w.shape(), b.y_real);
        wd[k] = orig;
        const double fd = -(up - down) / (2 * h);
        CHECK(std::abs(fd - delta.data()[k]) <= 1e-3 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("library surrogate agrees with the written-out formula") {
  Rng rng(12);
  const WeightTensor w = oracle::random_weights(Shape4{2, 2, 2, 2}, rng);
  const PlasticityBatch b = random_batch(rng, w, 2, 4, 4);
  const std::vector<double> wd(w.data().begin(), w.data().end());
  for (HebbRule rule : kRules) {
    const Tensor4 s = surrogate_value(rule, b.preact, w, b.y_real);
    double lib = 0;
    for (std::size_t k = 0; k < s.size(); ++k) lib += -double(b.y_real.data()[k]) * s.data()[k];
    CHECK(lib == doctest::Approx(linearized_loss(rule, b.x, wd, w.shape(), b.y_real)).epsilon(1e-5));
  }
}

TEST_CASE("instar is stationary when every winning patch equals the filter") {
  Rng rng(7);
  const WeightTensor w = oracle::random_weights(Shape4{1, 3, 3, 3}, rng);
  const Tensor4 x(Shape4{1, 3, 3, 3}, std::vector<float>(w.data().begin(), w.data().end()));
  const PlasticityBatch b = make_batch(x, w, Tensor4(Shape4{1, 1, 1, 1}, 1.0f));
  for (float v : oracle::values(hebbian_update_via_gradient(HebbRule::Instar, b, w))) CHECK(v == 0.0f);
  for (float v : oracle::values(hebbian_update_direct(HebbRule::Instar, b, w))) CHECK(v == 0.0f);
}

TEST_CASE("updates sum over the batch") {
  Rng rng(8);
  const WeightTensor w = oracle::random_weights(Shape4{3, 2, 2, 2}, rng);
  const PlasticityBatch one = random_batch(rng, w, 1, 5, 5);

  Tensor4 x2(Shape4{2, 2, 5, 5});
  Tensor4 y2(Shape4{2, 3, 4, 4});
  for (int b = 0; b < 2; ++b) {
    std::copy(one.x.data().begin(), one.x.data().end(), x2.item(b).begin());
    std::copy(one.y_real.data().begin(), one.y_real.data().end(), y2.item(b).begin());
  }
  const PlasticityBatch two = make_batch(x2, w, y2);
  for (HebbRule r : kRules) {
    const WeightTensor d1 = hebbian_update_via_gradient(r, one, w);
    const WeightTensor d2 = hebbian_update_via_gradient(r, two, w);
    for (std::size_t k = 0; k < d1.size(); ++k) CHECK(d2.data()[k] == doctest::Approx(2.0 * d1.data()[k]));
  }

  SUBCASE("and are invariant to batch permutation") {
    const PlasticityBatch b = random_batch(rng, w, 3, 5, 5);
    const std::vector<int> perm = {2, 0, 1};
    Tensor4 xp(b.x.shape()), yp(b.y_real.shape());
    for (int i = 0; i < 3; ++i) {
      std::copy(b.x.item(perm[i]).begin(), b.x.item(perm[i]).end(), xp.item(i).begin());
      std::copy(b.y_real.item(perm[i]).begin(), b.y_real.item(perm[i]).end(), yp.item(i).begin());
    }
    for (HebbRule r : kRules) {
      CHECK(oracle::rel_diff(hebbian_update_via_gradient(r, make_batch(xp, w, yp), w).data(),
                             hebbian_update_via_gradient(r, b, w).data()) < 1e-6);
    }
  }
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(9);
  const WeightTensor w = oracle::random_weights(Shape4{2, 2, 3, 3}, rng);
  PlasticityBatch b = random_batch(rng, w, 1, 5, 5);
  b.y_real = Tensor4(Shape4{1, 2, 2, 3});
  CHECK_THROWS_AS(hebbian_update_direct(HebbRule::Instar, b, w), ShapeError);
  CHECK_THROWS_AS(hebbian_update_via_gradient(HebbRule::Instar, b, w), ShapeError);
}

TEST_CASE("rule names round-trip") {
  for (HebbRule r : kRules) CHECK(parse_hebb_rule(to_string(r)) == r);
  CHECK_FALSE(parse_hebb_rule("bcm").has_value());
}

TEST_CASE("oja_fixed_point_demo") {
  SUBCASE("rank-1 data along e1") {
    Rng rng(10);
    std::vector<std::vector<double>> data;
    for (int i = 0; i < 500; ++i) data.push_back({rng.normal(), 0.0, 0.0});
    const std::vector<double> w = oja_fixed_point_demo(data, 5000, 1e-2);
    const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    CHECK(std::abs(w[0]) / n > 0.999);
  }
  SUBCASE("anisotropic Gaussian aligns with the leading eigenvector") {
    Rng rng(11);
    std::vector<std::vector<double>> data;
    Eigen::MatrixXd rows(10000, 2);
    for (int i = 0; i < 10000; ++i) {
      data.push_back({std::sqrt(3.0) * rng.normal(), rng.normal()});
      rows(i, 0) = data.back()[0];
      rows(i, 1) = data.back()[1];
    }
    const Eigen::VectorXd lead = oracle::power_iteration(oracle::centered_covariance(rows));
    const std::vector<double> w = oja_fixed_point_demo(data, 10000, 1e-3);
    const double n = std::hypot(w[0], w[1]);
    CHECK(std::abs(w[0] * lead(0) + w[1] * lead(1)) / n > 0.998);
    CHECK(std::abs(n - 1.0) < 0.05);
  }
  CHECK_THROWS_AS(oja_fixed_point_demo({}, 10, 0.01), DataError);
}
