#include <doctest.h>

#include <cmath>
#include <vector>

#include "sdmh/adapt.hpp"
#include "sdmh/errors.hpp"
#include "sdmh/rng.hpp"

using namespace sdmh;

namespace {

AdaptConfig config_with(std::size_t window, std::size_t t_start, std::size_t t_end) {
  AdaptConfig c;
  c.window = window;
  c.t_start = t_start;
  c.t_end = t_end;
  c.initial_lambda = 1.0;
  return c;
}

// Feeds one window with `acc` accepts first, starting at iteration t.
void feed_window(AdaptState& s, const AdaptConfig& c, std::size_t& t, std::size_t acc) {
  for (std::size_t i = 0; i < c.window; ++i) record_step(s, c, t++, i < acc);
}

}  // namespace

TEST_CASE("sign convention") {
  CHECK(sgn_convention(0.3) == 1);
  CHECK(sgn_convention(-0.3) == -1);
  CHECK(sgn_convention(0.0) == 1);
}

TEST_CASE("first epoch only records") {
  auto c = config_with(10, 1, 1000);
  auto s = AdaptState::initial(c);
  std::size_t t = 1;
  feed_window(s, c, t, 7);
  CHECK(s.k == 1);
  CHECK(s.alpha_current == doctest::Approx(0.7));
  CHECK(s.lambda == 1.0);
}

TEST_CASE("epoch 2 step by substitution") {
  auto c = config_with(10, 1, 1000);
  auto s = AdaptState::initial(c);
  std::size_t t = 1;
  feed_window(s, c, t, 2);
  feed_window(s, c, t, 3);
  CHECK(s.k == 2);
  CHECK(std::log(s.lambda) == doctest::Approx(std::pow(2.0, -0.75) * 0.1).epsilon(1e-14));
  CHECK(std::log(s.lambda) == doctest::Approx(0.059460).epsilon(1e-5));
}

TEST_CASE("zero change in acceptance leaves lambda") {
  auto c = config_with(10, 1, 1000);
  auto s = AdaptState::initial(c);
  std::size_t t = 1;
  feed_window(s, c, t, 4);
  feed_window(s, c, t, 6);
  const double before = s.lambda;
  feed_window(s, c, t, 6);
  CHECK(s.lambda == before);
}

TEST_CASE("ten windows match a hand-stepped reference") {
  const std::vector<std::size_t> accepts{5, 9, 3, 3, 12, 20, 1, 0, 8, 15};
  auto c = config_with(20, 1, 100000);
  c.c = 1.3;
  c.delta = 0.8;
  auto s = AdaptState::initial(c);
  std::size_t t = 1;

  std::vector<double> ref{0.0};  // log lambda^(0)
  double prev_alpha = 0.0;
  for (std::size_t k = 1; k <= accepts.size(); ++k) {
    feed_window(s, c, t, accepts[k - 1]);
    const double alpha = accepts[k - 1] / 20.0;
    double next = ref.back();
    if (k >= 2) {
      const double diff = ref[ref.size() - 1] - ref[ref.size() - 2];
      const double sign = diff < 0 ? -1.0 : 1.0;
      next += 1.3 * std::pow(static_cast<double>(k), -0.8) * (alpha - prev_alpha) * sign;
      next = std::min(std::max(next, std::log(0.05)), std::log(10.0));
    }
    ref.push_back(next);
    prev_alpha = alpha;
    CHECK(s.k == k);
    CHECK(s.log_lambda.back() == next);
    CHECK(s.lambda == std::exp(next));
  }
  CHECK(s.log_lambda == ref);
}

TEST_CASE("windows only count inside [t_start, t_end) and freeze after") {
  auto c = config_with(10, 50, 95);
  auto s = AdaptState::initial(c);
  Rng rng(1);
  std::size_t epochs = 0;
  for (std::size_t t = 1; t <= 200; ++t) {
    const double before = s.lambda;
    epochs += record_step(s, c, t, rng.uniform() < 0.4) ? 1 : 0;
    if (t < 50) CHECK(s.t_window == 0);
    if (t >= 95) {
      CHECK(s.frozen);
      CHECK(s.lambda == before);
    }
  }
  // [50, 95) holds 45 steps: four full windows, the partial one is dropped
  CHECK(epochs == 4);
  CHECK(s.k == 4);
}

TEST_CASE("bounds and step magnitude") {
  auto c = config_with(5, 1, 100000);
  c.c = 5.0;
  c.lambda_min = 0.5;
  c.lambda_max = 2.0;
  auto s = AdaptState::initial(c);
  Rng rng(3);
  for (std::size_t t = 1; t < 20000; ++t) {
    const std::size_t k_before = s.k;
    const double log_before = std::log(s.lambda);
    record_step(s, c, t, rng.uniform() < (t % 700 < 350 ? 0.9 : 0.1));
    CHECK(s.lambda >= 0.5 - 1e-15);
    CHECK(s.lambda <= 2.0 + 1e-15);
    if (s.k != k_before && s.k >= 2)
      CHECK(std::fabs(std::log(s.lambda) - log_before) <= robbins_monro_step(5.0, 0.75, s.k) + 1e-15);
  }
}

TEST_CASE("hill climbing on a noiseless unimodal response") {
  // Acceptance is a deterministic function of lambda peaking at 0.6. With
  // noiseless windows nothing moves until the rate changes, so the first
  // window is fed a lower rate to start the climb.
  const double peak = std::log(0.6);
  auto rate = [&](double lambda) {
    const double z = std::log(lambda) - peak;
    return 0.9 * std::exp(-0.5 * z * z);
  };
  for (double start : {0.15, 2.5}) {
    auto c = config_with(10000, 1, 100000000);
    c.c = 4.0;
    c.initial_lambda = start;
    auto s = AdaptState::initial(c);
    std::size_t t = 1;
    bool reversed = false;
    double dist = INFINITY;
    for (int k = 1; k <= 300; ++k) {
      const double r = rate(s.lambda) - (k == 1 ? 0.3 : 0.0);
      feed_window(s, c, t, static_cast<std::size_t>(std::lround(r * c.window)));
      const std::size_t m = s.log_lambda.size();
      if (m >= 3) {
        const double d1 = s.log_lambda[m - 1] - s.log_lambda[m - 2];
        const double d0 = s.log_lambda[m - 2] - s.log_lambda[m - 3];
        if (d0 != 0 && d1 != 0 && (d0 > 0) != (d1 > 0)) reversed = true;
      }
      const double now = std::fabs(std::log(s.lambda) - peak);
      // quantised window rates allow a tiny wobble
      if (reversed) CHECK(now <= dist + 1e-3);
      dist = now;
    }
    CHECK(reversed);
    if (start < 0.6) CHECK(dist < 0.25);
  }
}

TEST_CASE("validation") {
  auto c = config_with(25, 100, 75);
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
  c = config_with(25, 100, 2000);
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
  c = config_with(25, 100, 750);
  c.delta = 0.5;
  CHECK_THROWS_AS(c.validate(1000), ConfigError);
  c.delta = 0.75;
  CHECK_NOTHROW(c.validate(1000));
  c.enabled = false;
  c.t_end = 5000;
  CHECK_NOTHROW(c.validate(1000));
}

TEST_CASE("random-walk scale update") {
  const auto sigma = SymmetricMatrix::identity(2);
  CHECK(adapt_rw_scale(sigma, 0.234, 0.234, 0.4).matrix() == sigma.matrix());
  CHECK(adapt_rw_scale(sigma, 1.0, 0.234, 0.4)(0, 0) == doctest::Approx(std::exp(0.4 * 0.766)));
}

TEST_CASE("scale adaptation reaches the target on a standard normal") {
  ScaleAdaptConfig c;
  c.t_end = 150000;
  ScaleAdaptState s;
  Rng rng(12);
  double x = 0;
  std::size_t acc = 0, tail = 0;
  for (std::size_t t = 1; t <= 200000; ++t) {
    const double prop = x + 5.0 * s.scale() * rng.normal();
    const bool a = std::log(rng.uniform_open()) < 0.5 * (x * x - prop * prop);
    if (a) x = prop;
    const double before = s.scale();
    record_scale_step(s, c, t, a);
    if (t > c.t_end) {
      CHECK(s.scale() == before);
      acc += a;
      ++tail;
    }
  }
  CHECK(s.frozen);
  CHECK(std::fabs(static_cast<double>(acc) / tail - 0.234) <= 0.05);
}
