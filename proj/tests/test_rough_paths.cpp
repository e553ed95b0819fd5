#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "spme/rough_paths.hpp"

using namespace spme;

namespace {

SamplePath ramp_path(double slope, double T, double dt) {
  const std::size_t n = std::size_t(std::lround(T / dt));
  std::vector<double> v(n + 1);
  for (std::size_t i = 0; i <= n; ++i) v[i] = slope * double(i) * dt;
  return from_samples({v}, dt);
}

} // namespace

TEST_CASE("from_samples normalizes the start and rejects ragged input") {
  SamplePath p = from_samples({{0.0, 1.0, 2.0}}, 1.0);
  CHECK(p.n_channels() == 1);
  CHECK(p.n_steps() == 2);
  for (int i = 0; i <= 2; ++i) CHECK(p.channel(0)[i] == doctest::Approx(double(i)));

  SamplePath shifted = from_samples({{5.0, 6.5, 5.25}}, 0.5);
  CHECK(shifted.channel(0)[0] == 0.0);
  CHECK(shifted.channel(0)[1] == doctest::Approx(1.5));
  CHECK(shifted.channel(0)[2] == doctest::Approx(0.25));

  CHECK_THROWS_AS(from_samples({{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0, 3.0}}, 1.0), ParameterError);
  CHECK_THROWS_AS(from_samples({{0.0, 1.0}}, 0.0), ParameterError);
}

TEST_CASE("increments interpolate linearly and are additive") {
  SamplePath ramp = ramp_path(1.0, 1.0, 1.0 / 16.0);
  CHECK(ramp.increment(0.25, 0.75)[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(ramp.increment(0.3, 0.3)[0] == 0.0);
  CHECK_THROWS_AS(ramp.increment(0.0, 2.0), ParameterError);

  SamplePath rnd = sample_fbm(0.5, 1, 32, 1.0 / 32.0, 99);
  for (std::size_t a = 0; a <= 32; a += 4)
    for (std::size_t b = a; b <= 32; b += 4)
      for (std::size_t c = b; c <= 32; c += 4) {
        const double dt = rnd.dt();
        const double lhs = rnd.increment(a * dt, c * dt)[0];
        const double rhs = rnd.increment(a * dt, b * dt)[0] + rnd.increment(b * dt, c * dt)[0];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13).scale(1.0));
      }
}

TEST_CASE("modulus of continuity") {
  SamplePath ramp = ramp_path(1.0, 1.0, 1.0 / 16.0);
  CHECK(modulus_of_continuity(ramp, 0.25, 1.0) == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(modulus_of_continuity(ramp, 1.0 / 16.0, 1.0) ==
        doctest::Approx(1.0 / 16.0).epsilon(1e-13));

  SamplePath rnd = sample_fbm(0.3, 1, 64, 1.0 / 64.0, 5);
  double prev = 0.0;
  for (int lag = 1; lag <= 64; ++lag) {
    const double w = modulus_of_continuity(rnd, lag / 64.0, 1.0);
    CHECK(w >= prev);
    prev = w;
  }
  CHECK_THROWS_AS(modulus_of_continuity(ramp, 0.0, 1.0), ParameterError);
}

TEST_CASE("fbm generator determinism and basic conventions") {
  SamplePath a = sample_fbm(0.7, 2, 64, 1.0 / 64.0, 42);
  SamplePath b = sample_fbm(0.7, 2, 64, 1.0 / 64.0, 42);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i <= 64; ++i) CHECK(a.channel(k)[i] == b.channel(k)[i]);

  SamplePath c = sample_fbm(0.7, 2, 64, 1.0 / 64.0, 43);
  CHECK(c.channel(0)[64] != a.channel(0)[64]);

  SamplePath trivial = sample_fbm(0.5, 1, 0, 0.1, 1);
  CHECK(trivial.n_steps() == 0);
  CHECK(trivial.channel(0)[0] == 0.0);

  CHECK_THROWS_AS(sample_fbm(0.0, 1, 8, 0.1, 1), ParameterError);
  CHECK_THROWS_AS(sample_fbm(1.0, 1, 8, 0.1, 1), ParameterError);
  CHECK_THROWS_AS(sample_fbm(0.5, 1, 100, 1.0, 1), ParameterError); // past max horizon
}

TEST_CASE("fbm variance against the covariance oracle" * doctest::timeout(300)) {
  // Brownian case at the spec scale.
  {
    const std::size_t draws = 10000;
    FbmGenerator gen(0.5, 1024, 1.0 / 1024.0);
    std::mt19937_64 rng(1000);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      const auto ch = gen.draw_channel(rng);
      const double z1 = ch[1024];
      s1 += z1;
      s2 += z1 * z1;
    }
    const double var = s2 / draws - (s1 / draws) * (s1 / draws);
    const double se = std::sqrt(2.0 / double(draws - 1));
    CHECK(std::abs(var - 1.0) <= 3.0 * se);
  }
  // H = 0.75 at t = 0.5: E[z_t^2] = t^{2H}.
  {
    const std::size_t draws = 10000;
    const double expected = std::pow(0.5, 1.5);
    FbmGenerator gen(0.75, 32, 1.0 / 32.0);
    std::mt19937_64 rng(5000);
    double s2 = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
      const double z = gen.draw_channel(rng)[16];
      s2 += z * z;
    }
    const double mean = s2 / draws;
    const double se = expected * std::sqrt(2.0 / double(draws));
    CHECK(std::abs(mean - expected) <= 3.0 * se);
  }
}

TEST_CASE("fbm channels are uncorrelated") {
  const std::size_t draws = 10000;
  FbmGenerator gen(0.5, 16, 1.0 / 16.0);
  std::mt19937_64 rng(777);
  double sxy = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    SamplePath p = gen.draw(2, rng);
    const double x = p.channel(0)[16], y = p.channel(1)[16];
    sxy += x * y;
    sx += x;
    sy += y;
  }
  const double cov = sxy / draws - (sx / draws) * (sy / draws);
  const double se = 1.0 / std::sqrt(double(draws)); // var(z_1) = 1 per channel
  CHECK(std::abs(cov) <= 3.0 * se);
}

TEST_CASE("mollified path identities") {
  const double dt = 1.0 / 32.0, eps = 0.25;

  SamplePath zero = from_samples({std::vector<double>(65, 0.0)}, dt);
  MollifiedPath mzero(zero, eps);
  for (double t : {0.0, 0.5, 1.3, 2.0}) {
    auto z = mzero.value(t);
    auto dz = mzero.derivative(t);
    CHECK(z[0] == 0.0);
    CHECK(dz[0] == 0.0);
  }

  // Linear ramp: the symmetric kernel kills the odd moment.
  SamplePath ramp = ramp_path(1.0, 2.0, dt);
  MollifiedPath mramp(ramp, eps);
  for (double t : {0.25, 0.5, 1.0, 1.75}) {
    auto z = mramp.value(t);
    auto dz = mramp.derivative(t);
    CHECK(z[0] == doctest::Approx(t).epsilon(1e-9));
    CHECK(dz[0] == doctest::Approx(1.0).epsilon(1e-8));
  }

  CHECK_THROWS_AS(MollifiedPath(ramp, 1.5 * dt), ParameterError);
}

TEST_CASE("mollification error is bounded by the modulus of continuity") {
  const double dt = 1.0 / 128.0;
  SamplePath p = sample_fbm(0.5, 1, 256, dt, 31); // horizon 2
  const double eps = 8.0 * dt;                    // node multiple
  MollifiedPath mp(p, eps);
  const double bound = modulus_of_continuity(p, eps, 2.0);
  double worst = 0.0;
  for (std::size_t i = 16; i + 16 <= 256; ++i) {
    const double t = double(i) * dt;
    worst = std::max(worst, std::abs(mp.value(t)[0] - p.at(t)[0]));
  }
  CHECK(worst <= bound * (1.0 + 1e-12));
}

TEST_CASE("mollification is linear in the path") {
  const double dt = 1.0 / 64.0, eps = 0.125;
  SamplePath p = sample_fbm(0.5, 1, 128, dt, 3);
  SamplePath q = sample_fbm(0.5, 1, 128, dt, 4);
  std::vector<double> combo(129);
  for (std::size_t i = 0; i <= 128; ++i)
    combo[i] = 2.0 * p.channel(0)[i] - 0.5 * q.channel(0)[i];
  MollifiedPath mp(p, eps), mq(q, eps), mc(from_samples({combo}, dt), eps);
  for (double t : {0.2, 0.7, 1.4}) {
    const double lhs = mc.value(t)[0];
    const double rhs = 2.0 * mp.value(t)[0] - 0.5 * mq.value(t)[0];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13).scale(1.0));
  }
}

TEST_CASE("fundamental theorem for the mollified derivative") {
  const double dt = 1.0 / 64.0, eps = 0.125;
  SamplePath p = sample_fbm(0.5, 1, 128, dt, 8);
  MollifiedPath mp(p, eps);
  const double s = 0.25, t = 1.5;
  const std::size_t nq = 2000;
  double integral = 0.0;
  for (std::size_t i = 0; i < nq; ++i) {
    const double r = s + (t - s) * (double(i) + 0.5) / double(nq);
    integral += mp.derivative(r)[0];
  }
  integral *= (t - s) / double(nq);
  CHECK(integral == doctest::Approx(mp.value(t)[0] - mp.value(s)[0]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("path csv round trip is bit exact") {
  SamplePath p = sample_fbm(0.3, 2, 48, 1.0 / 48.0, 12);
  std::ostringstream out;
  export_path_csv(p, out);
  std::istringstream in(out.str());
  SamplePath q = import_path_csv(in);
  CHECK(q.n_channels() == 2);
  CHECK(q.dt() == doctest::Approx(p.dt()).epsilon(1e-15));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i <= 48; ++i) CHECK(q.channel(k)[i] == p.channel(k)[i]);
}
