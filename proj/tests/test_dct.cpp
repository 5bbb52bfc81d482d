#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "czt/dct.hpp"
#include "czt/rng.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_vector(czt::Rng& rng, int n, double lo = -10.0, double hi = 10.0) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = rng.next_range(lo, hi);
  return v;
}

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("forward transform of a constant vector has only the DC entry") {
  for (int n : {1, 3, 8, 100}) {
    const double c = 3.25;
    std::vector<double> x(static_cast<std::size_t>(n), c);
    auto alpha = czt::dct_forward(x);
    REQUIRE_THAT(alpha[0], WithinAbs(c * std::sqrt(static_cast<double>(n)), 1e-9));
    for (int j = 1; j < n; ++j) {
      REQUIRE_THAT(alpha[static_cast<std::size_t>(j)], WithinAbs(0.0, 1e-9));
    }
  }
}

TEST_CASE("length-1 transform is the identity") {
  auto alpha = czt::dct_forward({1.0});
  REQUIRE(alpha.size() == 1);
  REQUIRE_THAT(alpha[0], WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(czt::idct({1.0})[0], WithinAbs(1.0, 1e-15));
}

TEST_CASE("four-point transform matches direct evaluation of the formula") {
  // Pinned from a one-off evaluation of the N=4 sums for x = [1, 2, 3, 4].
  auto alpha = czt::dct_forward({1.0, 2.0, 3.0, 4.0});
  REQUIRE_THAT(alpha[0], WithinAbs(5.0, 1e-12));
  REQUIRE_THAT(alpha[1], WithinAbs(-2.230442497387663, 1e-12));
  REQUIRE_THAT(alpha[2], WithinAbs(0.0, 1e-12));
  REQUIRE_THAT(alpha[3], WithinAbs(-0.158512667781108, 1e-12));
}

TEST_CASE("inverse of a unit coefficient vector is the matching basis column") {
  // Pinned evaluation of sqrt(2/4) * cos(pi * (i + 0.5) / 4), i = 0..3.
  auto x = czt::idct({0.0, 1.0, 0.0, 0.0});
  REQUIRE_THAT(x[0], WithinAbs(0.653281482438188, 1e-12));
  REQUIRE_THAT(x[1], WithinAbs(0.270598050073099, 1e-12));
  REQUIRE_THAT(x[2], WithinAbs(-0.270598050073099, 1e-12));
  REQUIRE_THAT(x[3], WithinAbs(-0.653281482438188, 1e-12));
}

TEST_CASE("inverse of the constant coefficient vector is constant") {
  const int n = 16;
  const double c = -2.5;
  std::vector<double> alpha(n, 0.0);
  alpha[0] = c * std::sqrt(static_cast<double>(n));
  auto x = czt::idct(alpha);
  for (double v : x) REQUIRE_THAT(v, WithinAbs(c, 1e-9));
}

TEST_CASE("fast path matches the direct formula") {
  czt::Rng rng(42);
  for (int n : {2, 3, 5, 16, 100, 257, 500}) {
    auto x = random_vector(rng, n, -100.0, 100.0);
    REQUIRE(max_abs_diff(czt::dct_forward(x), czt::dct_forward_direct(x)) < 1e-9);
    REQUIRE(max_abs_diff(czt::idct(x), czt::idct_direct(x)) < 1e-9);
  }
}

TEST_CASE("round trip recovers the input") {
  czt::Rng rng(7);
  for (int n : {1, 2, 17, 128, 1000}) {
    auto x = random_vector(rng, n);
    auto back = czt::idct(czt::dct_forward(x));
    REQUIRE(max_abs_diff(back, x) < 1e-9);
  }
}

TEST_CASE("transform preserves the l2 norm") {
  czt::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(300));
    auto x = random_vector(rng, n);
    const double nx = norm2(x);
    const double na = norm2(czt::dct_forward(x));
    REQUIRE_THAT(na, WithinRel(nx, 1e-9));
  }
}

TEST_CASE("transform is linear") {
  czt::Rng rng(13);
  const int n = 64;
  auto x = random_vector(rng, n);
  auto z = random_vector(rng, n);
  const double a = 2.75, b = -0.4;
  std::vector<double> combo(n);
  for (int i = 0; i < n; ++i) combo[static_cast<std::size_t>(i)] = a * x[i] + b * z[i];
  auto lhs = czt::dct_forward(combo);
  auto ax = czt::dct_forward(x);
  auto az = czt::dct_forward(z);
  for (int j = 0; j < n; ++j) {
    REQUIRE_THAT(lhs[static_cast<std::size_t>(j)], WithinAbs(a * ax[j] + b * az[j], 1e-9));
  }
}

TEST_CASE("empty inputs are rejected") {
  REQUIRE_THROWS_WITH(czt::dct_forward({}), "empty block");
  REQUIRE_THROWS_WITH(czt::idct({}), "empty block");
}

TEST_CASE("hard threshold keeps the largest magnitudes") {
  REQUIRE(czt::hard_threshold({3.0, -5.0, 1.0}, 1) == std::vector<double>{0.0, -5.0, 0.0});
  SECTION("ties keep the lower index") {
    REQUIRE(czt::hard_threshold({2.0, 2.0, 0.0}, 1) == std::vector<double>{2.0, 0.0, 0.0});
  }
  SECTION("K = N is the identity") {
    const std::vector<double> v{1.0, -2.0, 0.5};
    REQUIRE(czt::hard_threshold(v, 3) == v);
  }
  SECTION("K out of range") {
    REQUIRE_THROWS_AS(czt::hard_threshold({1.0, 2.0}, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(czt::hard_threshold({1.0, 2.0}, 3), std::invalid_argument);
  }
}

TEST_CASE("coherence of the identity") {
  std::vector<double> eye(16, 0.0);
  for (int i = 0; i < 4; ++i) eye[static_cast<std::size_t>(i) * 4 + i] = 1.0;
  REQUIRE_THAT(czt::coherence(eye, 4), WithinAbs(2.0, 1e-12));
}

TEST_CASE("coherence of small inverse-transform matrices") {
  // 2x2: all entries have magnitude 1/sqrt(2), so sqrt(2) * 1/sqrt(2) = 1.
  REQUIRE_THAT(czt::coherence(czt::idct_matrix(2), 2), WithinAbs(1.0, 1e-12));
  // 8x8: pinned from enumerating all 64 entries; max is 0.5 * cos(pi/16).
  REQUIRE_THAT(czt::coherence(czt::idct_matrix(8), 8), WithinAbs(1.387039845322148, 1e-12));
}

TEST_CASE("coherence of the inverse-transform matrix stays within [1, sqrt(2)]") {
  for (int n = 1; n <= 64; ++n) {
    const double mu = czt::coherence(czt::idct_matrix(n), n);
    REQUIRE(mu >= 1.0 - 1e-12);
    REQUIRE(mu <= std::sqrt(2.0) + 1e-12);
    if (n >= 2) REQUIRE(mu < std::sqrt(static_cast<double>(n)) + 1e-12);
  }
}

TEST_CASE("coherence rejects non-orthonormal input") {
  std::vector<double> m{1.0, 1.0, 0.0, 1.0};
  REQUIRE_THROWS_WITH(czt::coherence(m, 2), "not unitary");
}

TEST_CASE("constant-signal sparsity: exactly one nonzero coefficient") {
  czt::Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(200));
    const double c = rng.next_range(-50.0, 50.0);
    std::vector<double> x(static_cast<std::size_t>(n), c);
    auto alpha = czt::dct_forward(x);
    int nonzero = 0;
    for (double v : alpha) {
      if (std::fabs(v) > 1e-9) ++nonzero;
    }
    if (std::fabs(c) > 1e-6) {
      REQUIRE(nonzero == 1);
      REQUIRE(std::fabs(alpha[0]) > 1e-9);
    }
  }
}
