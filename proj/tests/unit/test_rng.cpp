#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "polyads/rng.hpp"
#include "polyads/types.hpp"

using namespace polyads;

// Reference outputs generated with numpy.random.Philox (4x64, 10 rounds).
// numpy increments the counter before producing a block, so its stream for
// counter word c equals our block at c+1.

TEST_SUITE("rng") {
  TEST_CASE("block matches reference vectors") {
    std::array<uint64_t, 4> b = PhiloxRng::block({1, 0, 0, 0}, {0, 0});
    CHECK(b[0] == 0x02f4ba6408e4d89bull);
    CHECK(b[1] == 0x3dd62b0b9ca8c5b2ull);
    CHECK(b[2] == 0x1c8667a55d902e79ull);
    CHECK(b[3] == 0x907d7a052fd5b4dcull);

    std::array<uint64_t, 4> far = PhiloxRng::block(
        {250000000001ull, 0, 0, 0}, {0xfeedfacecafebeefull, 0});
    CHECK(far[0] == 0x75408c3497ffaf19ull);
    CHECK(far[1] == 0x6a5aa9a17f685feaull);
  }

  TEST_CASE("sequential draws match reference vectors") {
    PhiloxRng r(0x123456789abcdefull);
    for (int i = 0; i < 4; ++i) r.next_u64();  // counter-0 block
    const uint64_t expect[6] = {0xdaf0bdc754a0b959ull, 0x38123d82f9ce12cfull,
                                0x26cf92e903faab88ull, 0x1c243f1f4212c6adull,
                                0xb21f50f322b0bda1ull, 0xb445706b57af3517ull};
    for (uint64_t e : expect) CHECK(r.next_u64() == e);
  }

  TEST_CASE("stream selectors give reference-matched disjoint sequences") {
    PhiloxRng r(0xfeedfacecafebeefull, 77);
    for (int i = 0; i < 4; ++i) r.next_u64();
    CHECK(r.next_u64() == 0xcc4554a4eb16fd18ull);
    CHECK(r.next_u64() == 0x74fda806713073f1ull);

    PhiloxRng a(9, 1), b(9, 2);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64();
    CHECK(same == 0);
  }

  TEST_CASE("same seed reproduces the stream exactly") {
    PhiloxRng a(424242, 3, 1), b(424242, 3, 1);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    for (int i = 0; i < 100; ++i) {
      CHECK(a.uniform01() == b.uniform01());
      CHECK(a.normal() == b.normal());
      CHECK(a.poisson(3.7) == b.poisson(3.7));
      CHECK(a.gamma(0.6, 2.0) == b.gamma(0.6, 2.0));
    }
  }

  TEST_CASE("uniform01 bounds and moments") {
    PhiloxRng r(1);
    double sum = 0, sumsq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      double u = r.uniform01();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      sumsq += u * u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sumsq / n - (sum / n) * (sum / n) ==
          doctest::Approx(1.0 / 12.0).epsilon(0.02));
    PhiloxRng rp(2);
    for (int i = 0; i < 10000; ++i) CHECK(rp.uniform_pos() > 0.0);
  }

  TEST_CASE("normal moments") {
    PhiloxRng r(7);
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
      double z = r.normal();
      s1 += z;
      s2 += z * z;
      s3 += z * z * z;
      s4 += z * z * z * z;
    }
    CHECK(s1 / n == doctest::Approx(0.0).epsilon(1).scale(0.01));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s3 / n == doctest::Approx(0.0).epsilon(1).scale(0.03));
    CHECK(s4 / n == doctest::Approx(3.0).epsilon(0.03));
  }

  TEST_CASE("poisson matches pmf at small mean") {
    PhiloxRng r(13);
    const double lambda = 2.5;
    const int n = 300000;
    std::vector<int64_t> freq(30, 0);
    for (int i = 0; i < n; ++i) {
      int64_t k = r.poisson(lambda);
      REQUIRE(k >= 0);
      if (k < 30) ++freq[static_cast<size_t>(k)];
    }
    double p = std::exp(-lambda);
    for (int k = 0; k < 10; ++k) {
      double expect = p * n;
      double sd = std::sqrt(expect * (1 - p));
      CHECK(std::abs(static_cast<double>(freq[static_cast<size_t>(k)]) -
                     expect) < 5 * sd + 5);
      p *= lambda / (k + 1);
    }
  }

  TEST_CASE("poisson splitting keeps moments at large mean") {
    PhiloxRng r(17);
    const double lambda = 95.0;
    const int n = 100000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
      double k = static_cast<double>(r.poisson(lambda));
      sum += k;
      sumsq += k * k;
    }
    double mean = sum / n;
    CHECK(mean == doctest::Approx(lambda).epsilon(0.005));
    CHECK(sumsq / n - mean * mean == doctest::Approx(lambda).epsilon(0.03));
    CHECK(r.poisson(0.0) == 0);
  }

  TEST_CASE("gamma moments across the shape-1 boundary") {
    PhiloxRng r(19);
    for (double shape : {0.4, 1.0, 3.5}) {
      const double rate = 2.0;
      const int n = 200000;
      double sum = 0, sumsq = 0;
      for (int i = 0; i < n; ++i) {
        double g = r.gamma(shape, rate);
        CHECK(g > 0.0);
        sum += g;
        sumsq += g * g;
      }
      double mean = sum / n;
      CHECK(mean == doctest::Approx(shape / rate).epsilon(0.02));
      CHECK(sumsq / n - mean * mean ==
            doctest::Approx(shape / (rate * rate)).epsilon(0.05));
    }
  }

  TEST_CASE("parameter guards") {
    PhiloxRng r(3);
    CHECK_THROWS_AS(r.poisson(-1.0), InvalidParameterError);
    CHECK_THROWS_AS(r.poisson(std::nan("")), InvalidParameterError);
    CHECK_THROWS_AS(r.gamma(0.0, 1.0), InvalidParameterError);
    CHECK_THROWS_AS(r.gamma(1.0, -2.0), InvalidParameterError);
  }
}
