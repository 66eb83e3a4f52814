#include <doctest.h>

#include "fgsf/rng.hpp"

#include <cmath>
#include <vector>

using fgsf::Rng;

TEST_CASE("named streams are independent and reproducible") {
    Rng a = Rng::stream(42, "env");
    Rng b = Rng::stream(42, "env");
    Rng c = Rng::stream(42, "scrub-noise");
    bool all_equal = true, any_equal_cross = false;
    for (int i = 0; i < 64; ++i) {
        const uint64_t va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_equal_cross = any_equal_cross || (va == c.next_u64());
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_cross);
}

TEST_CASE("uniform01 stays in [0,1) and normals have sane moments") {
    Rng rng(123);
    double sum = 0.0, sumsq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_index covers the range without gross bias") {
    Rng rng(99);
    std::vector<int> counts(10, 0);
    for (int i = 0; i < 100000; ++i) ++counts[rng.uniform_index(10)];
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("state roundtrip restores the exact sequence") {
    Rng rng(7);
    for (int i = 0; i < 10; ++i) (void)rng.next_u64();
    const auto saved = rng.state();
    std::vector<uint64_t> expected;
    for (int i = 0; i < 16; ++i) expected.push_back(rng.next_u64());
    Rng restored;
    restored.state() = saved;
    for (int i = 0; i < 16; ++i) CHECK(restored.next_u64() == expected[i]);
}
