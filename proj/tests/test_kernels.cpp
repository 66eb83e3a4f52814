#include <doctest.h>

#include "fgsf/kernels.hpp"
#include "fgsf/rng.hpp"

#include <cmath>
#include <cstring>
#include <vector>

using namespace fgsf;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
    return true;
}

} // namespace

TEST_CASE("scalar and avx2 kernels agree bitwise") {
    if (!kernels::avx2_supported()) {
        MESSAGE("avx2 not supported on this cpu; equivalence suite skipped");
        return;
    }
    const auto& s = kernels::ops_for(kernels::Backend::Scalar);
    const auto& a = kernels::ops_for(kernels::Backend::Avx2);
    Rng rng(20240901);

    // Shapes chosen to exercise both full vector lanes and ragged tails.
    const int dims[][3] = {{1, 1, 1},  {3, 5, 7},   {4, 8, 4},  {17, 13, 9},
                           {64, 65, 64}, {2, 4, 31}, {33, 1, 2}};
    for (const auto& d : dims) {
        const int m = d[0], k = d[1], n = d[2];
        auto A = random_vec(static_cast<size_t>(m) * k, rng);
        auto B = random_vec(static_cast<size_t>(k) * n, rng);
        auto Bt = random_vec(static_cast<size_t>(n) * k, rng);

        std::vector<double> c1(static_cast<size_t>(m) * n), c2 = c1;
        s.matmul_nn(A.data(), B.data(), c1.data(), m, k, n, k, n, n);
        a.matmul_nn(A.data(), B.data(), c2.data(), m, k, n, k, n, n);
        CHECK(bitwise_equal(c1, c2));

        s.matmul_nt(A.data(), Bt.data(), c1.data(), m, k, n, k, k, n);
        a.matmul_nt(A.data(), Bt.data(), c2.data(), m, k, n, k, k, n);
        CHECK(bitwise_equal(c1, c2));

        auto W = random_vec(static_cast<size_t>(n) * (k + 1), rng);
        s.matmul_nt_bias(A.data(), W.data(), c1.data(), m, k, n, k, k + 1, n);
        a.matmul_nt_bias(A.data(), W.data(), c2.data(), m, k, n, k, k + 1, n);
        CHECK(bitwise_equal(c1, c2));

        std::vector<double> t1(static_cast<size_t>(k) * n, 0.0), t2 = t1;
        s.matmul_tn_acc(A.data(), B.data(), t1.data(), m, k, n, k, n, n);
        a.matmul_tn_acc(A.data(), B.data(), t2.data(), m, k, n, k, n, n);
        CHECK(bitwise_equal(t1, t2));
    }

    for (int n : {1, 2, 3, 4, 5, 8, 17, 64, 127, 256}) {
        auto x = random_vec(n, rng);
        auto y = random_vec(n, rng);
        double d1 = s.dot(x.data(), y.data(), n);
        double d2 = a.dot(x.data(), y.data(), n);
        CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

        d1 = s.sumsq(x.data(), n);
        d2 = a.sumsq(x.data(), n);
        CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

        auto y1 = y, y2 = y;
        s.axpy(0.37, x.data(), y1.data(), n);
        a.axpy(0.37, x.data(), y2.data(), n);
        CHECK(bitwise_equal(y1, y2));

        y1 = y;
        y2 = y;
        s.blend(0.9, 0.1, x.data(), y1.data(), n);
        a.blend(0.9, 0.1, x.data(), y2.data(), n);
        CHECK(bitwise_equal(y1, y2));

        auto d1v = random_vec(n, rng);
        auto d2v = d1v;
        s.sq_acc(x.data(), d1v.data(), n);
        a.sq_acc(x.data(), d2v.data(), n);
        CHECK(bitwise_equal(d1v, d2v));

        auto w1 = random_vec(n, rng);
        auto w2 = w1;
        auto g = random_vec(n, rng);
        auto m1 = random_vec(n, rng, 0.0, 0.1), m2 = m1;
        auto v1 = random_vec(n, rng, 0.0, 0.1), v2 = v1;
        s.adam_step(w1.data(), g.data(), m1.data(), v1.data(), 3e-4, 0.9, 0.999,
                    1e-8, 0.1, 0.001, n);
        a.adam_step(w2.data(), g.data(), m2.data(), v2.data(), 3e-4, 0.9, 0.999,
                    1e-8, 0.1, 0.001, n);
        CHECK(bitwise_equal(w1, w2));
        CHECK(bitwise_equal(m1, m2));
        CHECK(bitwise_equal(v1, v2));

        auto t1 = random_vec(n, rng), t2 = t1;
        auto o = random_vec(n, rng);
        s.polyak(t1.data(), o.data(), 0.005, n);
        a.polyak(t2.data(), o.data(), 0.005, n);
        CHECK(bitwise_equal(t1, t2));
    }

    // Outer-product accumulate.
    for (auto [p, q] : {std::pair{1, 1}, {3, 7}, {8, 8}, {5, 13}}) {
        auto g = random_vec(p, rng);
        auto x = random_vec(q, rng);
        std::vector<double> c1(static_cast<size_t>(p) * q, 0.5), c2 = c1;
        s.add_outer(1.25, g.data(), x.data(), c1.data(), p, q, q);
        a.add_outer(1.25, g.data(), x.data(), c2.data(), p, q, q);
        CHECK(bitwise_equal(c1, c2));
    }
}

TEST_CASE("tanh kernel: scalar/avx2 bitwise equality and accuracy") {
    const auto& s = kernels::ops_for(kernels::Backend::Scalar);

    // Accuracy against libm across the full branch structure.
    std::vector<double> xs;
    for (double v = -25.0; v <= 25.0; v += 0.0137) xs.push_back(v);
    for (double v : {0.0, -0.0, 0.624999, 0.625, 0.625001, -0.625, 19.0618,
                     19.062, -19.062, 1e-12, -1e-12, 700.0, -700.0}) {
        xs.push_back(v);
    }
    std::vector<double> ys(xs.size());
    s.tanh_ew(xs.data(), ys.data(), static_cast<int>(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) {
        const double ref = std::tanh(xs[i]);
        CHECK(std::fabs(ys[i] - ref) <= 4e-16 + 1e-14 * std::fabs(ref));
    }

    // Monotone odd function with exact saturation.
    CHECK(ys.size() == xs.size());
    double prev = -2.0;
    for (double v = -25.0, i = 0; v <= 25.0; v += 0.0137, ++i) {
        CHECK(ys[static_cast<size_t>(i)] >= prev);
        prev = ys[static_cast<size_t>(i)];
    }

    // NaN propagates; infinities saturate.
    double special[4] = {std::nan(""), std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity(), 0.0};
    double out[4];
    s.tanh_ew(special, out, 4);
    CHECK(std::isnan(out[0]));
    CHECK(out[1] == 1.0);
    CHECK(out[2] == -1.0);
    CHECK(out[3] == 0.0);

    if (kernels::avx2_supported()) {
        const auto& a = kernels::ops_for(kernels::Backend::Avx2);
        std::vector<double> yv(xs.size());
        a.tanh_ew(xs.data(), yv.data(), static_cast<int>(xs.size()));
        CHECK(bitwise_equal(ys, yv));

        double outv[4];
        a.tanh_ew(special, outv, 4);
        CHECK(std::memcmp(out, outv, sizeof(out)) == 0);
    }
}

TEST_CASE("kernel backend selection") {
    const auto original = kernels::active_backend();
    kernels::set_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);
    CHECK(kernels::backend_name(kernels::Backend::Scalar) == "scalar");
    if (kernels::avx2_supported()) {
        kernels::set_backend(kernels::Backend::Avx2);
        CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    }
    kernels::set_backend(original);
}
