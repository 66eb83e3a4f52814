#include <doctest.h>

#include "fgsf/error.hpp"
#include "fgsf/matrix.hpp"
#include "fgsf/mlp.hpp"
#include "fgsf/rng.hpp"
#include "fgsf/sym_eig.hpp"

#include <cmath>
#include <cstring>

using namespace fgsf;
using namespace fgsf::ndmath;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// Independent naive triple-loop product, plain sequential accumulation.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

} // namespace

TEST_CASE("matmul identity and hand products") {
    Matrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    Matrix i2 = identity(2);
    CHECK(max_abs_diff(matmul(a, i2), a) == 0.0);
    CHECK(max_abs_diff(matmul(i2, a), a) == 0.0);

    Matrix row(1, 2);
    row(0, 0) = 1; row(0, 1) = 2;
    Matrix col(2, 1);
    col(0, 0) = 3; col(1, 0) = 4;
    Matrix p = matmul(row, col);
    CHECK(p.rows == 1);
    CHECK(p.cols == 1);
    CHECK(p(0, 0) == 11.0);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(7);
    Matrix a = random_matrix(3, 4, rng);
    Matrix b = random_matrix(4, 2, rng);
    CHECK(max_abs_diff(matmul(a, b), matmul_oracle(a, b)) <= 1e-12);

    // nt and tn variants against the same oracle via explicit transposes.
    Matrix bt(2, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) bt(j, i) = b(i, j);
    CHECK(max_abs_diff(matmul_nt(a, bt), matmul_oracle(a, b)) <= 1e-12);

    Matrix at(4, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) at(j, i) = a(i, j);
    CHECK(max_abs_diff(matmul_tn(at, b), matmul_oracle(a, b)) <= 1e-12);
}

TEST_CASE("matmul dimension mismatch names both shapes") {
    Matrix a(2, 3), b(2, 2);
    try {
        (void)matmul(a, b);
        FAIL("expected dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DimMismatch);
        CHECK(std::string(e.what()).find("2x3") != std::string::npos);
        CHECK(std::string(e.what()).find("2x2") != std::string::npos);
    }
}

TEST_CASE("forward/backward outputs stay finite for bounded weights") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Mlp net = init_mlp({4, 16, 16, 3}, Activation::Tanh, rng);
        for (auto& l : net.layers)
            for (auto& v : l.wb.data) v *= 1e3 * rng.uniform01();
        Matrix x = random_matrix(8, 4, rng, -5.0, 5.0);
        ForwardCache cache;
        Matrix y = mlp_forward(net, x, &cache);
        CHECK(y.all_finite());
        Matrix og = random_matrix(8, 3, rng);
        Matrix dx;
        PerSampleGrads g = mlp_backward(net, cache, og, &dx);
        CHECK(dx.all_finite());
        for (const auto& l : g.layers) {
            CHECK(l.a_ext.all_finite());
            CHECK(l.g.all_finite());
        }
    }
}

TEST_CASE("mlp_forward trivial cases") {
    Rng rng(3);

    // All-zero weights, explicit bias: every row equals the bias.
    Mlp net = init_mlp({3, 2}, Activation::Tanh, rng);
    for (auto& v : net.layers[0].wb.data) v = 0.0;
    net.layers[0].wb(0, 3) = 0.25;
    net.layers[0].wb(1, 3) = -1.5;
    Matrix x = random_matrix(5, 3, rng);
    Matrix y = mlp_forward(net, x);
    for (int i = 0; i < 5; ++i) {
        CHECK(y(i, 0) == 0.25);
        CHECK(y(i, 1) == -1.5);
    }

    // Identity weights, zero bias: output equals input.
    Mlp id_net = init_mlp({3, 3}, Activation::Tanh, rng);
    for (auto& v : id_net.layers[0].wb.data) v = 0.0;
    for (int j = 0; j < 3; ++j) id_net.layers[0].wb(j, j) = 1.0;
    Matrix y2 = mlp_forward(id_net, x);
    CHECK(max_abs_diff(y2, x) == 0.0);

    // Width mismatch is rejected.
    Matrix bad(5, 4);
    CHECK_THROWS_AS((void)mlp_forward(net, bad), Error);
}

TEST_CASE("mlp_forward matches a step-by-step composition oracle") {
    Rng rng(17);
    Mlp net = init_mlp({3, 8, 2}, Activation::Tanh, rng);
    Matrix x = random_matrix(6, 3, rng);

    // Manual composition with independent arithmetic.
    Matrix h(6, 8);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 8; ++j) {
            double s = net.layers[0].wb(j, 3); // bias
            for (int k = 0; k < 3; ++k) s += net.layers[0].wb(j, k) * x(i, k);
            h(i, j) = std::tanh(s);
        }
    Matrix expect(6, 2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = net.layers[1].wb(j, 8);
            for (int k = 0; k < 8; ++k) s += net.layers[1].wb(j, k) * h(i, k);
            expect(i, j) = s;
        }
    CHECK(max_abs_diff(mlp_forward(net, x), expect) <= 1e-12);
}

TEST_CASE("per-sample gradients: analytic, additivity, finite differences") {
    Rng rng(23);

    SUBCASE("single linear layer, squared error: grad_i = (yhat_i - y_i) a_i^T") {
        Mlp net = init_mlp({3, 1}, Activation::Tanh, rng);
        Matrix x = random_matrix(4, 3, rng);
        Matrix target = random_matrix(4, 1, rng);
        ForwardCache cache;
        Matrix y = mlp_forward(net, x, &cache);
        Matrix og(4, 1);
        for (int i = 0; i < 4; ++i) og(i, 0) = y(i, 0) - target(i, 0);
        PerSampleGrads g = mlp_backward(net, cache, og);
        std::vector<double> flat(g.param_count());
        for (int i = 0; i < 4; ++i) {
            g.flat_sample(i, flat.data());
            for (int k = 0; k < 3; ++k)
                CHECK(flat[static_cast<size_t>(k)] ==
                      doctest::Approx((y(i, 0) - target(i, 0)) * x(i, k)).epsilon(1e-12));
            CHECK(flat[3] == doctest::Approx(y(i, 0) - target(i, 0)).epsilon(1e-12));
        }
    }

    SUBCASE("per-sample gradients sum to the batch gradient bitwise") {
        Mlp net = init_mlp({4, 8, 3}, Activation::Tanh, rng);
        Matrix x = random_matrix(16, 4, rng);
        ForwardCache cache;
        (void)mlp_forward(net, x, &cache);
        Matrix og = random_matrix(16, 3, rng);
        PerSampleGrads g = mlp_backward(net, cache, og);
        auto batch = g.batch_grads();

        std::vector<double> flat(g.param_count());
        std::vector<double> acc(g.param_count(), 0.0);
        for (int i = 0; i < 16; ++i) {
            g.flat_sample(i, flat.data());
            for (size_t k = 0; k < flat.size(); ++k) acc[k] += flat[k];
        }
        size_t off = 0;
        for (const auto& bg : batch)
            for (double v : bg.data) {
                CHECK(std::memcmp(&v, &acc[off], sizeof(double)) == 0);
                ++off;
            }
    }

    SUBCASE("central finite differences, tanh net") {
        Mlp net = init_mlp({3, 6, 2}, Activation::Tanh, rng);
        Matrix x = random_matrix(5, 3, rng);
        Matrix target = random_matrix(5, 2, rng);
        Objective obj;
        obj.value = [&](const Matrix& y) {
            double s = 0.0;
            for (size_t i = 0; i < y.data.size(); ++i) {
                const double e = y.data[i] - target.data[i];
                s += 0.5 * e * e;
            }
            return s;
        };
        obj.output_grad = [&](const Matrix& y) {
            Matrix og(y.rows, y.cols);
            for (size_t i = 0; i < y.data.size(); ++i)
                og.data[i] = y.data[i] - target.data[i];
            return og;
        };
        CHECK(finite_diff_check(net, obj, x) <= 1e-6);
    }
}

TEST_CASE("finite_diff_check edge cases") {
    Rng rng(29);

    // Linear net + linear objective: central differences are exact.
    Mlp net = init_mlp({3, 2}, Activation::Tanh, rng);
    Objective linear;
    linear.value = [](const Matrix& y) {
        double s = 0.0;
        for (double v : y.data) s += v;
        return s;
    };
    linear.output_grad = [](const Matrix& y) {
        Matrix og(y.rows, y.cols);
        for (auto& v : og.data) v = 1.0;
        return og;
    };
    Matrix x = random_matrix(4, 3, rng);
    CHECK(finite_diff_check(net, linear, x) <= 1e-9);

    // NaN weight is flagged as a non-finite result.
    net.layers[0].wb(0, 0) = std::nan("");
    CHECK(!std::isfinite(finite_diff_check(net, linear, x)));
}

TEST_CASE("init_mlp contract") {
    Rng rng(31);
    CHECK_THROWS_AS((void)init_mlp({3, 0, 1}, Activation::Tanh, rng), Error);

    Mlp wide = init_mlp({100, 50}, Activation::Tanh, rng);
    for (int j = 0; j < 50; ++j) {
        for (int k = 0; k < 100; ++k) {
            CHECK(wide.layers[0].wb(j, k) >= -0.1);
            CHECK(wide.layers[0].wb(j, k) <= 0.1);
        }
        CHECK(wide.layers[0].wb(j, 100) == 0.0);
    }

    Rng r1(555), r2(555);
    Mlp a = init_mlp({4, 8, 2}, Activation::Tanh, r1);
    Mlp b = init_mlp({4, 8, 2}, Activation::Tanh, r2);
    CHECK(a.flatten() == b.flatten());
}

TEST_CASE("jacobi eigensolver") {
    Rng rng(37);
    // Known 2x2: [[2,1],[1,2]] -> eigenvalues 3, 1.
    Matrix m(2, 2);
    m(0, 0) = 2; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 2;
    auto eig = sym_eig(m);
    CHECK(eig.values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(1.0).epsilon(1e-12));

    // Random PSD: reconstruction and orthonormality.
    Matrix b = random_matrix(12, 12, rng);
    Matrix psd = matmul_tn(b, b);
    auto e2 = sym_eig(psd);
    Matrix lam(12, 12);
    for (int i = 0; i < 12; ++i) lam(i, i) = e2.values[i];
    Matrix recon = matmul(matmul(e2.vectors, lam), [&] {
        Matrix vt(12, 12);
        for (int i = 0; i < 12; ++i)
            for (int j = 0; j < 12; ++j) vt(i, j) = e2.vectors(j, i);
        return vt;
    }());
    CHECK(max_abs_diff(recon, psd) <= 1e-9);

    Matrix vtv = matmul_tn(e2.vectors, e2.vectors);
    CHECK(max_abs_diff(vtv, identity(12)) <= 1e-10);

    CHECK_THROWS_AS((void)sym_eig(random_matrix(4, 4, rng)), Error);
}
