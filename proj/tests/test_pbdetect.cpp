#include <doctest.h>

#include "fgsf/error.hpp"
#include "fgsf/pbdetect.hpp"

#include <cmath>
#include <vector>

using namespace fgsf;
using namespace fgsf::pbdetect;

namespace {

// Independent least-squares oracle: thin-QR (modified Gram-Schmidt) solve of
// the windowed Vandermonde fit, evaluated as the deriv-th coefficient of the
// fitted polynomial at the window center.
std::vector<double> savgol_oracle(int window, int polyorder, int deriv) {
    const int h = (window - 1) / 2;
    const int m = polyorder + 1;
    std::vector<std::vector<double>> v(window, std::vector<double>(m));
    for (int r = 0; r < window; ++r) {
        const double k = r - h;
        v[r][0] = 1.0;
        for (int j = 1; j < m; ++j) v[r][j] = v[r][j - 1] * k;
    }
    // QR via modified Gram-Schmidt.
    std::vector<std::vector<double>> q(window, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> rmat(m, std::vector<double>(m, 0.0));
    for (int j = 0; j < m; ++j) {
        for (int r = 0; r < window; ++r) q[r][j] = v[r][j];
        for (int i = 0; i < j; ++i) {
            double dot = 0.0;
            for (int r = 0; r < window; ++r) dot += q[r][i] * q[r][j];
            rmat[i][j] = dot;
            for (int r = 0; r < window; ++r) q[r][j] -= dot * q[r][i];
        }
        double norm = 0.0;
        for (int r = 0; r < window; ++r) norm += q[r][j] * q[r][j];
        norm = std::sqrt(norm);
        rmat[j][j] = norm;
        for (int r = 0; r < window; ++r) q[r][j] /= norm;
    }
    // weight_k = deriv! * [R^-1 Q^T e_k]_deriv ; solve R^T^T ... For each
    // impulse e_k: coeffs = R^{-1} (Q^T e_k) by back substitution.
    std::vector<double> weights(window);
    double dfac = 1.0;
    for (int j = 2; j <= deriv; ++j) dfac *= j;
    for (int k = 0; k < window; ++k) {
        std::vector<double> qt(m);
        for (int j = 0; j < m; ++j) qt[j] = q[k][j];
        std::vector<double> coef(m, 0.0);
        for (int j = m - 1; j >= 0; --j) {
            double s = qt[j];
            for (int i = j + 1; i < m; ++i) s -= rmat[j][i] * coef[i];
            coef[j] = s / rmat[j][j];
        }
        weights[k] = coef[deriv] * dfac;
    }
    return weights;
}

TraceSeries series_of(const std::vector<double>& values) {
    TraceSeries s;
    s.values = values;
    s.steps.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) s.steps[i] = static_cast<double>(i);
    return s;
}

} // namespace

TEST_CASE("savgol coefficients: smoothing weights and classic window-5 case") {
    SavGolSpec spec;
    spec.window = 5;
    spec.polyorder = 2;
    spec.deriv = 0;
    auto w = savgol_coefficients(spec);
    const double expected[5] = {-3.0 / 35, 12.0 / 35, 17.0 / 35, 12.0 / 35, -3.0 / 35};
    for (int i = 0; i < 5; ++i) CHECK(w[i] == doctest::Approx(expected[i]).epsilon(1e-12));

    auto oracle = savgol_oracle(5, 2, 0);
    for (int i = 0; i < 5; ++i) CHECK(w[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
}

TEST_CASE("savgol coefficients match the pseudoinverse oracle across specs") {
    for (int window : {5, 7, 21, 51}) {
        for (int polyorder : {1, 2, 3, 4}) {
            if (polyorder >= window) continue;
            for (int deriv : {0, 1}) {
                SavGolSpec spec{window, polyorder, deriv};
                auto w = savgol_coefficients(spec);
                auto o = savgol_oracle(window, polyorder, deriv);
                for (int i = 0; i < window; ++i)
                    CHECK(w[i] == doctest::Approx(o[i]).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("deriv-0 weights sum to one, deriv-1 weights sum to zero") {
    for (int window : {5, 11, 51}) {
        SavGolSpec s0{window, 3, 0};
        double sum0 = 0.0;
        for (double w : savgol_coefficients(s0)) sum0 += w;
        CHECK(sum0 == doctest::Approx(1.0).epsilon(1e-12));

        SavGolSpec s1{window, 3, 1};
        double sum1 = 0.0;
        for (double w : savgol_coefficients(s1)) sum1 += w;
        CHECK(sum1 == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("savgol spec validation") {
    CHECK_THROWS_AS((void)savgol_coefficients({4, 2, 0}), Error);
    CHECK_THROWS_AS((void)savgol_coefficients({5, 0, 0}), Error);
    CHECK_THROWS_AS((void)savgol_coefficients({5, 5, 0}), Error);
    CHECK_THROWS_AS((void)savgol_coefficients({5, 2, 2}), Error);
}

TEST_CASE("differentiation is exact on low-degree polynomials") {
    SavGolSpec spec{11, 3, 1};

    SUBCASE("linear series: constant slope everywhere, including padded edges") {
        std::vector<double> v(200);
        for (size_t i = 0; i < v.size(); ++i) v[i] = 3.5 * static_cast<double>(i) - 7.0;
        auto d = differentiate_series(series_of(v), spec);
        // Mirror padding preserves linearity only in the interior; check
        // inside the half-window.
        for (size_t i = 5; i + 5 < d.size(); ++i)
            CHECK(d[i] == doctest::Approx(3.5).epsilon(1e-9));
    }

    SUBCASE("cubic series with polyorder 3: exact analytic derivative") {
        std::vector<double> v(300);
        for (size_t i = 0; i < v.size(); ++i) {
            const double t = static_cast<double>(i) * 0.1;
            v[i] = 2.0 * t * t * t - 0.5 * t * t + t - 4.0;
        }
        TraceSeries s;
        s.values = v;
        s.steps.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) s.steps[i] = static_cast<double>(i) * 0.1;
        auto d = differentiate_series(s, spec);
        for (size_t i = 5; i + 5 < d.size(); ++i) {
            const double t = static_cast<double>(i) * 0.1;
            const double expect = 6.0 * t * t - 1.0 * t + 1.0;
            CHECK(d[i] == doctest::Approx(expect).epsilon(1e-9));
        }
    }

    SUBCASE("constant series: all zeros") {
        std::vector<double> v(100, 42.0);
        auto d = differentiate_series(series_of(v), spec);
        for (double x : d) CHECK(x == doctest::Approx(0.0).epsilon(1e-9));
    }

    SUBCASE("series shorter than the window is rejected") {
        std::vector<double> v(7, 1.0);
        CHECK_THROWS_AS((void)differentiate_series(series_of(v), spec), Error);
    }
}

TEST_CASE("smoothing reproduces polynomials up to polyorder in the interior") {
    SavGolSpec spec{21, 3, 0};
    std::vector<double> v(200);
    for (size_t i = 0; i < v.size(); ++i) {
        const double t = static_cast<double>(i);
        v[i] = 1e-3 * t * t * t - 0.2 * t * t + 5.0 * t + 3.0;
    }
    auto s = smooth_series(v, spec);
    for (size_t i = 10; i + 10 < v.size(); ++i)
        CHECK(s[i] == doctest::Approx(v[i]).epsilon(1e-9));
}

TEST_CASE("phase classification") {
    SavGolSpec spec; // defaults: window 51, polyorder 3
    PhaseThresholds th;

    SUBCASE("rise-then-fall synthetic: detected with an accurate peak") {
        const double tau = 100.0;
        std::vector<double> v(500);
        TraceSeries s;
        for (int i = 0; i < 500; ++i) {
            const double t = static_cast<double>(i + 1);
            s.steps.push_back(t);
            s.values.push_back(1e5 * t * std::exp(-t / tau));
        }
        PhaseReport r = classify_phases(s, spec, th);
        CHECK(r.pb_detected);
        CHECK(std::fabs(r.peak_step - tau) <= 2.0);
        REQUIRE(r.memorization.has_value());
        REQUIRE(r.reorganization.has_value());
        CHECK(r.memorization->end_step == r.peak_step);
        CHECK(r.reorganization->begin_step == r.peak_step);
        CHECK(r.memorization->begin_index >= 0);
        CHECK(r.reorganization->end_index < 500);
    }

    SUBCASE("monotone increasing series: no reorganization, no detection") {
        std::vector<double> v(400);
        for (size_t i = 0; i < v.size(); ++i)
            v[i] = std::sqrt(static_cast<double>(i) + 1.0);
        PhaseReport r = classify_phases(series_of(v), spec, th);
        CHECK_FALSE(r.pb_detected);
        CHECK_FALSE(r.reorganization.has_value());
    }

    SUBCASE("constant series: degenerate, not detected") {
        std::vector<double> v(400, 3.25);
        PhaseReport r = classify_phases(series_of(v), spec, th);
        CHECK_FALSE(r.pb_detected);
    }

    SUBCASE("scale equivariance: x1000 changes nothing structural") {
        const double tau = 80.0;
        TraceSeries s1, s2;
        for (int i = 0; i < 500; ++i) {
            const double t = static_cast<double>(i + 1);
            const double v = t * std::exp(-t / tau);
            s1.steps.push_back(t);
            s1.values.push_back(v);
            s2.steps.push_back(t);
            s2.values.push_back(1000.0 * v);
        }
        PhaseReport r1 = classify_phases(s1, spec, th);
        PhaseReport r2 = classify_phases(s2, spec, th);
        CHECK(r1.pb_detected == r2.pb_detected);
        CHECK(r1.peak_index == r2.peak_index);
        REQUIRE(r1.memorization.has_value());
        REQUIRE(r2.memorization.has_value());
        CHECK(r1.memorization->begin_index == r2.memorization->begin_index);
        CHECK(r1.reorganization->end_index == r2.reorganization->end_index);
    }

    SUBCASE("series shorter than 3x window is rejected") {
        std::vector<double> v(100, 1.0);
        CHECK_THROWS_AS((void)classify_phases(series_of(v), spec, th), Error);
    }

    SUBCASE("intervals stay inside bounds and meet at the peak") {
        const double tau = 120.0;
        TraceSeries s;
        for (int i = 0; i < 600; ++i) {
            const double t = static_cast<double>(i + 1);
            s.steps.push_back(t);
            s.values.push_back(t * t * std::exp(-t / tau));
        }
        PhaseReport r = classify_phases(s, spec, th);
        if (r.memorization && r.reorganization) {
            CHECK(r.memorization->end_index == r.peak_index);
            CHECK(r.reorganization->begin_index == r.peak_index);
            CHECK(r.memorization->begin_index <= r.peak_index);
            CHECK(r.reorganization->end_index >= r.peak_index);
            CHECK(r.reorganization->end_index < 600);
        }
    }
}
