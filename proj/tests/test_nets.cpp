#include <doctest.h>

#include "fgsf/error.hpp"
#include "fgsf/nets.hpp"
#include "fgsf/rng.hpp"

#include <cmath>

using namespace fgsf;
using namespace fgsf::nets;
using ndmath::Matrix;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (auto& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// Forces the log_std head output to a constant by zeroing its rows and
// setting the bias column.
void pin_log_std(GaussianPolicy& p, double value) {
    auto& head = p.net.layers.back().wb;
    for (int j = p.act_dim; j < 2 * p.act_dim; ++j) {
        for (int c = 0; c < head.cols; ++c) head(j, c) = 0.0;
        head(j, head.cols - 1) = value;
    }
}

} // namespace

TEST_CASE("degenerate variance: action collapses to tanh(mean)") {
    Rng rng(41);
    GaussianPolicy p = make_policy(3, 2, 16, 2, ndmath::Activation::Tanh, rng);
    pin_log_std(p, -25.0); // clamped to -20, sigma ~ 2e-9
    Matrix obs = random_matrix(4, 3, rng);
    PolicySample s = policy_sample(p, obs, rng);
    Matrix det = policy_mean_action(p, obs);
    for (size_t i = 0; i < det.data.size(); ++i)
        CHECK(s.action.data[i] == doctest::Approx(det.data[i]).epsilon(1e-6));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(s.log_std(i, j) == -20.0);
            CHECK(s.clamp_pass(i, j) == 0.0);
        }
}

TEST_CASE("log-prob analytic value at mu=0, sigma=1, u=0") {
    // log N(0;0,1) - log(1 - tanh(0)^2 + 1e-6)
    const double expected = -0.91893853320467274178 - std::log(1.0 + 1e-6);
    // Build the term the sampler computes for z = 0.
    const double z = 0.0, ls = 0.0, a = std::tanh(0.0);
    const double got = -0.5 * z * z - ls - 0.91893853320467274178 -
                       std::log(1.0 - a * a + 1e-6);
    CHECK(got == doctest::Approx(expected).epsilon(1e-15));
    CHECK(got == doctest::Approx(-0.918939).epsilon(1e-5));
}

TEST_CASE("sampled actions stay strictly inside (-1,1) with finite log-probs") {
    Rng rng(43);
    GaussianPolicy p = make_policy(4, 3, 16, 2, ndmath::Activation::Tanh, rng);
    Matrix obs = random_matrix(64, 4, rng, -3.0, 3.0);
    PolicySample s = policy_sample(p, obs, rng);
    for (double a : s.action.data) {
        CHECK(a > -1.0);
        CHECK(a < 1.0);
    }
    for (double lp : s.log_prob) {
        CHECK(std::isfinite(lp));
        CHECK(std::fabs(lp) < 1e4);
    }
}

TEST_CASE("monte-carlo normalization of the squashed density") {
    // d = 1 policy pinned to mu = 0, sigma = 1; integrate exp(log_prob) over
    // the action interval with uniform MC.
    Rng rng(47);
    GaussianPolicy p = make_policy(2, 1, 8, 1, ndmath::Activation::Tanh, rng);
    auto& head = p.net.layers.back().wb;
    for (auto& v : head.data) v = 0.0; // mean 0, log_std 0 for every obs

    auto formula_logp = [](double a) {
        const double u = std::atanh(a);
        return -0.5 * u * u - 0.91893853320467274178 -
               std::log(1.0 - a * a + GaussianPolicy::kSquashEps);
    };

    // The sampler's log_prob agrees with the closed-form density at its own
    // sampled actions.
    Matrix obs0(1, 2);
    for (int i = 0; i < 100; ++i) {
        PolicySample s = policy_sample(p, obs0, rng);
        CHECK(s.log_prob[0] ==
              doctest::Approx(formula_logp(s.action(0, 0))).epsilon(1e-9));
    }

    const int samples = 100000;
    double integral = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double a = rng.uniform(-1.0 + 1e-9, 1.0 - 1e-9);
        integral += std::exp(formula_logp(a));
    }
    integral *= 2.0 / samples; // interval length
    CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("log_prob pathwise gradient matches finite differences (pinned z)") {
    Rng rng(53);
    GaussianPolicy p = make_policy(2, 1, 4, 1, ndmath::Activation::Tanh, rng);
    Matrix obs = random_matrix(3, 2, rng);

    // Pin the noise by replaying the same rng state for every evaluation.
    const auto state = rng.state();
    auto eval_logp = [&](double* param, double h) {
        *param += h;
        Rng r;
        r.state() = state;
        PolicySample s = policy_sample(p, obs, r);
        *param -= h;
        double total = 0.0;
        for (double lp : s.log_prob) total += lp;
        return total;
    };

    // Analytic gradient via the actor-update head-gradient formulas with the
    // Q path disabled (alpha = 1, q = 0).
    Rng r0;
    r0.state() = state;
    PolicySample s = policy_sample(p, obs, r0);
    Matrix dmean(3, 1), dls(3, 1);
    for (int i = 0; i < 3; ++i) {
        const double a = s.action(i, 0);
        const double om = 1.0 - a * a;
        const double dlogp_du = 2.0 * a * om / (om + GaussianPolicy::kSquashEps);
        const double sigma_z = std::exp(s.log_std(i, 0)) * s.z(i, 0);
        dmean(i, 0) = dlogp_du;
        dls(i, 0) = -1.0 + dlogp_du * sigma_z;
    }
    Matrix og = policy_output_grads(s, dmean, dls);
    auto grads = ndmath::mlp_backward(p.net, s.cache, og).batch_grads();

    const double h = 1e-6;
    double max_rel = 0.0;
    for (size_t l = 0; l < p.net.layers.size(); ++l) {
        auto& wb = p.net.layers[l].wb;
        for (size_t k = 0; k < wb.size(); k += 3) { // sparse spot checks
            const double fp = eval_logp(&wb.data[k], h);
            const double fm = eval_logp(&wb.data[k], -h);
            const double fd = (fp - fm) / (2.0 * h);
            const double an = grads[l].data[k];
            max_rel = std::max(max_rel,
                               std::fabs(an - fd) / (std::fabs(an) + 1e-8));
        }
    }
    CHECK(max_rel <= 1e-5);
}

TEST_CASE("q_forward basics") {
    Rng rng(59);
    TwinCritic c = make_critic(3, 1, 8, 2, ndmath::Activation::Tanh, rng);

    // Zero-weight critics output their final bias.
    TwinCritic zero = c;
    for (auto* net : {&zero.q1, &zero.q2})
        for (auto& l : net->layers)
            for (auto& v : l.wb.data) v = 0.0;
    zero.q1.layers.back().wb(0, zero.q1.layers.back().wb.cols - 1) = 0.75;
    zero.q2.layers.back().wb(0, zero.q2.layers.back().wb.cols - 1) = -0.25;
    Matrix obs = random_matrix(5, 3, rng);
    Matrix act = random_matrix(5, 1, rng);
    auto [q1, q2] = q_forward(zero, obs, act);
    for (int i = 0; i < 5; ++i) {
        CHECK(q1[i] == 0.75);
        CHECK(q2[i] == -0.25);
    }

    // Purity: same inputs, same outputs.
    auto [a1, a2] = q_forward(c, obs, act);
    auto [b1, b2] = q_forward(c, obs, act);
    CHECK(a1 == b1);
    CHECK(a2 == b2);

    // Independent twins: generically different estimates.
    CHECK(a1 != a2);
}

TEST_CASE("polyak update") {
    Rng rng(61);
    ndmath::Mlp online = ndmath::init_mlp({3, 4, 2}, ndmath::Activation::Tanh, rng);
    ndmath::Mlp target = ndmath::init_mlp({3, 4, 2}, ndmath::Activation::Tanh, rng);

    SUBCASE("tau = 1 copies, tau = 0 is identity") {
        ndmath::Mlp t1 = target;
        polyak_update(t1, online, 1.0);
        CHECK(t1.flatten() == online.flatten());

        ndmath::Mlp t0 = target;
        polyak_update(t0, online, 0.0);
        CHECK(t0.flatten() == target.flatten());
    }

    SUBCASE("midpoint arithmetic") {
        ndmath::Mlp t = target;
        for (auto& l : t.layers)
            for (auto& v : l.wb.data) v = 4.0;
        ndmath::Mlp o = online;
        for (auto& l : o.layers)
            for (auto& v : l.wb.data) v = 2.0;
        polyak_update(t, o, 0.5);
        for (auto& l : t.layers)
            for (auto& v : l.wb.data) CHECK(v == 3.0);
    }

    SUBCASE("contraction per parameter") {
        ndmath::Mlp t = target;
        polyak_update(t, online, 0.005);
        auto tf = t.flatten();
        auto of = online.flatten();
        auto t0 = target.flatten();
        for (size_t i = 0; i < tf.size(); ++i) {
            const double lhs = tf[i] - of[i];
            const double rhs = (1.0 - 0.005) * (t0[i] - of[i]);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
        }
    }

    SUBCASE("tau out of range") {
        CHECK_THROWS_AS(polyak_update(target, online, 1.5), Error);
        CHECK_THROWS_AS(polyak_update(target, online, -0.1), Error);
    }
}
