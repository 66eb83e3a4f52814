#include "fgsf/nets.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <cmath>
#include <cstring>

namespace fgsf::nets {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178; // 0.5 * log(2*pi)

std::vector<int> layer_dims(int in, int out, int hidden_units, int hidden_layers) {
    std::vector<int> dims{in};
    for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden_units);
    dims.push_back(out);
    return dims;
}

} // namespace

GaussianPolicy make_policy(int obs_dim, int act_dim, int hidden_units,
                           int hidden_layers, ndmath::Activation act, Rng& rng) {
    GaussianPolicy p;
    p.act_dim = act_dim;
    p.net = ndmath::init_mlp(layer_dims(obs_dim, 2 * act_dim, hidden_units, hidden_layers),
                             act, rng);
    return p;
}

TwinCritic make_critic(int obs_dim, int act_dim, int hidden_units,
                       int hidden_layers, ndmath::Activation act, Rng& rng) {
    TwinCritic c;
    const auto dims = layer_dims(obs_dim + act_dim, 1, hidden_units, hidden_layers);
    c.q1 = ndmath::init_mlp(dims, act, rng);
    c.q2 = ndmath::init_mlp(dims, act, rng);
    return c;
}

PolicySample policy_sample(const GaussianPolicy& p, const Matrix& obs, Rng& rng) {
    if (!obs.all_finite())
        throw Error(ErrorKind::NonFinite, "policy_sample: non-finite observation");
    const int n = obs.rows;
    const int d = p.act_dim;

    PolicySample s;
    Matrix out = ndmath::mlp_forward(p.net, obs, &s.cache);
    s.mean = Matrix(n, d);
    s.log_std = Matrix(n, d);
    s.clamp_pass = Matrix(n, d);
    s.z = Matrix(n, d);
    s.pre_tanh = Matrix(n, d);
    s.action = Matrix(n, d);
    s.log_prob.assign(n, 0.0);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double mu = out(i, j);
            const double raw = out(i, d + j);
            const double ls = std::clamp(raw, GaussianPolicy::kLogStdMin,
                                         GaussianPolicy::kLogStdMax);
            s.mean(i, j) = mu;
            s.log_std(i, j) = ls;
            s.clamp_pass(i, j) =
                (raw >= GaussianPolicy::kLogStdMin && raw <= GaussianPolicy::kLogStdMax)
                    ? 1.0 : 0.0;
            const double z = rng.normal();
            s.z(i, j) = z;
            s.pre_tanh(i, j) = mu + std::exp(ls) * z;
        }
    }
    kernels::ops().tanh_ew(s.pre_tanh.data.data(), s.action.data.data(),
                           static_cast<int>(s.pre_tanh.size()));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double z = s.z(i, j);
            const double a = s.action(i, j);
            s.log_prob[i] += -0.5 * z * z - s.log_std(i, j) - kHalfLog2Pi
                             - std::log(1.0 - a * a + GaussianPolicy::kSquashEps);
        }
    }
    return s;
}

Matrix policy_mean_action(const GaussianPolicy& p, const Matrix& obs) {
    Matrix out = ndmath::mlp_forward(p.net, obs);
    Matrix mean(obs.rows, p.act_dim);
    for (int i = 0; i < obs.rows; ++i)
        for (int j = 0; j < p.act_dim; ++j) mean(i, j) = out(i, j);
    Matrix a(obs.rows, p.act_dim);
    kernels::ops().tanh_ew(mean.data.data(), a.data.data(),
                           static_cast<int>(mean.size()));
    return a;
}

Matrix policy_output_grads(const PolicySample& s, const Matrix& dmean,
                           const Matrix& dlog_std) {
    const int n = s.mean.rows;
    const int d = s.mean.cols;
    Matrix og(n, 2 * d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            og(i, j) = dmean(i, j);
            og(i, d + j) = dlog_std(i, j) * s.clamp_pass(i, j);
        }
    return og;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw Error(ErrorKind::DimMismatch, "concat_cols: row mismatch");
    Matrix c = Matrix::uninit(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        std::memcpy(c.row(i), a.row(i), static_cast<size_t>(a.cols) * sizeof(double));
        std::memcpy(c.row(i) + a.cols, b.row(i),
                    static_cast<size_t>(b.cols) * sizeof(double));
    }
    return c;
}

std::pair<std::vector<double>, std::vector<double>>
q_forward(const TwinCritic& c, const Matrix& obs, const Matrix& action) {
    Matrix x = concat_cols(obs, action);
    Matrix y1 = ndmath::mlp_forward(c.q1, x);
    Matrix y2 = ndmath::mlp_forward(c.q2, x);
    std::vector<double> q1(y1.data.begin(), y1.data.end());
    std::vector<double> q2(y2.data.begin(), y2.data.end());
    return {q1, q2};
}

void polyak_update(Mlp& target, const Mlp& online, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw Error(ErrorKind::InvalidArgument,
                    "polyak_update: tau out of range: " + std::to_string(tau));
    if (target.layers.size() != online.layers.size())
        throw Error(ErrorKind::DimMismatch, "polyak_update: layer count mismatch");
    if (tau == 0.0) return;
    for (size_t l = 0; l < target.layers.size(); ++l) {
        auto& t = target.layers[l].wb;
        const auto& o = online.layers[l].wb;
        if (t.rows != o.rows || t.cols != o.cols)
            throw Error(ErrorKind::DimMismatch, "polyak_update: shape mismatch");
        if (tau == 1.0) {
            t.data = o.data;
        } else {
            kernels::ops().polyak(t.data.data(), o.data.data(), tau,
                                  static_cast<int>(t.size()));
        }
    }
}

} // namespace fgsf::nets
