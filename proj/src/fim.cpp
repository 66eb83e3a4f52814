#include "fgsf/fim.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <cmath>
#include <cstring>

namespace fgsf::fim {

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "diag" || name == "diagonal") return EstimatorKind::Diagonal;
    if (name == "kfac") return EstimatorKind::Kfac;
    if (name == "ekfac") return EstimatorKind::Ekfac;
    if (name == "dense") return EstimatorKind::DenseOracle;
    throw Error(ErrorKind::Config, "unknown estimator: " + name);
}

std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Diagonal: return "diag";
        case EstimatorKind::Kfac: return "kfac";
        case EstimatorKind::Ekfac: return "ekfac";
        case EstimatorKind::DenseOracle: return "dense";
    }
    return "?";
}

ScrubTarget target_from_name(const std::string& name) {
    if (name == "actor" || name == "actor_only") return ScrubTarget::ActorOnly;
    if (name == "critic" || name == "critic_only") return ScrubTarget::CriticOnly;
    if (name == "both") return ScrubTarget::Both;
    throw Error(ErrorKind::Config, "unknown scrub target: " + name);
}

std::string target_name(ScrubTarget t) {
    switch (t) {
        case ScrubTarget::ActorOnly: return "actor";
        case ScrubTarget::CriticOnly: return "critic";
        case ScrubTarget::Both: return "both";
    }
    return "?";
}

void ScrubConfig::validate() const {
    if (lambda < 0.0)
        throw Error(ErrorKind::Config, "scrub: lambda must be >= 0");
    if (sigma_sq < 0.0)
        throw Error(ErrorKind::Config, "scrub: sigma_sq must be >= 0");
    if (frequency < 1)
        throw Error(ErrorKind::Config, "scrub: frequency must be >= 1");
    if (damping <= 0.0)
        throw Error(ErrorKind::Config, "scrub: damping must be > 0");
}

size_t FimEstimate::param_count() const {
    size_t n = 0;
    for (const auto& s : shapes) n += static_cast<size_t>(s.out) * s.in_ext;
    return n;
}

std::vector<LayerShape> shapes_of(const ndmath::Mlp& net) {
    std::vector<LayerShape> shapes;
    for (const auto& l : net.layers)
        shapes.push_back({l.out_dim(), l.in_dim() + 1});
    return shapes;
}

std::vector<LayerShape> shapes_of(const ScoreBatch& scores) {
    std::vector<LayerShape> shapes;
    for (const auto& l : scores.layers)
        shapes.push_back({l.g.cols, l.a_ext.cols});
    return shapes;
}

FimEstimate empirical_fim_full(const ScoreBatch& scores) {
    if (scores.samples < 1)
        throw Error(ErrorKind::InvalidArgument, "empirical_fim_full: empty batch");
    FimEstimate est;
    est.kind = EstimatorKind::DenseOracle;
    est.shapes = shapes_of(scores);
    const size_t p = est.param_count();
    if (p > 2000)
        throw Error(ErrorKind::InvalidArgument,
                    "empirical_fim_full: parameter count " + std::to_string(p) +
                    " exceeds the 2000-parameter oracle limit");
    est.dense = Matrix(static_cast<int>(p), static_cast<int>(p));
    std::vector<double> flat(p);
    for (int i = 0; i < scores.samples; ++i) {
        scores.flat_sample(i, flat.data());
        kernels::ops().add_outer(1.0, flat.data(), flat.data(), est.dense.data.data(),
                                 static_cast<int>(p), static_cast<int>(p),
                                 static_cast<int>(p));
    }
    const double inv_n = 1.0 / scores.samples;
    for (auto& v : est.dense.data) v *= inv_n;
    return est;
}

FimEstimate empirical_fim_diag(const ScoreBatch& scores) {
    if (scores.samples < 1)
        throw Error(ErrorKind::InvalidArgument, "empirical_fim_diag: empty batch");
    FimEstimate est;
    est.kind = EstimatorKind::Diagonal;
    est.shapes = shapes_of(scores);
    est.diagonal.assign(est.param_count(), 0.0);

    // Same products and i-sequential accumulation as the dense oracle's
    // diagonal, so the two agree bitwise.
    size_t off = 0;
    for (const auto& l : scores.layers) {
        const int out = l.g.cols;
        const int in_ext = l.a_ext.cols;
        for (int i = 0; i < scores.samples; ++i) {
            const double* gi = l.g.row(i);
            const double* ai = l.a_ext.row(i);
            size_t k = off;
            for (int j = 0; j < out; ++j) {
                const double gv = gi[j];
                for (int c = 0; c < in_ext; ++c) {
                    const double f = gv * ai[c];
                    est.diagonal[k++] += f * f;
                }
            }
        }
        off += static_cast<size_t>(out) * in_ext;
    }
    const double inv_n = 1.0 / scores.samples;
    for (auto& v : est.diagonal) v *= inv_n;
    return est;
}

FimEstimate kfac_estimate(const ScoreBatch& scores) {
    if (scores.samples < 1)
        throw Error(ErrorKind::InvalidArgument, "kfac_estimate: empty batch");
    FimEstimate est;
    est.kind = EstimatorKind::Kfac;
    est.shapes = shapes_of(scores);
    const double inv_n = 1.0 / scores.samples;
    for (const auto& l : scores.layers) {
        if (l.g.rows != l.a_ext.rows)
            throw Error(ErrorKind::DimMismatch, "kfac_estimate: sample count mismatch");
        KfacLayer kl;
        kl.a_factor = ndmath::matmul_tn(l.a_ext, l.a_ext);
        kl.g_factor = ndmath::matmul_tn(l.g, l.g);
        for (auto& v : kl.a_factor.data) v *= inv_n;
        for (auto& v : kl.g_factor.data) v *= inv_n;
        est.kfac.push_back(std::move(kl));
    }
    return est;
}

FimEstimate ekfac_estimate(const FimEstimate& kfac, const ScoreBatch& scores) {
    if (kfac.kind != EstimatorKind::Kfac)
        throw Error(ErrorKind::InvalidArgument, "ekfac_estimate: need kfac input");
    if (kfac.kfac.size() != scores.layers.size())
        throw Error(ErrorKind::DimMismatch, "ekfac_estimate: layer count mismatch");
    FimEstimate est;
    est.kind = EstimatorKind::Ekfac;
    est.shapes = kfac.shapes;
    const double inv_n = 1.0 / scores.samples;
    for (size_t l = 0; l < scores.layers.size(); ++l) {
        const auto& sl = scores.layers[l];
        EkfacLayer el;
        el.u_a = ndmath::sym_eig(kfac.kfac[l].a_factor).vectors;
        el.u_g = ndmath::sym_eig(kfac.kfac[l].g_factor).vectors;
        // Rotate per-sample factors: rows of Y are U_g^T g_i, rows of X are
        // U_a^T a~_i; lambda_jk = mean_i Y_ij^2 X_ik^2.
        Matrix y = ndmath::matmul(sl.g, el.u_g);       // n x out
        Matrix x = ndmath::matmul(sl.a_ext, el.u_a);   // n x in_ext
        for (auto& v : y.data) v *= v;
        for (auto& v : x.data) v *= v;
        el.lambda = ndmath::matmul_tn(y, x);            // out x in_ext
        for (auto& v : el.lambda.data) v *= inv_n;
        est.ekfac.push_back(std::move(el));
    }
    return est;
}

FimEstimate estimate(const ScoreBatch& scores, EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Diagonal: return empirical_fim_diag(scores);
        case EstimatorKind::Kfac: return kfac_estimate(scores);
        case EstimatorKind::Ekfac: return ekfac_estimate(kfac_estimate(scores), scores);
        case EstimatorKind::DenseOracle: return empirical_fim_full(scores);
    }
    throw Error(ErrorKind::InvalidArgument, "estimate: bad kind");
}

double fim_trace(const FimEstimate& est) {
    switch (est.kind) {
        case EstimatorKind::DenseOracle: {
            double t = 0.0;
            for (int i = 0; i < est.dense.rows; ++i) t += est.dense(i, i);
            return t;
        }
        case EstimatorKind::Diagonal: {
            double t = 0.0;
            for (double v : est.diagonal) t += v;
            return t;
        }
        case EstimatorKind::Kfac: {
            double t = 0.0;
            for (const auto& l : est.kfac) {
                double ta = 0.0, tg = 0.0;
                for (int i = 0; i < l.a_factor.rows; ++i) ta += l.a_factor(i, i);
                for (int i = 0; i < l.g_factor.rows; ++i) tg += l.g_factor(i, i);
                t += ta * tg;
            }
            return t;
        }
        case EstimatorKind::Ekfac: {
            double t = 0.0;
            for (const auto& l : est.ekfac)
                for (double v : l.lambda.data) t += v;
            return t;
        }
    }
    return 0.0;
}

std::vector<Matrix> draw_layer_noise(const std::vector<LayerShape>& shapes, Rng& rng) {
    std::vector<Matrix> noise;
    noise.reserve(shapes.size());
    for (const auto& s : shapes) {
        Matrix m = Matrix::uninit(s.out, s.in_ext);
        for (auto& v : m.data) v = rng.normal();
        noise.push_back(std::move(m));
    }
    return noise;
}

namespace {

void check_eigenvalue(double v, double scale) {
    if (v < -1e-10 * std::max(1.0, scale))
        throw Error(ErrorKind::InvalidArgument,
                    "inv_quarter_root_apply: negative eigenvalue " + std::to_string(v));
}

double damped_quarter_root(double v, double damping) {
    return std::pow(std::max(v, 0.0) + damping, 0.25);
}

} // namespace

std::vector<Matrix> inv_quarter_root_apply(const FimEstimate& est,
                                           const std::vector<Matrix>& noise,
                                           double damping) {
    if (damping <= 0.0)
        throw Error(ErrorKind::InvalidArgument, "inv_quarter_root_apply: damping must be > 0");
    if (noise.size() != est.shapes.size())
        throw Error(ErrorKind::DimMismatch, "inv_quarter_root_apply: layer count mismatch");
    for (size_t l = 0; l < noise.size(); ++l)
        if (noise[l].rows != est.shapes[l].out || noise[l].cols != est.shapes[l].in_ext)
            throw Error(ErrorKind::DimMismatch, "inv_quarter_root_apply: noise shape mismatch");

    std::vector<Matrix> shaped;
    shaped.reserve(noise.size());

    switch (est.kind) {
        case EstimatorKind::Diagonal: {
            size_t off = 0;
            for (const auto& n : noise) {
                Matrix m(n.rows, n.cols);
                for (size_t i = 0; i < n.size(); ++i) {
                    check_eigenvalue(est.diagonal[off + i], 1.0);
                    m.data[i] = n.data[i] / damped_quarter_root(est.diagonal[off + i], damping);
                }
                off += n.size();
                shaped.push_back(std::move(m));
            }
            return shaped;
        }
        case EstimatorKind::Ekfac: {
            for (size_t l = 0; l < noise.size(); ++l) {
                const auto& el = est.ekfac[l];
                Matrix rot = ndmath::matmul(ndmath::matmul_tn(el.u_g, noise[l]), el.u_a);
                for (size_t i = 0; i < rot.size(); ++i) {
                    check_eigenvalue(el.lambda.data[i], 1.0);
                    rot.data[i] /= damped_quarter_root(el.lambda.data[i], damping);
                }
                shaped.push_back(ndmath::matmul_nt(ndmath::matmul(el.u_g, rot), el.u_a));
            }
            return shaped;
        }
        case EstimatorKind::Kfac: {
            for (size_t l = 0; l < noise.size(); ++l) {
                const auto ea = ndmath::sym_eig(est.kfac[l].a_factor);
                const auto eg = ndmath::sym_eig(est.kfac[l].g_factor);
                Matrix rot = ndmath::matmul(ndmath::matmul_tn(eg.vectors, noise[l]), ea.vectors);
                for (int j = 0; j < rot.rows; ++j)
                    for (int k = 0; k < rot.cols; ++k) {
                        check_eigenvalue(eg.values[j], 1.0);
                        check_eigenvalue(ea.values[k], 1.0);
                        const double lam =
                            std::max(eg.values[j], 0.0) * std::max(ea.values[k], 0.0);
                        rot(j, k) /= damped_quarter_root(lam, damping);
                    }
                shaped.push_back(ndmath::matmul_nt(ndmath::matmul(eg.vectors, rot), ea.vectors));
            }
            return shaped;
        }
        case EstimatorKind::DenseOracle: {
            const size_t p = est.param_count();
            std::vector<double> flat(p);
            size_t off = 0;
            for (const auto& n : noise) {
                std::memcpy(flat.data() + off, n.data.data(), n.size() * sizeof(double));
                off += n.size();
            }
            const auto eig = ndmath::sym_eig(est.dense);
            double scale = 0.0;
            for (double v : eig.values) scale = std::max(scale, std::fabs(v));
            for (double v : eig.values) check_eigenvalue(v, scale);
            // shaped = U (S + d)^{-1/4} U^T eps
            std::vector<double> rot(p, 0.0);
            for (size_t j = 0; j < p; ++j) {
                double s = 0.0;
                for (size_t k = 0; k < p; ++k)
                    s += eig.vectors(static_cast<int>(k), static_cast<int>(j)) * flat[k];
                rot[j] = s / damped_quarter_root(eig.values[j], damping);
            }
            std::vector<double> out(p, 0.0);
            for (size_t k = 0; k < p; ++k) {
                double s = 0.0;
                for (size_t j = 0; j < p; ++j)
                    s += eig.vectors(static_cast<int>(k), static_cast<int>(j)) * rot[j];
                out[k] = s;
            }
            off = 0;
            for (const auto& n : noise) {
                Matrix m(n.rows, n.cols);
                std::memcpy(m.data.data(), out.data() + off, m.size() * sizeof(double));
                off += m.size();
                shaped.push_back(std::move(m));
            }
            return shaped;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "inv_quarter_root_apply: bad estimate kind");
}

bool fgsf_scrub(ndmath::Mlp& net, const FimEstimate& est, const ScrubConfig& cfg,
                Rng& rng, std::string* report) {
    cfg.validate();
    const double magnitude = cfg.lambda * cfg.sigma_sq;
    if (magnitude == 0.0) return true; // weights bitwise unchanged
    const auto net_shapes = shapes_of(net);
    if (net_shapes.size() != est.shapes.size())
        throw Error(ErrorKind::DimMismatch, "fgsf_scrub: estimate/net layer mismatch");
    for (size_t l = 0; l < net_shapes.size(); ++l)
        if (net_shapes[l].out != est.shapes[l].out ||
            net_shapes[l].in_ext != est.shapes[l].in_ext)
            throw Error(ErrorKind::DimMismatch, "fgsf_scrub: estimate/net shape mismatch");

    const auto noise = draw_layer_noise(est.shapes, rng);
    const auto shaped = inv_quarter_root_apply(est, noise, cfg.damping);
    const double coef = std::pow(magnitude, 0.25);

    std::vector<Matrix> saved;
    saved.reserve(net.layers.size());
    for (const auto& l : net.layers) saved.push_back(l.wb);

    for (size_t l = 0; l < net.layers.size(); ++l)
        kernels::ops().axpy(coef, shaped[l].data.data(), net.layers[l].wb.data.data(),
                            static_cast<int>(shaped[l].size()));

    for (const auto& l : net.layers) {
        if (!l.wb.all_finite()) {
            for (size_t r = 0; r < net.layers.size(); ++r)
                net.layers[r].wb = saved[r];
            if (report) *report = "scrub aborted: non-finite weights, left unchanged";
            return false;
        }
    }
    return true;
}

void gaussian_scrub(ndmath::Mlp& net, Rng& rng, double scale) {
    double abs_sum = 0.0;
    size_t count = 0;
    for (const auto& l : net.layers) {
        for (double v : l.wb.data) abs_sum += std::fabs(v);
        count += l.wb.size();
    }
    const double mu_abs = count ? abs_sum / static_cast<double>(count) : 0.0;
    const double std_dev = scale * mu_abs;
    if (std_dev == 0.0) return;
    for (auto& l : net.layers)
        for (auto& v : l.wb.data) v += std_dev * rng.normal();
}

ScoreBatch policy_scores(const nets::GaussianPolicy& policy, const Matrix& obs,
                         Rng& rng) {
    nets::PolicySample s = nets::policy_sample(policy, obs, rng);
    const int n = obs.rows;
    const int d = policy.act_dim;
    // Score of log pi(a|s) at the fixed sampled action: the squash correction
    // has no parameter dependence once a is fixed, leaving the Gaussian score
    // d/dmean = z / sigma and d/dlog_std = z^2 - 1.
    Matrix dmean(n, d), dls(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            const double sigma = std::exp(s.log_std(i, j));
            const double z = s.z(i, j);
            dmean(i, j) = z / sigma;
            dls(i, j) = z * z - 1.0;
        }
    Matrix og = nets::policy_output_grads(s, dmean, dls);
    return ndmath::mlp_backward(policy.net, s.cache, og);
}

ScoreBatch critic_scores(const ndmath::Mlp& q, const Matrix& obs,
                         const Matrix& action, Rng& rng) {
    Matrix x = nets::concat_cols(obs, action);
    ndmath::ForwardCache cache;
    (void)ndmath::mlp_forward(q, x, &cache);
    Matrix og(x.rows, 1);
    for (int i = 0; i < x.rows; ++i) og(i, 0) = rng.normal();
    return ndmath::mlp_backward(q, cache, og);
}

ScoreBatch scale_scores(const ScoreBatch& unit, const std::vector<double>& row_scale) {
    if (static_cast<int>(row_scale.size()) != unit.samples)
        throw Error(ErrorKind::DimMismatch, "scale_scores: scale length mismatch");
    ScoreBatch out = unit;
    for (auto& l : out.layers)
        for (int i = 0; i < l.g.rows; ++i) {
            double* row = l.g.row(i);
            for (int j = 0; j < l.g.cols; ++j) row[j] *= row_scale[i];
        }
    return out;
}

} // namespace fgsf::fim
