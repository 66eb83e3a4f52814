#include "fgsf/mlp.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <cmath>
#include <cstring>

namespace fgsf::ndmath {

size_t Mlp::param_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.wb.size();
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& l : layers)
        flat.insert(flat.end(), l.wb.data.begin(), l.wb.data.end());
    return flat;
}

void Mlp::unflatten(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw Error(ErrorKind::DimMismatch, "unflatten: size mismatch");
    size_t off = 0;
    for (auto& l : layers) {
        std::memcpy(l.wb.data.data(), flat.data() + off, l.wb.size() * sizeof(double));
        off += l.wb.size();
    }
}

Mlp init_mlp(const std::vector<int>& dims, Activation hidden, Rng& rng) {
    if (dims.size() < 2)
        throw Error(ErrorKind::InvalidArgument, "init_mlp: need at least 2 dims");
    for (int d : dims)
        if (d <= 0)
            throw Error(ErrorKind::InvalidArgument,
                        "init_mlp: zero-width layer rejected (dim " +
                        std::to_string(d) + ")");
    Mlp net;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        const int in = dims[l];
        const int out = dims[l + 1];
        layer.wb = Matrix(out, in + 1);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (int j = 0; j < out; ++j) {
            for (int i = 0; i < in; ++i) layer.wb(j, i) = rng.uniform(-bound, bound);
            layer.wb(j, in) = 0.0;
        }
        layer.act = (l + 2 < dims.size()) ? hidden : Activation::Identity;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Tanh: {
            double y;
            kernels::ops().tanh_ew(&x, &y, 1);
            return y;
        }
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Identity: return x;
    }
    return x;
}

double activation_grad(Activation a, double pre, double post) {
    switch (a) {
        case Activation::Tanh: return 1.0 - post * post;
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

namespace {

Matrix extend_ones(const Matrix& x) {
    Matrix e = Matrix::uninit(x.rows, x.cols + 1);
    for (int i = 0; i < x.rows; ++i) {
        std::memcpy(e.row(i), x.row(i), static_cast<size_t>(x.cols) * sizeof(double));
        e(i, x.cols) = 1.0;
    }
    return e;
}

} // namespace

Matrix mlp_forward(const Mlp& net, const Matrix& inputs, ForwardCache* cache) {
    if (inputs.cols != net.input_dim())
        throw Error(ErrorKind::DimMismatch,
                    "mlp_forward: input width " + std::to_string(inputs.cols) +
                    " vs net input " + std::to_string(net.input_dim()));
    if (cache) {
        cache->input = inputs;
        cache->layers.clear();
        cache->layers.reserve(net.layers.size());
    }
    const auto& ops = kernels::ops();
    Matrix x;
    const Matrix* cur = &inputs;
    for (const auto& layer : net.layers) {
        Matrix pre = Matrix::uninit(cur->rows, layer.out_dim());
        ops.matmul_nt_bias(cur->data.data(), layer.wb.data.data(), pre.data.data(),
                           cur->rows, layer.in_dim(), layer.out_dim(),
                           cur->cols, layer.wb.cols, pre.cols);
        Matrix post = Matrix::uninit(pre.rows, pre.cols);
        if (layer.act == Activation::Tanh) {
            ops.tanh_ew(pre.data.data(), post.data.data(),
                        static_cast<int>(pre.size()));
        } else {
            for (size_t i = 0; i < pre.size(); ++i)
                post.data[i] = apply_activation(layer.act, pre.data[i]);
        }
        if (cache) {
            cache->layers.push_back(LayerCache{std::move(pre), std::move(post)});
            cur = &cache->layers.back().post_activations;
        } else {
            x = std::move(post);
            cur = &x;
        }
    }
    return *cur;
}

size_t PerSampleGrads::param_count() const {
    size_t n = 0;
    for (const auto& l : layers)
        n += static_cast<size_t>(l.g.cols) * l.a_ext.cols;
    return n;
}

void PerSampleGrads::flat_sample(int i, double* out) const {
    size_t off = 0;
    for (const auto& l : layers) {
        const double* gi = l.g.row(i);
        const double* ai = l.a_ext.row(i);
        for (int j = 0; j < l.g.cols; ++j)
            for (int k = 0; k < l.a_ext.cols; ++k)
                out[off++] = gi[j] * ai[k];
    }
}

std::vector<Matrix> PerSampleGrads::batch_grads() const {
    std::vector<Matrix> grads;
    grads.reserve(layers.size());
    for (const auto& l : layers)
        grads.push_back(matmul_tn(l.g, l.a_ext)); // out x (in+1), i-sequential sum
    return grads;
}

PerSampleGrads mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Matrix& output_grads, Matrix* dinput,
                            bool want_param_grads) {
    const size_t nl = net.layers.size();
    if (cache.layers.size() != nl)
        throw Error(ErrorKind::DimMismatch, "mlp_backward: cache/net layer count mismatch");
    if (output_grads.cols != net.output_dim() ||
        output_grads.rows != cache.layers.back().post_activations.rows)
        throw Error(ErrorKind::DimMismatch, "mlp_backward: output_grads shape mismatch");
    for (size_t l = 0; l < nl; ++l)
        if (cache.layers[l].pre_activations.cols != net.layers[l].out_dim() ||
            cache.layer_input(l).cols != net.layers[l].in_dim())
            throw Error(ErrorKind::DimMismatch, "mlp_backward: cache/net width mismatch");

    PerSampleGrads out;
    out.samples = output_grads.rows;
    if (want_param_grads) out.layers.resize(nl);

    Matrix d = output_grads;
    for (size_t l = nl; l-- > 0;) {
        const auto& layer = net.layers[l];
        const auto& lc = cache.layers[l];
        Matrix g = Matrix::uninit(d.rows, d.cols);
        for (int i = 0; i < d.rows; ++i)
            for (int j = 0; j < d.cols; ++j)
                g(i, j) = d(i, j) * activation_grad(layer.act, lc.pre_activations(i, j),
                                                    lc.post_activations(i, j));
        if (want_param_grads) {
            out.layers[l].a_ext = extend_ones(cache.layer_input(l));
            out.layers[l].g = g;
        }

        const bool need_dx = (l > 0) || (dinput != nullptr);
        if (need_dx) {
            // dx = g * W (strip bias column from wb)
            Matrix dx = Matrix::uninit(g.rows, layer.in_dim());
            kernels::ops().matmul_nn(g.data.data(), layer.wb.data.data(), dx.data.data(),
                                     g.rows, g.cols, layer.in_dim(),
                                     g.cols, layer.wb.cols, dx.cols);
            d = std::move(dx);
        }
    }
    if (dinput) *dinput = std::move(d);
    return out;
}

double finite_diff_check(Mlp& net, const Objective& objective, const Matrix& input) {
    const double h = 1e-5;
    ForwardCache cache;
    Matrix out = mlp_forward(net, input, &cache);
    Matrix og = objective.output_grad(out);
    PerSampleGrads grads = mlp_backward(net, cache, og);
    std::vector<Matrix> analytic = grads.batch_grads();

    double max_rel = 0.0;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        Matrix& wb = net.layers[l].wb;
        for (size_t idx = 0; idx < wb.size(); ++idx) {
            const double saved = wb.data[idx];
            wb.data[idx] = saved + h;
            const double fp = objective.value(mlp_forward(net, input));
            wb.data[idx] = saved - h;
            const double fm = objective.value(mlp_forward(net, input));
            wb.data[idx] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[l].data[idx];
            const double rel = std::fabs(an - fd) / (std::fabs(an) + 1e-12);
            if (!std::isfinite(rel)) return rel; // NaN/Inf weight flagged as-is
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

} // namespace fgsf::ndmath
