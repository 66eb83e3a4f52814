#pragma once

#include "fgsf/matrix.hpp"
#include "fgsf/rng.hpp"

#include <functional>
#include <vector>

namespace fgsf::ndmath {

enum class Activation { Tanh, Relu, Identity };

// One affine layer. Weights and bias live in a single (out x in+1) matrix,
// bias in the last column, so the parameter layout matches the per-sample
// gradient blocks g a~^T used throughout the curvature code.
struct DenseLayer {
    Matrix wb;       // out x (in + 1)
    Activation act = Activation::Identity;

    int in_dim() const { return wb.cols - 1; }
    int out_dim() const { return wb.rows; }
};

struct Mlp {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.front().in_dim(); }
    int output_dim() const { return layers.back().out_dim(); }
    size_t param_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

// Weights ~ Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
// `hidden` is applied to every layer except the last (Identity output).
Mlp init_mlp(const std::vector<int>& dims, Activation hidden, Rng& rng);

double apply_activation(Activation a, double x);
double activation_grad(Activation a, double pre, double post);

struct LayerCache {
    Matrix pre_activations;   // batch x out
    Matrix post_activations;  // batch x out
};

struct ForwardCache {
    Matrix input;                     // batch x input_dim
    std::vector<LayerCache> layers;

    // Layer l's input: the net input for l == 0, else the previous layer's
    // post-activations.
    const Matrix& layer_input(size_t l) const {
        return l == 0 ? input : layers[l - 1].post_activations;
    }
};

// outputs = composition of affine layers and activations; `cache`, when
// given, retains every layer's extended inputs and pre/post activations.
Matrix mlp_forward(const Mlp& net, const Matrix& inputs, ForwardCache* cache = nullptr);

// Per-sample, per-layer score/gradient capture: gradients of a per-sample
// scalar objective factor as g_i a~_i^T per layer. Sample i's flat gradient
// and the batch sum are materialized on demand; summing per-sample gradients
// reproduces the batch gradient bitwise (same i-sequential order).
struct PerSampleGrads {
    struct Layer {
        Matrix a_ext;  // batch x (in + 1)
        Matrix g;      // batch x out
    };
    std::vector<Layer> layers;
    int samples = 0;

    size_t param_count() const;
    void flat_sample(int i, double* out) const;          // length param_count()
    std::vector<Matrix> batch_grads() const;             // per layer, out x (in+1)
};

// output_grads: batch x output_dim, d(objective_i)/d(output_i).
// dinput, when non-null, receives d(objective)/d(inputs), batch x input_dim.
// want_param_grads = false skips the per-sample capture (input-gradient-only
// backprop); the returned PerSampleGrads is then empty.
PerSampleGrads mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Matrix& output_grads, Matrix* dinput = nullptr,
                            bool want_param_grads = true);

struct Objective {
    std::function<double(const Matrix& outputs)> value;
    std::function<Matrix(const Matrix& outputs)> output_grad;
};

// Max over parameters of |analytic - central difference| / (|analytic| + 1e-12),
// step 1e-5. Non-finite weights propagate into the returned value.
double finite_diff_check(Mlp& net, const Objective& objective, const Matrix& input);

} // namespace fgsf::ndmath
