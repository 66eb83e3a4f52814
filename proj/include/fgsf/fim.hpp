#pragma once

#include "fgsf/mlp.hpp"
#include "fgsf/nets.hpp"
#include "fgsf/sym_eig.hpp"

#include <string>
#include <vector>

namespace fgsf::fim {

using ndmath::Matrix;

// Per-sample score capture: one (a_ext, g) pair per layer, so sample i's
// gradient of the log-likelihood is g_i a~_i^T per layer. Shared with the
// backprop machinery.
using ScoreBatch = ndmath::PerSampleGrads;

enum class EstimatorKind { Diagonal, Kfac, Ekfac, DenseOracle };
enum class ScrubTarget { ActorOnly, CriticOnly, Both };

EstimatorKind estimator_from_name(const std::string& name); // diag|kfac|ekfac
std::string estimator_name(EstimatorKind k);
ScrubTarget target_from_name(const std::string& name); // actor|critic|both
std::string target_name(ScrubTarget t);

struct LayerShape {
    int out = 0;
    int in_ext = 0; // in + 1 (bias column)
};

struct KfacLayer {
    Matrix a_factor; // in_ext x in_ext, mean of a~ a~^T
    Matrix g_factor; // out x out, mean of g g^T
};

struct EkfacLayer {
    Matrix u_a;     // in_ext x in_ext eigenbasis of the A factor
    Matrix u_g;     // out x out eigenbasis of the G factor
    Matrix lambda;  // out x in_ext corrected eigenvalues, all >= 0
};

struct FimEstimate {
    EstimatorKind kind = EstimatorKind::Diagonal;
    std::vector<LayerShape> shapes;
    std::vector<double> diagonal;   // Diagonal: flat layout (layer-major, g-row-major)
    Matrix dense;                   // DenseOracle only, params x params
    std::vector<KfacLayer> kfac;
    std::vector<EkfacLayer> ekfac;

    size_t param_count() const;
};

// Mean of per-sample score outer products; symmetric PSD. Oracle-sized only:
// throws if the parameter count exceeds 2000.
FimEstimate empirical_fim_full(const ScoreBatch& scores);

// Per-parameter mean of squared score entries; equals the diagonal of
// empirical_fim_full bitwise (same products, same accumulation order).
FimEstimate empirical_fim_diag(const ScoreBatch& scores);

// Per-layer Kronecker factors A = mean a~ a~^T, G = mean g g^T.
FimEstimate kfac_estimate(const ScoreBatch& scores);

// Eigenvalue correction in the Kronecker eigenbasis:
// lambda_jk = mean_i ((U_g^T g_i)(a~_i^T U_a))_jk^2. The corrected
// eigenvalue sum per layer equals the exact empirical layer trace.
FimEstimate ekfac_estimate(const FimEstimate& kfac, const ScoreBatch& scores);

FimEstimate estimate(const ScoreBatch& scores, EstimatorKind kind);

double fim_trace(const FimEstimate& est);

std::vector<Matrix> draw_layer_noise(const std::vector<LayerShape>& shapes, Rng& rng);

// Shape standard-normal noise by F^{-1/4} (damped eigenvalues/diagonal).
// Covariance of the output is (F + damping)^{-1/2}.
std::vector<Matrix> inv_quarter_root_apply(const FimEstimate& est,
                                           const std::vector<Matrix>& noise,
                                           double damping);

struct ScrubConfig {
    double lambda = 5e-7;
    double sigma_sq = 1.0;
    int frequency = 10;       // gradient steps between scrubs
    ScrubTarget target = ScrubTarget::Both;
    double damping = 1e-8;
    EstimatorKind estimator = EstimatorKind::Ekfac;

    void validate() const;
};

// w += (lambda sigma^2)^{1/4} F^{-1/4} eps. Returns false (weights restored,
// nothing applied) if the perturbed net would be non-finite. lambda == 0
// leaves the weights bitwise unchanged and consumes no rng.
bool fgsf_scrub(ndmath::Mlp& net, const FimEstimate& est, const ScrubConfig& cfg,
                Rng& rng, std::string* report = nullptr);

// Unstructured baseline: w += N(0, scale * mean|w|) per weight. A net of
// all-zero weights is left untouched.
void gaussian_scrub(ndmath::Mlp& net, Rng& rng, double scale = 1e-3);

// Monte-Carlo policy scores: sample a ~ pi(.|s) per state, differentiate
// log pi(a|s) at the fixed sample. Consumes act_dim normal draws per row.
ScoreBatch policy_scores(const nets::GaussianPolicy& policy, const Matrix& obs,
                         Rng& rng);

// Critic scores under a unit-variance Gaussian predictive model centered on
// Q(s,a): score_i = eps_i * grad_w Q(s_i, a_i), eps_i ~ N(0,1).
ScoreBatch critic_scores(const ndmath::Mlp& q, const Matrix& obs,
                         const Matrix& action, Rng& rng);

// Row-rescale of the g side: turns retained unit-output-gradient backprops
// into scores (or TD gradients) without another backward pass.
ScoreBatch scale_scores(const ScoreBatch& unit, const std::vector<double>& row_scale);

std::vector<LayerShape> shapes_of(const ndmath::Mlp& net);
std::vector<LayerShape> shapes_of(const ScoreBatch& scores);

} // namespace fgsf::fim
