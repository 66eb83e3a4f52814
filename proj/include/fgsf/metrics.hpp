#pragma once

#include "fgsf/mlp.hpp"

#include <span>

namespace fgsf::metrics {

struct DormantSpec {
    double threshold = 0.025; // tau_d
    int probe_batch_size = 256;
};

// Fraction of hidden neurons whose normalized mean absolute activation
// s_j = mean_i |h_j| / (layer mean of mean|h|) falls at or below tau_d on the
// probe batch. A layer whose activations are all zero counts fully dormant.
double dormant_fraction(const ndmath::Mlp& net, const ndmath::Matrix& probe_batch,
                        const DormantSpec& spec);

// Closed-form KL between scalar Gaussians fitted to the two flattened weight
// snapshots (mean + population std, floored at 1e-12):
// KL(before||after) = log(sa/sb) + (sb^2 + (mb - ma)^2) / (2 sa^2) - 1/2.
double weight_update_kl(std::span<const double> before, std::span<const double> after);

} // namespace fgsf::metrics
