#include "fgsf/metrics.hpp"

#include "fgsf/error.hpp"

#include <cmath>

namespace fgsf::metrics {

double dormant_fraction(const ndmath::Mlp& net, const ndmath::Matrix& probe_batch,
                        const DormantSpec& spec) {
    if (probe_batch.rows < 1)
        throw Error(ErrorKind::InvalidArgument, "dormant_fraction: empty probe batch");
    if (spec.threshold < 0.0)
        throw Error(ErrorKind::InvalidArgument, "dormant_fraction: tau_d must be >= 0");

    ndmath::ForwardCache cache;
    (void)ndmath::mlp_forward(net, probe_batch, &cache);

    long dormant = 0, total = 0;
    // Hidden layers only: every layer whose output feeds another layer.
    for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
        const auto& post = cache.layers[l].post_activations;
        const int width = post.cols;
        std::vector<double> mean_abs(width, 0.0);
        for (int i = 0; i < post.rows; ++i)
            for (int j = 0; j < width; ++j) mean_abs[j] += std::fabs(post(i, j));
        double layer_mean = 0.0;
        for (int j = 0; j < width; ++j) {
            mean_abs[j] /= post.rows;
            layer_mean += mean_abs[j];
        }
        layer_mean /= width;

        total += width;
        if (layer_mean == 0.0) {
            dormant += width;
            continue;
        }
        for (int j = 0; j < width; ++j)
            if (mean_abs[j] / layer_mean <= spec.threshold) ++dormant;
    }
    return total ? static_cast<double>(dormant) / static_cast<double>(total) : 0.0;
}

double weight_update_kl(std::span<const double> before, std::span<const double> after) {
    if (before.size() != after.size())
        throw Error(ErrorKind::DimMismatch, "weight_update_kl: snapshot length mismatch");
    if (before.empty())
        throw Error(ErrorKind::InvalidArgument, "weight_update_kl: empty snapshots");

    auto fit = [](std::span<const double> w, double& mu, double& sigma) {
        mu = 0.0;
        for (double v : w) mu += v;
        mu /= static_cast<double>(w.size());
        double var = 0.0;
        for (double v : w) var += (v - mu) * (v - mu);
        var /= static_cast<double>(w.size());
        sigma = std::max(std::sqrt(var), 1e-12);
    };

    double mb, sb, ma, sa;
    fit(before, mb, sb);
    fit(after, ma, sa);
    return std::log(sa / sb) + (sb * sb + (mb - ma) * (mb - ma)) / (2.0 * sa * sa) - 0.5;
}

} // namespace fgsf::metrics
