#include "fgsf/sym_eig.hpp"

#include "fgsf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fgsf::ndmath {

EigDecomposition sym_eig(const Matrix& m) {
    if (m.rows != m.cols)
        throw Error(ErrorKind::DimMismatch, "sym_eig: matrix is " +
                    std::to_string(m.rows) + "x" + std::to_string(m.cols));
    const int n = m.rows;

    double max_abs = 0.0;
    for (double v : m.data) max_abs = std::max(max_abs, std::fabs(v));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(m(i, j) - m(j, i)) > 1e-9 * std::max(1.0, max_abs))
                throw Error(ErrorKind::InvalidArgument,
                            "sym_eig: input not symmetric");

    Matrix a = m;
    Matrix v = identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double tol = 1e-14 * std::max(1.0, max_abs) * n;
    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > tol; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::fabs(apq) <= tol / (n * n)) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0)
                    ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                    : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = a(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return diag[x] > diag[y]; });

    EigDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        const int src = order[j];
        out.values[j] = diag[src];
        int arg = 0;
        double best = 0.0;
        for (int k = 0; k < n; ++k) {
            if (std::fabs(v(k, src)) > best) {
                best = std::fabs(v(k, src));
                arg = k;
            }
        }
        const double sign = v(arg, src) >= 0.0 ? 1.0 : -1.0;
        for (int k = 0; k < n; ++k) out.vectors(k, j) = sign * v(k, src);
    }
    return out;
}

} // namespace fgsf::ndmath
