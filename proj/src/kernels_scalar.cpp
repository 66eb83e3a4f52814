#include "fgsf/kernels.hpp"

#include "kernels_tanh_common.hpp"

#include <cmath>
#include <cstddef>

// Scalar reference kernels. These define the numeric contract; the AVX2
// variants must reproduce them bitwise. Reductions follow the 8-lane-blocked
// scheme described in kernels.hpp even here, so both paths agree.

namespace fgsf::kernels::scalar {

namespace {

struct LaneSums {
    double s[8] = {};

    inline void add(const double* a, const double* b, int t) {
        s[0] += a[t] * b[t];
        s[1] += a[t + 1] * b[t + 1];
        s[2] += a[t + 2] * b[t + 2];
        s[3] += a[t + 3] * b[t + 3];
        s[4] += a[t + 4] * b[t + 4];
        s[5] += a[t + 5] * b[t + 5];
        s[6] += a[t + 6] * b[t + 6];
        s[7] += a[t + 7] * b[t + 7];
    }
    inline double reduce() const {
        return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
    }
};

inline double blocked_dot(const double* a, const double* b, int k) {
    const int kv = k & ~7;
    LaneSums ls;
    for (int t = 0; t < kv; t += 8) ls.add(a, b, t);
    double s = ls.reduce();
    for (int t = kv; t < k; ++t) s += a[t] * b[t];
    return s;
}

} // namespace

void matmul_nn(const double* a, const double* b, double* c,
               int m, int k, int n, int lda, int ldb, int ldc) {
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        for (int t = 0; t < k; ++t) {
            const double av = ai[t];
            const double* bt = b + static_cast<ptrdiff_t>(t) * ldb;
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               int m, int k, int n, int lda, int ldb, int ldc) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        double* ci = c + static_cast<ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n; ++j)
            ci[j] = blocked_dot(ai, b + static_cast<ptrdiff_t>(j) * ldb, k);
    }
}

void matmul_nt_bias(const double* a, const double* w, double* c,
                    int m, int k, int n, int lda, int ldw, int ldc) {
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        double* ci = c + static_cast<ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n; ++j) {
            const double* wj = w + static_cast<ptrdiff_t>(j) * ldw;
            ci[j] = blocked_dot(ai, wj, k) + wj[k];
        }
    }
}

void matmul_tn_acc(const double* a, const double* b, double* c,
                   int n, int p, int q, int lda, int ldb, int ldc) {
    for (int i = 0; i < n; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        const double* bi = b + static_cast<ptrdiff_t>(i) * ldb;
        for (int j = 0; j < p; ++j) {
            const double av = ai[j];
            double* cj = c + static_cast<ptrdiff_t>(j) * ldc;
            for (int l = 0; l < q; ++l) cj[l] += av * bi[l];
        }
    }
}

double dot(const double* a, const double* b, int n) {
    return blocked_dot(a, b, n);
}

double sumsq(const double* a, int n) {
    return blocked_dot(a, a, n);
}

void axpy(double alpha, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void blend(double beta, double gamma, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = beta * y[i] + gamma * x[i];
}

void sq_acc(const double* x, double* d, int n) {
    for (int i = 0; i < n; ++i) d[i] += x[i] * x[i];
}

void add_outer(double s, const double* g, const double* a,
               double* c, int p, int q, int ldc) {
    for (int j = 0; j < p; ++j) {
        const double gv = s * g[j];
        double* cj = c + static_cast<ptrdiff_t>(j) * ldc;
        for (int l = 0; l < q; ++l) cj[l] += gv * a[l];
    }
}

void adam_step(double* w, const double* g, double* m, double* v,
               double lr, double b1, double b2, double eps,
               double bc1, double bc2, int n) {
    const double omb1 = 1.0 - b1;
    const double omb2 = 1.0 - b2;
    for (int i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + omb1 * g[i];
        v[i] = b2 * v[i] + omb2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] = w[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

void polyak(double* t, const double* o, double tau, int n) {
    const double keep = 1.0 - tau;
    for (int i = 0; i < n; ++i) t[i] = o[i] + keep * (t[i] - o[i]);
}

void tanh_ew(const double* x, double* y, int n) {
    using namespace tanh_detail;
    for (int i = 0; i < n; ++i) {
        const double v = x[i];
        if (std::isnan(v)) {
            y[i] = v;
            continue;
        }
        const double ax = std::fabs(v);
        if (ax < kSmallCut) {
            const double z = v * v;
            const double num = (kTanhP0 * z + kTanhP1) * z + kTanhP2;
            const double den = ((z + kTanhQ0) * z + kTanhQ1) * z + kTanhQ2;
            const double t1 = z * num;
            const double t2 = t1 / den;
            y[i] = v + v * t2;
        } else if (ax > kSatCut) {
            y[i] = v > 0.0 ? 1.0 : -1.0;
        } else {
            // exp(2|x|) via the shared rational approximation.
            const double e_in = ax + ax;
            const double nflt = std::nearbyint(e_in * kLog2E);
            const double r = (e_in - nflt * kExpC1) - nflt * kExpC2;
            const double z = r * r;
            const double p = r * ((kExpP0 * z + kExpP1) * z + kExpP2);
            const double q = ((kExpQ0 * z + kExpQ1) * z + kExpQ2) * z + kExpQ3;
            const double er = 1.0 + (p + p) / (q - p);
            const double e2 = er * std::ldexp(1.0, static_cast<int>(nflt));
            const double t4 = e2 + 1.0;
            const double w = 1.0 - 2.0 / t4;
            y[i] = v > 0.0 ? w : -w;
        }
    }
}

} // namespace fgsf::kernels::scalar
