#pragma once

#include <cstdint>
#include <string>

// Double-precision inner-loop kernels with a scalar reference implementation
// and an AVX2 variant selected at runtime.
//
// Contract: for every kernel, the scalar and AVX2 paths produce bitwise
// identical results. Dot-style reductions use a fixed 8-lane-blocked order
// (lane l accumulates elements l, l+8, l+16, ...; lanes combine as
// (((l0+l1)+(l2+l3)) + ((l4+l5)+(l6+l7))); tail elements are added last, in
// order, then any bias term). Accumulating kernels (matmul_nn, matmul_tn,
// add_outer) run their contraction index outermost and in order, so
// summation order per output element is sequential. tanh_ew evaluates one
// fixed rational approximation (|x| < 0.625 polynomial, exp-based above,
// saturation past 19.0619) with the same operation sequence on both paths;
// it is accurate to a few ulp of true tanh but is not glibc tanh. No FMA
// contraction on either path (the build sets -ffp-contract=off).
//
// Backend selection: AVX2 when the CPU supports it, overridable with the
// environment variable FGSF_KERNELS=scalar|avx2 or set_backend().

namespace fgsf::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
void set_backend(Backend b); // throws fgsf::Error if unsupported
std::string backend_name(Backend b);

struct Ops {
    // c (m x n, row stride ldc) = a (m x k, lda) * b (k x n, ldb); c overwritten.
    void (*matmul_nn)(const double* a, const double* b, double* c,
                      int m, int k, int n, int lda, int ldb, int ldc);
    // c (m x n) = a (m x k, lda) * b^T, b stored (n x k, ldb).
    void (*matmul_nt)(const double* a, const double* b, double* c,
                      int m, int k, int n, int lda, int ldb, int ldc);
    // c = a * w[:, :k]^T + w[:, k] with w stored (n x k+1, ldw): affine layer
    // forward without materializing a ones column.
    void (*matmul_nt_bias)(const double* a, const double* w, double* c,
                           int m, int k, int n, int lda, int ldw, int ldc);
    // c (p x q) = a^T * b with a stored (n x p, lda), b stored (n x q, ldb);
    // c must be zeroed by the caller (kernel accumulates).
    void (*matmul_tn_acc)(const double* a, const double* b, double* c,
                          int n, int p, int q, int lda, int ldb, int ldc);
    double (*dot)(const double* a, const double* b, int n);
    double (*sumsq)(const double* a, int n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, int n);
    // y = beta * y + gamma * x   (elementwise, used by moment updates)
    void (*blend)(double beta, double gamma, const double* x, double* y, int n);
    // d[i] += x[i] * x[i]
    void (*sq_acc)(const double* x, double* d, int n);
    // c[i] += s * g[i] * a[j] outer-product accumulate: c (p x q, ldc) += s * g a^T
    void (*add_outer)(double s, const double* g, const double* a,
                      double* c, int p, int q, int ldc);
    // Adam step: m = b1*m+(1-b1)*g; v = b2*v+(1-b2)*g*g;
    // w -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
    void (*adam_step)(double* w, const double* g, double* m, double* v,
                      double lr, double b1, double b2, double eps,
                      double bc1, double bc2, int n);
    // t[i] = o[i] + (1-tau) * (t[i] - o[i])
    void (*polyak)(double* t, const double* o, double tau, int n);
    // y[i] = tanh(x[i]) via the fixed rational approximation (see above).
    void (*tanh_ew)(const double* x, double* y, int n);
};

const Ops& ops();
const Ops& ops_for(Backend b);

} // namespace fgsf::kernels
