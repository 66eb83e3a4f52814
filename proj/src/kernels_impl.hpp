#pragma once

// Internal declarations shared by the kernel dispatch unit. Each backend
// namespace provides the full Ops set with identical signatures.

namespace fgsf::kernels {

#define FGSF_DECLARE_KERNELS()                                                   \
    void matmul_nn(const double* a, const double* b, double* c,                  \
                   int m, int k, int n, int lda, int ldb, int ldc);              \
    void matmul_nt(const double* a, const double* b, double* c,                  \
                   int m, int k, int n, int lda, int ldb, int ldc);              \
    void matmul_nt_bias(const double* a, const double* w, double* c,             \
                        int m, int k, int n, int lda, int ldw, int ldc);         \
    void matmul_tn_acc(const double* a, const double* b, double* c,              \
                       int n, int p, int q, int lda, int ldb, int ldc);          \
    double dot(const double* a, const double* b, int n);                         \
    double sumsq(const double* a, int n);                                        \
    void axpy(double alpha, const double* x, double* y, int n);                  \
    void blend(double beta, double gamma, const double* x, double* y, int n);    \
    void sq_acc(const double* x, double* d, int n);                              \
    void add_outer(double s, const double* g, const double* a,                   \
                   double* c, int p, int q, int ldc);                            \
    void adam_step(double* w, const double* g, double* m, double* v,             \
                   double lr, double b1, double b2, double eps,                  \
                   double bc1, double bc2, int n);                               \
    void polyak(double* t, const double* o, double tau, int n);                  \
    void tanh_ew(const double* x, double* y, int n)

namespace scalar {
FGSF_DECLARE_KERNELS();
}
namespace avx2 {
FGSF_DECLARE_KERNELS();
}

#undef FGSF_DECLARE_KERNELS

} // namespace fgsf::kernels
