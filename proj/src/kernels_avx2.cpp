#include "fgsf/kernels.hpp"
#include "kernels_impl.hpp"
#include "kernels_tanh_common.hpp"

#include <cmath>
#include <cstddef>
#include <immintrin.h>

// AVX2 kernels. Bitwise-identical to the scalar reference: same lane layout,
// same combine order, separate mul/add (no FMA), exact sqrt/div. This file is
// the only translation unit compiled with -mavx2; entry is guarded by the
// runtime dispatch in kernels_dispatch.cpp.

namespace fgsf::kernels::avx2 {

namespace {

// ((lane0 + lane1) + (lane2 + lane3)), matching the scalar lane combine.
inline double hsum_ordered(__m256d v) {
    alignas(32) double lane[4];
    _mm256_store_pd(lane, v);
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

// 8-lane blocked dot; see kernels.hpp for the reduction-order contract.
inline double blocked_dot(const double* a, const double* b, int k) {
    const int kv = k & ~7;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (int t = 0; t < kv; t += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + t),
                                                 _mm256_loadu_pd(b + t)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + t + 4),
                                                 _mm256_loadu_pd(b + t + 4)));
    }
    double s = hsum_ordered(acc0) + hsum_ordered(acc1);
    for (int t = kv; t < k; ++t) s += a[t] * b[t];
    return s;
}

} // namespace

void matmul_nn(const double* a, const double* b, double* c,
               int m, int k, int n, int lda, int ldb, int ldc) {
    const int nv = n & ~3;
    for (int i = 0; i < m; ++i) {
        double* ci = c + static_cast<ptrdiff_t>(i) * ldc;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        int t = 0;
        // Two contraction steps per pass over the c row; the per-element
        // accumulation order stays strictly t-sequential.
        for (; t + 1 < k; t += 2) {
            const double av0 = ai[t];
            const double av1 = ai[t + 1];
            const __m256d avv0 = _mm256_set1_pd(av0);
            const __m256d avv1 = _mm256_set1_pd(av1);
            const double* bt0 = b + static_cast<ptrdiff_t>(t) * ldb;
            const double* bt1 = bt0 + ldb;
            int j = 0;
            for (; j < nv; j += 4) {
                __m256d cv = _mm256_loadu_pd(ci + j);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv0, _mm256_loadu_pd(bt0 + j)));
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv1, _mm256_loadu_pd(bt1 + j)));
                _mm256_storeu_pd(ci + j, cv);
            }
            for (; j < n; ++j) ci[j] = (ci[j] + av0 * bt0[j]) + av1 * bt1[j];
        }
        for (; t < k; ++t) {
            const double av = ai[t];
            const __m256d avv = _mm256_set1_pd(av);
            const double* bt = b + static_cast<ptrdiff_t>(t) * ldb;
            int j = 0;
            for (; j < nv; j += 4) {
                __m256d cv = _mm256_loadu_pd(ci + j);
                __m256d bv = _mm256_loadu_pd(bt + j);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv, bv));
                _mm256_storeu_pd(ci + j, cv);
            }
            for (; j < n; ++j) ci[j] += av * bt[j];
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
    const int kv = k & ~7;
    for (int i = 0; i < m; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        double* ci = c + static_cast<ptrdiff_t>(i) * ldc;
        int j = 0;
        // Two output rows of w per pass share the a-row loads; each dot keeps
        // the 8-lane blocked order.
        for (; j + 1 < n; j += 2) {
            const double* wj0 = w + static_cast<ptrdiff_t>(j) * ldw;
            const double* wj1 = wj0 + ldw;
            __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
            __m256d b0 = _mm256_setzero_pd(), b1 = _mm256_setzero_pd();
            for (int t = 0; t < kv; t += 8) {
                const __m256d x0 = _mm256_loadu_pd(ai + t);
                const __m256d x1 = _mm256_loadu_pd(ai + t + 4);
                a0 = _mm256_add_pd(a0, _mm256_mul_pd(x0, _mm256_loadu_pd(wj0 + t)));
                a1 = _mm256_add_pd(a1, _mm256_mul_pd(x1, _mm256_loadu_pd(wj0 + t + 4)));
                b0 = _mm256_add_pd(b0, _mm256_mul_pd(x0, _mm256_loadu_pd(wj1 + t)));
                b1 = _mm256_add_pd(b1, _mm256_mul_pd(x1, _mm256_loadu_pd(wj1 + t + 4)));
            }
            double s0 = hsum_ordered(a0) + hsum_ordered(a1);
            double s1 = hsum_ordered(b0) + hsum_ordered(b1);
            for (int t = kv; t < k; ++t) {
                s0 += ai[t] * wj0[t];
                s1 += ai[t] * wj1[t];
            }
            ci[j] = s0 + wj0[k];
            ci[j + 1] = s1 + wj1[k];
        }
        for (; j < n; ++j) {
            const double* wj = w + static_cast<ptrdiff_t>(j) * ldw;
            ci[j] = blocked_dot(ai, wj, k) + wj[k];
        }
    }
}

void matmul_tn_acc(const double* a, const double* b, double* c,
                   int n, int p, int q, int lda, int ldb, int ldc) {
    const int qv = q & ~3;
    int i = 0;
    // Two samples per pass over c; accumulation stays i-sequential per entry.
    for (; i + 1 < n; i += 2) {
        const double* ai0 = a + static_cast<ptrdiff_t>(i) * lda;
        const double* ai1 = ai0 + lda;
        const double* bi0 = b + static_cast<ptrdiff_t>(i) * ldb;
        const double* bi1 = bi0 + ldb;
        for (int j = 0; j < p; ++j) {
            const double av0 = ai0[j];
            const double av1 = ai1[j];
            const __m256d avv0 = _mm256_set1_pd(av0);
            const __m256d avv1 = _mm256_set1_pd(av1);
            double* cj = c + static_cast<ptrdiff_t>(j) * ldc;
            int l = 0;
            for (; l < qv; l += 4) {
                __m256d cv = _mm256_loadu_pd(cj + l);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv0, _mm256_loadu_pd(bi0 + l)));
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv1, _mm256_loadu_pd(bi1 + l)));
                _mm256_storeu_pd(cj + l, cv);
            }
            for (; l < q; ++l) cj[l] = (cj[l] + av0 * bi0[l]) + av1 * bi1[l];
        }
    }
    for (; i < n; ++i) {
        const double* ai = a + static_cast<ptrdiff_t>(i) * lda;
        const double* bi = b + static_cast<ptrdiff_t>(i) * ldb;
        for (int j = 0; j < p; ++j) {
            const double av = ai[j];
            const __m256d avv = _mm256_set1_pd(av);
            double* cj = c + static_cast<ptrdiff_t>(j) * ldc;
            int l = 0;
            for (; l < qv; l += 4) {
                __m256d cv = _mm256_loadu_pd(cj + l);
                __m256d bv = _mm256_loadu_pd(bi + l);
                cv = _mm256_add_pd(cv, _mm256_mul_pd(avv, bv));
                _mm256_storeu_pd(cj + l, cv);
            }
            for (; l < q; ++l) cj[l] += av * bi[l];
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
    const int nv = n & ~3;
    const __m256d al = _mm256_set1_pd(alpha);
    int i = 0;
    for (; i < nv; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d xv = _mm256_loadu_pd(x + i);
        yv = _mm256_add_pd(yv, _mm256_mul_pd(al, xv));
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void blend(double beta, double gamma, const double* x, double* y, int n) {
    const int nv = n & ~3;
    const __m256d bv = _mm256_set1_pd(beta);
    const __m256d gv = _mm256_set1_pd(gamma);
    int i = 0;
    for (; i < nv; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d xv = _mm256_loadu_pd(x + i);
        yv = _mm256_add_pd(_mm256_mul_pd(bv, yv), _mm256_mul_pd(gv, xv));
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < n; ++i) y[i] = beta * y[i] + gamma * x[i];
}

void sq_acc(const double* x, double* d, int n) {
    const int nv = n & ~3;
    int i = 0;
    for (; i < nv; i += 4) {
        __m256d dv = _mm256_loadu_pd(d + i);
        __m256d xv = _mm256_loadu_pd(x + i);
        dv = _mm256_add_pd(dv, _mm256_mul_pd(xv, xv));
        _mm256_storeu_pd(d + i, dv);
    }
    for (; i < n; ++i) d[i] += x[i] * x[i];
}

void add_outer(double s, const double* g, const double* a,
               double* c, int p, int q, int ldc) {
    const int qv = q & ~3;
    for (int j = 0; j < p; ++j) {
        const double gv = s * g[j];
        const __m256d gvv = _mm256_set1_pd(gv);
        double* cj = c + static_cast<ptrdiff_t>(j) * ldc;
        int l = 0;
        for (; l < qv; l += 4) {
            __m256d cv = _mm256_loadu_pd(cj + l);
            __m256d av = _mm256_loadu_pd(a + l);
            cv = _mm256_add_pd(cv, _mm256_mul_pd(gvv, av));
            _mm256_storeu_pd(cj + l, cv);
        }
        for (; l < q; ++l) cj[l] += gv * a[l];
    }
}

void adam_step(double* w, const double* g, double* m, double* v,
               double lr, double b1, double b2, double eps,
               double bc1, double bc2, int n) {
    const double omb1 = 1.0 - b1;
    const double omb2 = 1.0 - b2;
    const int nv = n & ~3;
    const __m256d b1v = _mm256_set1_pd(b1);
    const __m256d b2v = _mm256_set1_pd(b2);
    const __m256d omb1v = _mm256_set1_pd(omb1);
    const __m256d omb2v = _mm256_set1_pd(omb2);
    const __m256d bc1v = _mm256_set1_pd(bc1);
    const __m256d bc2v = _mm256_set1_pd(bc2);
    const __m256d epsv = _mm256_set1_pd(eps);
    const __m256d lrv = _mm256_set1_pd(lr);
    int i = 0;
    for (; i < nv; i += 4) {
        __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        mv = _mm256_add_pd(_mm256_mul_pd(b1v, mv), _mm256_mul_pd(omb1v, gv));
        vv = _mm256_add_pd(_mm256_mul_pd(b2v, vv),
                           _mm256_mul_pd(omb2v, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_div_pd(mv, bc1v);
        __m256d vhat = _mm256_div_pd(vv, bc2v);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), epsv);
        __m256d wv = _mm256_loadu_pd(w + i);
        wv = _mm256_sub_pd(wv, _mm256_mul_pd(lrv, _mm256_div_pd(mhat, denom)));
        _mm256_storeu_pd(w + i, wv);
    }
    for (; i < n; ++i) {
        m[i] = b1 * m[i] + omb1 * g[i];
        v[i] = b2 * v[i] + omb2 * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] = w[i] - lr * (mhat / (std::sqrt(vhat) + eps));
    }
}

void polyak(double* t, const double* o, double tau, int n) {
    const double keep = 1.0 - tau;
    const __m256d kv = _mm256_set1_pd(keep);
    const int nv = n & ~3;
    int i = 0;
    for (; i < nv; i += 4) {
        __m256d tv = _mm256_loadu_pd(t + i);
        __m256d ov = _mm256_loadu_pd(o + i);
        tv = _mm256_add_pd(ov, _mm256_mul_pd(kv, _mm256_sub_pd(tv, ov)));
        _mm256_storeu_pd(t + i, tv);
    }
    for (; i < n; ++i) t[i] = o[i] + keep * (t[i] - o[i]);
}

namespace {

// exp(x) for the tanh large branch; garbage lanes (x huge/NaN) are blended
// away by the caller.
inline __m256d exp_lanes(__m256d x) {
    using namespace tanh_detail;
    const __m256d nflt = _mm256_round_pd(
        _mm256_mul_pd(x, _mm256_set1_pd(kLog2E)),
        _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_sub_pd(x, _mm256_mul_pd(nflt, _mm256_set1_pd(kExpC1)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(nflt, _mm256_set1_pd(kExpC2)));
    const __m256d z = _mm256_mul_pd(r, r);
    __m256d p = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(kExpP0), z),
                              _mm256_set1_pd(kExpP1));
    p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kExpP2));
    p = _mm256_mul_pd(r, p);
    __m256d q = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(kExpQ0), z),
                              _mm256_set1_pd(kExpQ1));
    q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kExpQ2));
    q = _mm256_add_pd(_mm256_mul_pd(q, z), _mm256_set1_pd(kExpQ3));
    const __m256d er = _mm256_add_pd(
        _mm256_set1_pd(1.0),
        _mm256_div_pd(_mm256_add_pd(p, p), _mm256_sub_pd(q, p)));
    // 2^n via exponent bits; n is within [2, 56] on selected lanes.
    const __m128i n32 = _mm256_cvtpd_epi32(nflt);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i bits = _mm256_slli_epi64(
        _mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(er, _mm256_castsi256_pd(bits));
}

} // namespace

void tanh_ew(const double* x, double* y, int n) {
    using namespace tanh_detail;
    const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d sign_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(
        static_cast<long long>(0x8000000000000000ULL)));
    const __m256d one = _mm256_set1_pd(1.0);
    const int nv = n & ~3;
    int i = 0;
    for (; i < nv; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d ax = _mm256_and_pd(v, abs_mask);

        // Small branch: x + x * (z * P(z) / Q(z)).
        const __m256d z = _mm256_mul_pd(v, v);
        __m256d num = _mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(kTanhP0), z),
                                    _mm256_set1_pd(kTanhP1));
        num = _mm256_add_pd(_mm256_mul_pd(num, z), _mm256_set1_pd(kTanhP2));
        __m256d den = _mm256_add_pd(z, _mm256_set1_pd(kTanhQ0));
        den = _mm256_add_pd(_mm256_mul_pd(den, z), _mm256_set1_pd(kTanhQ1));
        den = _mm256_add_pd(_mm256_mul_pd(den, z), _mm256_set1_pd(kTanhQ2));
        const __m256d t1 = _mm256_mul_pd(z, num);
        const __m256d t2 = _mm256_div_pd(t1, den);
        const __m256d small = _mm256_add_pd(v, _mm256_mul_pd(v, t2));

        // Large branch: 1 - 2 / (exp(2|x|) + 1), saturating past the cutoff.
        const __m256d e2 = exp_lanes(_mm256_add_pd(ax, ax));
        const __m256d t4 = _mm256_add_pd(e2, one);
        __m256d large = _mm256_sub_pd(one, _mm256_div_pd(_mm256_set1_pd(2.0), t4));
        const __m256d sat = _mm256_cmp_pd(ax, _mm256_set1_pd(kSatCut), _CMP_GT_OQ);
        large = _mm256_blendv_pd(large, one, sat);
        large = _mm256_or_pd(large, _mm256_and_pd(v, sign_mask));

        const __m256d pick_small = _mm256_cmp_pd(ax, _mm256_set1_pd(kSmallCut), _CMP_LT_OQ);
        __m256d out = _mm256_blendv_pd(large, small, pick_small);
        const __m256d is_nan = _mm256_cmp_pd(v, v, _CMP_UNORD_Q);
        out = _mm256_blendv_pd(out, v, is_nan);
        _mm256_storeu_pd(y + i, out);
    }
    if (i < n) scalar::tanh_ew(x + i, y + i, n - i);
}

} // namespace fgsf::kernels::avx2
