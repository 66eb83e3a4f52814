#include "fgsf/kernels.hpp"
#include "fgsf/error.hpp"
#include "kernels_impl.hpp"

#include <cstdlib>
#include <cstring>

namespace fgsf::kernels {

namespace {

constexpr Ops kScalarOps = {
    scalar::matmul_nn, scalar::matmul_nt, scalar::matmul_nt_bias,
    scalar::matmul_tn_acc, scalar::dot,   scalar::sumsq,
    scalar::axpy,      scalar::blend,     scalar::sq_acc,
    scalar::add_outer, scalar::adam_step, scalar::polyak,
    scalar::tanh_ew,
};

constexpr Ops kAvx2Ops = {
    avx2::matmul_nn, avx2::matmul_nt, avx2::matmul_nt_bias,
    avx2::matmul_tn_acc, avx2::dot,   avx2::sumsq,
    avx2::axpy,      avx2::blend,     avx2::sq_acc,
    avx2::add_outer, avx2::adam_step, avx2::polyak,
    avx2::tanh_ew,
};

Backend initial_backend() {
    if (const char* env = std::getenv("FGSF_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
        if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return Backend::Avx2;
        return Backend::Scalar;
    }
    return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

Backend g_backend = initial_backend();

} // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported())
        throw Error(ErrorKind::InvalidArgument, "avx2 kernels not supported on this cpu");
    g_backend = b;
}

std::string backend_name(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

const Ops& ops_for(Backend b) {
    return b == Backend::Avx2 ? kAvx2Ops : kScalarOps;
}

const Ops& ops() { return ops_for(g_backend); }

} // namespace fgsf::kernels
