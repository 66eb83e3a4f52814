#pragma once

// Shared constants for the tanh/exp kernels. Both backends evaluate exactly
// this operation sequence so results match bitwise (rational approximations
// after Cephes, a few ulp from correctly rounded).

namespace fgsf::kernels::tanh_detail {

inline constexpr double kSmallCut = 0.625;
inline constexpr double kSatCut = 19.0619;

// tanh rational on |x| < 0.625: x + x * (z * P(z) / Q(z)), z = x^2.
inline constexpr double kTanhP0 = -9.64399179425052238628e-1;
inline constexpr double kTanhP1 = -9.92877231001918586564e1;
inline constexpr double kTanhP2 = -1.61468768441708447952e3;
inline constexpr double kTanhQ0 = 1.12811678491632931402e2;
inline constexpr double kTanhQ1 = 2.23548839060100448583e3;
inline constexpr double kTanhQ2 = 4.84406305325125486048e3;

// exp: n = nearbyint(x log2(e)); r = x - n c1 - n c2; with z = r^2,
// p = r P(z), e^r = 1 + 2p / (Q(z) - p); scale by 2^n.
inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kExpC1 = 6.93145751953125e-1;
inline constexpr double kExpC2 = 1.42860682030941723212e-6;
inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

} // namespace fgsf::kernels::tanh_detail
