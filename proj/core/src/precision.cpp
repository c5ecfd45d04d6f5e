#include "mpmg/precision.hpp"

namespace mpmg {

namespace {

constexpr std::uint64_t kSignMask = 0x8000000000000000ull;
constexpr std::uint64_t kMagMask = 0x7FFFFFFFFFFFFFFFull;
constexpr std::uint64_t kInfBits = 0x7FF0000000000000ull;
// Magnitudes at or above 65520 = (65504 + 65536)/2 round to infinity.
constexpr std::uint64_t kOverflowBits = 0x40EFFE0000000000ull;
// Below 2^-13 the binary16 grid spacing is uniformly 2^-24 (subnormals plus
// the first normal binade), so a single add-magic rounding handles the whole
// region including the subnormal/normal boundary.
constexpr std::uint64_t kSubnormalRegionBits = 0x3F20000000000000ull;
constexpr double kGridMagic = 402653184.0;  // 1.5 * 2^28; ulp there is 2^-24

static_assert(std::bit_cast<std::uint64_t>(65520.0) == kOverflowBits);
static_assert(std::bit_cast<std::uint64_t>(0x1p-13) == kSubnormalRegionBits);

}  // namespace

double quantize_fp16(double x, bool flush_subnormals) noexcept {
  std::uint64_t u = std::bit_cast<std::uint64_t>(x);
  const std::uint64_t mag = u & kMagMask;
  if (mag == 0) return x;  // preserve signed zero
  if (mag >= kInfBits) {
    if (mag > kInfBits) return std::numeric_limits<double>::quiet_NaN();  // canonicalize
    return x;  // +-inf
  }
  if (mag >= kOverflowBits) {
    return (u & kSignMask) ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
  }
  if (mag < kSubnormalRegionBits) {
    const double magic = (u & kSignMask) ? -kGridMagic : kGridMagic;
    double r = (x + magic) - magic;
    if (r == 0.0 || (flush_subnormals && std::fabs(r) < kFp16MinNormal)) {
      return std::copysign(0.0, x);
    }
    return r;
  }
  // Normal range: round-to-nearest-even on the low 42 bits of the binary64
  // significand; a carry propagates into the exponent field as required.
  u += 0x1FFFFFFFFFFull + ((u >> 42) & 1u);
  u &= ~0x3FFFFFFFFFFull;
  return std::bit_cast<double>(u);
}

double widen(Fp16Value h) noexcept {
  const unsigned sign = h.bits >> 15;
  const unsigned e = (h.bits >> 10) & 0x1F;
  const unsigned m = h.bits & 0x3FF;
  double v;
  if (e == 31) {
    v = m ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  } else if (e == 0) {
    v = static_cast<double>(m) * 0x1p-24;
  } else {
    const std::uint64_t bits = (static_cast<std::uint64_t>(e - 15 + 1023) << 52) |
                               (static_cast<std::uint64_t>(m) << 42);
    v = std::bit_cast<double>(bits);
  }
  return sign ? -v : v;
}

float widen_f(Fp16Value h) noexcept { return static_cast<float>(widen(h)); }

Fp16Value pack_fp16(double v) noexcept {
  const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  const auto sign = static_cast<std::uint16_t>((u >> 48) & 0x8000u);
  if ((u & kMagMask) == 0) return Fp16Value{sign};
  if (std::isnan(v)) return Fp16Value{0x7E00};
  if (std::isinf(v)) return Fp16Value{static_cast<std::uint16_t>(sign | 0x7C00)};
  const int e = static_cast<int>((u >> 52) & 0x7FF) - 1023;
  if (e < -14) {
    // Subnormal: v is an exact multiple of 2^-24 with magnitude < 2^-14.
    const auto m = static_cast<std::uint16_t>(std::fabs(v) * 0x1p24);
    return Fp16Value{static_cast<std::uint16_t>(sign | m)};
  }
  const auto frac = static_cast<std::uint16_t>((u >> 42) & 0x3FF);
  return Fp16Value{static_cast<std::uint16_t>(sign | ((e + 15) << 10) | frac)};
}

Fp16Value round_to_fp16(double x, const ArithmeticPolicy& policy) noexcept {
  return pack_fp16(quantize_fp16(x, policy.flush_subnormals_to_zero));
}

double fp16_add_value(double a, double b, bool flush_subnormals) noexcept {
  // The binary64 sum of two binary16 values is exact, so one quantization
  // reproduces the correctly rounded binary16 addition.
  return quantize_fp16(a + b, flush_subnormals);
}

double fp16_mul_value(double a, double b, bool flush_subnormals) noexcept {
  return quantize_fp16(a * b, flush_subnormals);  // 11x11-bit product is exact
}

double fp16_fma_value(double a, double b, double c, const ArithmeticPolicy& policy) noexcept {
  if (!policy.fused_multiply_add) {
    const double p = quantize_fp16(a * b, policy.flush_subnormals_to_zero);
    return quantize_fp16(p + c, policy.flush_subnormals_to_zero);
  }
  // Fused path: a*b is exact in binary64, but adding c may round. Rounding the
  // sum to odd first makes the final quantization see the exact tail, so the
  // result equals the exact a*b+c rounded once to binary16.
  const double prod = a * b;
  double s = prod + c;
  if (std::isfinite(s)) {
    const double bv = s - prod;
    const double err = (prod - (s - bv)) + (c - bv);
    if (err != 0.0) {
      std::uint64_t u = std::bit_cast<std::uint64_t>(s);
      if ((u & 1u) == 0) {
        s = std::nextafter(s, err > 0 ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity());
      }
    }
  }
  return quantize_fp16(s, policy.flush_subnormals_to_zero);
}

Fp16Value fp16_add(Fp16Value a, Fp16Value b, const ArithmeticPolicy& policy) noexcept {
  return pack_fp16(fp16_add_value(widen(a), widen(b), policy.flush_subnormals_to_zero));
}

Fp16Value fp16_mul(Fp16Value a, Fp16Value b, const ArithmeticPolicy& policy) noexcept {
  return pack_fp16(fp16_mul_value(widen(a), widen(b), policy.flush_subnormals_to_zero));
}

Fp16Value fp16_fma(Fp16Value a, Fp16Value b, Fp16Value c,
                   const ArithmeticPolicy& policy) noexcept {
  return pack_fp16(fp16_fma_value(widen(a), widen(b), widen(c), policy));
}

}  // namespace mpmg
