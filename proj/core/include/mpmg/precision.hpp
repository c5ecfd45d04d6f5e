#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace mpmg {

/// Storage precision of a vector or matrix container.
enum class Precision : std::uint8_t { FP16 = 0, FP32 = 1, FP64 = 2 };

constexpr int bytes_per_value(Precision p) {
  switch (p) {
    case Precision::FP16: return 2;
    case Precision::FP32: return 4;
    default: return 8;
  }
}

constexpr std::string_view precision_name(Precision p) {
  switch (p) {
    case Precision::FP16: return "fp16";
    case Precision::FP32: return "fp32";
    default: return "fp64";
  }
}

/// Rounding behavior of the emulated low-precision arithmetic. The defaults
/// mirror a GPU build with --fmad and --ftz enabled.
struct ArithmeticPolicy {
  bool flush_subnormals_to_zero = true;
  bool fused_multiply_add = true;
};

/// IEEE 754 binary16 bit pattern: 1 sign, 5 exponent, 10 fraction bits.
struct Fp16Value {
  std::uint16_t bits = 0;
  friend bool operator==(Fp16Value, Fp16Value) = default;
};

inline constexpr double kFp16Max = 65504.0;                        // largest finite
inline constexpr double kFp16MinNormal = 6.103515625e-5;           // 2^-14
inline constexpr double kFp16MinSubnormal = 5.9604644775390625e-8; // 2^-24
inline constexpr double kFp16UnitRoundoff = 4.8828125e-4;          // 2^-11

/// Rounds a binary64 value to the nearest binary16 value (ties to even) and
/// returns the result in the binary64 domain. Overflow gives +-infinity,
/// NaN canonicalizes, and subnormal results become signed zero when
/// `flush_subnormals` is set. This is the single rounding primitive behind
/// all emulated binary16 arithmetic.
double quantize_fp16(double x, bool flush_subnormals) noexcept;

/// Round a binary64 scalar to binary16 storage.
Fp16Value round_to_fp16(double x, const ArithmeticPolicy& policy = {}) noexcept;

/// Exact widening conversions (every binary16 value is a binary64/binary32 value).
double widen(Fp16Value h) noexcept;
float widen_f(Fp16Value h) noexcept;

/// Packs a binary64 value that is already exactly representable in binary16.
Fp16Value pack_fp16(double v) noexcept;

// Value-domain binary16 arithmetic. Operands must be exact binary16 values
// (as produced by widen/quantize); each result is rounded once per elementary
// operation, exactly as native half hardware would round it.
double fp16_add_value(double a, double b, bool flush_subnormals) noexcept;
double fp16_mul_value(double a, double b, bool flush_subnormals) noexcept;
double fp16_fma_value(double a, double b, double c, const ArithmeticPolicy& policy) noexcept;

Fp16Value fp16_add(Fp16Value a, Fp16Value b, const ArithmeticPolicy& policy = {}) noexcept;
Fp16Value fp16_mul(Fp16Value a, Fp16Value b, const ArithmeticPolicy& policy = {}) noexcept;
Fp16Value fp16_fma(Fp16Value a, Fp16Value b, Fp16Value c,
                   const ArithmeticPolicy& policy = {}) noexcept;

/// Applies the flush-to-zero policy to a binary32 result.
inline float ftz_fp32(float v, bool flush_subnormals) noexcept {
  if (flush_subnormals && v != 0.0f && std::fabs(v) < std::numeric_limits<float>::min()) {
    return std::copysign(0.0f, v);
  }
  return v;
}

}  // namespace mpmg
