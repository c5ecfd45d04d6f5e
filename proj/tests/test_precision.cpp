#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mpmg/precision.hpp"
#include "mpmg/rng.hpp"
#include "oracles.hpp"

using namespace mpmg;

namespace {

const ArithmeticPolicy kNoFlush{false, true};
const ArithmeticPolicy kFlush{true, true};

bool is_nan_pattern(std::uint16_t bits) {
  return (bits & 0x7C00u) == 0x7C00u && (bits & 0x3FFu) != 0;
}

bool is_subnormal_pattern(std::uint16_t bits) {
  return (bits & 0x7C00u) == 0 && (bits & 0x3FFu) != 0;
}

double random_fp16_value(SplitMix64& rng) {
  for (;;) {
    const auto bits = static_cast<std::uint16_t>(rng.next_u64() & 0xFFFFu);
    if ((bits & 0x7C00u) == 0x7C00u) continue;  // skip inf/NaN
    return widen(Fp16Value{bits});
  }
}

bool same_value(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

}  // namespace

TEST_CASE("binary16 limits match the IEEE table") {
  CHECK(kFp16Max == 65504.0);
  CHECK(kFp16MinNormal == 0x1p-14);
  CHECK(kFp16MinNormal == 6.103515625e-5);
  CHECK(kFp16MinSubnormal == 0x1p-24);
  CHECK(kFp16UnitRoundoff == 0x1p-11);

  CHECK(widen(round_to_fp16(1.0)) == 1.0);
  CHECK(widen(round_to_fp16(0.5)) == 0.5);
  CHECK(widen(round_to_fp16(65504.0)) == 65504.0);
  CHECK(widen(round_to_fp16(0x1p-14)) == 6.103515625e-5);

  // rounding at the top of the finite range
  CHECK(widen(round_to_fp16(65519.0)) == 65504.0);
  CHECK(std::isinf(widen(round_to_fp16(65520.0))));
  CHECK(std::isinf(widen(round_to_fp16(1e10))));
  CHECK(widen(round_to_fp16(-65520.0)) == -std::numeric_limits<double>::infinity());

  // unit roundoff: one plus a quarter ulp stays one
  CHECK(widen(round_to_fp16(1.0 + 0x1p-12)) == 1.0);
  const Fp16Value one = round_to_fp16(1.0);
  const Fp16Value qulp = round_to_fp16(0x1p-12);
  CHECK(widen(fp16_add(one, qulp)) == 1.0);
}

TEST_CASE("exhaustive widen/round round-trip over all bit patterns") {
  int checked = 0;
  for (std::uint32_t p = 0; p <= 0xFFFFu; ++p) {
    const auto bits = static_cast<std::uint16_t>(p);
    const double w = widen(Fp16Value{bits});
    const Fp16Value back = round_to_fp16(w, kNoFlush);
    if (is_nan_pattern(bits)) {
      CHECK(is_nan_pattern(back.bits));
    } else {
      if (back.bits != bits) {
        CAPTURE(p);
        REQUIRE(back.bits == bits);
      }
    }
    // flush-to-zero turns exactly the subnormal patterns into signed zero
    const Fp16Value flushed = round_to_fp16(w, kFlush);
    if (is_subnormal_pattern(bits)) {
      CHECK(flushed.bits == (bits & 0x8000u));
    } else if (!is_nan_pattern(bits)) {
      CHECK(flushed.bits == bits);
    }
    ++checked;
  }
  CHECK(checked == 0x10000);
}

TEST_CASE("double-to-binary16 rounding matches the MPFR reference") {
  oracle::MpfrFp16 ref;

  // targeted boundaries: overflow threshold, normal/subnormal border,
  // underflow-to-zero border, and exact ties in every binade
  std::vector<double> cases = {
      0.0,      -0.0,     1.0,      -1.0,        65504.0, 65519.999999, 65520.0,
      65521.0,  1e6,      -1e6,     0x1p-14,     0x1p-24, 0x1p-25,      0x1.8p-24,
      0x1p-26,  2048.5,   2049.5,   0.1,         -0.1,    3.14159265358979,
      0x1p-130, -0x1p-130, 1e300,   std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity()};
  for (int e = -14; e <= 15; ++e) {
    for (int m : {0, 1, 2, 511, 512, 1022, 1023}) {
      const double half_ulp = std::ldexp(1.0, e - 11);
      const double base = std::ldexp(1.0 + m / 1024.0, e);
      cases.push_back(base + half_ulp);                            // exact tie
      cases.push_back(std::nextafter(base + half_ulp, 0.0));       // just below
      cases.push_back(std::nextafter(base + half_ulp, 1e308));     // just above
      cases.push_back(-(base + half_ulp));
    }
  }
  for (int m = 0; m <= 1023; ++m) {
    cases.push_back((m + 0.5) * 0x1p-24);  // subnormal ties
    cases.push_back(-(m + 0.5) * 0x1p-24);
  }
  SplitMix64 rng(0xC0FFEE);
  for (int i = 0; i < 200000; ++i) {
    const int exp = static_cast<int>(rng.next_u64() % 48) - 30;
    const double mant = 1.0 + rng.next_double();
    const double sign = (rng.next_u64() & 1) ? -1.0 : 1.0;
    cases.push_back(sign * std::ldexp(mant, exp));
  }

  for (const double x : cases) {
    const double mine = widen(round_to_fp16(x, kNoFlush));
    const double expected = ref.round_d(x);
    if (!same_value(mine, expected)) {
      CAPTURE(x);
      REQUIRE(same_value(mine, expected));
    }
  }
}

TEST_CASE("binary16 add and mul match the MPFR reference") {
  oracle::MpfrFp16 ref;
  SplitMix64 rng(0xABCDEF);

  CHECK(widen(fp16_add(round_to_fp16(2.0), round_to_fp16(3.0))) == 5.0);
  CHECK(std::isinf(widen(fp16_mul(round_to_fp16(256.0), round_to_fp16(256.0)))));

  for (int i = 0; i < 200000; ++i) {
    const double a = random_fp16_value(rng);
    const double b = random_fp16_value(rng);

    const double sum = fp16_add_value(a, b, false);
    const double sum_ref = ref.add(a, b);
    if (!same_value(sum, sum_ref)) {
      CAPTURE(a); CAPTURE(b);
      REQUIRE(same_value(sum, sum_ref));
    }

    const double prod = fp16_mul_value(a, b, false);
    const double prod_ref = ref.mul(a, b);
    if (!same_value(prod, prod_ref)) {
      CAPTURE(a); CAPTURE(b);
      REQUIRE(same_value(prod, prod_ref));
    }

    // commutativity, bitwise
    CHECK(same_value(sum, fp16_add_value(b, a, false)));
    CHECK(same_value(prod, fp16_mul_value(b, a, false)));
  }
}

TEST_CASE("fused binary16 fma matches the MPFR reference") {
  oracle::MpfrFp16 ref;
  SplitMix64 rng(0x5EED);
  const ArithmeticPolicy fused{false, true};
  for (int i = 0; i < 200000; ++i) {
    const double a = random_fp16_value(rng);
    const double b = random_fp16_value(rng);
    const double c = random_fp16_value(rng);
    const double mine = fp16_fma_value(a, b, c, fused);
    const double expected = ref.fma(a, b, c);
    if (!same_value(mine, expected)) {
      CAPTURE(a); CAPTURE(b); CAPTURE(c);
      REQUIRE(same_value(mine, expected));
    }
  }
}

TEST_CASE("fma single rounding versus mul-then-add double rounding") {
  oracle::MpfrFp16 ref;
  const ArithmeticPolicy fused{false, true};
  const ArithmeticPolicy unfused{false, false};

  // a = b = 1 + 2^-10, c = -1: both paths agree (verified against the oracle)
  {
    const double a = 1.0 + 0x1p-10;
    const double c = -1.0;
    const double one_round = fp16_fma_value(a, a, c, fused);
    const double two_round = fp16_fma_value(a, a, c, unfused);
    CHECK(same_value(one_round, ref.fma(a, a, c)));
    CHECK(same_value(two_round, ref.add(ref.mul(a, a), c)));
    CHECK(one_round == 0x1p-9);
    CHECK(two_round == 0x1p-9);
  }

  // a = 1 + 2^-10, b = 1 - 2^-10, c = -1: the exact product 1 - 2^-20 rounds
  // to 1, so the unfused path cancels to zero while the fused path keeps the
  // -2^-20 tail.
  {
    const double a = 1.0 + 0x1p-10;
    const double b = 1.0 - 0x1p-10;
    const double c = -1.0;
    const double one_round = fp16_fma_value(a, b, c, fused);
    const double two_round = fp16_fma_value(a, b, c, unfused);
    CHECK(same_value(one_round, ref.fma(a, b, c)));
    CHECK(same_value(two_round, ref.add(ref.mul(a, b), c)));
    CHECK(one_round == -0x1p-20);
    CHECK(two_round == 0.0);
    CHECK(one_round != two_round);

    // with flush-to-zero the fused tail is subnormal and flushes
    const double flushed = fp16_fma_value(a, b, c, ArithmeticPolicy{true, true});
    CHECK(flushed == 0.0);
    CHECK(std::signbit(flushed));
  }
}

TEST_CASE("rounding is monotone") {
  SplitMix64 rng(0x12345);
  for (int i = 0; i < 100000; ++i) {
    const int exp = static_cast<int>(rng.next_u64() % 40) - 24;
    double x = std::ldexp(1.0 + rng.next_double(), exp);
    double y = std::ldexp(1.0 + rng.next_double(), exp + static_cast<int>(rng.next_u64() % 3));
    if (rng.next_u64() & 1) {
      x = -x;
      y = -y;
    }
    if (x > y) std::swap(x, y);
    CHECK(widen(round_to_fp16(x, kNoFlush)) <= widen(round_to_fp16(y, kNoFlush)));
    CHECK(widen(round_to_fp16(x, kFlush)) <= widen(round_to_fp16(y, kFlush)));
  }
}

TEST_CASE("round-trip error stays within the unit roundoff in range") {
  SplitMix64 rng(0x777);
  for (int i = 0; i < 100000; ++i) {
    const int exp = static_cast<int>(rng.next_u64() % 30) - 14;
    const double mant = 1.0 + rng.next_double();
    double x = std::ldexp(mant, exp);
    if (x > kFp16Max) x = kFp16Max * rng.next_double();
    if (std::fabs(x) < kFp16MinNormal) continue;
    const double back = widen(round_to_fp16(x, kFlush));
    CHECK(std::fabs(back - x) <= 0x1p-11 * std::fabs(x));
  }
}

TEST_CASE("flush policy never yields subnormal results") {
  SplitMix64 rng(0x99);
  for (int i = 0; i < 100000; ++i) {
    const double a = random_fp16_value(rng);
    const double b = random_fp16_value(rng);
    const double c = random_fp16_value(rng);
    for (const double v : {fp16_add_value(a, b, true), fp16_mul_value(a, b, true),
                           fp16_fma_value(a, b, c, kFlush)}) {
      if (v == 0.0 || !std::isfinite(v)) continue;
      CHECK(std::fabs(v) >= kFp16MinNormal);
    }
  }
}

TEST_CASE("special values propagate") {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(std::isnan(fp16_add_value(inf, -inf, false)));
  CHECK(fp16_add_value(inf, 1.0, false) == inf);
  CHECK(fp16_mul_value(-inf, 2.0, false) == -inf);
  CHECK(std::isnan(fp16_mul_value(nan, 2.0, false)));
  CHECK(std::isnan(widen(round_to_fp16(nan))));
  CHECK(round_to_fp16(nan).bits == 0x7E00);  // canonical quiet NaN
  // signed zero survives the cast
  CHECK(round_to_fp16(-0.0).bits == 0x8000);
  CHECK(round_to_fp16(0.0).bits == 0x0000);
}
