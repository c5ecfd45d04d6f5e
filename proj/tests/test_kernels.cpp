#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mpmg/ell_matrix.hpp"
#include "mpmg/errors.hpp"
#include "mpmg/kernels.hpp"
#include "mpmg/rng.hpp"
#include "oracles.hpp"

using namespace mpmg;

namespace {

bool bits_equal(const PVector& a, const PVector& b) {
  if (a.size() != b.size() || a.precision() != b.precision()) return false;
  switch (a.precision()) {
    case Precision::FP16: {
      auto x = a.f16(), y = b.f16();
      return std::equal(x.begin(), x.end(), y.begin());
    }
    case Precision::FP32: {
      auto x = a.f32(), y = b.f32();
      return std::equal(x.begin(), x.end(), y.begin(),
                        [](float p, float q) { return std::bit_cast<std::uint32_t>(p) ==
                                                      std::bit_cast<std::uint32_t>(q); });
    }
    default: {
      auto x = a.f64(), y = b.f64();
      return std::equal(x.begin(), x.end(), y.begin(),
                        [](double p, double q) { return std::bit_cast<std::uint64_t>(p) ==
                                                        std::bit_cast<std::uint64_t>(q); });
    }
  }
}

// Random ELLPACK instance with ascending columns plus its dense mirror built
// from the values as stored.
struct RandomSystem {
  EllMatrix A;
  oracle::Dense dense;
};

RandomSystem random_system(SplitMix64& rng, std::size_t n, int row_width, Precision p) {
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    const int nnz = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(row_width));
    std::vector<std::int32_t> cols;
    while (static_cast<int>(cols.size()) < nnz) {
      const auto c = static_cast<std::int32_t>(rng.next_u64() % n);
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    std::sort(cols.begin(), cols.end());
    for (const auto c : cols) rows[r].emplace_back(c, 4.0 * rng.next_double() - 2.0);
  }
  RandomSystem sys;
  sys.A = EllMatrix::from_entries(n, n, rows, p, {}, row_width);
  sys.dense.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    for (int s = 0; s < sys.A.row_width(); ++s) {
      // padding holds exact zeros; reading the stored value keeps the oracle
      // aligned with what the kernel actually consumes
      if (sys.A.value(r, s) != 0.0) sys.dense[r][static_cast<std::size_t>(sys.A.col(r, s))] =
          sys.A.value(r, s);
    }
  }
  return sys;
}

PVector random_vector(SplitMix64& rng, std::size_t n, Precision p, double lo = -2.0,
                      double hi = 2.0) {
  std::vector<double> xs(n);
  for (auto& v : xs) v = lo + (hi - lo) * rng.next_double();
  return PVector::from_values(xs, p);
}

EllMatrix poisson_1d(std::size_t n, Precision p) {
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) rows[i].emplace_back(static_cast<std::int32_t>(i - 1), -1.0);
    rows[i].emplace_back(static_cast<std::int32_t>(i), 2.0);
    if (i + 1 < n) rows[i].emplace_back(static_cast<std::int32_t>(i + 1), -1.0);
  }
  return EllMatrix::from_entries(n, n, rows, p);
}

}  // namespace

TEST_CASE("spmv maps identity and diagonal cases exactly") {
  ExecContext ctx;
  SplitMix64 rng(1);
  for (const Precision p : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    const EllMatrix I = EllMatrix::identity(12, p);
    const PVector x = random_vector(rng, 12, p);
    const PVector y = spmv(I, x, ctx);
    CHECK(bits_equal(x, y));
  }
  const EllMatrix D = EllMatrix::from_dense({{2.0, 0.0}, {0.0, 3.0}}, Precision::FP64);
  const PVector ones = PVector::from_values(std::vector<double>{1.0, 1.0}, Precision::FP64);
  const PVector y = spmv(D, ones, ctx);
  CHECK(y.get(0) == 2.0);
  CHECK(y.get(1) == 3.0);
}

TEST_CASE("spmv equals the dense oracle bitwise in every precision") {
  ExecContext ctx;
  SplitMix64 rng(42);
  for (const Precision p : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    for (const std::size_t n : {3u, 8u, 17u, 32u}) {
      for (int rep = 0; rep < 8; ++rep) {
        const RandomSystem sys = random_system(rng, n, 6, p);
        const PVector x = random_vector(rng, n, p);
        const PVector y = spmv(sys.A, x, ctx);
        const std::vector<double> expected =
            oracle::dense_spmv(sys.dense, oracle::widen_all(x), p, ctx.policy);
        const PVector yo = PVector::from_values(expected, p);
        if (!bits_equal(y, yo)) {
          CAPTURE(static_cast<int>(p)); CAPTURE(n); CAPTURE(rep);
          REQUIRE(bits_equal(y, yo));
        }
      }
    }
  }
}

TEST_CASE("spmv with binary32 accumulation mode") {
  ExecContext ctx;
  ctx.fp16_accumulation = Fp16Accum::FP32;
  SplitMix64 rng(7);
  const RandomSystem sys = random_system(rng, 16, 5, Precision::FP16);
  const PVector x = random_vector(rng, 16, Precision::FP16);
  const PVector y = spmv(sys.A, x, ctx);
  // reference: float accumulate, one final rounding to binary16
  for (std::size_t i = 0; i < y.size(); ++i) {
    float acc = 0.0f;
    for (int s = 0; s < sys.A.row_width(); ++s) {
      acc = std::fmaf(static_cast<float>(sys.A.value(i, s)),
                      static_cast<float>(x.get(static_cast<std::size_t>(sys.A.col(i, s)))), acc);
    }
    CHECK(y.get(i) == quantize_fp16(static_cast<double>(acc), true));
  }
}

TEST_CASE("axpy special cases and low-precision error bound") {
  ExecContext ctx;
  SplitMix64 rng(3);
  for (const Precision p : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    const PVector x = random_vector(rng, 33, p);
    const PVector y = random_vector(rng, 33, p);
    const PVector same = axpy(0.0, x, y, ctx);
    CHECK(bits_equal(same, y));

    PVector neg(x.size(), p);
    axpy(-2.0, x, x, neg, ctx);  // x - 2x = -x
    PVector zero = axpy(1.0, x, neg, ctx);
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero.get(i) == 0.0);
  }

  // entrywise agreement with the binary64 oracle on well-scaled data
  const PVector x16 = random_vector(rng, 200, Precision::FP16, 0.5, 2.0);
  const PVector y16 = random_vector(rng, 200, Precision::FP16, 0.5, 2.0);
  const double alpha = 0.7;
  const PVector z16 = axpy(alpha, x16, y16, ctx);
  const double alpha16 = widen(round_to_fp16(alpha));
  for (std::size_t i = 0; i < z16.size(); ++i) {
    const double exact = y16.get(i) + alpha16 * x16.get(i);
    CHECK(std::fabs(z16.get(i) - exact) <= 0x1p-10 * std::fabs(exact));
  }
}

TEST_CASE("vec_multiply basics and overflow flagging") {
  ExecContext ctx;
  SplitMix64 rng(9);
  for (const Precision p : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    const PVector a = random_vector(rng, 21, p);
    const PVector ones = PVector::from_values(std::vector<double>(21, 1.0), p);
    CHECK(bits_equal(vec_multiply(a, ones, ctx), a));
  }
  const PVector a = PVector::from_values(std::vector<double>{2.0, 3.0}, Precision::FP64);
  const PVector b = PVector::from_values(std::vector<double>{4.0, 5.0}, Precision::FP64);
  const PVector c = vec_multiply(a, b, ctx);
  CHECK(c.get(0) == 8.0);
  CHECK(c.get(1) == 15.0);

  // 300 * 300 exceeds the binary16 range; validation mode reports it
  const PVector h = PVector::from_values(std::vector<double>{300.0}, Precision::FP16);
  const PVector prod = vec_multiply(h, h, ctx);
  CHECK(std::isinf(prod.get(0)));
  ExecContext strict;
  strict.validate = true;
  CHECK_THROWS_AS(vec_multiply(h, h, strict), ValidationError);
}

TEST_CASE("update_residuum_correction matches the unfused kernel pair bitwise") {
  ExecContext ctx;
  SplitMix64 rng(11);

  // c = 0 leaves both vectors unchanged
  {
    const EllMatrix A = poisson_1d(6, Precision::FP64);
    PVector r = random_vector(rng, 6, Precision::FP64);
    PVector u = random_vector(rng, 6, Precision::FP64);
    const PVector r0 = r, u0 = u;
    const PVector c(6, Precision::FP64);
    update_residuum_correction(r, u, A, c, 1.7, ctx);
    CHECK(bits_equal(r, r0));
    CHECK(bits_equal(u, u0));
  }

  // alpha = 1, A = I, c = r: residual cancels, iterate absorbs r
  {
    const EllMatrix I = EllMatrix::identity(5, Precision::FP64);
    PVector r = random_vector(rng, 5, Precision::FP64);
    PVector u = random_vector(rng, 5, Precision::FP64);
    const PVector r0 = r, u0 = u;
    update_residuum_correction(r, u, I, r0, 1.0, ctx);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(r.get(i) == 0.0);
      CHECK(u.get(i) == u0.get(i) + r0.get(i));
    }
  }

  // fused versus the two separate FP64 kernels, bitwise, incl. low-precision c
  for (const Precision cp : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    for (int rep = 0; rep < 10; ++rep) {
      const EllMatrix A = poisson_1d(4, Precision::FP64);
      const PVector c = random_vector(rng, 4, cp);
      const double alpha = 2.0 * rng.next_double();
      PVector r = random_vector(rng, 4, Precision::FP64);
      PVector u = random_vector(rng, 4, Precision::FP64);
      PVector r_ref = r, u_ref = u;

      update_residuum_correction(r, u, A, c, alpha, ctx);

      const PVector wc = cast_vector(c, Precision::FP64, 1.0, ctx);
      axpy(alpha, wc, u_ref, u_ref, ctx);
      const PVector Ac = spmv(A, wc, ctx);
      axpy(-alpha, Ac, r_ref, r_ref, ctx);

      CHECK(bits_equal(r, r_ref));
      CHECK(bits_equal(u, u_ref));
    }
  }
}

TEST_CASE("cast_vector: copies, scaling, and the flush boundary") {
  ExecContext ctx;
  SplitMix64 rng(13);

  for (const Precision p : {Precision::FP16, Precision::FP32, Precision::FP64}) {
    const PVector x = random_vector(rng, 40, p);
    CHECK(bits_equal(cast_vector(x, p, 1.0, ctx), x));
  }

  // a residual far below the binary16 range: the norm-scaled cast keeps every
  // entry with |x_i| >= 2^-14 * ||x||, the unscaled cast flushes everything
  std::vector<double> tiny(50);
  for (auto& v : tiny) v = (2.0 * rng.next_double() - 1.0) * 1e-7;
  const PVector x = PVector::from_values(tiny, Precision::FP64);
  const double norm = norm2_fp64(x, ctx);
  CHECK(norm < 1e-6);

  const PVector scaled = cast_vector(x, Precision::FP16, norm, ctx);
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    if (std::fabs(tiny[i]) >= kFp16MinNormal * norm) CHECK(scaled.get(i) != 0.0);
  }
  const double scaled_norm = norm2_fp64(scaled, ctx);
  CHECK(scaled_norm >= 1.0 - 0x1p-9);
  CHECK(scaled_norm <= 1.0 + 0x1p-9);

  const PVector unscaled = cast_vector(x, Precision::FP16, 1.0, ctx);
  for (std::size_t i = 0; i < unscaled.size(); ++i) CHECK(unscaled.get(i) == 0.0);

  // multiplying back reproduces the vector within one rounding of each format
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    const double back = scaled.get(i) * norm;
    if (std::fabs(tiny[i]) / norm >= kFp16MinNormal) {
      CHECK(std::fabs(back - tiny[i]) <= (0x1p-11 + 0x1p-53) * std::fabs(tiny[i]));
    }
  }

  CHECK_THROWS_AS(cast_vector(x, Precision::FP16, 0.0, ctx), std::invalid_argument);
  CHECK_THROWS_AS(cast_vector(x, Precision::FP16, -1.0, ctx), std::invalid_argument);
  CHECK_THROWS_AS(cast_vector(x, Precision::FP16, std::numeric_limits<double>::infinity(), ctx),
                  std::invalid_argument);
}

TEST_CASE("traffic accounting scales value bytes with precision only") {
  SplitMix64 rng(17);
  const std::size_t n = 24;
  RandomSystem s64 = random_system(rng, n, 5, Precision::FP64);
  const EllMatrix A16 = s64.A.cast_to(Precision::FP16);
  const PVector x64 = random_vector(rng, n, Precision::FP64);
  const PVector x16 = cast_vector(x64, Precision::FP16, 1.0, ExecContext{});

  TrafficCounter t64, t16;
  ExecContext c64{.traffic = &t64}, c16{.traffic = &t16};
  spmv(s64.A, x64, c64);
  spmv(A16, x16, c16);

  CHECK(t16.index_bytes_read == t64.index_bytes_read);
  CHECK(t16.value_bytes_read * 4 == t64.value_bytes_read);
  CHECK(t16.value_bytes_written * 4 == t64.value_bytes_written);
  CHECK(t16.flops == t64.flops);

  // axpy and dot read/write what they touch
  TrafficCounter ta;
  ExecContext ca{.traffic = &ta};
  axpy(1.0, x64, x64, ca);
  CHECK(ta.value_bytes_read == 2 * n * 8);
  CHECK(ta.value_bytes_written == n * 8);
  dot_fp64(x64, x64, ca);
  CHECK(ta.value_bytes_read == 4 * n * 8);
}

TEST_CASE("usage errors are rejected") {
  ExecContext ctx;
  const EllMatrix A = poisson_1d(4, Precision::FP64);
  const PVector x3(3, Precision::FP64);
  const PVector x4_16(4, Precision::FP16);
  CHECK_THROWS_AS(spmv(A, x3, ctx), std::invalid_argument);
  CHECK_THROWS_AS(spmv(A, x4_16, ctx), std::invalid_argument);
  const PVector a(4, Precision::FP64);
  CHECK_THROWS_AS(axpy(1.0, a, x3, ctx), std::invalid_argument);
  CHECK_THROWS_AS(vec_multiply(a, x4_16, ctx), std::invalid_argument);
}

TEST_CASE("norm accumulates in binary64 against a compensated oracle") {
  ExecContext ctx;
  SplitMix64 rng(23);
  const PVector x = random_vector(rng, 256, Precision::FP64);
  const std::vector<double> xs = oracle::widen_all(x);
  const double mine = norm2_fp64(x, ctx);
  const double ref = oracle::compensated_norm2(xs);
  CHECK(std::fabs(mine - ref) <= 1e-14 * ref);
}

TEST_CASE("matrix dump is a readable fixed header plus slots") {
  const EllMatrix A = EllMatrix::from_dense({{1.5, 0.0}, {0.0, -2.0}}, Precision::FP32);
  std::ostringstream os;
  A.dump(os);
  const std::string text = os.str();
  CHECK(text.find("ellpack 2 2 1 fp32") == 0);
  CHECK(text.find("0:1.5") != std::string::npos);
  CHECK(text.find("1:-2") != std::string::npos);
}
