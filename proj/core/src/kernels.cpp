#include "mpmg/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmg/errors.hpp"

namespace mpmg {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <Precision P>
struct Arith;

template <>
struct Arith<Precision::FP64> {
  using Storage = double;
  using Compute = double;
  static Compute load(Storage s) { return s; }
  static Storage store(Compute v) { return v; }
  static Compute from_double(double v, const ArithmeticPolicy&) { return v; }
  static Compute mul(Compute a, Compute b, const ArithmeticPolicy&) { return a * b; }
  static Compute fma(Compute a, Compute b, Compute c, const ArithmeticPolicy& p) {
    return p.fused_multiply_add ? std::fma(a, b, c) : a * b + c;
  }
};

template <>
struct Arith<Precision::FP32> {
  using Storage = float;
  using Compute = float;
  static Compute load(Storage s) { return s; }
  static Storage store(Compute v) { return v; }
  static Compute from_double(double v, const ArithmeticPolicy& p) {
    return ftz_fp32(static_cast<float>(v), p.flush_subnormals_to_zero);
  }
  static Compute mul(Compute a, Compute b, const ArithmeticPolicy& p) {
    return ftz_fp32(a * b, p.flush_subnormals_to_zero);
  }
  static Compute fma(Compute a, Compute b, Compute c, const ArithmeticPolicy& p) {
    if (p.fused_multiply_add) return ftz_fp32(std::fmaf(a, b, c), p.flush_subnormals_to_zero);
    return ftz_fp32(mul(a, b, p) + c, p.flush_subnormals_to_zero);
  }
};

template <>
struct Arith<Precision::FP16> {
  using Storage = std::uint16_t;
  using Compute = double;  // holds exact binary16 values
  static Compute load(Storage s) { return widen(Fp16Value{s}); }
  static Storage store(Compute v) { return pack_fp16(v).bits; }
  static Compute from_double(double v, const ArithmeticPolicy& p) {
    return quantize_fp16(v, p.flush_subnormals_to_zero);
  }
  static Compute mul(Compute a, Compute b, const ArithmeticPolicy& p) {
    return fp16_mul_value(a, b, p.flush_subnormals_to_zero);
  }
  static Compute fma(Compute a, Compute b, Compute c, const ArithmeticPolicy& p) {
    return fp16_fma_value(a, b, c, p);
  }
};

template <Precision P>
auto vec_data(const PVector& v) {
  if constexpr (P == Precision::FP16) return v.f16();
  else if constexpr (P == Precision::FP32) return v.f32();
  else return v.f64();
}

template <Precision P>
auto vec_data(PVector& v) {
  if constexpr (P == Precision::FP16) return v.f16();
  else if constexpr (P == Precision::FP32) return v.f32();
  else return v.f64();
}

template <Precision P>
auto mat_data(const EllMatrix& m) {
  if constexpr (P == Precision::FP16) return m.f16();
  else if constexpr (P == Precision::FP32) return m.f32();
  else return m.f64();
}

template <Precision P>
bool storage_finite(typename Arith<P>::Storage s) {
  if constexpr (P == Precision::FP16) return (s & 0x7C00u) != 0x7C00u;
  else return std::isfinite(s);
}

template <Precision P>
void validate_finite_impl(const PVector& v, const char* kernel) {
  const auto data = vec_data<P>(v);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!storage_finite<P>(data[i])) {
      throw ValidationError(std::string(kernel) + ": non-finite entry at index " +
                            std::to_string(i));
    }
  }
}

void validate_finite(const PVector& v, const char* kernel) {
  switch (v.precision()) {
    case Precision::FP16: validate_finite_impl<Precision::FP16>(v, kernel); break;
    case Precision::FP32: validate_finite_impl<Precision::FP32>(v, kernel); break;
    case Precision::FP64: validate_finite_impl<Precision::FP64>(v, kernel); break;
  }
}

// Widens a vector of any storage precision into a binary64 scratch buffer.
void widen_into(const PVector& v, std::vector<double>& out) {
  out.resize(v.size());
  switch (v.precision()) {
    case Precision::FP16: {
      const auto data = v.f16();
      for (std::size_t i = 0; i < data.size(); ++i) out[i] = widen(Fp16Value{data[i]});
      break;
    }
    case Precision::FP32: {
      const auto data = v.f32();
      for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<double>(data[i]);
      break;
    }
    case Precision::FP64: {
      const auto data = v.f64();
      out.assign(data.begin(), data.end());
      break;
    }
  }
}

template <Precision P>
void spmv_impl(const EllMatrix& A, const PVector& x, PVector& y, const ExecContext& ctx) {
  using T = Arith<P>;
  const auto vals = mat_data<P>(A);
  const auto cols = A.col_data();
  const auto xs = vec_data<P>(x);
  auto ys = vec_data<P>(y);
  const int rw = A.row_width();
  const std::size_t n = A.rows();

  if constexpr (P == Precision::FP16) {
    thread_local std::vector<double> wx;
    wx.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) wx[i] = widen(Fp16Value{xs[i]});
    if (ctx.fp16_accumulation == Fp16Accum::FP32) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t base = r * static_cast<std::size_t>(rw);
        float acc = 0.0f;
        for (int j = 0; j < rw; ++j) {
          acc = Arith<Precision::FP32>::fma(widen_f(Fp16Value{vals[base + j]}),
                                            static_cast<float>(wx[cols[base + j]]), acc,
                                            ctx.policy);
        }
        ys[r] = T::store(quantize_fp16(static_cast<double>(acc),
                                       ctx.policy.flush_subnormals_to_zero));
      }
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t base = r * static_cast<std::size_t>(rw);
        double acc = 0.0;
        for (int j = 0; j < rw; ++j) {
          acc = fp16_fma_value(widen(Fp16Value{vals[base + j]}), wx[cols[base + j]], acc,
                               ctx.policy);
        }
        ys[r] = T::store(acc);
      }
    }
  } else {
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t base = r * static_cast<std::size_t>(rw);
      typename T::Compute acc = 0;
      for (int j = 0; j < rw; ++j) {
        acc = T::fma(vals[base + j], xs[cols[base + j]], acc, ctx.policy);
      }
      ys[r] = T::store(acc);
    }
  }

  if (ctx.traffic) {
    const std::uint64_t slots = n * static_cast<std::uint64_t>(rw);
    const std::uint64_t vb = bytes_per_value(A.precision());
    ctx.traffic->value_bytes_read += slots * vb * 2;  // matrix values + gathered x
    ctx.traffic->index_bytes_read += slots * sizeof(std::int32_t);
    ctx.traffic->value_bytes_written += n * vb;
    ctx.traffic->flops += slots * 2;
  }
}

template <Precision P>
void axpy_impl(double alpha, const PVector& x, const PVector& y, PVector& out,
               const ExecContext& ctx) {
  using T = Arith<P>;
  const auto xs = vec_data<P>(x);
  const auto ys = vec_data<P>(y);
  auto os = vec_data<P>(out);
  const typename T::Compute a = T::from_double(alpha, ctx.policy);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os[i] = T::store(T::fma(a, T::load(xs[i]), T::load(ys[i]), ctx.policy));
  }
  if (ctx.traffic) {
    const std::uint64_t vb = bytes_per_value(x.precision());
    ctx.traffic->value_bytes_read += 2 * xs.size() * vb;
    ctx.traffic->value_bytes_written += xs.size() * vb;
    ctx.traffic->flops += 2 * xs.size();
  }
}

template <Precision P>
void vec_multiply_impl(const PVector& a, const PVector& b, PVector& out, const ExecContext& ctx) {
  using T = Arith<P>;
  const auto as = vec_data<P>(a);
  const auto bs = vec_data<P>(b);
  auto os = vec_data<P>(out);
  for (std::size_t i = 0; i < as.size(); ++i) {
    os[i] = T::store(T::mul(T::load(as[i]), T::load(bs[i]), ctx.policy));
  }
  if (ctx.traffic) {
    const std::uint64_t vb = bytes_per_value(a.precision());
    ctx.traffic->value_bytes_read += 2 * as.size() * vb;
    ctx.traffic->value_bytes_written += as.size() * vb;
    ctx.traffic->flops += as.size();
  }
}

template <Precision P>
void cast_vector_impl(const std::vector<double>& wx, double scale, PVector& out,
                      const ExecContext& ctx) {
  using T = Arith<P>;
  auto os = vec_data<P>(out);
  for (std::size_t i = 0; i < wx.size(); ++i) {
    os[i] = T::store(T::from_double(wx[i] / scale, ctx.policy));
  }
}

}  // namespace

void spmv(const EllMatrix& A, const PVector& x, PVector& y, const ExecContext& ctx) {
  require(A.cols() == x.size(), "spmv: dimension mismatch between A and x");
  require(A.rows() == y.size(), "spmv: dimension mismatch between A and y");
  require(A.precision() == x.precision(), "spmv: precision mismatch between A and x");
  require(x.precision() == y.precision(), "spmv: precision mismatch between x and y");
  require(&x != &y, "spmv: output must not alias the input");
  switch (A.precision()) {
    case Precision::FP16: spmv_impl<Precision::FP16>(A, x, y, ctx); break;
    case Precision::FP32: spmv_impl<Precision::FP32>(A, x, y, ctx); break;
    case Precision::FP64: spmv_impl<Precision::FP64>(A, x, y, ctx); break;
  }
  if (ctx.validate) validate_finite(y, "spmv");
}

PVector spmv(const EllMatrix& A, const PVector& x, const ExecContext& ctx) {
  PVector y(A.rows(), A.precision());
  spmv(A, x, y, ctx);
  return y;
}

void axpy(double alpha, const PVector& x, const PVector& y, PVector& out,
          const ExecContext& ctx) {
  require(x.size() == y.size() && x.size() == out.size(), "axpy: dimension mismatch");
  require(x.precision() == y.precision() && x.precision() == out.precision(),
          "axpy: precision mismatch");
  switch (x.precision()) {
    case Precision::FP16: axpy_impl<Precision::FP16>(alpha, x, y, out, ctx); break;
    case Precision::FP32: axpy_impl<Precision::FP32>(alpha, x, y, out, ctx); break;
    case Precision::FP64: axpy_impl<Precision::FP64>(alpha, x, y, out, ctx); break;
  }
  if (ctx.validate) validate_finite(out, "axpy");
}

PVector axpy(double alpha, const PVector& x, const PVector& y, const ExecContext& ctx) {
  PVector out(x.size(), x.precision());
  axpy(alpha, x, y, out, ctx);
  return out;
}

void vec_multiply(const PVector& a, const PVector& b, PVector& out, const ExecContext& ctx) {
  require(a.size() == b.size() && a.size() == out.size(), "vec_multiply: dimension mismatch");
  require(a.precision() == b.precision() && a.precision() == out.precision(),
          "vec_multiply: precision mismatch");
  switch (a.precision()) {
    case Precision::FP16: vec_multiply_impl<Precision::FP16>(a, b, out, ctx); break;
    case Precision::FP32: vec_multiply_impl<Precision::FP32>(a, b, out, ctx); break;
    case Precision::FP64: vec_multiply_impl<Precision::FP64>(a, b, out, ctx); break;
  }
  if (ctx.validate) validate_finite(out, "vec_multiply");
}

PVector vec_multiply(const PVector& a, const PVector& b, const ExecContext& ctx) {
  PVector out(a.size(), a.precision());
  vec_multiply(a, b, out, ctx);
  return out;
}

void update_residuum_correction(PVector& r, PVector& u, const EllMatrix& A, const PVector& c,
                                double alpha, const ExecContext& ctx) {
  require(r.precision() == Precision::FP64 && u.precision() == Precision::FP64,
          "update_residuum_correction: r and u must be binary64");
  require(A.precision() == Precision::FP64, "update_residuum_correction: A must be binary64");
  require(A.rows() == A.cols(), "update_residuum_correction: A must be square");
  require(r.size() == A.rows() && u.size() == A.rows() && c.size() == A.rows(),
          "update_residuum_correction: dimension mismatch");

  thread_local std::vector<double> wc;
  widen_into(c, wc);

  const auto vals = A.f64();
  const auto cols = A.col_data();
  auto rs = r.f64();
  auto us = u.f64();
  const int rw = A.row_width();
  const std::size_t n = A.rows();
  const ArithmeticPolicy& p = ctx.policy;
  for (std::size_t i = 0; i < n; ++i) {
    us[i] = Arith<Precision::FP64>::fma(alpha, wc[i], us[i], p);
    const std::size_t base = i * static_cast<std::size_t>(rw);
    double s = 0.0;
    for (int j = 0; j < rw; ++j) {
      s = Arith<Precision::FP64>::fma(vals[base + j], wc[cols[base + j]], s, p);
    }
    rs[i] = Arith<Precision::FP64>::fma(-alpha, s, rs[i], p);
  }

  if (ctx.traffic) {
    const std::uint64_t slots = n * static_cast<std::uint64_t>(rw);
    ctx.traffic->value_bytes_read +=
        slots * 8 + 2 * n * 8 + n * static_cast<std::uint64_t>(bytes_per_value(c.precision()));
    ctx.traffic->index_bytes_read += slots * sizeof(std::int32_t);
    ctx.traffic->value_bytes_written += 2 * n * 8;
    ctx.traffic->flops += 2 * slots + 4 * n;
  }
  if (ctx.validate) {
    validate_finite(r, "update_residuum_correction");
    validate_finite(u, "update_residuum_correction");
  }
}

void cast_vector(const PVector& x, Precision target, double scale, PVector& out,
                 const ExecContext& ctx) {
  require(scale > 0.0 && std::isfinite(scale), "cast_vector: scale must be positive and finite");
  require(out.size() == x.size(), "cast_vector: dimension mismatch");
  require(out.precision() == target, "cast_vector: output precision mismatch");
  thread_local std::vector<double> wx;
  widen_into(x, wx);
  switch (target) {
    case Precision::FP16: cast_vector_impl<Precision::FP16>(wx, scale, out, ctx); break;
    case Precision::FP32: cast_vector_impl<Precision::FP32>(wx, scale, out, ctx); break;
    case Precision::FP64: cast_vector_impl<Precision::FP64>(wx, scale, out, ctx); break;
  }
  if (ctx.traffic) {
    ctx.traffic->value_bytes_read += x.size() * static_cast<std::uint64_t>(bytes_per_value(x.precision()));
    ctx.traffic->value_bytes_written += x.size() * static_cast<std::uint64_t>(bytes_per_value(target));
    ctx.traffic->flops += x.size();
  }
}

PVector cast_vector(const PVector& x, Precision target, double scale, const ExecContext& ctx) {
  PVector out(x.size(), target);
  cast_vector(x, target, scale, out, ctx);
  return out;
}

double dot_fp64(const PVector& x, const PVector& y, const ExecContext& ctx) {
  require(x.size() == y.size(), "dot: dimension mismatch");
  thread_local std::vector<double> wx, wy;
  widen_into(x, wx);
  widen_into(y, wy);
  double acc = 0.0;
  for (std::size_t i = 0; i < wx.size(); ++i) acc = std::fma(wx[i], wy[i], acc);
  if (ctx.traffic) {
    ctx.traffic->value_bytes_read +=
        x.size() * static_cast<std::uint64_t>(bytes_per_value(x.precision())) +
        y.size() * static_cast<std::uint64_t>(bytes_per_value(y.precision()));
    ctx.traffic->flops += 2 * x.size();
  }
  return acc;
}

double norm2_fp64(const PVector& x, const ExecContext& ctx) {
  thread_local std::vector<double> wx;
  widen_into(x, wx);
  double acc = 0.0;
  for (const double v : wx) acc = std::fma(v, v, acc);
  if (ctx.traffic) {
    ctx.traffic->value_bytes_read +=
        x.size() * static_cast<std::uint64_t>(bytes_per_value(x.precision()));
    ctx.traffic->flops += 2 * x.size() + 1;
  }
  return std::sqrt(acc);
}

}  // namespace mpmg
