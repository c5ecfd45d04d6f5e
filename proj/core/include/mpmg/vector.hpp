#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "mpmg/precision.hpp"

namespace mpmg {

/// Dense vector stored in a single precision. Entries are read back widened
/// to binary64; stores round to the storage precision.
class PVector {
 public:
  PVector() = default;
  PVector(std::size_t len, Precision precision) : precision_(precision), len_(len) {
    switch (precision_) {
      case Precision::FP16: h_.assign(len, 0); break;
      case Precision::FP32: s_.assign(len, 0.0f); break;
      case Precision::FP64: d_.assign(len, 0.0); break;
    }
  }

  static PVector from_values(std::span<const double> xs, Precision p,
                             const ArithmeticPolicy& policy = {}) {
    PVector v(xs.size(), p);
    for (std::size_t i = 0; i < xs.size(); ++i) v.set(i, xs[i], policy);
    return v;
  }

  std::size_t size() const { return len_; }
  Precision precision() const { return precision_; }

  double get(std::size_t i) const {
    switch (precision_) {
      case Precision::FP16: return widen(Fp16Value{h_[i]});
      case Precision::FP32: return static_cast<double>(s_[i]);
      default: return d_[i];
    }
  }

  void set(std::size_t i, double v, const ArithmeticPolicy& policy = {}) {
    switch (precision_) {
      case Precision::FP16:
        h_[i] = round_to_fp16(v, policy).bits;
        break;
      case Precision::FP32:
        s_[i] = ftz_fp32(static_cast<float>(v), policy.flush_subnormals_to_zero);
        break;
      default:
        d_[i] = v;
        break;
    }
  }

  void fill_zero() {
    h_.assign(h_.size(), 0);
    s_.assign(s_.size(), 0.0f);
    d_.assign(d_.size(), 0.0);
  }

  std::span<double> f64() { assert(precision_ == Precision::FP64); return d_; }
  std::span<const double> f64() const { assert(precision_ == Precision::FP64); return d_; }
  std::span<float> f32() { assert(precision_ == Precision::FP32); return s_; }
  std::span<const float> f32() const { assert(precision_ == Precision::FP32); return s_; }
  std::span<std::uint16_t> f16() { assert(precision_ == Precision::FP16); return h_; }
  std::span<const std::uint16_t> f16() const { assert(precision_ == Precision::FP16); return h_; }

 private:
  Precision precision_ = Precision::FP64;
  std::size_t len_ = 0;
  std::vector<std::uint16_t> h_;
  std::vector<float> s_;
  std::vector<double> d_;
};

}  // namespace mpmg
