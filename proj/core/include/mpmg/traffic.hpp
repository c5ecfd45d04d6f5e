#pragma once

#include <cstdint>

#include "mpmg/precision.hpp"

namespace mpmg {

/// Hardware-independent memory traffic model. Kernels account for every value
/// and index they logically touch: matrix values and gathered vector entries
/// count once per access (streaming, no cache model), outputs count once.
struct TrafficCounter {
  std::uint64_t value_bytes_read = 0;
  std::uint64_t value_bytes_written = 0;
  std::uint64_t index_bytes_read = 0;
  std::uint64_t flops = 0;

  std::uint64_t bytes_read() const { return value_bytes_read + index_bytes_read; }
  std::uint64_t bytes_written() const { return value_bytes_written; }
  std::uint64_t value_bytes() const { return value_bytes_read + value_bytes_written; }
  std::uint64_t total_bytes() const { return bytes_read() + bytes_written(); }

  void reset() { *this = TrafficCounter{}; }

  TrafficCounter& operator+=(const TrafficCounter& o) {
    value_bytes_read += o.value_bytes_read;
    value_bytes_written += o.value_bytes_written;
    index_bytes_read += o.index_bytes_read;
    flops += o.flops;
    return *this;
  }
};

/// Accumulation precision of the emulated binary16 SpMV.
enum class Fp16Accum : std::uint8_t { FP16, FP32 };

/// Per-call kernel context: rounding policy, optional traffic accounting and
/// optional validation (finiteness and precision-conformance checks).
struct ExecContext {
  ArithmeticPolicy policy{};
  Fp16Accum fp16_accumulation = Fp16Accum::FP16;
  TrafficCounter* traffic = nullptr;
  bool validate = false;

  ExecContext with_counter(TrafficCounter* c) const {
    ExecContext ctx = *this;
    ctx.traffic = c;
    return ctx;
  }
};

}  // namespace mpmg
