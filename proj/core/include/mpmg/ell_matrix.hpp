#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mpmg/precision.hpp"

namespace mpmg {

/// ELLPACK sparse matrix: a fixed number of (value, column) slots per row,
/// padded at the end of each row. Padding slots hold value zero and point at
/// the row's own diagonal column (clamped for rectangular shapes) so kernels
/// can read every slot unconditionally; padded reads still count as traffic.
/// Within a row, stored columns are ascending, padding last.
class EllMatrix {
 public:
  EllMatrix() = default;
  EllMatrix(std::size_t n_rows, std::size_t n_cols, int row_width, Precision precision);

  static EllMatrix identity(std::size_t n, Precision precision);

  /// Builds from per-row (column, value) entry lists; columns must be
  /// ascending within each row. Row width defaults to the longest row.
  static EllMatrix from_entries(std::size_t n_rows, std::size_t n_cols,
                                const std::vector<std::vector<std::pair<std::int32_t, double>>>& rows,
                                Precision precision, const ArithmeticPolicy& policy = {},
                                int row_width = 0);

  static EllMatrix from_dense(const std::vector<std::vector<double>>& dense, Precision precision,
                              const ArithmeticPolicy& policy = {});

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  int row_width() const { return row_width_; }
  Precision precision() const { return precision_; }

  std::int32_t col(std::size_t row, int slot) const { return col_[row * row_width_ + slot]; }
  double value(std::size_t row, int slot) const;

  /// Writes one slot of a row during assembly.
  void set_slot(std::size_t row, int slot, std::int32_t col, double value,
                const ArithmeticPolicy& policy = {});
  /// Fills the remaining slots of a row with padding.
  void pad_row(std::size_t row, int from_slot);

  double max_abs_value() const;

  /// Same structure with values rounded to the target precision.
  EllMatrix cast_to(Precision target, const ArithmeticPolicy& policy = {}) const;

  /// Text dump: header line (rows, cols, row_width, precision) followed by
  /// one "col:value" pair per slot, row-major, one row per line.
  void dump(std::ostream& os) const;

  std::span<const std::int32_t> col_data() const { return col_; }
  std::span<const std::uint16_t> f16() const { return h_; }
  std::span<const float> f32() const { return s_; }
  std::span<const double> f64() const { return d_; }

 private:
  std::int32_t pad_col(std::size_t row) const;

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  int row_width_ = 0;
  Precision precision_ = Precision::FP64;
  std::vector<std::int32_t> col_;
  std::vector<std::uint16_t> h_;
  std::vector<float> s_;
  std::vector<double> d_;
};

}  // namespace mpmg
