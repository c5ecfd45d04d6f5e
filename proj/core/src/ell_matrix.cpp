#include "mpmg/ell_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mpmg {

EllMatrix::EllMatrix(std::size_t n_rows, std::size_t n_cols, int row_width, Precision precision)
    : n_rows_(n_rows), n_cols_(n_cols), row_width_(row_width), precision_(precision) {
  if (row_width <= 0) throw std::invalid_argument("EllMatrix: row_width must be positive");
  const std::size_t slots = n_rows * static_cast<std::size_t>(row_width);
  col_.resize(slots);
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::fill_n(col_.begin() + static_cast<std::ptrdiff_t>(r * row_width_), row_width_,
                pad_col(r));
  }
  switch (precision_) {
    case Precision::FP16: h_.assign(slots, 0); break;
    case Precision::FP32: s_.assign(slots, 0.0f); break;
    case Precision::FP64: d_.assign(slots, 0.0); break;
  }
}

std::int32_t EllMatrix::pad_col(std::size_t row) const {
  return static_cast<std::int32_t>(std::min(row, n_cols_ - 1));
}

EllMatrix EllMatrix::identity(std::size_t n, Precision precision) {
  EllMatrix m(n, n, 1, precision);
  for (std::size_t r = 0; r < n; ++r) m.set_slot(r, 0, static_cast<std::int32_t>(r), 1.0);
  return m;
}

EllMatrix EllMatrix::from_entries(
    std::size_t n_rows, std::size_t n_cols,
    const std::vector<std::vector<std::pair<std::int32_t, double>>>& rows, Precision precision,
    const ArithmeticPolicy& policy, int row_width) {
  if (rows.size() != n_rows) throw std::invalid_argument("from_entries: row count mismatch");
  int width = row_width;
  for (const auto& r : rows) width = std::max(width, static_cast<int>(r.size()));
  width = std::max(width, 1);
  EllMatrix m(n_rows, n_cols, width, precision);
  for (std::size_t r = 0; r < n_rows; ++r) {
    int slot = 0;
    for (const auto& [c, v] : rows[r]) {
      if (c < 0 || static_cast<std::size_t>(c) >= n_cols) {
        throw std::invalid_argument("from_entries: column out of range");
      }
      m.set_slot(r, slot++, c, v, policy);
    }
  }
  return m;
}

EllMatrix EllMatrix::from_dense(const std::vector<std::vector<double>>& dense, Precision precision,
                                const ArithmeticPolicy& policy) {
  std::vector<std::vector<std::pair<std::int32_t, double>>> rows(dense.size());
  std::size_t n_cols = 0;
  for (std::size_t r = 0; r < dense.size(); ++r) {
    n_cols = std::max(n_cols, dense[r].size());
    for (std::size_t c = 0; c < dense[r].size(); ++c) {
      if (dense[r][c] != 0.0) rows[r].emplace_back(static_cast<std::int32_t>(c), dense[r][c]);
    }
  }
  return from_entries(dense.size(), n_cols, rows, precision, policy);
}

double EllMatrix::value(std::size_t row, int slot) const {
  const std::size_t i = row * row_width_ + static_cast<std::size_t>(slot);
  switch (precision_) {
    case Precision::FP16: return widen(Fp16Value{h_[i]});
    case Precision::FP32: return static_cast<double>(s_[i]);
    default: return d_[i];
  }
}

void EllMatrix::set_slot(std::size_t row, int slot, std::int32_t col, double value,
                         const ArithmeticPolicy& policy) {
  const std::size_t i = row * row_width_ + static_cast<std::size_t>(slot);
  col_[i] = col;
  switch (precision_) {
    case Precision::FP16: h_[i] = round_to_fp16(value, policy).bits; break;
    case Precision::FP32: s_[i] = ftz_fp32(static_cast<float>(value), policy.flush_subnormals_to_zero); break;
    case Precision::FP64: d_[i] = value; break;
  }
}

void EllMatrix::pad_row(std::size_t row, int from_slot) {
  for (int slot = from_slot; slot < row_width_; ++slot) set_slot(row, slot, pad_col(row), 0.0);
}

double EllMatrix::max_abs_value() const {
  double m = 0.0;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (int s = 0; s < row_width_; ++s) m = std::max(m, std::fabs(value(r, s)));
  }
  return m;
}

EllMatrix EllMatrix::cast_to(Precision target, const ArithmeticPolicy& policy) const {
  EllMatrix out(n_rows_, n_cols_, row_width_, target);
  out.col_ = col_;
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (int s = 0; s < row_width_; ++s) {
      const std::size_t i = r * row_width_ + static_cast<std::size_t>(s);
      switch (target) {
        case Precision::FP16: out.h_[i] = round_to_fp16(value(r, s), policy).bits; break;
        case Precision::FP32:
          out.s_[i] = ftz_fp32(static_cast<float>(value(r, s)), policy.flush_subnormals_to_zero);
          break;
        case Precision::FP64: out.d_[i] = value(r, s); break;
      }
    }
  }
  return out;
}

void EllMatrix::dump(std::ostream& os) const {
  os << "ellpack " << n_rows_ << " " << n_cols_ << " " << row_width_ << " "
     << precision_name(precision_) << "\n";
  const auto old_precision = os.precision(17);
  for (std::size_t r = 0; r < n_rows_; ++r) {
    for (int s = 0; s < row_width_; ++s) {
      if (s) os << " ";
      os << col(r, s) << ":" << value(r, s);
    }
    os << "\n";
  }
  os.precision(old_precision);
}

}  // namespace mpmg
