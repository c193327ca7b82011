#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "elliptest/error.hpp"
#include "elliptest/matrix.hpp"

namespace elliptest {

/// n observations on the unit sphere, one per row. Construction is the only
/// place norms are checked, so everything downstream can assume unit rows.
class unit_sample {
 public:
  /// Accepts rows already on the sphere (within 1e-8) and renormalizes them
  /// exactly so later arccos calls sit inside the principal domain.
  static unit_sample from_unit_rows(matrix rows) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      const double norm = row_norm(rows, i);
      if (std::abs(norm - 1.0) > 1e-8)
        throw degenerate_sample_error("unit_sample: row is not on the unit sphere");
      rescale_row(rows, i, 1.0 / norm);
    }
    return unit_sample(std::move(rows));
  }

  /// Projects arbitrary nonzero rows onto the sphere.
  static unit_sample from_raw_rows(matrix rows) {
    for (std::size_t i = 0; i < rows.rows(); ++i) {
      const double norm = row_norm(rows, i);
      if (!(norm > 1e-150))
        throw degenerate_sample_error("unit_sample: zero row cannot be projected");
      rescale_row(rows, i, 1.0 / norm);
    }
    return unit_sample(std::move(rows));
  }

  std::size_t size() const { return rows_.rows(); }
  std::size_t dim() const { return rows_.cols(); }
  const matrix& rows() const { return rows_; }
  const double* point(std::size_t i) const { return rows_.row_ptr(i); }

 private:
  explicit unit_sample(matrix rows) : rows_(std::move(rows)) {
    if (rows_.rows() == 0 || rows_.cols() == 0)
      throw degenerate_sample_error("unit_sample: empty sample");
  }

  static double row_norm(const matrix& m, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
  }

  static void rescale_row(matrix& m, std::size_t i, double c) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= c;
  }

  matrix rows_;
};

}  // namespace elliptest
