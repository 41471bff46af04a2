#pragma once
//
// Minimal row-major dense matrix. The library's containers are deliberately
// plain; heavy linear algebra maps this storage into Eigen views on demand.
//
#include <cstddef>
#include <vector>

#include "lofi/errors.hpp"

namespace lofi {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, rows * cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }
  double* row_ptr(std::size_t i) { return data.data() + i * cols; }

  std::vector<double> col(std::size_t j) const {
    require_compute(j < cols, "Matrix::col: column out of range");
    std::vector<double> out(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_col(std::size_t j, const std::vector<double>& v) {
    require_compute(j < cols && v.size() == rows,
                    "Matrix::set_col: shape mismatch");
    for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = v[i];
  }
};

}  // namespace lofi
