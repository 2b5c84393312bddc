#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace spatialq {

/// Dense row-major (L+1) x (M+1) grid indexed by (l, m).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("Grid: dimensions must be >= 1");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int l, int m) { return data_[index(l, m)]; }
  const T& operator()(int l, int m) const { return data_[index(l, m)]; }

  bool contains(int l, int m) const { return l >= 0 && l < rows_ && m >= 0 && m < cols_; }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  size_t index(int l, int m) const {
    if (!contains(l, m)) throw std::out_of_range("Grid: index out of range");
    return static_cast<size_t>(l) * cols_ + m;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace spatialq
