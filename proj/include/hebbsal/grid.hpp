#pragma once

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hebbsal {

// Dense row-major 2-D container.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int rows, int cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool contains(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

  T& operator()(int r, int c) {
    assert(contains(r, c));
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const {
    assert(contains(r, c));
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// Boolean grid stored as bytes (0/1) so cells are addressable.
using BoolGrid = Grid<std::uint8_t>;
using CountGrid = Grid<int>;

}  // namespace hebbsal
