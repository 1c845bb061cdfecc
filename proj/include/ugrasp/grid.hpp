#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ugrasp {

// Row-major H x W grid.
template <typename T>
class GridT {
public:
    GridT() = default;
    GridT(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("grid dims must be nonnegative");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[idx(r, c)]; }
    const T& operator()(int r, int c) const { return data_[idx(r, c)]; }

    T& at_index(size_t i) { return data_[i]; }
    const T& at_index(size_t i) const { return data_[i]; }

    bool inside(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool operator==(const GridT& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    size_t idx(int r, int c) const { return static_cast<size_t>(r) * cols_ + c; }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Grid = GridT<double>;
using MaskGrid = GridT<uint8_t>;

// Row-major H x W x C grid, channel-last.
class Grid3 {
public:
    Grid3() = default;
    Grid3(int rows, int cols, int channels, double fill = 0.0)
        : rows_(rows), cols_(cols), channels_(channels),
          data_(static_cast<size_t>(rows) * cols * channels, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int channels() const { return channels_; }
    size_t size() const { return data_.size(); }

    double& operator()(int r, int c, int ch) { return data_[idx(r, c, ch)]; }
    const double& operator()(int r, int c, int ch) const { return data_[idx(r, c, ch)]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool operator==(const Grid3& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && channels_ == o.channels_ && data_ == o.data_;
    }

private:
    size_t idx(int r, int c, int ch) const {
        return (static_cast<size_t>(r) * cols_ + c) * channels_ + ch;
    }

    int rows_ = 0;
    int cols_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

}  // namespace ugrasp
