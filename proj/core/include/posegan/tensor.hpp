#pragma once

#include <vector>

#include "posegan/common.hpp"

namespace posegan::nn {

// Dense row-major tensor of doubles. The whole pipeline runs in double
// precision so analytic gradients can be checked against central differences
// at 1e-4 relative error.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, double fill);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor scalar(double v) { return Tensor({1}, v); }

    const std::vector<int>& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    long numel() const { return static_cast<long>(data_.size()); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](long i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](long i) const { return data_[static_cast<std::size_t>(i)]; }

    // 4-D accessors for [N, C, H, W] layouts.
    double& at(int n, int c, int h, int w) {
        return data_[static_cast<std::size_t>(((static_cast<long>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    double at(int n, int c, int h, int w) const {
        return data_[static_cast<std::size_t>(((static_cast<long>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    // 2-D accessor for [N, D].
    double& at(int n, int d) { return data_[static_cast<std::size_t>(static_cast<long>(n) * shape_[1] + d)]; }
    double at(int n, int d) const { return data_[static_cast<std::size_t>(static_cast<long>(n) * shape_[1] + d)]; }

    void fill(double v);
    bool all_finite() const;
    double min() const;
    double max() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::string shape_str(const std::vector<int>& shape);

// Throws ShapeError unless the tensors match exactly.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

} // namespace posegan::nn
