#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace hlt::num {

/// Dense row-major tensor of 64-bit floats.
///
/// The element count always equals the product of the shape; constructors
/// reject anything else with DimensionError.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor vector(std::vector<double> data);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Row-major 2-D access; no bounds checks.
    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * shape_.back() + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * shape_.back() + c]; }

    void fill(double value) noexcept;
    bool all_finite() const noexcept;
    /// Throws NumericError naming `what` when any element is NaN or Inf.
    void require_finite(std::string_view what) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape) noexcept;

}  // namespace hlt::num
