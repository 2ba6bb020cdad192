#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sampleimp {

// Dense row-major array of doubles with an explicit shape.
class Tensor {
public:
    Tensor() = default;
    // Throws std::invalid_argument if a dimension is zero or the value count
    // does not match the shape.
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double at(std::size_t row, std::size_t col) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

}  // namespace sampleimp
