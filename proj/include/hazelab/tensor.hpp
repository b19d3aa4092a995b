#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hazelab {

// (batch, channel, height, width); row-major, width fastest.
struct Shape {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    constexpr std::size_t numel() const { return n * c * h * w; }
    constexpr std::size_t plane() const { return h * w; }
    constexpr bool operator==(const Shape&) const = default;

    std::string str() const;
};

// Dense rank-4 array of doubles. Value type; gradient tracking lives on a Tape.
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape shape, double fill = 0.0);
    Tensor4(Shape shape, std::vector<double> values);

    static Tensor4 scalar(double v) { return Tensor4({1, 1, 1, 1}, v); }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }
    double& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) { return data_[index(n, c, y, x)]; }
    double at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const { return data_[index(n, c, y, x)]; }

    // Pointer to the (n, c) plane.
    double* plane(std::size_t n, std::size_t c) { return data_.data() + (n * shape_.c + c) * shape_.plane(); }
    const double* plane(std::size_t n, std::size_t c) const {
        return data_.data() + (n * shape_.c + c) * shape_.plane();
    }

    // Value of a (1,1,1,1) tensor.
    double item() const;

    void fill(double v);
    bool all_finite() const;

    // One sample as a (1,c,h,w) tensor.
    Tensor4 sample(std::size_t n) const;

private:
    Shape shape_{};
    std::vector<double> data_;
};

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);

double dot(const Tensor4& a, const Tensor4& b);
double max_abs_diff(const Tensor4& a, const Tensor4& b);

// Stack single-sample tensors along the batch axis.
Tensor4 stack(std::span<const Tensor4> samples);

// [0,1] <-> [-1,1]
Tensor4 to_signed(const Tensor4& unit);
Tensor4 to_unit(const Tensor4& signed_img);

}  // namespace hazelab
