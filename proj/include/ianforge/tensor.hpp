#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ianforge {

// Row-major dense shapes. An empty shape denotes a scalar (one element).
using Shape = std::vector<int>;

inline std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense n-dimensional array of doubles with an optional gradient slot.
struct Tensor {
    Shape shape;
    std::vector<double> data;
    std::optional<std::vector<double>> grad;

    Tensor() = default;

    Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        check();
    }

    static Tensor zeros(Shape s) {
        auto n = numel(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    }

    static Tensor full(Shape s, double v) {
        auto n = numel(s);
        return Tensor(std::move(s), std::vector<double>(static_cast<std::size_t>(n), v));
    }

    static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }

    std::size_t size() const { return data.size(); }

    // 2-D accessors; only meaningful for matrices.
    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols() + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols() + j]; }

    void alloc_grad() {
        if (!grad) grad.emplace(data.size(), 0.0);
    }

    void check() const {
        for (int d : shape) {
            if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension in " + shape_str(shape));
        }
        if (numel(shape) != static_cast<std::int64_t>(data.size()))
            throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match data length " +
                                        std::to_string(data.size()));
        if (grad && grad->size() != data.size())
            throw std::invalid_argument("tensor: grad length does not match data length");
    }
};

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

}  // namespace ianforge
