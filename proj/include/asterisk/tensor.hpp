#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "asterisk/errors.hpp"

namespace asterisk {

// Dense row-major tensor. Training runs in float; gradient checking
// instantiates the same code with double.
template <class T>
struct tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    tensor() = default;

    explicit tensor(std::vector<std::size_t> shape_in)
        : shape(std::move(shape_in)), data(numel_of(shape), T{}) {}

    tensor(std::initializer_list<std::size_t> shape_in)
        : shape(shape_in), data(numel_of(shape), T{}) {}

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    // 2-D accessors; rows are contiguous.
    T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    T* row(std::size_t i) { return data.data() + i * shape[1]; }
    const T* row(std::size_t i) const { return data.data() + i * shape[1]; }

    void fill(T value) { std::fill(data.begin(), data.end(), value); }

    bool same_shape(const tensor& other) const { return shape == other.shape; }

    std::string shape_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    void require_shape(const std::vector<std::size_t>& expect, const char* what) const {
        if (shape != expect) {
            throw shape_error(std::string(what) + ": expected shape " +
                              tensor(expect).shape_string() + ", got " + shape_string());
        }
    }

    // NaN/Inf anywhere is a contract violation of the numeric core.
    void assert_finite(const char* what) const {
        for (const T& v : data) {
            if (!std::isfinite(static_cast<double>(v))) {
                throw numeric_error(std::string(what) + ": non-finite value in tensor " +
                                    shape_string());
            }
        }
    }
};

template <class T>
tensor<T> zeros_like(const tensor<T>& x) {
    return tensor<T>(x.shape);
}

// Converts between scalar types, used by the 64-bit gradient checker.
template <class To, class From>
tensor<To> cast_tensor(const tensor<From>& x) {
    tensor<To> out(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) out[i] = static_cast<To>(x[i]);
    return out;
}

template <class T>
void accumulate(tensor<T>& into, const tensor<T>& from) {
    if (!into.same_shape(from)) {
        throw shape_error("accumulate: shape mismatch " + into.shape_string() + " vs " +
                          from.shape_string());
    }
    for (std::size_t i = 0; i < from.numel(); ++i) into[i] += from[i];
}

}  // namespace asterisk
