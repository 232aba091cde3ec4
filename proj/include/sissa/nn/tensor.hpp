#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sissa/util/errors.hpp"

namespace sissa::nn {

class ShapeError : public RuntimeError {
public:
    explicit ShapeError(const std::string& what) : RuntimeError(what) {}
};

// Dense row-major tensor. Plain value type; gradients live in the graph.
template <typename R>
struct TensorT {
    std::vector<int64_t> shape;
    std::vector<R> data;

    TensorT() = default;
    explicit TensorT(std::vector<int64_t> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(numel_of(shape)), R(0));
    }
    TensorT(std::vector<int64_t> s, std::vector<R> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<int64_t>(data.size()) != numel_of(shape))
            throw ShapeError("tensor data does not match shape");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t e : s) n *= e;
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t dim(size_t i) const { return shape[i]; }
    size_t rank() const { return shape.size(); }

    R* ptr() { return data.data(); }
    const R* ptr() const { return data.data(); }

    template <typename R2>
    TensorT<R2> cast() const {
        TensorT<R2> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i)
            out.data[i] = static_cast<R2>(data[i]);
        return out;
    }

    static TensorT zeros(std::vector<int64_t> s) { return TensorT(std::move(s)); }
    static TensorT full(std::vector<int64_t> s, R v) {
        TensorT t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }
};

using Tensor = TensorT<float>;

inline std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace sissa::nn
