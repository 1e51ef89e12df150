#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "gescd/error.hpp"

namespace gescd::vit {

/// Dense row-major float tensor.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<std::size_t>(numel()), 0.0f);
    }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
};

inline void require_shape(const Tensor& t, const std::vector<int>& shape,
                          const std::string& name) {
    if (t.shape != shape) {
        std::string got = "[", want = "[";
        for (int d : t.shape) got += std::to_string(d) + ",";
        for (int d : shape) want += std::to_string(d) + ",";
        throw Error(ErrorCode::BackendUnavailable,
                    "vith-adapter weights: tensor " + name + " has shape " + got + "] expected " +
                        want + "]");
    }
}

}  // namespace gescd::vit
