#include "rae/tensor.hpp"

#include <cmath>

#include "rae/errors.hpp"

namespace rae::nn {

std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimensionError("tensor: nonpositive extent");
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, double fill)
    : shape(std::move(shape_)), data(shape_numel(shape), fill) {}

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (data.size() != shape_numel(shape))
        throw DimensionError("tensor: data length does not match shape");
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) throw DimensionError("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double l2_norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

Tensor axpy(const Tensor& a, double s, const Tensor& b) {
    if (a.numel() != b.numel()) throw DimensionError("axpy: size mismatch");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += s * b.data[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v *= s;
    return out;
}

bool all_finite(const Tensor& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace rae::nn
