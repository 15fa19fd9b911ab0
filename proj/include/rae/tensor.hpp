#pragma once

#include <cstdint>
#include <vector>

namespace rae::nn {

// Dense row-major tensor of doubles. Immutable by convention once built;
// every operation below returns a fresh value.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, double fill = 0.0);
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    std::size_t numel() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape == b.shape && a.data == b.data;
    }
};

std::size_t shape_numel(const std::vector<int>& shape);

double dot(const Tensor& a, const Tensor& b);
double l2_norm(const Tensor& a);
// a + s * b
Tensor axpy(const Tensor& a, double s, const Tensor& b);
Tensor scale(const Tensor& a, double s);

bool all_finite(const Tensor& a);

}  // namespace rae::nn
