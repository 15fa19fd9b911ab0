#pragma once

#include <cstdint>
#include <vector>

#include "rae/tensor.hpp"

namespace rae::nn {

// Fully connected layer stack with relu between layers and a
// softmax-cross-entropy head on the final logits. This is the whole
// computational substrate: enough to train the reference classifier and to
// expose input gradients of the loss and of individual logits.
//
// Relu subgradient at 0 is 0. All math is double precision; forward and
// backward are pure functions of (graph, input), so concurrent use needs no
// synchronization.
class Graph {
public:
    struct Dense {
        Tensor w;  // shape {out, in}, row-major
        Tensor b;  // shape {out}
    };

    // widths = {input, hidden..., classes}; at least {in, out}.
    explicit Graph(std::vector<int> widths);

    // He-style seeded initialization (normal scaled by sqrt(2/fan_in)).
    static Graph seeded(const std::vector<int>& widths, std::uint64_t seed);

    int input_dim() const { return widths_.front(); }
    int class_count() const { return widths_.back(); }
    const std::vector<int>& widths() const { return widths_; }

    std::vector<Dense>& layers() { return layers_; }
    const std::vector<Dense>& layers() const { return layers_; }

    std::size_t parameter_count() const;
    // Flattened parameters, per layer W row-major then b.
    std::vector<double> flatten_parameters() const;
    static Graph from_flat(const std::vector<int>& widths, const std::vector<double>& flat);

    struct Activations {
        std::vector<Tensor> pre;   // pre-relu outputs per hidden layer
        std::vector<Tensor> post;  // post-relu outputs per hidden layer
        Tensor logits;
    };

    Activations forward(const Tensor& input) const;

    // Gradient of dot(logits, cotangent) with respect to the input.
    Tensor input_gradient(const Tensor& input, const Activations& acts,
                          const Tensor& logit_cotangent) const;

    struct ParamGrads {
        std::vector<Dense> layers;
    };

    // Parameter gradients for the same scalar; used by the trainer.
    ParamGrads parameter_gradients(const Tensor& input, const Activations& acts,
                                   const Tensor& logit_cotangent) const;

    friend bool operator==(const Graph& a, const Graph& b);

private:
    std::vector<int> widths_;
    std::vector<Dense> layers_;
};

// Numerically stable softmax; outputs sum to 1 within 1e-12.
Tensor softmax(const Tensor& logits);

// Cross-entropy loss J = -log softmax(logits)[label] and its gradient with
// respect to the input.
struct LossResult {
    double loss;
    Tensor input_gradient;
};
LossResult loss_and_input_gradient(const Graph& graph, const Tensor& input, int label);

double loss_only(const Graph& graph, const Tensor& input, int label);

// Gradient of logits[class_index] with respect to the input.
Tensor logit_input_gradient(const Graph& graph, const Tensor& input, int class_index);

// Central finite-difference check of every input-gradient path (loss and all
// logits). Coordinates whose perturbation crosses a relu kink are skipped and
// counted separately, as are comparisons whose magnitude sits below the
// difference quotient's own rounding floor. The relative error is
// |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
struct GradCheckReport {
    double max_rel_error = 0.0;
    int coords_checked = 0;
    int coords_skipped = 0;            // relu kink within +/- step
    int comparisons_below_noise = 0;   // sub-noise gradient coordinates
};
GradCheckReport check_gradients(const Graph& graph, const Tensor& point, double step);

}  // namespace rae::nn
