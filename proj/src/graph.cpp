#include "rae/graph.hpp"

#include <algorithm>
#include <cmath>

#include "rae/errors.hpp"
#include "rae/rng.hpp"

namespace rae::nn {

Graph::Graph(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw DimensionError("graph: need at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        if (widths_[l] <= 0 || widths_[l + 1] <= 0)
            throw DimensionError("graph: nonpositive layer width");
        Dense d;
        d.w = Tensor({widths_[l + 1], widths_[l]});
        d.b = Tensor({widths_[l + 1]});
        layers_.push_back(std::move(d));
    }
}

Graph Graph::seeded(const std::vector<int>& widths, std::uint64_t seed) {
    Graph g(widths);
    Rng rng(seed);
    for (auto& layer : g.layers_) {
        const int fan_in = layer.w.shape[1];
        const double s = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : layer.w.data) v = s * rng.normal();
        std::fill(layer.b.data.begin(), layer.b.data.end(), 0.0);
    }
    return g;
}

std::size_t Graph::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.numel() + l.b.numel();
    return n;
}

std::vector<double> Graph::flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
        flat.insert(flat.end(), l.b.data.begin(), l.b.data.end());
    }
    return flat;
}

Graph Graph::from_flat(const std::vector<int>& widths, const std::vector<double>& flat) {
    Graph g(widths);
    if (flat.size() != g.parameter_count())
        throw DimensionError("graph: flat parameter count mismatch");
    std::size_t pos = 0;
    for (auto& l : g.layers_) {
        std::copy(flat.begin() + pos, flat.begin() + pos + l.w.numel(), l.w.data.begin());
        pos += l.w.numel();
        std::copy(flat.begin() + pos, flat.begin() + pos + l.b.numel(), l.b.data.begin());
        pos += l.b.numel();
    }
    return g;
}

bool operator==(const Graph& a, const Graph& b) {
    if (a.widths_ != b.widths_) return false;
    for (std::size_t i = 0; i < a.layers_.size(); ++i)
        if (!(a.layers_[i].w == b.layers_[i].w && a.layers_[i].b == b.layers_[i].b)) return false;
    return true;
}

namespace {

// y = W x + b
Tensor affine(const Graph::Dense& layer, const Tensor& x) {
    const int out = layer.w.shape[0];
    const int in = layer.w.shape[1];
    Tensor y({out});
    const double* wp = layer.w.data.data();
    for (int o = 0; o < out; ++o) {
        double acc = layer.b.data[o];
        const double* row = wp + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += row[i] * x.data[i];
        y.data[o] = acc;
    }
    return y;
}

// g_in = W^T g_out
Tensor affine_backward_input(const Graph::Dense& layer, const Tensor& g_out) {
    const int out = layer.w.shape[0];
    const int in = layer.w.shape[1];
    Tensor g_in({in});
    const double* wp = layer.w.data.data();
    for (int o = 0; o < out; ++o) {
        const double g = g_out.data[o];
        if (g == 0.0) continue;
        const double* row = wp + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) g_in.data[i] += row[i] * g;
    }
    return g_in;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

// Relu subgradient at 0 is 0: mask strictly positive pre-activations.
void relu_mask(const Tensor& pre, Tensor& grad) {
    for (std::size_t i = 0; i < grad.numel(); ++i)
        if (!(pre.data[i] > 0.0)) grad.data[i] = 0.0;
}

}  // namespace

Graph::Activations Graph::forward(const Tensor& input) const {
    if (static_cast<int>(input.numel()) != input_dim())
        throw DimensionError("graph: input size " + std::to_string(input.numel()) +
                             " does not match input dim " + std::to_string(input_dim()));
    Activations acts;
    const Tensor* cur = &input;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        Tensor pre = affine(layers_[l], *cur);
        acts.post.push_back(relu(pre));
        acts.pre.push_back(std::move(pre));
        cur = &acts.post.back();
    }
    acts.logits = affine(layers_.back(), *cur);
    return acts;
}

Tensor Graph::input_gradient(const Tensor& input, const Activations& acts,
                             const Tensor& logit_cotangent) const {
    if (static_cast<int>(logit_cotangent.numel()) != class_count())
        throw DimensionError("graph: cotangent size mismatch");
    Tensor g = affine_backward_input(layers_.back(), logit_cotangent);
    for (std::size_t l = layers_.size() - 1; l-- > 0;) {
        relu_mask(acts.pre[l], g);
        g = affine_backward_input(layers_[l], g);
    }
    (void)input;
    return g;
}

Graph::ParamGrads Graph::parameter_gradients(const Tensor& input, const Activations& acts,
                                             const Tensor& logit_cotangent) const {
    ParamGrads grads;
    grads.layers.resize(layers_.size());
    Tensor g = logit_cotangent;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const Tensor& layer_in = l == 0 ? input : acts.post[l - 1];
        const int out = layers_[l].w.shape[0];
        const int in = layers_[l].w.shape[1];
        Dense& slot = grads.layers[l];
        slot.w = Tensor({out, in});
        slot.b = g;
        for (int o = 0; o < out; ++o) {
            const double go = g.data[o];
            if (go == 0.0) continue;
            double* row = slot.w.data.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) row[i] = go * layer_in.data[i];
        }
        if (l > 0) {
            g = affine_backward_input(layers_[l], g);
            relu_mask(acts.pre[l - 1], g);
        }
    }
    return grads;
}

Tensor softmax(const Tensor& logits) {
    Tensor out = logits;
    double mx = out.data[0];
    for (double v : out.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : out.data) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : out.data) v /= sum;
    return out;
}

namespace {

double log_sum_exp(const Tensor& logits) {
    double mx = logits.data[0];
    for (double v : logits.data) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits.data) sum += std::exp(v - mx);
    return mx + std::log(sum);
}

}  // namespace

LossResult loss_and_input_gradient(const Graph& graph, const Tensor& input, int label) {
    if (label < 0 || label >= graph.class_count())
        throw DomainError("loss: label " + std::to_string(label) + " out of range");
    const auto acts = graph.forward(input);
    const double loss = log_sum_exp(acts.logits) - acts.logits.data[label];
    Tensor cot = softmax(acts.logits);
    cot.data[label] -= 1.0;
    return LossResult{loss, graph.input_gradient(input, acts, cot)};
}

double loss_only(const Graph& graph, const Tensor& input, int label) {
    if (label < 0 || label >= graph.class_count())
        throw DomainError("loss: label " + std::to_string(label) + " out of range");
    const auto acts = graph.forward(input);
    return log_sum_exp(acts.logits) - acts.logits.data[label];
}

Tensor logit_input_gradient(const Graph& graph, const Tensor& input, int class_index) {
    if (class_index < 0 || class_index >= graph.class_count())
        throw DomainError("logit gradient: class " + std::to_string(class_index) +
                          " out of range");
    const auto acts = graph.forward(input);
    Tensor cot({graph.class_count()});
    cot.data[class_index] = 1.0;
    return graph.input_gradient(input, acts, cot);
}

GradCheckReport check_gradients(const Graph& graph, const Tensor& point, double step) {
    if (!(step > 0.0)) throw DomainError("check_gradients: step must be positive");
    const int k = graph.class_count();
    const auto base = graph.forward(point);

    // Analytic gradients: loss plus every logit.
    Tensor loss_cot = softmax(base.logits);
    // Gradient check runs against label 0's loss; any fixed label works.
    loss_cot.data[0] -= 1.0;
    const Tensor g_loss = graph.input_gradient(point, base, loss_cot);
    std::vector<Tensor> g_logit;
    for (int c = 0; c < k; ++c) {
        Tensor cot({k});
        cot.data[c] = 1.0;
        g_logit.push_back(graph.input_gradient(point, base, cot));
    }

    auto crosses_kink = [](const Graph::Activations& lo, const Graph::Activations& hi,
                           const Graph::Activations& mid) {
        for (std::size_t l = 0; l < mid.pre.size(); ++l)
            for (std::size_t i = 0; i < mid.pre[l].numel(); ++i) {
                const bool s0 = mid.pre[l].data[i] > 0.0;
                if ((lo.pre[l].data[i] > 0.0) != s0 || (hi.pre[l].data[i] > 0.0) != s0)
                    return true;
            }
        return false;
    };

    GradCheckReport report;
    Tensor probe = point;
    for (std::size_t i = 0; i < point.numel(); ++i) {
        probe.data[i] = point.data[i] + step;
        const auto hi = graph.forward(probe);
        probe.data[i] = point.data[i] - step;
        const auto lo = graph.forward(probe);
        probe.data[i] = point.data[i];

        if (crosses_kink(lo, hi, base)) {
            ++report.coords_skipped;
            continue;
        }
        ++report.coords_checked;

        auto accumulate = [&](double analytic, double f_hi, double f_lo) {
            const double numeric = (f_hi - f_lo) / (2.0 * step);
            const double denom = std::max(1e-12, std::abs(analytic) + std::abs(numeric));
            // Central differences carry rounding noise of about
            // |f| * eps / (2h); a comparison whose scale sits below that
            // floor cannot certify anything either way.
            const double fd_noise =
                (std::abs(f_hi) + std::abs(f_lo)) * 5e-16 / (2.0 * step);
            if (denom * 1e-6 < 2.0 * fd_noise) {
                ++report.comparisons_below_noise;
                return;
            }
            report.max_rel_error = std::max(report.max_rel_error,
                                            std::abs(analytic - numeric) / denom);
        };

        accumulate(g_loss.data[i], log_sum_exp(hi.logits) - hi.logits.data[0],
                   log_sum_exp(lo.logits) - lo.logits.data[0]);
        for (int c = 0; c < k; ++c)
            accumulate(g_logit[c].data[i], hi.logits.data[c], lo.logits.data[c]);
    }
    return report;
}

}  // namespace rae::nn
