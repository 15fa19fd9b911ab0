#include "rae/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rae/errors.hpp"

namespace rae::attacks {

Method method_from_name(const std::string& name) {
    if (name == "fgsm") return Method::fgsm;
    if (name == "igsm" || name == "igsm_l2") return Method::igsm_l2;
    if (name == "deepfool" || name == "deepfool_l2") return Method::deepfool_l2;
    if (name == "cw" || name == "cw_l2") return Method::cw_l2;
    throw DomainError("unknown attack method '" + name + "'");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::fgsm: return "fgsm";
        case Method::igsm_l2: return "igsm";
        case Method::deepfool_l2: return "deepfool";
        case Method::cw_l2: return "cw";
    }
    return "?";
}

namespace {

void check_image(const classifier::ModelParams& params, const Image& image, int label) {
    if (image.h != params.input_h || image.w != params.input_w || image.c != params.input_c)
        throw DimensionError("attack: image dims do not match model");
    if (label < 0 || label >= params.class_count)
        throw DomainError("attack: label " + std::to_string(label) + " out of range");
}

nn::Tensor image_to_255(const Image& image) {
    nn::Tensor t({static_cast<int>(image.size())});
    for (std::size_t i = 0; i < image.size(); ++i) t.data[i] = static_cast<double>(image.px[i]);
    return t;
}

int argmax_lowest(const nn::Tensor& v) {
    int best = 0;
    for (std::size_t i = 1; i < v.numel(); ++i)
        if (v.data[i] > v.data[best]) best = static_cast<int>(i);
    return best;
}

// Predicted label of a 0-255 float iterate.
int float_label(const nn::Graph& graph, const nn::Tensor& x255) {
    return argmax_lowest(graph.forward(nn::scale(x255, 1.0 / 255.0)).logits);
}

}  // namespace

AttackResult quantize_and_verify(const classifier::ModelParams& params,
                                 const nn::Tensor& float_iterate, const Image& original,
                                 int label) {
    if (float_iterate.numel() != original.size())
        throw DimensionError("quantize: iterate size does not match image");
    AttackResult result;
    result.adversarial = Image(original.h, original.w, original.c);
    for (std::size_t i = 0; i < original.size(); ++i) {
        const long long q = std::llround(float_iterate.data[i]);  // half away from zero
        result.adversarial.px[i] =
            static_cast<std::uint8_t>(std::clamp<long long>(q, 0, 255));
    }
    result.success = classifier::predict(params, result.adversarial).label != label;
    result.l2_distortion = image_l2_distance(result.adversarial, original);
    result.float_iterate = float_iterate;
    return result;
}

AttackResult fgsm(const classifier::ModelParams& params, const Image& image, int label,
                  double eps) {
    check_image(params, image, label);
    if (eps < 0.0) throw DomainError("fgsm: eps must be nonnegative");
    const nn::Tensor x = image_to_255(image);
    const auto loss = nn::loss_and_input_gradient(params.graph, nn::scale(x, 1.0 / 255.0), label);
    nn::Tensor iterate = x;
    for (std::size_t i = 0; i < iterate.numel(); ++i) {
        const double g = loss.input_gradient.data[i];
        const double s = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
        iterate.data[i] = std::clamp(iterate.data[i] + eps * s, 0.0, 255.0);
    }
    AttackResult result = quantize_and_verify(params, iterate, image, label);
    result.iterations = 1;
    return result;
}

nn::Tensor project_l2_ball(const nn::Tensor& x, const nn::Tensor& x0, double eps) {
    if (x.numel() != x0.numel()) throw DimensionError("project_l2_ball: size mismatch");
    if (eps < 0.0) throw DomainError("project_l2_ball: eps must be nonnegative");
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double d = x.data[i] - x0.data[i];
        norm_sq += d * d;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm <= eps) return x;
    const double scale = norm > 0.0 ? eps / norm : 0.0;
    nn::Tensor out = x0;
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] += scale * (x.data[i] - x0.data[i]);
    return out;
}

AttackResult igsm_l2(const classifier::ModelParams& params, const Image& image, int label,
                     double eps, double alpha, int max_iterations) {
    check_image(params, image, label);
    if (eps < 0.0) throw DomainError("igsm: eps must be nonnegative");
    if (max_iterations < 1) throw DomainError("igsm: need at least one iteration");
    if (alpha <= 0.0) alpha = std::max(1.0, eps / 10.0);

    const nn::Tensor origin = image_to_255(image);
    nn::Tensor x = origin;
    std::vector<double> norms;
    int iterations = 0;
    for (int n = 0; n < max_iterations; ++n) {
        if (float_label(params.graph, x) != label) break;
        const auto loss =
            nn::loss_and_input_gradient(params.graph, nn::scale(x, 1.0 / 255.0), label);
        const double gnorm = nn::l2_norm(loss.input_gradient);
        if (gnorm == 0.0)
            throw DegenerateGradientError("igsm: zero loss gradient at iterate " +
                                          std::to_string(n));
        x = nn::axpy(x, alpha / gnorm, loss.input_gradient);
        x = project_l2_ball(x, origin, eps);
        for (double& v : x.data) v = std::clamp(v, 0.0, 255.0);
        ++iterations;
        double d = 0.0;
        for (std::size_t i = 0; i < x.numel(); ++i) {
            const double diff = x.data[i] - origin.data[i];
            d += diff * diff;
        }
        norms.push_back(std::sqrt(d));
    }
    AttackResult result = quantize_and_verify(params, x, image, label);
    result.iterations = iterations;
    result.iterate_norms = std::move(norms);
    return result;
}

DeepfoolTrace deepfool_l2_float(const nn::Graph& graph, const nn::Tensor& x0,
                                int max_iterations, double overshoot) {
    if (max_iterations < 1) throw DomainError("deepfool: need at least one iteration");
    const int k = graph.class_count();
    DeepfoolTrace trace;
    trace.delta = nn::Tensor(x0.shape);

    const int orig = argmax_lowest(graph.forward(x0).logits);
    nn::Tensor x = x0;
    for (int it = 0; it < max_iterations; ++it) {
        const auto acts = graph.forward(x);
        const int cur = argmax_lowest(acts.logits);
        if (cur != orig) {
            trace.flipped = true;
            break;
        }
        nn::Tensor cot_cur({k});
        cot_cur.data[cur] = 1.0;
        const nn::Tensor g_cur = graph.input_gradient(x, acts, cot_cur);

        double best_ratio = std::numeric_limits<double>::infinity();
        nn::Tensor best_w;
        double best_f = 0.0;
        double best_wnorm = 0.0;
        for (int c = 0; c < k; ++c) {
            if (c == cur) continue;
            nn::Tensor cot({k});
            cot.data[c] = 1.0;
            nn::Tensor w_k = nn::axpy(graph.input_gradient(x, acts, cot), -1.0, g_cur);
            const double wnorm = nn::l2_norm(w_k);
            if (wnorm == 0.0) continue;
            const double f_k = acts.logits.data[c] - acts.logits.data[cur];
            const double ratio = std::abs(f_k) / wnorm;
            if (ratio < best_ratio) {
                best_ratio = ratio;
                best_w = std::move(w_k);
                best_f = f_k;
                best_wnorm = wnorm;
            }
        }
        if (!std::isfinite(best_ratio)) {
            // No usable direction. A degenerate starting point is an error;
            // a dead region reached mid-run just ends the search.
            if (it == 0)
                throw DegenerateGradientError("deepfool: all class-difference gradients vanish");
            break;
        }

        // On the boundary itself there is nothing left to cross; the final
        // overshoot takes the iterate past it.
        double scale = 0.0;
        for (double v : acts.logits.data) scale = std::max(scale, std::abs(v));
        if (std::abs(best_f) <= 1e-9 * (1.0 + scale)) {
            trace.flipped = true;
            break;
        }

        const double step = std::abs(best_f) / (best_wnorm * best_wnorm);
        x = nn::axpy(x, step, best_w);
        ++trace.iterations;
    }
    if (!trace.flipped)
        trace.flipped = argmax_lowest(graph.forward(x).logits) != orig;

    trace.delta = nn::axpy(x, -1.0, x0);
    trace.final_x = nn::axpy(x0, 1.0 + overshoot, trace.delta);
    return trace;
}

AttackResult deepfool_l2(const classifier::ModelParams& params, const Image& image, int label,
                         int max_iterations, double overshoot) {
    check_image(params, image, label);
    if (classifier::predict(params, image).label != label) {
        // Already on the wrong side of the boundary: zero perturbation.
        AttackResult result;
        result.adversarial = image;
        result.success = true;
        result.iterations = 0;
        result.l2_distortion = 0.0;
        result.float_iterate = image_to_255(image);
        return result;
    }
    const nn::Tensor x0 = classifier::image_to_input(image);
    const DeepfoolTrace trace =
        deepfool_l2_float(params.graph, x0, max_iterations, overshoot);
    nn::Tensor iterate = nn::scale(trace.final_x, 255.0);
    for (double& v : iterate.data) v = std::clamp(v, 0.0, 255.0);
    AttackResult result = quantize_and_verify(params, iterate, image, label);
    result.iterations = trace.iterations;
    return result;
}

double cw_loss(const nn::Tensor& logits, int true_class, double kappa) {
    if (true_class < 0 || true_class >= static_cast<int>(logits.numel()))
        throw DomainError("cw_loss: class out of range");
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < logits.numel(); ++i)
        if (static_cast<int>(i) != true_class) other = std::max(other, logits.data[i]);
    return std::max(logits.data[true_class] - other, -kappa);
}

namespace {

struct CwBest {
    bool found = false;
    double quantized_distortion = std::numeric_limits<double>::infinity();
    nn::Tensor x;      // normalized iterate, f <= 0, quantization-verified
    Image quantized;
};

// One gradient-descent run at fixed c. A candidate iterate must satisfy
// f <= 0 in float space and still be misclassified once quantized to 8 bits;
// `best` keeps the lowest quantized distortion among them. Returns whether
// this run produced any candidate.
bool cw_inner(const classifier::ModelParams& params, const Image& original,
              const nn::Tensor& x0n, int label, double kappa, double c, int inner_iterations,
              double step, CwBest& best, int& steps_taken) {
    const nn::Graph& graph = params.graph;
    const std::size_t n = x0n.numel();
    nn::Tensor w({static_cast<int>(n)});
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::clamp(2.0 * x0n.data[i] - 1.0, -(1.0 - 1e-6), 1.0 - 1e-6);
        w.data[i] = std::atanh(v);
    }

    bool success_here = false;
    nn::Tensor x({static_cast<int>(n)});
    nn::Tensor tanh_w({static_cast<int>(n)});
    Image rounded(original.h, original.w, original.c);
    for (int it = 0; it <= inner_iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            tanh_w.data[i] = std::tanh(w.data[i]);
            x.data[i] = (tanh_w.data[i] + 1.0) / 2.0;
        }
        const auto acts = graph.forward(x);
        const double f = cw_loss(acts.logits, label, kappa);
        double delta_norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x.data[i] - x0n.data[i];
            delta_norm_sq += d * d;
        }
        const double delta_norm = std::sqrt(delta_norm_sq);
        // Quantized distortion differs from the float one by at most half a
        // step per pixel; prune candidates that cannot improve the best.
        const double prune_slack = 0.5 * std::sqrt(static_cast<double>(n));
        if (f <= 0.0) {
            success_here = true;
            if (255.0 * delta_norm < best.quantized_distortion + prune_slack) {
                for (std::size_t i = 0; i < n; ++i)
                    rounded.px[i] = static_cast<std::uint8_t>(
                        std::clamp<long long>(std::llround(255.0 * x.data[i]), 0, 255));
                if (classifier::predict(params, rounded).label != label) {
                    const double qdist = image_l2_distance(rounded, original);
                    if (qdist < best.quantized_distortion) {
                        best.found = true;
                        best.quantized_distortion = qdist;
                        best.x = x;
                        best.quantized = rounded;
                    }
                }
            }
        }
        if (it == inner_iterations) break;

        // dL/dx = 2*delta + c * d f/dx (f active only above the -kappa floor)
        nn::Tensor g({static_cast<int>(n)});
        for (std::size_t i = 0; i < n; ++i) g.data[i] = 2.0 * (x.data[i] - x0n.data[i]);
        double other = -std::numeric_limits<double>::infinity();
        int j_star = -1;
        for (int i = 0; i < static_cast<int>(acts.logits.numel()); ++i)
            if (i != label && acts.logits.data[i] > other) {
                other = acts.logits.data[i];
                j_star = i;
            }
        if (acts.logits.data[label] - other > -kappa && j_star >= 0) {
            nn::Tensor cot({static_cast<int>(acts.logits.numel())});
            cot.data[label] = 1.0;
            cot.data[j_star] = -1.0;
            const nn::Tensor fg = graph.input_gradient(x, acts, cot);
            for (std::size_t i = 0; i < n; ++i) g.data[i] += c * fg.data[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double dxdw = (1.0 - tanh_w.data[i] * tanh_w.data[i]) / 2.0;
            w.data[i] -= step * g.data[i] * dxdw;
        }
        ++steps_taken;
    }
    return success_here;
}

}  // namespace

AttackResult cw_l2(const classifier::ModelParams& params, const Image& image, int label,
                   const CwOptions& options) {
    check_image(params, image, label);
    if (options.kappa < 0.0) throw DomainError("cw: kappa must be nonnegative");
    const nn::Tensor x0n = classifier::image_to_input(image);

    CwBest best;
    int steps_taken = 0;
    double lo = options.c_lo;
    double hi = options.c_hi;
    for (int s = 0; s < options.c_steps; ++s) {
        const double c = std::sqrt(lo * hi);  // log-space midpoint
        const bool ok = cw_inner(params, image, x0n, label, options.kappa, c,
                                 options.inner_iterations, options.step, best, steps_taken);
        if (ok)
            hi = c;
        else
            lo = c;
    }
    if (!best.found)
        cw_inner(params, image, x0n, label, options.kappa, options.c_hi,
                 options.inner_iterations, options.step, best, steps_taken);

    if (!best.found) {
        AttackResult result;
        result.adversarial = image;
        result.success = false;
        result.iterations = steps_taken;
        result.l2_distortion = 0.0;
        result.float_iterate = image_to_255(image);
        return result;
    }

    nn::Tensor iterate = nn::scale(best.x, 255.0);
    for (double& v : iterate.data) v = std::clamp(v, 0.0, 255.0);
    AttackResult result = quantize_and_verify(params, iterate, image, label);
    result.iterations = steps_taken;
    return result;
}

AttackResult run_attack(const classifier::ModelParams& params, const Image& image, int label,
                        const AttackConfig& config) {
    switch (config.method) {
        case Method::fgsm:
            return fgsm(params, image, label, config.eps);
        case Method::igsm_l2:
            return igsm_l2(params, image, label, config.eps, config.alpha,
                           config.max_iterations);
        case Method::deepfool_l2:
            return deepfool_l2(params, image, label, config.deepfool_max_iterations,
                               config.overshoot);
        case Method::cw_l2: {
            CwOptions opt;
            opt.kappa = config.kappa;
            opt.c_lo = config.c_lo;
            opt.c_hi = config.c_hi;
            opt.c_steps = config.c_steps;
            opt.inner_iterations = config.inner_iterations;
            opt.step = config.cw_step;
            return cw_l2(params, image, label, opt);
        }
    }
    throw DomainError("run_attack: unknown method");
}

}  // namespace rae::attacks
