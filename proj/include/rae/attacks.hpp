#pragma once

#include <string>
#include <vector>

#include "rae/graph.hpp"
#include "rae/image.hpp"
#include "rae/model.hpp"

namespace rae::attacks {

enum class Method { fgsm, igsm_l2, deepfool_l2, cw_l2 };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

// Attack parameters. Epsilons are expressed in 0-255 pixel units (FGSM:
// per-pixel linf budget; IGSM: l2-ball radius) and divided by 255 where the
// math runs in normalized space.
struct AttackConfig {
    Method method = Method::fgsm;
    double eps = 0.0;
    double alpha = 0.0;  // IGSM step; 0 selects max(1, eps/10)
    int max_iterations = 20;
    double overshoot = 0.02;  // DeepFool eta
    int deepfool_max_iterations = 50;
    double kappa = 0.0;  // C&W confidence
    double c_lo = 1e-3;
    double c_hi = 1e6;
    int c_steps = 9;
    int inner_iterations = 200;
    double cw_step = 0.01;
};

struct AttackResult {
    Image adversarial;              // quantized 8-bit image
    bool success = false;           // label(adversarial) != y_true
    int iterations = 0;
    double l2_distortion = 0.0;     // ||adversarial - original||_2, 0-255 units
    nn::Tensor float_iterate;       // final float-space iterate, 0-255 units
    std::vector<double> iterate_norms;  // ||x_i - X||_2 per iteration (IGSM)
};

// X_adv = clip(X + eps * sign(grad_X J(X, y)), 0, 255), then quantized.
// Every pre-clip per-pixel change is exactly -eps, 0 or +eps.
AttackResult fgsm(const classifier::ModelParams& params, const Image& image, int label,
                  double eps);

// Returns x unchanged (bitwise) when ||x - x0||_2 <= eps, otherwise the
// radial projection onto the eps-sphere around x0.
nn::Tensor project_l2_ball(const nn::Tensor& x, const nn::Tensor& x0, double eps);

// Iterative l2 gradient method: normalized-gradient steps of size alpha,
// projected back onto the eps-ball around X and clipped to [0,255] after
// every iteration; stops early once the float iterate is misclassified.
AttackResult igsm_l2(const classifier::ModelParams& params, const Image& image, int label,
                     double eps, double alpha = 0.0, int max_iterations = 20);

// Multiclass l2 DeepFool. The image-level wrapper returns the input
// untouched (success = true) when it is already misclassified with respect
// to the stated label.
AttackResult deepfool_l2(const classifier::ModelParams& params, const Image& image, int label,
                         int max_iterations = 50, double overshoot = 0.02);

// Float-space DeepFool core in the graph's native input coordinates; no
// clipping or quantization. Exposed for closed-form fixtures.
struct DeepfoolTrace {
    nn::Tensor delta;    // accumulated perturbation before overshoot
    nn::Tensor final_x;  // x0 + (1 + overshoot) * delta
    int iterations = 0;
    bool flipped = false;
};
DeepfoolTrace deepfool_l2_float(const nn::Graph& graph, const nn::Tensor& x0,
                                int max_iterations, double overshoot);

// max(Z_true - max_{i != true} Z_i, -kappa)
double cw_loss(const nn::Tensor& logits, int true_class, double kappa);

struct CwOptions {
    double kappa = 0.0;
    double c_lo = 1e-3;
    double c_hi = 1e6;
    int c_steps = 9;
    int inner_iterations = 200;
    double step = 0.01;
};

// C&W l2: minimizes ||delta||_2^2 + c * f(x + delta) over the [0,1]^n box
// through the tanh change of variables, with a log-space binary search on c.
// Returns a failure result (success = false) when no c in range yields
// f <= 0; never throws for that case.
AttackResult cw_l2(const classifier::ModelParams& params, const Image& image, int label,
                   const CwOptions& options = {});

// Rounds a clipped float iterate half-away-from-zero to 8 bits and
// re-evaluates the classifier; the success flag always reflects the
// quantized image.
AttackResult quantize_and_verify(const classifier::ModelParams& params,
                                 const nn::Tensor& float_iterate, const Image& original,
                                 int label);

AttackResult run_attack(const classifier::ModelParams& params, const Image& image, int label,
                        const AttackConfig& config);

}  // namespace rae::attacks
