#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rae/dataset.hpp"
#include "rae/graph.hpp"
#include "rae/image.hpp"

namespace rae::classifier {

// Trained reference classifier. Immutable after training; prediction and
// gradient queries are pure and safe to share across workers.
struct ModelParams {
    std::vector<int> widths;  // {H*W*C, hidden..., K}
    int class_count = 0;
    int input_h = 0;
    int input_w = 0;
    int input_c = 0;
    std::uint64_t seed = 0;  // training seed; not persisted in the model file
    nn::Graph graph{std::vector<int>{1, 1}};
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 42;
};

struct TrainResult {
    ModelParams params;
    double train_accuracy = 0.0;
    double test_accuracy = -1.0;  // -1 when no eval set given
    double final_loss = 0.0;
};

// Deterministic minibatch SGD with momentum. Raises TrainingError if the
// loss goes non-finite.
TrainResult train(const LabeledDataset& train_set, const TrainConfig& config,
                  const LabeledDataset* eval_set = nullptr,
                  const std::vector<int>& hidden_widths = {128, 64});

struct Prediction {
    int label = 0;
    nn::Tensor logits;
    nn::Tensor probabilities;
};

// Classifier consumes image/255.0; argmax ties break toward the lowest
// class index.
Prediction predict(const ModelParams& params, const Image& image);

nn::Tensor image_to_input(const Image& image);

double evaluate_accuracy(const ModelParams& params, const LabeledDataset& ds);

// Model file format "RADM": magic, version u8=1, K u8, H u16, W u16, C u8,
// layer-count u8, layer widths u16 each, weights f64 little-endian, CRC32
// big-endian. Round trip of the persisted fields is bit-exact.
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

std::vector<std::uint8_t> serialize_model(const ModelParams& params);
ModelParams deserialize_model(const std::vector<std::uint8_t>& bytes);

}  // namespace rae::classifier
