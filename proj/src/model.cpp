#include "rae/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "rae/crc32.hpp"
#include "rae/errors.hpp"
#include "rae/rng.hpp"

namespace rae::classifier {

nn::Tensor image_to_input(const Image& image) {
    nn::Tensor t({static_cast<int>(image.size())});
    for (std::size_t i = 0; i < image.size(); ++i) t.data[i] = image.px[i] / 255.0;
    return t;
}

Prediction predict(const ModelParams& params, const Image& image) {
    if (image.h != params.input_h || image.w != params.input_w || image.c != params.input_c)
        throw DimensionError("predict: image dims do not match model");
    const auto acts = params.graph.forward(image_to_input(image));
    Prediction p;
    p.logits = acts.logits;
    p.probabilities = nn::softmax(acts.logits);
    p.label = 0;
    for (int i = 1; i < params.class_count; ++i)
        if (p.logits.data[i] > p.logits.data[p.label]) p.label = i;
    return p;
}

double evaluate_accuracy(const ModelParams& params, const LabeledDataset& ds) {
    if (ds.size() == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (predict(params, ds.images[i]).label == ds.labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

TrainResult train(const LabeledDataset& train_set, const TrainConfig& config,
                  const LabeledDataset* eval_set, const std::vector<int>& hidden_widths) {
    if (train_set.size() == 0) throw DomainError("train: empty dataset");
    if (config.epochs < 0 || config.batch_size <= 0 || !(config.learning_rate > 0.0))
        throw DomainError("train: invalid config");

    const Image& first = train_set.images.front();
    const int input_dim = static_cast<int>(first.size());
    std::vector<int> widths;
    widths.push_back(input_dim);
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(train_set.class_count);

    ModelParams params;
    params.widths = widths;
    params.class_count = train_set.class_count;
    params.input_h = first.h;
    params.input_w = first.w;
    params.input_c = first.c;
    params.seed = config.seed;
    params.graph = nn::Graph::seeded(widths, config.seed);

    // Pre-normalize inputs once; training revisits every sample many times.
    std::vector<nn::Tensor> inputs;
    inputs.reserve(train_set.size());
    for (const auto& img : train_set.images) {
        if (static_cast<int>(img.size()) != input_dim)
            throw DimensionError("train: inconsistent image dims in dataset");
        inputs.push_back(image_to_input(img));
    }

    auto& layers = params.graph.layers();
    std::vector<nn::Graph::Dense> velocity(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        velocity[l].w = nn::Tensor(layers[l].w.shape);
        velocity[l].b = nn::Tensor(layers[l].b.shape);
    }

    Rng shuffle_rng(config.seed ^ 0x5D588B656C078965ULL);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double last_loss = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream.
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.uniform_below(i);
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - start);

            std::vector<nn::Graph::Dense> grad(layers.size());
            for (std::size_t l = 0; l < layers.size(); ++l) {
                grad[l].w = nn::Tensor(layers[l].w.shape);
                grad[l].b = nn::Tensor(layers[l].b.shape);
            }

            for (std::size_t bi = start; bi < end; ++bi) {
                const std::size_t idx = order[bi];
                const auto acts = params.graph.forward(inputs[idx]);
                nn::Tensor probs = nn::softmax(acts.logits);
                const double p_true = probs.data[train_set.labels[idx]];
                epoch_loss += -std::log(std::max(p_true, 1e-300));
                probs.data[train_set.labels[idx]] -= 1.0;
                const auto g = params.graph.parameter_gradients(inputs[idx], acts, probs);
                for (std::size_t l = 0; l < layers.size(); ++l) {
                    for (std::size_t k = 0; k < grad[l].w.numel(); ++k)
                        grad[l].w.data[k] += g.layers[l].w.data[k];
                    for (std::size_t k = 0; k < grad[l].b.numel(); ++k)
                        grad[l].b.data[k] += g.layers[l].b.data[k];
                }
            }

            for (std::size_t l = 0; l < layers.size(); ++l) {
                for (std::size_t k = 0; k < layers[l].w.numel(); ++k) {
                    velocity[l].w.data[k] = config.momentum * velocity[l].w.data[k] -
                                            config.learning_rate * grad[l].w.data[k] * inv_batch;
                    layers[l].w.data[k] += velocity[l].w.data[k];
                }
                for (std::size_t k = 0; k < layers[l].b.numel(); ++k) {
                    velocity[l].b.data[k] = config.momentum * velocity[l].b.data[k] -
                                            config.learning_rate * grad[l].b.data[k] * inv_batch;
                    layers[l].b.data[k] += velocity[l].b.data[k];
                }
            }
        }
        last_loss = epoch_loss / static_cast<double>(order.size());
        if (!std::isfinite(last_loss))
            throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch));
    }

    TrainResult result;
    result.params = std::move(params);
    result.final_loss = last_loss;
    result.train_accuracy = evaluate_accuracy(result.params, train_set);
    if (eval_set) result.test_accuracy = evaluate_accuracy(result.params, *eval_set);
    return result;
}

namespace {

void put_u16_le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_f64_le(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint16_t get_u16_le(const std::vector<std::uint8_t>& b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

double get_f64_le(const std::vector<std::uint8_t>& b, std::size_t off) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[off + static_cast<std::size_t>(i)];
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

constexpr char kMagic[4] = {'R', 'A', 'D', 'M'};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams& params) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    out.push_back(1);  // version
    out.push_back(static_cast<std::uint8_t>(params.class_count));
    put_u16_le(out, static_cast<std::uint16_t>(params.input_h));
    put_u16_le(out, static_cast<std::uint16_t>(params.input_w));
    out.push_back(static_cast<std::uint8_t>(params.input_c));
    out.push_back(static_cast<std::uint8_t>(params.widths.size()));
    for (int w : params.widths) put_u16_le(out, static_cast<std::uint16_t>(w));
    for (double v : params.graph.flatten_parameters()) put_f64_le(out, v);
    const std::uint32_t crc = crc32(out);
    out.push_back(static_cast<std::uint8_t>(crc >> 24));
    out.push_back(static_cast<std::uint8_t>(crc >> 16));
    out.push_back(static_cast<std::uint8_t>(crc >> 8));
    out.push_back(static_cast<std::uint8_t>(crc));
    return out;
}

ModelParams deserialize_model(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("model: bad magic", 0);
    if (bytes.size() < 16) throw FormatError("model: truncated header",
                                             static_cast<std::int64_t>(bytes.size()));
    const std::uint32_t stored_crc =
        (static_cast<std::uint32_t>(bytes[bytes.size() - 4]) << 24) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 16) |
        (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 8) |
        static_cast<std::uint32_t>(bytes[bytes.size() - 1]);
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw FormatError("model: CRC mismatch", static_cast<std::int64_t>(bytes.size() - 4));

    std::size_t pos = 4;
    const int version = bytes[pos++];
    if (version != 1) throw FormatError("model: unsupported version", 4);
    ModelParams params;
    params.class_count = bytes[pos++];
    params.input_h = get_u16_le(bytes, pos);
    pos += 2;
    params.input_w = get_u16_le(bytes, pos);
    pos += 2;
    params.input_c = bytes[pos++];
    const int layer_count = bytes[pos++];
    if (bytes.size() < pos + 2 * static_cast<std::size_t>(layer_count) + 4)
        throw FormatError("model: truncated width table", static_cast<std::int64_t>(pos));
    for (int i = 0; i < layer_count; ++i) {
        params.widths.push_back(get_u16_le(bytes, pos));
        pos += 2;
    }
    if (params.widths.size() < 2) throw FormatError("model: too few layers", 10);

    nn::Graph shape_probe(params.widths);
    const std::size_t n_params = shape_probe.parameter_count();
    if (bytes.size() != pos + 8 * n_params + 4)
        throw FormatError("model: weight payload size mismatch", static_cast<std::int64_t>(pos));
    std::vector<double> flat(n_params);
    for (std::size_t i = 0; i < n_params; ++i) {
        flat[i] = get_f64_le(bytes, pos);
        pos += 8;
    }
    params.graph = nn::Graph::from_flat(params.widths, flat);
    return params;
}

void save_model(const ModelParams& params, const std::string& path) {
    const auto bytes = serialize_model(params);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open '" + tmp + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw FormatError("short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw FormatError("cannot rename '" + tmp + "': " + ec.message());
    }
}

ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace rae::classifier
