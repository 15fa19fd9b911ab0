#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rae/attacks.hpp"
#include "rae/bitstream.hpp"
#include "rae/dataset.hpp"
#include "rae/image.hpp"
#include "rae/model.hpp"
#include "rae/rdh.hpp"

namespace rae::pipeline {

// Signed per-pixel difference r = X_adv - X; the payload hidden inside the
// reversible adversarial example.
struct Perturbation {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<std::int16_t> values;

    std::size_t size() const { return values.size(); }
    friend bool operator==(const Perturbation& a, const Perturbation& b) {
        return a.h == b.h && a.w == b.w && a.c == b.c && a.values == b.values;
    }
};

Perturbation perturbation_between(const Image& adversarial, const Image& original);
Image apply_perturbation_inverse(const Image& adversarial, const Perturbation& r);

// Self-contained codec: 2-bit mode tag (0 dense, 1 sparse), raw dims, then
// an arithmetic-coded body. Dense codes every sample's zigzag value; sparse
// codes nonzero count, index gaps and values. The encoder picks whichever
// mode is smaller.
BitStream encode_perturbation(const Perturbation& r);
Perturbation decode_perturbation(const BitStream& bits);

// Wire header leading the embedded payload: magic "RAE1" (32) | version (8)
// | attack id (8) | backend id (8) | eps as 16.8 fixed point (24) | H (16) |
// W (16) | C (8) | perturbation bit length (32) | CRC32 of the perturbation
// payload (32). Big-endian bit order.
struct RaeHeader {
    int attack_id = 0;
    int backend_id = 0;
    double eps = 0.0;
    int h = 0;
    int w = 0;
    int c = 0;
    std::uint64_t payload_bits = 0;
    std::uint32_t payload_crc = 0;
};

inline constexpr int kRaeHeaderBits = 184;

BitStream serialize_rae_header(const RaeHeader& header);
RaeHeader parse_rae_header(const BitStream& bits);

int attack_id(attacks::Method m);
attacks::Method attack_from_id(int id);

struct CreateOptions {
    attacks::AttackConfig attack;
    rdh::Backend backend = rdh::Backend::histogram_shift;
    rdh::Options rdh;
    bool proceed_on_attack_failure = false;
    int label_override = -1;  // -1: attack the model's predicted label
};

struct CreateReport {
    bool attack_success = false;
    int label_attacked = 0;
    int adversarial_label = 0;
    int rae_label = 0;
    int attack_iterations = 0;
    double adversarial_l2 = 0.0;  // ||X_adv - X||
    double rae_l2 = 0.0;          // ||X_rae - X||
    std::uint64_t payload_bits = 0;
    rdh::EmbedReport embed;
};

// Fig-style composition: attack -> encode perturbation -> embed into the
// adversarial image. Throws AttackFailedError (unless proceeding anyway) or
// CapacityError naming required vs available bits.
std::pair<Image, CreateReport> create_rae(const classifier::ModelParams& params,
                                          const Image& image, const CreateOptions& options);

struct Recovered {
    Image original;
    Image adversarial;
    Perturbation perturbation;
    RaeHeader header;
};

// Inverse composition; every returned artifact is bit-exact. Model-free.
Recovered recover(const Image& rae, rdh::Backend backend, const rdh::Options& options = {});

struct EvalOptions {
    std::vector<attacks::Method> methods;
    std::vector<double> eps_list{8.0, 16.0, 32.0, 64.0};
    rdh::Backend backend = rdh::Backend::histogram_shift;
    rdh::Options rdh;
    attacks::AttackConfig attack_defaults;
    int workers = 1;
    int limit = 0;  // 0: whole dataset
};

// Per-(method, eps) success rates for adversarial and reversible adversarial
// examples over both cohorts (all images / initially correctly classified).
// Deterministic: identical inputs give identical report bytes.
std::string evaluate_json(const classifier::ModelParams& params,
                          const classifier::LabeledDataset& dataset, const EvalOptions& options);

}  // namespace rae::pipeline
