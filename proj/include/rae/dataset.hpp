#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rae/image.hpp"

namespace rae::classifier {

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    int class_count = 0;
    std::string split = "train";

    std::size_t size() const { return images.size(); }
};

// Procedural 32x32 grayscale dataset over K = 4 classes
// {disk, square, cross, triangle}. Center/size jitter plus per-image uniform
// noise of amplitude <= 16. Identical seed gives bitwise-identical output.
LabeledDataset generate_shapes_dataset(std::uint64_t seed, int n);

inline constexpr int kShapesClassCount = 4;
inline constexpr int kShapesSide = 32;

// Deterministic head/tail split; tags the parts "train" and "test".
std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double train_fraction);

// IDX ingestion (big-endian magic 0x00000803 for images, 0x00000801 for
// labels). Malformed input raises FormatError carrying the byte offset.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

}  // namespace rae::classifier
