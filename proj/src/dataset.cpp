#include "rae/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "rae/errors.hpp"
#include "rae/rng.hpp"

namespace rae::classifier {

namespace {

void draw_disk(Image& img, int cx, int cy, int s, std::uint8_t fg) {
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= s * s) img.at(y, x) = fg;
}

void draw_square(Image& img, int cx, int cy, int s, std::uint8_t fg) {
    const int half = std::max(2, (s * 4) / 5);
    for (int y = std::max(0, cy - half); y <= std::min(img.h - 1, cy + half); ++y)
        for (int x = std::max(0, cx - half); x <= std::min(img.w - 1, cx + half); ++x)
            img.at(y, x) = fg;
}

void draw_cross(Image& img, int cx, int cy, int s, std::uint8_t fg) {
    const int t = std::max(2, s / 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const int dx = x - cx, dy = y - cy;
            if (std::abs(dx) > s || std::abs(dy) > s) continue;
            if (std::abs(dx) <= t || std::abs(dy) <= t) img.at(y, x) = fg;
        }
}

void draw_triangle(Image& img, int cx, int cy, int s, std::uint8_t fg) {
    // Upward-pointing: apex at cy - s, base at cy + s.
    for (int y = std::max(0, cy - s); y <= std::min(img.h - 1, cy + s); ++y) {
        const int half = ((y - (cy - s)) * s) / (2 * s);
        for (int x = std::max(0, cx - half); x <= std::min(img.w - 1, cx + half); ++x)
            img.at(y, x) = fg;
    }
}

}  // namespace

LabeledDataset generate_shapes_dataset(std::uint64_t seed, int n) {
    if (n < kShapesClassCount)
        throw DomainError("generate_shapes_dataset: need at least one image per class");
    LabeledDataset ds;
    ds.class_count = kShapesClassCount;
    ds.split = "full";
    ds.images.reserve(static_cast<std::size_t>(n));
    ds.labels.reserve(static_cast<std::size_t>(n));
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        // First K images cover each class once so tiny datasets stay usable;
        // the rest draw labels uniformly.
        const int label = i < kShapesClassCount
                              ? i
                              : static_cast<int>(rng.uniform_int(0, kShapesClassCount - 1));
        Image img(kShapesSide, kShapesSide, 1);

        // Mixed population: most images have a strong figure/ground gap, a
        // quarter sit close to the class boundaries the attacks probe. The
        // weak-contrast images stay clean (low noise), like the easy-to-
        // compress hard-to-classify corner of natural photos.
        const bool weak_contrast = rng.uniform_int(0, 99) < 25;
        std::uint8_t bg, fg;
        if (weak_contrast) {
            bg = static_cast<std::uint8_t>(rng.uniform_int(70, 100));
            fg = static_cast<std::uint8_t>(bg + rng.uniform_int(32, 88));
        } else {
            bg = static_cast<std::uint8_t>(rng.uniform_int(20, 60));
            fg = static_cast<std::uint8_t>(rng.uniform_int(180, 235));
        }
        std::fill(img.px.begin(), img.px.end(), bg);

        const int cx = kShapesSide / 2 + static_cast<int>(rng.uniform_int(-4, 4));
        const int cy = kShapesSide / 2 + static_cast<int>(rng.uniform_int(-4, 4));
        const int s = static_cast<int>(rng.uniform_int(6, 11));
        switch (label) {
            case 0: draw_disk(img, cx, cy, s, fg); break;
            case 1: draw_square(img, cx, cy, s, fg); break;
            case 2: draw_cross(img, cx, cy, s, fg); break;
            default: draw_triangle(img, cx, cy, s, fg); break;
        }

        // Noise amplitude <= 16, zero-heavy: a third of the images are
        // noise-free, the rest draw the amplitude uniformly. Weak-contrast
        // images cap at amplitude 6.
        const int amp_draw = weak_contrast ? static_cast<int>(rng.uniform_int(-3, 6))
                                           : static_cast<int>(rng.uniform_int(-7, 16));
        const int amplitude = std::max(0, amp_draw);
        for (auto& p : img.px) {
            const int v = p + static_cast<int>(rng.uniform_int(0, amplitude));
            p = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
        }

        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    return ds;
}

std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& ds,
                                                        double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DomainError("split_dataset: fraction must be in (0,1)");
    const std::size_t n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(ds.size()));
    LabeledDataset train, test;
    train.class_count = test.class_count = ds.class_count;
    train.split = "train";
    test.split = "test";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto& dst = i < n_train ? train : test;
        dst.images.push_back(ds.images[i]);
        dst.labels.push_back(ds.labels[i]);
    }
    return {std::move(train), std::move(test)};
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b, std::size_t off,
                          const std::string& what) {
    if (off + 4 > b.size())
        throw FormatError("idx: truncated " + what, static_cast<std::int64_t>(off));
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto ib = read_file(images_path);
    const auto lb = read_file(labels_path);

    if (read_u32_be(ib, 0, "image magic") != 0x00000803u)
        throw FormatError("idx: bad image magic in '" + images_path + "'", 0);
    if (read_u32_be(lb, 0, "label magic") != 0x00000801u)
        throw FormatError("idx: bad label magic in '" + labels_path + "'", 0);

    const std::uint32_t n_images = read_u32_be(ib, 4, "image count");
    const std::uint32_t rows = read_u32_be(ib, 8, "row count");
    const std::uint32_t cols = read_u32_be(ib, 12, "column count");
    const std::uint32_t n_labels = read_u32_be(lb, 4, "label count");

    if (n_labels < n_images)
        throw FormatError("idx: label file has " + std::to_string(n_labels) +
                              " entries for " + std::to_string(n_images) + " images",
                          4);
    const std::size_t need = 16 + static_cast<std::size_t>(n_images) * rows * cols;
    if (ib.size() < need)
        throw FormatError("idx: truncated image data", static_cast<std::int64_t>(ib.size()));
    if (lb.size() < 8 + n_labels)
        throw FormatError("idx: truncated label data", static_cast<std::int64_t>(lb.size()));

    LabeledDataset ds;
    ds.split = "full";
    int max_label = 0;
    for (std::uint32_t i = 0; i < n_images; ++i) {
        Image img(static_cast<int>(rows), static_cast<int>(cols), 1);
        const std::size_t off = 16 + static_cast<std::size_t>(i) * rows * cols;
        std::copy(ib.begin() + static_cast<std::ptrdiff_t>(off),
                  ib.begin() + static_cast<std::ptrdiff_t>(off + rows * cols), img.px.begin());
        ds.images.push_back(std::move(img));
        const int label = lb[8 + i];
        ds.labels.push_back(label);
        max_label = std::max(max_label, label);
    }
    ds.class_count = max_label + 1;
    return ds;
}

}  // namespace rae::classifier
