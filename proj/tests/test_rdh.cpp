#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "rae/errors.hpp"
#include "rae/rdh.hpp"
#include "rae/rng.hpp"

using namespace rae;

namespace {

Image constant_image(int h, int w, std::uint8_t value) { return Image(h, w, 1, value); }

// Structured cover: flat base plus small uniform noise; the kind of
// histogram the shift backend thrives on.
Image noisy_cover(Rng& rng, int h, int w, int c, int amplitude) {
    Image img(h, w, c);
    const int base = static_cast<int>(rng.uniform_int(40, 200));
    for (auto& p : img.px)
        p = static_cast<std::uint8_t>(
            std::clamp(base + static_cast<int>(rng.uniform_int(0, amplitude)), 0, 255));
    return img;
}

Image uniform_random_cover(Rng& rng, int h, int w) {
    Image img(h, w, 1);
    for (auto& p : img.px) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

BitStream random_payload(Rng& rng, std::uint64_t n) {
    BitStream bs;
    for (std::uint64_t i = 0; i < n; ++i) bs.push_bit(static_cast<int>(rng.next_u64() & 1));
    return bs;
}

}  // namespace

TEST_CASE("hs hand trace: constant cover marks only peak and peak+1") {
    const Image cover = constant_image(16, 16, 100);
    Rng rng(1);
    const BitStream payload = random_payload(rng, 10);

    const auto [marked, report] = rdh::hs_embed(cover, payload, 4);
    CHECK(report.passes_used == 1);
    CHECK(report.max_pixel_change <= 1);
    // Zero bin resolves to 101 (upper neighbour on the equidistant tie), so
    // every marked pixel sits in {100, 101}, the LSB prefix included.
    for (std::uint8_t px : marked.px) CHECK((px == 100 || px == 101));

    const auto [extracted, restored] = rdh::hs_extract(marked);
    CHECK(extracted == payload);
    CHECK(restored == cover);
}

TEST_CASE("hs embeds an empty payload and still round trips") {
    const Image cover = constant_image(16, 16, 77);
    const auto [marked, report] = rdh::hs_embed(cover, BitStream{}, 4);
    CHECK(report.bits_embedded == 0);
    const auto [extracted, restored] = rdh::hs_extract(marked);
    CHECK(extracted.empty());
    CHECK(restored == cover);
}

TEST_CASE("hs capacity estimate is a working lower bound") {
    Rng rng(2);
    for (int trial = 0; trial < 25; ++trial) {
        const Image cover = noisy_cover(rng, 24, 24, 1, static_cast<int>(rng.uniform_int(0, 3)));
        const std::uint64_t est = rdh::capacity_estimate(cover, rdh::Backend::histogram_shift);
        CHECK(est <= cover.size());
        if (est == 0) continue;
        for (std::uint64_t len : {std::uint64_t{0}, est / 2, est}) {
            const BitStream payload = random_payload(rng, len);
            const auto [marked, report] = rdh::hs_embed(cover, payload, 8);
            const auto [extracted, restored] = rdh::hs_extract(marked);
            CHECK(extracted == payload);
            CHECK(restored == cover);
        }
    }
}

TEST_CASE("hs estimate on a uniform-random cover collapses to zero") {
    Rng rng(3);
    const Image cover = uniform_random_cover(rng, 32, 32);
    // Peak population is around N/256, far below the per-pass bookkeeping.
    CHECK(rdh::capacity_estimate(cover, rdh::Backend::histogram_shift) == 0);
}

TEST_CASE("hs: an 8x8 cover cannot pay the pass bookkeeping") {
    const Image cover = constant_image(8, 8, 100);
    CHECK(rdh::capacity_estimate(cover, rdh::Backend::histogram_shift) == 0);
    Rng rng(4);
    const BitStream payload = random_payload(rng, 10);
    CHECK_THROWS_AS(rdh::hs_embed(cover, payload, 8), CapacityError);
}

TEST_CASE("hs multi-pass embedding round trips") {
    const Image cover = constant_image(24, 24, 128);
    Rng rng(5);
    const BitStream payload = random_payload(rng, 800);
    const auto [marked, report] = rdh::hs_embed(cover, payload, 12);
    CHECK(report.passes_used >= 3);
    CHECK(report.max_pixel_change <= report.passes_used);
    const auto [extracted, restored] = rdh::hs_extract(marked);
    CHECK(extracted == payload);
    CHECK(restored == cover);
}

TEST_CASE("hs distortion stays within one step per pass") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const Image cover = noisy_cover(rng, 24, 24, 1, 2);
        const std::uint64_t est = rdh::capacity_estimate(cover, rdh::Backend::histogram_shift);
        if (est < 32) continue;
        const BitStream payload = random_payload(rng, est);
        const auto [marked, report] = rdh::hs_embed(cover, payload, 8);
        int max_change = 0;
        for (std::size_t i = 0; i < cover.px.size(); ++i)
            max_change = std::max(
                max_change, std::abs(static_cast<int>(marked.px[i]) - cover.px[i]));
        CHECK(max_change <= report.passes_used);
        CHECK(max_change == report.max_pixel_change);
    }
}

TEST_CASE("hs handles rgb covers channel by channel") {
    Rng rng(7);
    const Image cover = noisy_cover(rng, 16, 16, 3, 1);
    const std::uint64_t est = rdh::capacity_estimate(cover, rdh::Backend::histogram_shift);
    REQUIRE(est > 16);
    const BitStream payload = random_payload(rng, est);
    const auto [marked, report] = rdh::hs_embed(cover, payload, 8);
    const auto [extracted, restored] = rdh::hs_extract(marked);
    CHECK(extracted == payload);
    CHECK(restored == cover);
}

TEST_CASE("hs embed with a non-empty zero bin preserves overflow pixels") {
    // Dense histogram: every bin in a narrow band occupied, so the zero bin
    // must be non-empty somewhere and the overflow map kicks in.
    Rng rng(8);
    Image cover(24, 24, 1);
    for (auto& p : cover.px)
        p = static_cast<std::uint8_t>(100 + rng.uniform_int(0, 255) % 7);  // bins 100..106
    // Make bin 104 rare but present.
    for (std::size_t i = 0; i < cover.px.size(); ++i)
        if (cover.px[i] == 104 && i % 3 != 0)
            cover.px[i] = 100;
    const std::uint64_t est = rdh::capacity_estimate(cover, rdh::Backend::histogram_shift);
    if (est > 0) {
        const BitStream payload = random_payload(rng, std::min<std::uint64_t>(est, 64));
        const auto [marked, report] = rdh::hs_embed(cover, payload, 4);
        const auto [extracted, restored] = rdh::hs_extract(marked);
        CHECK(extracted == payload);
        CHECK(restored == cover);
    }
}

TEST_CASE("hs extraction rejects unmarked images without crashing") {
    Rng rng(9);
    int rejected = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Image junk = uniform_random_cover(rng, 16, 16);
        try {
            rdh::hs_extract(junk);
        } catch (const NotMarkedImageError&) {
            ++rejected;
        } catch (const FormatError&) {
            ++rejected;
        }
    }
    CHECK(rejected == 300);
}

TEST_CASE("hs randomized round trips are bit-exact") {
    Rng rng(10);
    int done = 0;
    while (done < 200) {
        const int amp = static_cast<int>(rng.uniform_int(0, 4));
        const Image cover = noisy_cover(rng, 24, 24, 1, amp);
        const std::uint64_t est = rdh::capacity_estimate(cover, rdh::Backend::histogram_shift);
        if (est == 0) continue;
        const BitStream payload = random_payload(rng, rng.uniform_int(0, static_cast<std::int64_t>(est)));
        const auto [marked, report] = rdh::hs_embed(cover, payload, 8);
        const auto [extracted, restored] = rdh::hs_extract(marked);
        REQUIRE(extracted == payload);
        REQUIRE(restored == cover);
        ++done;
    }
}

TEST_CASE("ce embeds into a compressible LSB plane") {
    Image cover(16, 16, 1);
    for (std::size_t i = 0; i < cover.px.size(); ++i)
        cover.px[i] = static_cast<std::uint8_t>(2 * (i % 100) + 40 - (i % 80));  // even-ish
    for (auto& p : cover.px) p = static_cast<std::uint8_t>(p & ~1);  // LSB plane all zero
    Rng rng(11);
    const BitStream payload = random_payload(rng, 100);
    const auto [marked, report] = rdh::ce_embed(cover, payload, 1);
    CHECK(report.passes_used == 1);
    CHECK(report.max_pixel_change <= 1);
    const auto [extracted, restored] = rdh::ce_extract(marked);
    CHECK(extracted == payload);
    CHECK(restored == cover);
}

TEST_CASE("ce rejects an incompressible host") {
    Rng rng(12);
    Image cover = uniform_random_cover(rng, 16, 16);
    CHECK(rdh::capacity_estimate(cover, rdh::Backend::compression_embedding,
                                 rdh::Options{8, 1}) == 0);
    const BitStream payload = random_payload(rng, 50);
    CHECK_THROWS_AS(rdh::ce_embed(cover, payload, 1), CapacityError);
}

TEST_CASE("ce adds planes until the payload fits") {
    // Plane 0 lightly salted (compressible but not free), plane 1 constant;
    // the payload is sized so one plane cannot hold it and two can.
    Rng rng(13);
    Image cover(16, 16, 1);
    for (auto& p : cover.px) {
        const int lsb = rng.uniform_int(0, 99) < 10 ? 1 : 0;
        p = static_cast<std::uint8_t>(0xA8 | lsb);
    }
    const std::uint64_t one_plane =
        rdh::capacity_estimate(cover, rdh::Backend::compression_embedding, rdh::Options{8, 1});
    const std::uint64_t two_planes =
        rdh::capacity_estimate(cover, rdh::Backend::compression_embedding, rdh::Options{8, 2});
    REQUIRE(two_planes > one_plane + 8);
    const BitStream payload = random_payload(rng, one_plane + 8);
    const auto [marked, report] = rdh::ce_embed(cover, payload, 3);
    CHECK(report.passes_used == 2);
    const auto [extracted, restored] = rdh::ce_extract(marked);
    CHECK(extracted == payload);
    CHECK(restored == cover);
}

TEST_CASE("ce randomized round trips are bit-exact") {
    Rng rng(14);
    int done = 0;
    while (done < 150) {
        Image cover(20, 20, 1);
        const int bias = static_cast<int>(rng.uniform_int(0, 10));
        for (auto& p : cover.px) {
            const int base = static_cast<int>(rng.uniform_int(60, 200)) & ~3;
            const int lsb = rng.uniform_int(0, 99) < bias ? 1 : 0;
            p = static_cast<std::uint8_t>(base | lsb);
        }
        const std::uint64_t est =
            rdh::capacity_estimate(cover, rdh::Backend::compression_embedding);
        if (est == 0) continue;
        const BitStream payload =
            random_payload(rng, rng.uniform_int(0, static_cast<std::int64_t>(est)));
        const auto [marked, report] = rdh::ce_embed(cover, payload, 3);
        const auto [extracted, restored] = rdh::ce_extract(marked);
        REQUIRE(extracted == payload);
        REQUIRE(restored == cover);
        ++done;
    }
}

TEST_CASE("ce extraction rejects unmarked images") {
    Rng rng(15);
    int rejected = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Image junk = uniform_random_cover(rng, 16, 16);
        try {
            rdh::ce_extract(junk);
        } catch (const NotMarkedImageError&) {
            ++rejected;
        } catch (const FormatError&) {
            ++rejected;
        }
    }
    CHECK(rejected == 200);
}

TEST_CASE("embed never mutates its input cover") {
    Rng rng(16);
    const Image cover = noisy_cover(rng, 24, 24, 1, 1);
    const Image snapshot = cover;
    const BitStream payload = random_payload(rng, 64);
    rdh::hs_embed(cover, payload, 8);
    CHECK(cover == snapshot);
    try {
        rdh::hs_embed(cover, random_payload(rng, 1 << 20), 8);
    } catch (const CapacityError&) {
    }
    CHECK(cover == snapshot);
}

TEST_CASE("backend names and ids round trip") {
    CHECK(rdh::backend_from_name("hs") == rdh::Backend::histogram_shift);
    CHECK(rdh::backend_from_name("ce") == rdh::Backend::compression_embedding);
    CHECK_THROWS_AS(rdh::backend_from_name("xx"), DomainError);
    CHECK(rdh::backend_from_id(rdh::backend_id(rdh::Backend::histogram_shift)) ==
          rdh::Backend::histogram_shift);
}
