#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rae/cli.hpp"
#include "rae/dataset.hpp"
#include "rae/image.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / "rae_cli_test";
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(const std::vector<std::string>& args) { return rae::cli::run(args); }

}  // namespace

TEST_CASE("cli end to end: train, classify, attack, create, recover, eval") {
    TempDir tmp;
    const std::string model = tmp.path("model.radm");

    REQUIRE(run({"train", "--data", "synthetic", "--n", "800", "--epochs", "10", "--seed", "9",
                 "--out", model}) == 0);
    REQUIRE(fs::exists(model));

    // A test image the CLI can chew on.
    const auto ds = rae::classifier::generate_shapes_dataset(9, 800);
    const std::string img_path = tmp.path("input.pgm");
    rae::write_pnm(ds.images[799], img_path);

    CHECK(run({"classify", "--model", model, "--in", img_path}) == 0);

    SUBCASE("identity attack exits 3 and writes nothing") {
        const std::string out = tmp.path("adv0.pgm");
        CHECK(run({"attack", "--model", model, "--in", img_path, "--method", "fgsm", "--eps",
                   "0", "--out", out}) == 3);
        CHECK_FALSE(fs::exists(out));
    }

    SUBCASE("strong fgsm attack writes an image") {
        const std::string out = tmp.path("adv.pgm");
        const std::string report = tmp.path("adv.json");
        const int code = run({"attack", "--model", model, "--in", img_path, "--method", "fgsm",
                              "--eps", "48", "--out", out, "--report", report});
        if (code == 0) {
            CHECK(fs::exists(out));
            const auto j = nlohmann::json::parse(file_bytes(report));
            CHECK(j["success"] == true);
        } else {
            CHECK(code == 3);
        }
    }

    SUBCASE("create then recover reproduces the input file byte for byte") {
        const std::string rae_path = tmp.path("rae.pgm");
        const std::string orig_out = tmp.path("original.pgm");
        const std::string adv_out = tmp.path("adv_rec.pgm");

        // Not every cover carries the payload; scan images until one embeds.
        bool created = false;
        std::string used_input;
        for (int i = 0; i < 60 && !created; ++i) {
            const std::string candidate = tmp.path("cand.pgm");
            rae::write_pnm(ds.images[static_cast<std::size_t>(700 + i)], candidate);
            const int code =
                run({"create", "--model", model, "--in", candidate, "--method", "fgsm",
                     "--eps", "8", "--backend", "hs", "--max-passes", "16", "--out", rae_path});
            if (code == 0) {
                created = true;
                used_input = candidate;
            } else {
                CHECK((code == 2 || code == 3));
            }
        }
        REQUIRE(created);
        REQUIRE(run({"recover", "--in", rae_path, "--backend", "hs", "--out-original",
                     orig_out, "--out-adv", adv_out}) == 0);
        CHECK(file_bytes(orig_out) == file_bytes(used_input));
    }

    SUBCASE("eval emits schema-valid json") {
        const std::string out = tmp.path("eval.json");
        REQUIRE(run({"eval", "--model", model, "--data", "synthetic", "--n", "800", "--seed",
                     "9", "--methods", "fgsm,deepfool", "--eps-list", "16", "--backend", "hs",
                     "--limit", "12", "--out", out}) == 0);
        const auto j = nlohmann::json::parse(file_bytes(out));
        CHECK(j["report_version"] == 1);
        CHECK(j["rows"].size() == 2);
        for (const auto& row : j["rows"]) {
            CHECK(row.contains("all"));
            CHECK(row.contains("initially_correct"));
        }
    }
}

TEST_CASE("cli maps bad usage and bad files to the right exit codes") {
    TempDir tmp;
    CHECK(run({"attack", "--bogus-flag"}) == 5);
    CHECK(run({"nonsense-command"}) == 5);
    CHECK(run({}) == 5);
    CHECK(run({"classify", "--model", tmp.path("missing.radm"), "--in",
               tmp.path("missing.pgm")}) == 4);

    // A text file is not a model.
    const std::string fake = tmp.path("fake.radm");
    {
        std::ofstream out(fake);
        out << "not a model";
    }
    CHECK(run({"classify", "--model", fake, "--in", tmp.path("missing.pgm")}) == 4);
}
