#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tdmi/checkpoint.hpp"
#include "tdmi/params.hpp"
#include "tdmi/rng.hpp"

using namespace tdmi;

TEST_CASE("archive round trip preserves float32 payloads bit-for-bit") {
    const auto dir = std::filesystem::temp_directory_path() / "tdmi_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "weights.bin").string();

    Rng rng(123);
    Archive a;
    ArchiveEntry w;
    w.shape = {2, 3, 3, 3};
    for (int i = 0; i < 54; ++i) w.data.push_back(static_cast<float>(rng.gaussian()));
    a.emplace("backbone.stage1.down1.w", w);
    ArchiveEntry b;
    b.shape = {2};
    b.data = {0.5f, -0.25f};
    a.emplace("backbone.stage1.down1.b", b);

    write_archive(path, a);
    const Archive back = read_archive(path);
    REQUIRE(back.size() == 2);
    for (const auto& [name, entry] : a) {
        const auto& r = back.at(name);
        CHECK(r.shape == entry.shape);
        REQUIRE(r.data.size() == entry.data.size());
        for (std::size_t i = 0; i < entry.data.size(); ++i) CHECK(r.data[i] == entry.data[i]);
    }

    // manifest lists names and shapes
    std::ifstream mf(path + ".manifest");
    std::string line;
    std::getline(mf, line);
    CHECK(line == "backbone.stage1.down1.b 2");
    std::getline(mf, line);
    CHECK(line == "backbone.stage1.down1.w 2x3x3x3");

    std::filesystem::remove_all(dir);
}

TEST_CASE("param store: registration, archive, strict load") {
    ParamStore<float> params;
    Rng rng(7);
    auto w = params.add("m.w", init_conv_weight<float>(rng, 2, 1, 3, 3));
    params.add("m.b", Tensor<float>(Shape{2}));
    CHECK_THROWS_AS(params.add("m.w", Tensor<float>(Shape{1})), ContractError);
    CHECK(params.total_elements() == 18 + 2);

    Archive a = params.to_archive();
    ParamStore<float> other;
    other.add("m.w", Tensor<float>(Shape{2, 1, 3, 3}));
    other.add("m.b", Tensor<float>(Shape{2}));
    other.load_archive(a);
    for (std::size_t i = 0; i < w.values().size(); ++i)
        CHECK(other.at("m.w").values()[i] == w.values()[i]);

    ParamStore<float> missing;
    missing.add("m.w", Tensor<float>(Shape{2, 1, 3, 3}));
    missing.add("extra", Tensor<float>(Shape{3}));
    CHECK_THROWS_AS(missing.load_archive(a), ContractError);
}

TEST_CASE("fan-in initialization stays within bounds, biases zero") {
    Rng rng(99);
    auto w = init_conv_weight<double>(rng, 4, 8, 3, 3);
    const double bound = 1.0 / std::sqrt(8.0 * 9.0);
    for (double v : w.values()) {
        CHECK(v <= bound);
        CHECK(v >= -bound);
    }
}
