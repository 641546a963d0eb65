#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "fediq/fileio.hpp"
#include "fediq/iqds.hpp"

using namespace fediq;

namespace {

std::string tmp_path(const char* name) {
    std::filesystem::create_directories("tmp_unit");
    return std::string("tmp_unit/") + name;
}

std::vector<IqFrame> sample_frames(bool with_meta) {
    std::vector<IqFrame> frames;
    for (int i = 0; i < 3; ++i) {
        IqFrame fr;
        fr.label = i == 2 ? -1 : i;
        for (int t = 0; t < 5; ++t)
            fr.samples.emplace_back(0.125 * (i + 1) * t, -0.5 * t + 0.25 * i);
        if (with_meta) {
            fr.has_meta = true;
            fr.meta_gain = 1.5 + i;
            fr.meta_phase = 0.01 * i;
            fr.meta_cfo = 0.2 + 0.1 * i;
            fr.meta_snr_db = -3.0 + i;
        }
        frames.push_back(std::move(fr));
    }
    return frames;
}

}  // namespace

TEST_CASE("iqds: round-trip without metadata is exact at f32 precision") {
    const std::string path = tmp_path("roundtrip.iqds");
    const auto frames = sample_frames(false);
    write_iqds(path, frames, false);
    const auto back = read_iqds(path);
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(back[i].label == frames[i].label);
        CHECK_FALSE(back[i].has_meta);
        REQUIRE(back[i].samples.size() == frames[i].samples.size());
        for (std::size_t t = 0; t < frames[i].samples.size(); ++t) {
            // The container stores f32; everything here is f32-representable.
            CHECK(back[i].samples[t].real() ==
                  static_cast<double>(static_cast<float>(frames[i].samples[t].real())));
            CHECK(back[i].samples[t].imag() ==
                  static_cast<double>(static_cast<float>(frames[i].samples[t].imag())));
        }
    }
}

TEST_CASE("iqds: round-trip with metadata preserves the f64 channel block") {
    const std::string path = tmp_path("roundtrip_meta.iqds");
    const auto frames = sample_frames(true);
    write_iqds(path, frames, true);
    const auto back = read_iqds(path);
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(back[i].has_meta);
        CHECK(back[i].meta_gain == frames[i].meta_gain);
        CHECK(back[i].meta_phase == frames[i].meta_phase);
        CHECK(back[i].meta_cfo == frames[i].meta_cfo);
        CHECK(back[i].meta_snr_db == frames[i].meta_snr_db);
    }
    // Rewriting what was read is byte-identical.
    const std::string path2 = tmp_path("roundtrip_meta2.iqds");
    write_iqds(path2, back, true);
    CHECK(read_file_bytes(path) == read_file_bytes(path2));
}

TEST_CASE("iqds: write rejects malformed inputs") {
    const std::string path = tmp_path("reject.iqds");
    CHECK_THROWS_AS(write_iqds(path, {}, false), data_error);
    auto frames = sample_frames(false);
    frames[1].samples.pop_back();
    CHECK_THROWS_AS(write_iqds(path, frames, false), data_error);  // mixed lengths
    frames = sample_frames(false);
    frames[0].label = 255;
    CHECK_THROWS_AS(write_iqds(path, frames, false), data_error);  // label out of range
    frames = sample_frames(false);
    CHECK_THROWS_AS(write_iqds(path, frames, true), data_error);  // meta requested but absent
}

TEST_CASE("iqds: truncated and corrupt files raise data errors with an offset") {
    const std::string path = tmp_path("corrupt.iqds");
    write_iqds(path, sample_frames(true), true);
    auto bytes = read_file_bytes(path);

    auto rewrite = [&](const std::vector<unsigned char>& b) {
        const std::string p = tmp_path("corrupt_cut.iqds");
        write_file_bytes(p, b);
        return p;
    };
    // Truncate in the middle of a frame record.
    std::vector<unsigned char> cut(bytes.begin(), bytes.begin() + 20);
    try {
        read_iqds(rewrite(cut));
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }
    // Bad magic.
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(read_iqds(rewrite(bad)), data_error);
    // Trailing garbage.
    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(read_iqds(rewrite(longer)), data_error);
    // Unlabeled frames come back as -1.
    const auto back = read_iqds(path);
    CHECK(back[2].label == -1);
}
