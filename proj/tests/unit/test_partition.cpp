#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "fediq/partition.hpp"

using namespace fediq;

namespace {

IqFrame frame_of(int label) {
    IqFrame fr;
    fr.label = label;
    fr.samples = {cplx(1.0, 0.0), cplx(0.0, 1.0)};
    return fr;
}

std::vector<std::vector<IqFrame>> pools(const std::vector<std::size_t>& per_class) {
    std::vector<std::vector<IqFrame>> out(per_class.size());
    for (std::size_t c = 0; c < per_class.size(); ++c)
        for (std::size_t i = 0; i < per_class[c]; ++i)
            out[c].push_back(frame_of(static_cast<int>(c)));
    return out;
}

}  // namespace

TEST_CASE("partition: the built-in count table") {
    const CountTable t = default_count_table();
    REQUIRE(t.size() == 4);
    const std::size_t want[4][4] = {{6000, 6000, 1000, 1000},
                                    {1000, 6000, 6000, 1000},
                                    {1000, 1000, 6000, 6000},
                                    {6000, 1000, 1000, 6000}};
    for (int c = 0; c < 4; ++c) {
        REQUIRE(t[static_cast<std::size_t>(c)].size() == 4);
        for (int k = 0; k < 4; ++k)
            CHECK(t[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] == want[c][k]);
    }
    // Every client and every class holds 14000 frames.
    for (int c = 0; c < 4; ++c) {
        std::size_t row = 0, col = 0;
        for (int k = 0; k < 4; ++k) {
            row += t[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
            col += t[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
        }
        CHECK(row == 14000);
        CHECK(col == 14000);
    }
}

TEST_CASE("partition: fixed split consumes frames in order and matches the table") {
    const CountTable table = {{3, 1}, {2, 4}};
    const auto split = fixed_partition(pools({5, 5}), table);
    REQUIRE(split.size() == 2);
    CHECK(split[0].size() == 4);
    CHECK(split[1].size() == 6);
    const auto h0 = class_histogram(split[0]);
    const auto h1 = class_histogram(split[1]);
    CHECK(h0[0] == 3);
    CHECK(h0[1] == 1);
    CHECK(h1[0] == 2);
    CHECK(h1[1] == 4);
    // Demanding more frames than a class has names the class.
    try {
        fixed_partition(pools({4, 5}), table);
        FAIL("expected data_error");
    } catch (const data_error& e) {
        CHECK(std::string(e.what()).find("class 0") != std::string::npos);
    }
}

TEST_CASE("partition: integerization floors and gives the remainder to the largest fractions") {
    // All fractions tie; remainder goes to the lower client ids.
    const auto even = integerize_fractions({0.25, 0.25, 0.25, 0.25}, 10);
    CHECK(even == std::vector<std::size_t>{3, 3, 2, 2});
    const auto skew = integerize_fractions({0.6, 0.25, 0.15}, 10);
    CHECK(skew == std::vector<std::size_t>{6, 3, 1});  // floors 6,2,1; +1 to 0.5 frac
    // The counts always sum to the requested total.
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> f(5);
        double s = 0.0;
        for (double& v : f) {
            v = rng.uniform_pos();
            s += v;
        }
        for (double& v : f) v /= s;
        const auto counts = integerize_fractions(f, 137);
        CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 137);
    }
}

TEST_CASE("partition: dirichlet fractions sum to one and concentrate for large alpha") {
    DirichletSpec spec;
    spec.alpha = 1e6;
    spec.num_clients = 4;
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = dirichlet_fractions(spec, rng);
        REQUIRE(f.size() == 4);
        double total = 0.0;
        for (double v : f) {
            total += v;
            CHECK(std::abs(v - 0.25) < 0.01);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    spec.alpha = 0.0;
    CHECK_THROWS_AS(spec.validate(), data_error);
}

TEST_CASE("partition: dirichlet count table preserves per-class totals") {
    DirichletSpec spec;
    spec.alpha = 0.3;
    spec.num_clients = 5;
    Rng rng(6);
    const std::vector<std::size_t> totals = {100, 57, 9};
    const CountTable t = dirichlet_count_table(totals, spec, rng);
    REQUIRE(t.size() == 5);
    for (std::size_t k = 0; k < totals.size(); ++k) {
        std::size_t got = 0;
        for (std::size_t c = 0; c < t.size(); ++c) got += t[c][k];
        CHECK(got == totals[k]);
    }
    // Same seed, same table; the draw is deterministic.
    Rng rng2(6);
    CHECK(dirichlet_count_table(totals, spec, rng2) == t);
}

TEST_CASE("partition: dirichlet split materializes the drawn table") {
    DirichletSpec spec;
    spec.alpha = 1.0;
    spec.num_clients = 3;
    Rng rng_a(7), rng_b(7);
    const auto split = dirichlet_partition(pools({30, 12}), spec, rng_a);
    const CountTable t = dirichlet_count_table({30, 12}, spec, rng_b);
    REQUIRE(split.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
        const auto h = class_histogram(split[c]);
        CHECK((h.size() > 0 ? h[0] : 0) == t[c][0]);
        CHECK((h.size() > 1 ? h[1] : 0) == t[c][1]);
    }
}

TEST_CASE("partition: test split draws one-tenth of the labeled counts per class") {
    std::vector<IqFrame> labeled;
    for (int i = 0; i < 20; ++i) labeled.push_back(frame_of(0));
    for (int i = 0; i < 10; ++i) labeled.push_back(frame_of(1));
    std::vector<std::pair<int, std::size_t>> calls;
    const TestSplitResult r = make_test_split(labeled, [&](int cls, std::size_t ordinal) {
        calls.emplace_back(cls, ordinal);
        return frame_of(cls);
    });
    CHECK(r.train.size() == labeled.size());
    const auto h = class_histogram(r.test);
    CHECK(h[0] == 2);
    CHECK(h[1] == 1);
    REQUIRE(calls.size() == 3);
    CHECK(calls[0] == std::make_pair(0, std::size_t{0}));
    CHECK(calls[1] == std::make_pair(0, std::size_t{1}));
    CHECK(calls[2] == std::make_pair(1, std::size_t{0}));
}

TEST_CASE("partition: class histogram counts labels and rejects unlabeled pools") {
    const std::vector<IqFrame> pool = {frame_of(2), frame_of(2), frame_of(0)};
    const auto h = class_histogram(pool);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == 1);
    CHECK(h[1] == 0);
    CHECK(h[2] == 2);
    const std::vector<IqFrame> mixed = {frame_of(0), frame_of(-1)};
    CHECK_THROWS_AS(class_histogram(mixed), data_error);
}
