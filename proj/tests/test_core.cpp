#include <doctest.h>

#include "appear/errors.hpp"
#include "appear/montage.hpp"
#include "appear/recording.hpp"

#include <cmath>
#include <random>

using namespace appear;

namespace {

Recording ramp_recording(Index channels, Index samples)
{
    Recording rec;
    rec.fs = 250.0;
    rec.data.resize(channels, samples);
    for (Index c = 0; c < channels; ++c)
        for (Index i = 0; i < samples; ++i)
            rec.data(c, i) = 1000.0 * static_cast<double>(c) + static_cast<double>(i);
    std::vector<std::string> labels(default_scalp_labels().begin(),
                                    default_scalp_labels().begin() + channels);
    rec.channels = make_channels(labels);
    return rec;
}

} // namespace

TEST_CASE("excising nothing is the identity")
{
    auto rec = ramp_recording(3, 100);
    auto [cut, map] = excise_intervals(rec, IntervalSet{});
    CHECK(cut.data == rec.data);
    CHECK(map == IndexMap::identity(100));
    for (std::int64_t k = 0; k < 100; ++k)
        CHECK(map.to_full(k) == k);
    CHECK(map_short_to_full(map, 5) == 5);
}

TEST_CASE("prefix cut shifts the map")
{
    auto rec = ramp_recording(2, 100);
    auto [cut, map] = excise_intervals(rec, IntervalSet({{0, 10}}));
    CHECK(cut.sample_count() == 90);
    CHECK(map.to_full(0) == 10);
    CHECK(cut.data(1, 0) == rec.data(1, 10));
}

TEST_CASE("interior cut maps by walking the kept samples")
{
    auto rec = ramp_recording(1, 100);
    auto [cut, map] = excise_intervals(rec, IntervalSet({{50, 60}}));
    // walk the full index space, skipping removed samples
    std::int64_t k = 0;
    std::int64_t expected = -1;
    for (std::int64_t m = 0; m < 100; ++m) {
        if (m >= 50 && m < 60)
            continue;
        if (k == 55)
            expected = m;
        ++k;
    }
    CHECK(expected == 65);
    CHECK(map.to_full(55) == expected);
    CHECK_THROWS_AS(map.to_full(90), BoundsError);
    CHECK_THROWS_AS(map.to_full(-1), BoundsError);
}

TEST_CASE("random excisions agree with direct indexing")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Index m = 200 + static_cast<Index>(rng() % 300);
        auto rec = ramp_recording(4, m);
        std::vector<Interval> raw;
        std::int64_t pos = 0;
        while (true) {
            pos += 1 + static_cast<std::int64_t>(rng() % 40);
            const std::int64_t len = 1 + static_cast<std::int64_t>(rng() % 30);
            if (pos + len >= m)
                break;
            raw.push_back({pos, pos + len});
            pos += len;
        }
        IntervalSet bad(raw);
        auto [cut, map] = excise_intervals(rec, bad);
        CHECK(cut.sample_count() + bad.total_length() == m);
        std::int64_t prev = -1;
        for (std::int64_t k = 0; k < cut.sample_count(); ++k) {
            const auto full = map.to_full(k);
            CHECK(full > prev);
            CHECK_FALSE(bad.contains(full));
            prev = full;
            for (Index c = 0; c < 4; ++c)
                REQUIRE(cut.data(c, k) == rec.data(c, full));
        }
    }
}

TEST_CASE("excision errors")
{
    auto rec = ramp_recording(1, 50);
    CHECK_THROWS_AS(excise_intervals(rec, IntervalSet({{40, 60}})), BoundsError);
    CHECK_THROWS_AS(excise_intervals(rec, IntervalSet({{10, 20}, {15, 25}})), BoundsError);
    CHECK_THROWS_AS(excise_intervals(rec, IntervalSet({{0, 50}})), EmptyDataError);
}

TEST_CASE("markers are remapped or dropped")
{
    auto rec = ramp_recording(1, 100);
    rec.markers = {{"A", 5}, {"B", 55}, {"C", 70}};
    auto [cut, map] = excise_intervals(rec, IntervalSet({{50, 60}}));
    REQUIRE(cut.markers.size() == 2);
    CHECK(cut.markers[0].sample == 5);
    CHECK(cut.markers[1].label == "C");
    CHECK(cut.markers[1].sample == 60);
    CHECK(map.to_full(cut.markers[1].sample) == 70);
}

TEST_CASE("interval merging clips and joins")
{
    auto set = IntervalSet::merged({{30, 40}, {-5, 3}, {35, 50}, {50, 55}, {90, 120}}, 100);
    REQUIRE(set.size() == 3);
    CHECK(set.intervals()[0] == Interval{0, 3});
    CHECK(set.intervals()[1] == Interval{30, 55});
    CHECK(set.intervals()[2] == Interval{90, 100});
    CHECK(set.contains(30));
    CHECK_FALSE(set.contains(55));
    CHECK(set.total_length() == 38);
}

TEST_CASE("recording validation")
{
    auto rec = ramp_recording(3, 20);
    CHECK_NOTHROW(rec.validate());
    rec.markers = {{"x", 25}};
    CHECK_THROWS_AS(rec.validate(), ArgumentError);
    rec.markers = {{"x", 10}, {"y", 3}};
    CHECK_THROWS_AS(rec.validate(), ArgumentError);
    rec.markers.clear();
    rec.channels[1].label = rec.channels[0].label;
    CHECK_THROWS_AS(rec.validate(), ArgumentError);
    rec = ramp_recording(3, 20);
    rec.fs = 0;
    CHECK_THROWS_AS(rec.validate(), ArgumentError);
}

TEST_CASE("montage positions lie on the unit disc")
{
    for (const auto& label : default_scalp_labels()) {
        auto p = standard_position(label);
        REQUIRE(p.has_value());
        CHECK(std::hypot(p->x, p->y) <= 1.0 + 1e-12);
    }
    auto fp1 = *standard_position("Fp1");
    auto fp2 = *standard_position("Fp2");
    CHECK(fp1.x < 0);
    CHECK(fp1.y > 0.9);
    CHECK(fp2.x == doctest::Approx(-fp1.x));
    auto cz = *standard_position("Cz");
    CHECK(std::hypot(cz.x, cz.y) < 1e-12);
    CHECK(standard_position("cz").has_value());
    CHECK_FALSE(standard_position("Xq7").has_value());
    CHECK_THROWS_AS(make_channels({"Fz", "Bogus"}), FormatError);
    auto chans = make_channels({"Fz", "ECG"});
    CHECK(chans[1].is_ecg);
}
