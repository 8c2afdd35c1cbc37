// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/recorder.hpp"

#include "mmtwin/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace mmtwin;
namespace fs = std::filesystem;

namespace {

// Exhaustive nearest-neighbor scan, the oracle align_times is checked
// against.
std::vector<std::pair<std::size_t, std::size_t>> align_oracle(
    const std::vector<std::int64_t>& ref, const std::vector<std::int64_t>& target,
    std::int64_t tol)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < ref.size(); ++i)
    {
        std::size_t best = 0;
        std::int64_t best_dt = std::numeric_limits<std::int64_t>::max();
        for (std::size_t j = 0; j < target.size(); ++j)
        {
            const std::int64_t dt = std::abs(target[j] - ref[i]);
            if (dt < best_dt) // ties keep the earlier (lower j) sample
            {
                best_dt = dt;
                best = j;
            }
        }
        if (!target.empty() && best_dt <= tol)
            out.emplace_back(i, best);
    }
    return out;
}

std::vector<std::int64_t> random_sorted_times(SplitMix64& rng, std::size_t n,
                                              std::int64_t span)
{
    std::vector<std::int64_t> t;
    std::int64_t cur = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        cur += 1 + std::int64_t(rng.next() % std::uint64_t(span));
        t.push_back(cur);
    }
    return t;
}

BeamPairMeasurement measurement(int band, std::int64_t t, double rss)
{
    BeamPairMeasurement m;
    m.band_id = band;
    m.tx_entry_index = 1;
    m.rx_entry_index = 2;
    m.tx_mech = Orientation{0.0, 0.0};
    m.rx_mech = Orientation{-180.0, 0.0};
    m.rss_dbm_est = rss;
    m.cfo_hz_est = 123.456;
    m.phase_rad_est = -0.25;
    m.crc_ok = true;
    m.timestamp_ns = t;
    return m;
}

PointCloudFrame small_frame(std::int64_t t)
{
    PointCloudFrame f;
    f.t_ns = t;
    f.sensor_pos = {1.0, 2.0, 3.0};
    f.sensor_orient = Orientation{10.0, -5.0};
    f.ranges.assign(std::size_t(kLidarRows) * kLidarCols, 0.0);
    f.ranges[0] = 12.5;
    f.ranges[100] = 33.25;
    return f;
}

Dataset sample_dataset()
{
    Dataset d;
    d.config_text = "{\"seed\": 1}";
    d.scene_digest = digest_hex("{}");
    d.seed = 1;
    d.codebooks[28] = {{0, -45.0, 0.0}, {21, 45.0, 0.0}};
    d.stream_rates_hz = {{"lidar", 20.0}, {"gps", 1.0}, {"camera", 30.0}};
    d.link[28] = {measurement(28, 1000, -50.5), measurement(28, 2000, -48.25)};
    d.link[60] = {measurement(60, 1500, -60.0)};
    d.events = {{500, "idle", "sweeping", "28:start", "full_sweep"},
                {2500, "sweeping", "established", "28:sweep_complete", "none"}};
    d.lidar = {small_frame(0), small_frame(50000000)};
    d.gps = {{50.0, 6.0, 100.0, 0}};
    d.camera = {{0, 0, {0, 0, 0}, Orientation{}, 360.0},
                {1, 33333333, {0, 0, 0}, Orientation{}, 360.0}};
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void tree_equal(const fs::path& a, const fs::path& b)
{
    std::vector<fs::path> rel_a;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file())
            rel_a.push_back(fs::relative(e.path(), a));
    std::vector<fs::path> rel_b;
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file())
            rel_b.push_back(fs::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    REQUIRE(rel_a == rel_b);
    for (const auto& rel : rel_a)
        CHECK(slurp(a / rel) == slurp(b / rel));
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("mmtwin_test_" + name))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_SUITE("recorder")
{
    TEST_CASE("the common clock never moves backwards")
    {
        CommonClock clock;
        CHECK(clock.now_ns() == 0);
        clock.advance(5);
        clock.advance_to(10);
        CHECK(clock.now_ns() == 10);
        CHECK_THROWS_AS(clock.advance(-1), std::logic_error);
        CHECK_THROWS_AS(clock.advance_to(9), std::logic_error);
        clock.advance(0); // zero advance is allowed
        CHECK(clock.now_ns() == 10);
    }

    TEST_CASE("per-stream appends must be strictly increasing")
    {
        Recorder rec;
        rec.clock().advance_to(100);
        rec.stamp_lidar(small_frame(0));
        CHECK_THROWS_AS(rec.stamp_lidar(small_frame(0)), std::logic_error); // same t
        // other streams are independent of the lidar cursor
        rec.stamp_gps({50.0, 6.0, 0.0, 0});
        rec.stamp_measurement(measurement(28, 0, -50));
        rec.clock().advance_to(150);
        rec.stamp_lidar(small_frame(0));
        CHECK(rec.dataset().lidar.size() == 2);
        CHECK(rec.dataset().lidar[1].t_ns == 150);
    }

    TEST_CASE("alignment follows the spec examples")
    {
        // link at 1.000 s against a 50 ms lidar grid
        std::vector<std::int64_t> lidar;
        for (int k = 0; k < 40; ++k)
            lidar.push_back(k * 50000000LL);
        {
            const std::vector<std::int64_t> ref{1000000000};
            const auto assoc = align_times(ref, lidar, 25000000);
            REQUIRE(assoc.size() == 1);
            CHECK(lidar[assoc[0].second] == 1000000000);
        }
        // link at 1.024 s, tolerance 25 ms: 1.000 (24 ms) beats 1.050 (26 ms)
        {
            const std::vector<std::int64_t> ref{1024000000};
            const auto assoc = align_times(ref, lidar, 25000000);
            REQUIRE(assoc.size() == 1);
            CHECK(lidar[assoc[0].second] == 1000000000);
        }
        // gps on a 1 s grid, tolerance 0.4 s, link at 1.5 s: both neighbors
        // 0.5 s away, association omitted
        {
            const std::vector<std::int64_t> gps{0, 1000000000, 2000000000};
            const std::vector<std::int64_t> ref{1500000000};
            CHECK(align_times(ref, gps, 400000000).empty());
        }
        // exact midpoint ties break toward the earlier sample
        {
            const std::vector<std::int64_t> target{100, 300};
            const std::vector<std::int64_t> ref{200};
            const auto assoc = align_times(ref, target, 1000);
            REQUIRE(assoc.size() == 1);
            CHECK(assoc[0].second == 0);
        }
    }

    TEST_CASE("alignment matches the exhaustive oracle on random timelines")
    {
        SplitMix64 rng(101);
        for (int trial = 0; trial < 100; ++trial)
        {
            const auto ref = random_sorted_times(rng, 1 + rng.next() % 40, 1000);
            const auto target = random_sorted_times(rng, 1 + rng.next() % 40, 1200);
            const auto tol = std::int64_t(rng.next() % 2000);
            CHECK(align_times(ref, target, tol) == align_oracle(ref, target, tol));
        }
    }

    TEST_CASE("shrinking the tolerance never adds associations")
    {
        SplitMix64 rng(111);
        for (int trial = 0; trial < 50; ++trial)
        {
            const auto ref = random_sorted_times(rng, 30, 500);
            const auto target = random_sorted_times(rng, 30, 700);
            const auto wide = align_times(ref, target, 800);
            const auto narrow = align_times(ref, target, 300);
            CHECK(narrow.size() <= wide.size());
            for (const auto& pair : narrow)
                CHECK(std::find(wide.begin(), wide.end(), pair) != wide.end());
        }
    }

    TEST_CASE("align by stream name and unknown streams")
    {
        const Dataset d = sample_dataset();
        const auto assoc = align(d, "link_28", "lidar", 60000000);
        CHECK(assoc.size() == 2);
        CHECK_THROWS_AS((void)align(d, "link_28", "imu", 1000), std::out_of_range);
        Dataset empty;
        CHECK_THROWS_AS((void)align(empty, "gps", "lidar", 1000), std::domain_error);
    }

    TEST_CASE("export writes a self-consistent tree and is idempotent")
    {
        const Dataset d = sample_dataset();
        TempDir a("export_a"), b("export_b");
        const auto ma = export_dataset(d, a.path);
        const auto mb = export_dataset(d, b.path);
        CHECK(ma.digest() == mb.digest());
        tree_equal(a.path, b.path);

        CHECK(ma.streams.at("link_28").count == 2);
        CHECK(ma.streams.at("link_60").count == 1);
        CHECK(ma.streams.at("events").count == 2);
        CHECK(ma.streams.at("lidar").count == 2);
        CHECK(ma.streams.at("gps").count == 1);
        CHECK(ma.streams.at("camera").count == 2);
        CHECK(ma.streams.at("lidar").rate_hz == 20.0);
        CHECK(*ma.streams.at("link_28").first_t_ns == 1000);
        CHECK(*ma.streams.at("link_28").last_t_ns == 2000);
        CHECK(fs::file_size(a.path / "lidar/frame_0.bin") == 128 * 2048 * 4);
    }

    TEST_CASE("an empty campaign still lists all six streams")
    {
        Dataset d;
        d.config_text = "{}";
        d.scene_digest = digest_hex("");
        TempDir dir("export_empty");
        const auto m = export_dataset(d, dir.path);
        REQUIRE(m.streams.size() == 6);
        for (const auto& name : kStreamNames)
            CHECK(m.streams.at(std::string(name)).count == 0);
    }

    TEST_CASE("export, load, re-export round trip is manifest-identical")
    {
        const Dataset d = sample_dataset();
        TempDir a("rt_a"), b("rt_b");
        (void)export_dataset(d, a.path);
        const Dataset loaded = load_dataset(a.path);
        CHECK(loaded.link.at(28).size() == 2);
        CHECK(loaded.link.at(28)[0].rss_dbm_est == -50.5);
        CHECK(loaded.lidar.size() == 2);
        CHECK(loaded.lidar[0].ranges[100] == 33.25);
        CHECK(loaded.codebooks.at(28).size() == 2);
        (void)export_dataset(loaded, b.path);
        CHECK(slurp(a.path / "manifest.json") == slurp(b.path / "manifest.json"));
        tree_equal(a.path, b.path);
    }

    TEST_CASE("global stream merge is non-decreasing in time")
    {
        const Dataset d = sample_dataset();
        std::vector<std::int64_t> merged;
        for (const auto& name : kStreamNames)
        {
            const auto t = d.stream_times(name);
            merged.insert(merged.end(), t.begin(), t.end());
        }
        std::sort(merged.begin(), merged.end());
        for (std::size_t i = 1; i < merged.size(); ++i)
            CHECK(merged[i] >= merged[i - 1]);
    }

    TEST_CASE("manifest digests change when the data changes")
    {
        Dataset d = sample_dataset();
        TempDir a("digest_a"), b("digest_b");
        const auto ma = export_dataset(d, a.path);
        d.link[28].push_back(measurement(28, 3000, -47.0));
        const auto mb = export_dataset(d, b.path);
        CHECK(ma.digest() != mb.digest());
    }
}
