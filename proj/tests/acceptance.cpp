// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
//
// End-to-end acceptance suite. Each criterion prints exactly one PASS/FAIL
// line; the exit code is the number of failed criteria.
#include "mmtwin/campaign.hpp"

#include "../tests/sim_fixtures.hpp"
#include "mmtwin/rng.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace mmtwin;
using namespace mmtwin::testing;
namespace fs = std::filesystem;

namespace {

int g_failed = 0;

void report(int n, const std::string& what, bool pass, const std::string& detail = "")
{
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", n, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass)
        ++g_failed;
}

template <typename Fn> void run_criterion(int n, const std::string& what, Fn&& fn)
{
    try
    {
        std::string detail;
        const bool ok = fn(detail);
        report(n, what, ok, detail);
    }
    catch (const std::exception& e)
    {
        report(n, what, false, std::string("exception: ") + e.what());
    }
}

double ms_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---- scenario assets -------------------------------------------------------

const char* kEmptyScene = R"({
  "origin_geodetic": {"lat_deg": 50.78, "lon_deg": 6.06, "alt_m": 215.0},
  "boxes": [], "reflectors": []
})";

const char* kBlockerScene = R"({
  "origin_geodetic": {"lat_deg": 50.78, "lon_deg": 6.06, "alt_m": 215.0},
  "reflectors": [
    {"center_m": [5, 3, 1], "normal": [0, -1, 0], "width_m": 20, "height_m": 4, "loss_db": 6}
  ],
  "boxes": [
    {"center_m": [5, -4, 1], "size_m": [0.5, 2, 2],
     "trajectory": [{"t_s": 1.0, "center_m": [5, -4, 1]},
                    {"t_s": 2.0, "center_m": [5, 1.5, 1]}]}
  ]
})";

std::string campaign_config(const std::string& scene_file, double duration_s,
                            double tx_power_dbm, bool lidar, const std::string& extra_band = "",
                            const std::string& rx_pos = "[10, 0, 1]")
{
    std::ostringstream ss;
    ss << "{\n\"seed\": 7,\n\"duration_s\": " << duration_s
       << ",\n\"hardware_profile\": \"X410\",\n\"scene\": \"" << scene_file
       << "\",\n\"bands\": [\n  {\"carrier_hz\": 2.8e10, \"bandwidth_hz\": 1.0e7, "
          "\"tx_power_dbm\": "
       << tx_power_dbm << "}" << extra_band
       << "\n],\n\"protocol\": {\"mech_step_deg\": 180.0, \"slew_deg_per_s\": 720.0, "
          "\"settle_ms\": 10.0, \"track_interval_ms\": 10.0},\n\"sensors\": {\"lidar\": "
          "{\"enabled\": "
       << (lidar ? "true" : "false") << "}},\n\"tx_trajectory\": [{\"t_s\": 0, \"pos_m\": "
       << "[0, 0, 1]}],\n\"rx_trajectory\": [{\"t_s\": 0, \"pos_m\": " << rx_pos << "}]\n}\n";
    return ss.str();
}

CampaignConfig load_or_throw(const fs::path& path)
{
    auto res = load_config(path);
    if (!res.ok())
    {
        std::string msg = "config rejected:";
        for (const auto& e : res.errors)
            msg += " " + e;
        throw std::runtime_error(msg);
    }
    return std::move(*res.config);
}

// ---- criteria --------------------------------------------------------------

bool criterion_codebook(std::string& detail)
{
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    for (const double carrier : {28e9, 60e9})
    {
        Band band;
        band.carrier_hz = carrier;
        const ArrayGeometry geom = ArrayGeometry::for_band(band);
        const auto book = generate_codebook(geom);
        ok &= book.size() == 22;
        ok &= book.front().az_deg == -45.0 && book.back().az_deg == 45.0;
        for (const auto& e : book)
        {
            double best_az = -90.0, best_gain = -1e9;
            for (double az = -90.0; az <= 90.0; az += 0.5)
            {
                const double g = array_gain_dbi(geom, e.weights, az, 0.0);
                if (g > best_gain)
                {
                    best_gain = g;
                    best_az = az;
                }
            }
            ok &= std::abs(best_az - e.az_deg) <= 0.5;
        }
    }
    const double elapsed = ms_since(t0);
    detail = "runtime " + std::to_string(elapsed) + " ms";
    return ok && elapsed < 1000.0;
}

bool criterion_link_budget(std::string& detail)
{
    // Friis spot values, by direct formula
    bool ok = std::abs(friis_loss_db(28e9, 1.0) - 61.39) < 0.01 &&
              std::abs(friis_loss_db(60e9, 1.0) - 68.01) < 0.01;

    const Environment empty({}, {});
    SplitMix64 rng(1001);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        Band band = narrow_band_28(rng.uniform() * 30.0 - 10.0);
        if (trial % 2)
            band.carrier_hz = 60e9;
        const ArrayGeometry geom = ArrayGeometry::for_band(band);
        const auto book = generate_codebook(geom);

        const Vec3 tx{0.0, 0.0, 1.0};
        const Vec3 rx{1.0 + rng.uniform() * 99.0, rng.uniform() * 20.0 - 10.0,
                      1.0 + rng.uniform() * 3.0};
        const auto paths = trace_paths(empty, tx, rx, band.carrier_hz);
        const Orientation tx_mech{rng.uniform() * 20.0 - 10.0, 0.0};
        const Orientation rx_mech{-180.0 + rng.uniform() * 20.0, 0.0};
        const auto& te = book[rng.next() % book.size()];
        const auto& re = book[rng.next() % book.size()];
        const SteeredPattern tp(geom, te.weights, tx_mech);
        const SteeredPattern rp(geom, re.weights, rx_mech);

        const RssResult got = rss_dbm(
            band, [&](const Direction& d) { return tp.gain_dbi(d); },
            [&](const Direction& d) { return rp.gain_dbi(d); }, paths);

        // oracle: scalar link budget with independently evaluated gains
        const double d = (rx - tx).norm();
        const double expected = band.tx_power_dbm + tp.gain_dbi(paths[0].aod) +
                                rp.gain_dbi(paths[0].aoa) -
                                friis_loss_db(band.carrier_hz, d);
        worst = std::max(worst, std::abs(got.rss_dbm - expected));
    }
    detail = "worst deviation " + std::to_string(worst) + " dB";
    return ok && worst < 0.01;
}

bool criterion_sweep(std::string& detail)
{
    SplitMix64 rng(31415);
    SweepPlan facing;
    facing.turntable_positions = {{Orientation{0, 0}, Orientation{-180, 0}}};
    for (int i = 0; i < 22; ++i)
    {
        facing.tx_entries.push_back(i);
        facing.rx_entries.push_back(i);
    }

    int accepted = 0;
    int agreed = 0;
    for (int trial = 0; trial < 400 && accepted < 50; ++trial)
    {
        SweepFixture fx(random_single_reflector_scene(rng));
        fx.rx_pos = {9.0 + rng.uniform() * 6.0, rng.uniform() * 2.0 - 1.0,
                     0.8 + rng.uniform()};
        const OracleBest oracle = ground_truth_argmax(facing, fx);
        if (oracle.rss_dbm <= kRssSentinelDbm || oracle.rss_dbm - oracle.second_rss_dbm < 1e-9)
            continue;
        ++accepted;
        auto phy = fx.phy();
        CommonClock clock;
        const auto ms = run_sweep(facing, fx.channel(), phy, clock, Exec::Parallel);
        const LinkState st = establish(ms, -1e9);
        if (st.mode == LinkMode::Established && st.best->tx_entry_index == oracle.tx_idx &&
            st.best->rx_entry_index == oracle.rx_idx)
            ++agreed;
    }

    // full 22x22 over 4x4 orientations, wall-clock bounded
    SweepFixture fx;
    const double el0[] = {0.0};
    const auto full = plan_full_sweep(22, 90.0, el0);
    auto phy = fx.phy(5, /*noise=*/true);
    CommonClock clock;
    const auto t0 = std::chrono::steady_clock::now();
    const auto ms = run_sweep(full, fx.channel(), phy, clock, Exec::Parallel);
    const double elapsed = ms_since(t0);

    detail = std::to_string(agreed) + "/" + std::to_string(accepted) +
             " scenes agree; 7744-pair sweep " + std::to_string(elapsed) + " ms";
    return accepted >= 50 && agreed == accepted && ms.size() == 7744 && elapsed < 10000.0;
}

bool criterion_estimators(std::string& detail)
{
    const Band band = narrow_band_28(0.0);
    const Frame probe = make_frame(std::vector<std::uint8_t>(8, 0x5A), 0);
    const double noise_floor = noise_floor_dbm(band);
    bool ok = true;
    std::ostringstream note;

    // CFO: ensemble mean within 2% of the injected offset at 20 dB SNR
    const double half_range = band.sample_rate_hz / (4.0 * kPreambleHalfSymbols);
    for (const double cfo : {10e3, 0.25 * half_range, 0.5 * half_range, half_range})
    {
        double acc = 0.0;
        const int seeds = 256;
        for (int s = 0; s < seeds; ++s)
        {
            Impairments imp;
            imp.cfo_hz = cfo;
            imp.seed = mix_seed(88, std::uint64_t(s));
            const auto rx =
                apply_channel(probe, {noise_floor + 20.0, 0.3}, band, imp);
            acc += estimate_cfo_hz(rx, band);
        }
        const double err = std::abs(acc / seeds - cfo);
        ok &= err <= 0.02 * cfo;
    }

    // decode success at 15 dB SNR with correction
    SplitMix64 rng(77);
    std::vector<std::uint8_t> payload(16);
    for (auto& b : payload)
        b = std::uint8_t(rng.next());
    const Frame frame = make_frame(payload, 1);
    int decoded = 0;
    const int n_frames = 1000;
    for (int s = 0; s < n_frames; ++s)
    {
        Impairments imp;
        imp.cfo_hz = 500.0;
        imp.seed = mix_seed(99, std::uint64_t(s));
        const auto rx = apply_channel(frame, {noise_floor + 15.0, 0.4}, band, imp);
        try
        {
            if (decode(rx, band, true).crc_ok)
                ++decoded;
        }
        catch (const DetectionError&)
        {
        }
    }
    ok &= decoded >= 990;

    // phase within one degree at 30 dB SNR
    double worst_phase = 0.0;
    for (int s = 0; s < 100; ++s)
    {
        const double phase = rng.uniform() * 2.0 * kPi - kPi;
        Impairments imp;
        imp.seed = mix_seed(111, std::uint64_t(s));
        const auto rx = apply_channel(probe, {noise_floor + 30.0, phase}, band, imp);
        const double err = std::abs(wrap_rad(estimate_phase_rad(rx, 0.0, band) - phase));
        worst_phase = std::max(worst_phase, rad2deg(err));
    }
    ok &= worst_phase < 1.0;

    note << "decode " << decoded << "/" << n_frames << ", worst phase " << worst_phase
         << " deg";
    detail = note.str();
    return ok;
}

bool criterion_recovery(std::string& detail)
{
    const fs::path dir = fs::temp_directory_path() / "mmtwin_acceptance" / "recovery";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(dir / "scene.json", kBlockerScene);
    write_text(dir / "config.json", campaign_config("scene.json", 3.0, -19.0, false));

    CampaignConfig cfg = load_or_throw(dir / "config.json");
    cfg.out_dir = (dir / "out").string();
    const CampaignSummary summary = run_campaign(cfg);
    const auto& b = summary.bands.at(0);

    const Dataset data = load_dataset(cfg.out_dir);
    std::optional<std::int64_t> recovering_t;
    bool resweep_success = false;
    for (const auto& e : data.events)
    {
        if (e.to_mode == "recovering" && e.trigger == "28:crc_failures" && !recovering_t)
            recovering_t = e.t_ns;
        resweep_success |= e.trigger == "28:local_resweep_success";
    }

    bool ok = b.recovery_count >= 1 && b.final_mode == "established" &&
              b.best_pair.has_value() && recovering_t.has_value() && resweep_success;
    if (ok)
    {
        // hand-solved scene: blockage instant t=1+3/5.5; the bounce leaves
        // at +31 deg and arrives at -31 deg in the local array frames
        const double block_s = 1.0 + 3.0 / 5.5;
        const double t_rec = double(*recovering_t) / 1e9;
        ok &= t_rec >= block_s && t_rec <= block_s + 3 * 0.01 + 0.011;
        const double step = 90.0 / 21.0;
        const double tx_az = -45.0 + b.best_pair->first * step;
        const double rx_az = -45.0 + b.best_pair->second * step;
        ok &= tx_az > 20.0 && tx_az < 45.0 && rx_az < -20.0 && rx_az > -45.0;
        std::ostringstream note;
        note << "recovering at t=" << t_rec << " s (blockage " << block_s
             << " s), post-recovery pair (" << b.best_pair->first << ","
             << b.best_pair->second << ")";
        detail = note.str();
    }
    return ok;
}

bool criterion_sensors(std::string& detail)
{
    // direct wall-scene fidelity
    std::vector<Reflector> wall;
    wall.emplace_back(Vec3{10.0, 0.0, 0.0}, Vec3{-1.0, 0.0, 0.0}, 1e5, 1e5, 0.0);
    const Environment env({}, std::move(wall));
    const auto frame = lidar_scan(env, {0, 0, 0}, Orientation{}, 0);
    bool ok = frame.ranges.size() == std::size_t(128) * 2048;
    double worst = 0.0;
    for (int i = 0; i < kLidarRows && ok; ++i)
        for (int j = 0; j < kLidarCols; ++j)
        {
            const double r = frame.at(i, j);
            if (r > kLidarMaxRangeM)
            {
                ok = false;
                break;
            }
            const Direction d = lidar_ray_direction(i, j);
            if (d.x <= 0.0)
                continue;
            const double expected = 10.0 / d.x;
            if (expected <= kLidarMaxRangeM)
                worst = std::max(worst, std::abs(r - expected));
        }
    ok &= worst < 1e-6;

    // 1 s campaign at nominal sensor rates
    const fs::path dir = fs::temp_directory_path() / "mmtwin_acceptance" / "sensors";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(dir / "scene.json", kEmptyScene);
    write_text(dir / "config.json", campaign_config("scene.json", 1.0, 10.0, true));
    CampaignConfig cfg = load_or_throw(dir / "config.json");
    cfg.out_dir = (dir / "out").string();
    const CampaignSummary summary = run_campaign(cfg);
    ok &= summary.lidar_count == 20 && summary.camera_count == 30 && summary.gps_count == 1;

    std::ostringstream note;
    note << "worst wall deviation " << worst << " m; counts lidar=" << summary.lidar_count
         << " camera=" << summary.camera_count << " gps=" << summary.gps_count;
    detail = note.str();
    return ok;
}

bool criterion_synchronization(std::string& detail)
{
    // merged ordering over a real campaign dataset
    const fs::path dir = fs::temp_directory_path() / "mmtwin_acceptance" / "sensors" / "out";
    const Dataset data = load_dataset(dir);
    std::vector<std::pair<std::int64_t, int>> merged;
    for (std::size_t s = 0; s < kStreamNames.size(); ++s)
    {
        const auto times = data.stream_times(kStreamNames[s]);
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i] <= times[i - 1])
                return false; // per-stream strictness
        for (const auto t : times)
            merged.emplace_back(t, int(s));
    }
    std::sort(merged.begin(), merged.end());
    for (std::size_t i = 1; i < merged.size(); ++i)
        if (merged[i].first < merged[i - 1].first)
            return false;

    // alignment against the exhaustive oracle on randomized timelines
    SplitMix64 rng(2025);
    int cases = 0;
    for (int trial = 0; trial < 1000; ++trial)
    {
        std::vector<std::int64_t> ref, target;
        std::int64_t cur = 0;
        const std::size_t nr = 1 + rng.next() % 30;
        for (std::size_t i = 0; i < nr; ++i)
            ref.push_back(cur += 1 + std::int64_t(rng.next() % 997));
        cur = 0;
        const std::size_t nt = 1 + rng.next() % 30;
        for (std::size_t i = 0; i < nt; ++i)
            target.push_back(cur += 1 + std::int64_t(rng.next() % 1013));
        const std::int64_t tol = std::int64_t(rng.next() % 1500);

        const auto fast = align_times(ref, target, tol);
        // oracle: full scan
        std::vector<std::pair<std::size_t, std::size_t>> slow;
        for (std::size_t i = 0; i < ref.size(); ++i)
        {
            std::size_t best = 0;
            std::int64_t best_dt = std::numeric_limits<std::int64_t>::max();
            for (std::size_t j = 0; j < target.size(); ++j)
            {
                const std::int64_t dt = std::abs(target[j] - ref[i]);
                if (dt < best_dt)
                {
                    best_dt = dt;
                    best = j;
                }
            }
            if (best_dt <= tol)
                slow.emplace_back(i, best);
        }
        if (fast != slow)
            return false;
        ++cases;
    }
    detail = std::to_string(merged.size()) + " merged samples, " + std::to_string(cases) +
             " alignment cases";
    return true;
}

bool criterion_reproducibility(std::string& detail)
{
    const fs::path dir = fs::temp_directory_path() / "mmtwin_acceptance" / "repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(dir / "scene.json", kEmptyScene);
    const std::string extra =
        ",\n  {\"carrier_hz\": 6.0e10, \"bandwidth_hz\": 2.0e7, \"tx_power_dbm\": 10}";
    write_text(dir / "dual.json", campaign_config("scene.json", 0.7, 10.0, false, extra));
    write_text(dir / "single.json", campaign_config("scene.json", 0.7, 10.0, false));

    CampaignConfig a = load_or_throw(dir / "dual.json");
    a.out_dir = (dir / "out_a").string();
    CampaignConfig b = load_or_throw(dir / "dual.json");
    b.out_dir = (dir / "out_b").string();
    CampaignConfig single = load_or_throw(dir / "single.json");
    single.out_dir = (dir / "out_single").string();

    const auto sa = run_campaign(a);
    const auto sb = run_campaign(b);
    const auto ss = run_campaign(single);
    (void)ss;

    bool ok = sa.manifest_digest == sb.manifest_digest;
    ok &= slurp(dir / "out_a/manifest.json") == slurp(dir / "out_b/manifest.json");
    ok &= slurp(dir / "out_a/link/28/measurements.csv") ==
          slurp(dir / "out_single/link/28/measurements.csv");
    detail = "digest " + sa.manifest_digest;
    return ok;
}

bool criterion_config_caps(std::string& detail)
{
    const fs::path dir = fs::temp_directory_path() / "mmtwin_acceptance" / "caps";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(dir / "scene.json", kEmptyScene);

    const std::pair<const char*, double> profiles[] = {
        {"X410", 400e6}, {"X310", 160e6}, {"N310", 100e6}};
    SplitMix64 rng(4004);
    int checked = 0;
    for (int trial = 0; trial < 120; ++trial)
    {
        const auto& [name, cap] = profiles[rng.next() % 3];
        double bw;
        switch (rng.next() % 4)
        {
        case 0: bw = cap; break;            // exactly at the cap: accepted
        case 1: bw = cap + 1.0; break;      // one hertz over: rejected
        case 2: bw = rng.uniform() * cap; break;
        default: bw = cap * (1.0 + rng.uniform() * 3.0); break;
        }
        if (bw <= 0.0)
            continue;
        std::ostringstream cfg;
        cfg << "{\"seed\": 1, \"duration_s\": 1.0, \"hardware_profile\": \"" << name
            << "\", \"scene\": \"scene.json\"," << "\"bands\": [{\"carrier_hz\": 2.8e10, "
            << "\"bandwidth_hz\": " << std::fixed << bw << "}],"
            << "\"tx_trajectory\": [{\"t_s\": 0, \"pos_m\": [0,0,1]}],"
            << "\"rx_trajectory\": [{\"t_s\": 0, \"pos_m\": [5,0,1]}]}";
        write_text(dir / "config.json", cfg.str());
        const auto res = load_config(dir / "config.json");
        const bool should_accept = bw <= cap;
        if (res.ok() != should_accept)
            return false;
        if (!should_accept)
        {
            bool named = false;
            for (const auto& e : res.errors)
                named |= e.find("bandwidth exceeds profile cap") != std::string::npos;
            if (!named)
                return false;
        }
        if (res.ok() && res.config->bands.at(0).band.bandwidth_hz > cap)
            return false;
        ++checked;
    }
    detail = std::to_string(checked) + " configs checked";
    return checked >= 100;
}

} // namespace

int main()
{
    std::printf("mmtwin acceptance suite\n");

    run_criterion(1, "codebook structure (22 entries, peak within one grid step, < 1 s)",
                  criterion_codebook);
    run_criterion(2, "link budget oracle (single-LOS RSS and Friis spot values, 0.01 dB)",
                  criterion_link_budget);
    run_criterion(3, "sweep correctness (50 random scenes match argmax; 7744 pairs < 10 s)",
                  criterion_sweep);
    run_criterion(4, "estimator accuracy (CFO 2%, decode >= 99% at 15 dB, phase < 1 deg)",
                  criterion_estimators);
    run_criterion(5, "recovery behavior (blocker triggers Recovering, reflection re-establish)",
                  criterion_recovery);
    run_criterion(6, "sensor fidelity (128x2048 ranges, wall analytic 1e-6, 20/30/1 counts)",
                  criterion_sensors);
    run_criterion(7, "synchronization (merged ordering, alignment oracle 1000 cases)",
                  criterion_synchronization);
    run_criterion(8, "reproducibility (digest-identical runs, 28 GHz stream invariance)",
                  criterion_reproducibility);
    run_criterion(9, "config caps (400/160/100 MHz per hardware profile)",
                  criterion_config_caps);

    if (g_failed == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criteria FAILED\n", g_failed);
    return g_failed;
}
