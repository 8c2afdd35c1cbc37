// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
//
// Serial reference vs OpenMP kernels for the two hot paths: the exhaustive
// beam-pair sweep and the LiDAR raycast.
#include "mmtwin/beam_mgmt.hpp"
#include "mmtwin/sensors.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace mmtwin;

Environment bench_scene()
{
    std::vector<Box> boxes;
    boxes.push_back(Box::from_center({6.0, 2.0, 1.0}, {1.0, 1.0, 2.0}));
    boxes.push_back(Box::from_center({3.0, -3.0, 1.5}, {2.0, 1.0, 3.0}));
    boxes.push_back(Box::from_center({-4.0, 5.0, 1.0}, {1.5, 1.5, 2.0}));
    std::vector<Reflector> reflectors;
    reflectors.emplace_back(Vec3{5.0, 8.0, 1.5}, Vec3{0.0, -1.0, 0.0}, 30.0, 4.0, 6.0);
    return Environment(std::move(boxes), std::move(reflectors));
}

void bench_lidar(benchmark::State& state, Exec exec)
{
    const Environment env = bench_scene();
    for (auto _ : state)
    {
        auto frame = lidar_scan(env, {0.0, 0.0, 1.0}, Orientation{}, 0, exec);
        benchmark::DoNotOptimize(frame.ranges.data());
    }
}

struct SweepFixture {
    Environment env = bench_scene();
    Band band;
    ArrayGeometry geom;
    std::vector<BeamCodebookEntry> codebook;
    Frame probe;
    SweepPlan plan;

    SweepFixture()
    {
        band.carrier_hz = 28e9;
        band.bandwidth_hz = 10e6;
        band.sample_rate_hz = 10e6;
        band.tx_power_dbm = 10.0;
        geom = ArrayGeometry::for_band(band);
        codebook = generate_codebook(geom);
        const std::vector<std::uint8_t> payload(8, 0xA5);
        probe = make_frame(payload, 0);
        const double els[] = {0.0};
        plan = plan_full_sweep(int(codebook.size()), 360.0, els);
    }
};

void bench_sweep(benchmark::State& state, Exec exec)
{
    SweepFixture fx;
    for (auto _ : state)
    {
        SweepChannel ch;
        ch.env = &fx.env;
        ch.tx_pos = {0.0, 0.0, 1.0};
        ch.rx_pos = {10.0, 0.0, 1.0};
        ch.band = fx.band;
        ch.tx_codebook = &fx.codebook;
        ch.rx_codebook = &fx.codebook;
        ch.tx_geom = fx.geom;
        ch.rx_geom = fx.geom;

        SweepPhy phy;
        phy.probe = &fx.probe;
        phy.seed_base = 42;

        CommonClock clock;
        auto ms = run_sweep(fx.plan, ch, phy, clock, exec);
        benchmark::DoNotOptimize(ms.data());
    }
}

} // namespace

BENCHMARK_CAPTURE(bench_lidar, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_lidar, openmp, Exec::Parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sweep, serial, Exec::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sweep, openmp, Exec::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
