// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/beam_mgmt.hpp"
#include "mmtwin/channel.hpp"
#include "mmtwin/recorder.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmtwin {

struct TrajectoryPoint {
    double t_s = 0.0;
    Vec3 pos;
};

// Piecewise-linear scripted mobility; clamped before the first and after the
// last waypoint.
struct Trajectory {
    std::vector<TrajectoryPoint> points;

    Vec3 at(double t_s) const;
};

// A box blocker with an optional scripted center trajectory.
struct SceneBox {
    Vec3 center;
    Vec3 size;
    std::vector<TrajectoryPoint> trajectory; // of the center; empty = static
};

// Scene description as loaded from the scene JSON. Snapshots materialize the
// immutable Environment the channel and the LiDAR trace against.
struct Scene {
    GeodeticOrigin origin;
    std::vector<SceneBox> boxes;
    std::vector<Reflector> reflectors;

    Environment at_time(double t_s) const;
    bool is_static() const;
};

// Throws std::runtime_error with a descriptive message on schema violations.
Scene parse_scene(const std::string& json_text);

struct SensorSettings {
    bool lidar_enabled = true;
    double lidar_rate_hz = 20.0;
    bool gps_enabled = true;
    double gps_rate_hz = 1.0;
    double gps_sigma_h_m = 1.5;
    double gps_sigma_v_m = 3.0;
    bool camera_enabled = true;
    double camera_rate_hz = 30.0;
    std::string mount = "rx"; // which platform carries the sensor suite
};

struct ProtocolSettings {
    LinkPolicy policy;
    int dwell = 1;
    double mech_step_deg = 90.0;
    std::vector<double> el_positions_deg = {0.0};
    double track_interval_s = 0.01;
    double element_gain_dbi = kDefaultElementGainDbi;
    int probe_payload_bytes = 8;
    TurntableModel turntable;
};

struct BandRun {
    Band band;
    Impairments impairments; // cfo/phase/noise template; seeds are derived
};

struct CampaignConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "dataset";
    double duration_s = 0.0;
    HardwareProfile profile = HardwareProfile::X410;
    std::vector<BandRun> bands;
    ProtocolSettings protocol;
    SensorSettings sensors;
    Trajectory tx_trajectory;
    Trajectory rx_trajectory;
    Scene scene;
    std::string scene_text;  // verbatim scene file bytes
    std::string config_text; // verbatim config file bytes
};

struct ConfigLoadResult {
    std::optional<CampaignConfig> config;
    std::vector<std::string> errors; // all violations, field paths included

    bool ok() const { return errors.empty() && config.has_value(); }
};

// Loads and fully validates a campaign config; reports every violation, not
// just the first. The scene path is resolved relative to the config file.
ConfigLoadResult load_config(const std::filesystem::path& path);

// Same, for already-read text (base_dir resolves the scene path).
ConfigLoadResult parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir);

struct BandSummary {
    int band_id = 0;
    std::string final_mode;
    std::optional<std::pair<int, int>> best_pair; // (tx_idx, rx_idx)
    double best_rss_dbm = kRssSentinelDbm;
    std::int64_t measurement_count = 0;
    double rss_min_dbm = 0.0;
    double rss_max_dbm = 0.0;
    double rss_mean_dbm = 0.0;
    int recovery_count = 0;
    std::vector<std::int64_t> sweep_durations_ns;
};

struct CampaignSummary {
    std::vector<BandSummary> bands;
    std::int64_t lidar_count = 0;
    std::int64_t gps_count = 0;
    std::int64_t camera_count = 0;
    std::string manifest_digest;
    std::string out_dir;

    nlohmann::json to_json() const;
};

// Full campaign: per band full sweep, establishment, tracked packet exchange
// with two-stage recovery; sensors tick at native rates throughout; dataset
// exported to cfg.out_dir. Identical config+seed gives a byte-identical
// dataset.
CampaignSummary run_campaign(const CampaignConfig& cfg, Exec exec = Exec::Parallel);

struct VerifyReport {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

// Re-checks manifest integrity, per-stream ordering and schema version of an
// exported dataset.
VerifyReport verify_dataset(const std::filesystem::path& dir);

// Per-sweep RSS heatmap data for external plotting:
// tx_idx,rx_idx,rss_dbm_max,count over all measurements of one band.
std::string heatmap_csv(const std::filesystem::path& dataset_dir, int band_id);

} // namespace mmtwin
