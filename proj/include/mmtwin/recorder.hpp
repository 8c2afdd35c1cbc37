// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/phy.hpp"
#include "mmtwin/sensors.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// The nlohmann single-header lives in vendor/.
#include <json.hpp>

namespace mmtwin {

inline constexpr int kDatasetSchemaVersion = 1;

// Monotonically non-decreasing simulation time in nanoseconds since campaign
// start. One instance is shared by every stream of a campaign.
class CommonClock {
  public:
    std::int64_t now_ns() const { return t_ns_; }

    void advance(std::int64_t dt_ns)
    {
        if (dt_ns < 0)
            throw std::logic_error("clock cannot advance by a negative amount");
        t_ns_ += dt_ns;
    }

    void advance_to(std::int64_t t_ns)
    {
        if (t_ns < t_ns_)
            throw std::logic_error("clock cannot move backwards");
        t_ns_ = t_ns;
    }

  private:
    std::int64_t t_ns_ = 0;
};

// The six-stream taxonomy of a dataset.
inline constexpr std::array<std::string_view, 6> kStreamNames = {
    "link_28", "link_60", "events", "lidar", "gps", "camera"};

// One protocol state-machine transition row of link/events.csv. Modes and
// triggers are serialized as strings; triggers carry a band prefix
// ("28:crc_failures") since both bands share the events stream.
struct LinkEvent {
    std::int64_t t_ns = 0;
    std::string from_mode;
    std::string to_mode;
    std::string trigger;
    std::string action;
};

// Codebook dump entry embedded in the manifest.
struct CodebookDumpEntry {
    int index = 0;
    double az_deg = 0.0;
    double el_deg = 0.0;
};

// In-memory campaign dataset: typed per-stream stores plus the campaign
// config and codebooks needed to reproduce it.
struct Dataset {
    std::map<int, std::vector<BeamPairMeasurement>> link; // band_id -> rows
    std::vector<LinkEvent> events;
    std::vector<PointCloudFrame> lidar;
    std::vector<GpsFix> gps;
    std::vector<CameraFrameMeta> camera;

    std::string config_text;   // verbatim campaign config file
    std::string scene_digest;  // digest of the scene file bytes
    std::uint64_t seed = 0;    // effective master seed
    std::map<int, std::vector<CodebookDumpEntry>> codebooks;
    std::map<std::string, double> stream_rates_hz; // nominal sensor rates

    std::vector<std::int64_t> stream_times(std::string_view stream) const;
};

// Serializes appends from the campaign's producers: per-stream strictly
// increasing timestamps are enforced at append time against the shared
// clock.
class Recorder {
  public:
    CommonClock& clock() { return clock_; }
    const CommonClock& clock() const { return clock_; }
    Dataset& dataset() { return data_; }
    const Dataset& dataset() const { return data_; }

    // Stamps carry the clock's current time.
    void stamp_measurement(const BeamPairMeasurement& m);
    void stamp_event(const LinkEvent& e);
    void stamp_lidar(PointCloudFrame frame);
    void stamp_gps(const GpsFix& fix);
    void stamp_camera(const CameraFrameMeta& meta);

  private:
    void check_order(const std::string& stream, std::int64_t t);

    CommonClock clock_;
    Dataset data_;
    std::map<std::string, std::int64_t> last_t_;
};

struct StreamStats {
    std::int64_t count = 0;
    std::optional<double> rate_hz;
    std::optional<std::int64_t> first_t_ns;
    std::optional<std::int64_t> last_t_ns;
    std::vector<std::string> files;
};

struct DatasetManifest {
    int schema_version = kDatasetSchemaVersion;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string scene_digest;
    std::map<std::string, StreamStats> streams;
    std::map<int, std::vector<CodebookDumpEntry>> codebooks;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
    std::string digest() const; // fnv1a-64 of the serialized manifest
};

// Nearest-neighbor association of two timestamp sequences: for each ref
// sample the closest target sample by |dt|, omitted beyond the tolerance,
// ties broken toward the earlier target.
std::vector<std::pair<std::size_t, std::size_t>> align_times(std::span<const std::int64_t> ref,
                                                             std::span<const std::int64_t> target,
                                                             std::int64_t tolerance_ns);

std::vector<std::pair<std::size_t, std::size_t>> align(const Dataset& data,
                                                       std::string_view ref_stream,
                                                       std::string_view target_stream,
                                                       std::int64_t tolerance_ns);

// Writes the documented directory layout and returns the manifest. Export is
// deterministic: identical datasets produce byte-identical trees.
DatasetManifest export_dataset(const Dataset& data, const std::filesystem::path& out_dir);

// Reads a dataset back from disk (inverse of export_dataset).
Dataset load_dataset(const std::filesystem::path& dir);

std::string digest_hex(std::string_view bytes);

} // namespace mmtwin
