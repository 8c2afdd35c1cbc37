// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/recorder.hpp"

#include "mmtwin/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mmtwin {

namespace fs = std::filesystem;

namespace {

// Shortest round-trip decimal form; keeps CSV exports byte-stable and
// loss-free under load_dataset.
std::string fmt_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

double parse_double(std::string_view s)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{})
        throw std::runtime_error("malformed floating-point field: " + std::string(s));
    return v;
}

std::int64_t parse_i64(std::string_view s)
{
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{})
        throw std::runtime_error("malformed integer field: " + std::string(s));
    return v;
}

std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos)
        {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void write_file(const fs::path& path, std::string_view bytes)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(bytes.data(), std::streamsize(bytes.size()));
    if (!f)
        throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for reading: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string_view> csv_lines(const std::string& text, const fs::path& path,
                                        std::string_view expected_header)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    std::string_view sv(text);
    while (start < sv.size())
    {
        std::size_t pos = sv.find('\n', start);
        if (pos == std::string_view::npos)
            pos = sv.size();
        lines.push_back(sv.substr(start, pos - start));
        start = pos + 1;
    }
    if (lines.empty() || lines.front() != expected_header)
        throw std::runtime_error("unexpected CSV header in " + path.string());
    lines.erase(lines.begin());
    return lines;
}

constexpr std::string_view kMeasurementsHeader =
    "band_id,tx_idx,rx_idx,tx_yaw,tx_pitch,rx_yaw,rx_pitch,rss_dbm,cfo_hz,phase_rad,crc_ok,t_ns";
constexpr std::string_view kEventsHeader = "t_ns,from_mode,to_mode,trigger,action";
constexpr std::string_view kLidarIndexHeader = "index,t_ns,x,y,z,yaw_deg,pitch_deg";
constexpr std::string_view kGpsHeader = "t_ns,lat_deg,lon_deg,alt_m";
constexpr std::string_view kCameraHeader = "frame_index,t_ns,x,y,z,yaw_deg,pitch_deg";

std::string measurements_csv(std::span<const BeamPairMeasurement> rows)
{
    std::string out{kMeasurementsHeader};
    out += '\n';
    for (const auto& m : rows)
    {
        out += std::to_string(m.band_id) + ',' + std::to_string(m.tx_entry_index) + ',' +
               std::to_string(m.rx_entry_index) + ',' + fmt_double(m.tx_mech.yaw_deg) + ',' +
               fmt_double(m.tx_mech.pitch_deg) + ',' + fmt_double(m.rx_mech.yaw_deg) + ',' +
               fmt_double(m.rx_mech.pitch_deg) + ',' + fmt_double(m.rss_dbm_est) + ',' +
               fmt_double(m.cfo_hz_est) + ',' + fmt_double(m.phase_rad_est) + ',' +
               (m.crc_ok ? "1" : "0") + ',' + std::to_string(m.timestamp_ns) + '\n';
    }
    return out;
}

std::string events_csv(std::span<const LinkEvent> rows)
{
    std::string out{kEventsHeader};
    out += '\n';
    for (const auto& e : rows)
        out += std::to_string(e.t_ns) + ',' + e.from_mode + ',' + e.to_mode + ',' + e.trigger +
               ',' + e.action + '\n';
    return out;
}

std::string lidar_index_csv(std::span<const PointCloudFrame> frames)
{
    std::string out{kLidarIndexHeader};
    out += '\n';
    for (std::size_t i = 0; i < frames.size(); ++i)
    {
        const auto& f = frames[i];
        out += std::to_string(i) + ',' + std::to_string(f.t_ns) + ',' +
               fmt_double(f.sensor_pos.x) + ',' + fmt_double(f.sensor_pos.y) + ',' +
               fmt_double(f.sensor_pos.z) + ',' + fmt_double(f.sensor_orient.yaw_deg) + ',' +
               fmt_double(f.sensor_orient.pitch_deg) + '\n';
    }
    return out;
}

std::string gps_csv(std::span<const GpsFix> fixes)
{
    std::string out{kGpsHeader};
    out += '\n';
    for (const auto& g : fixes)
        out += std::to_string(g.t_ns) + ',' + fmt_double(g.lat_deg) + ',' +
               fmt_double(g.lon_deg) + ',' + fmt_double(g.alt_m) + '\n';
    return out;
}

std::string camera_csv(std::span<const CameraFrameMeta> metas)
{
    std::string out{kCameraHeader};
    out += '\n';
    for (const auto& c : metas)
        out += std::to_string(c.frame_index) + ',' + std::to_string(c.t_ns) + ',' +
               fmt_double(c.pos.x) + ',' + fmt_double(c.pos.y) + ',' + fmt_double(c.pos.z) + ',' +
               fmt_double(c.orient.yaw_deg) + ',' + fmt_double(c.orient.pitch_deg) + '\n';
    return out;
}

// Little-endian float32 blob of one range image. The build targets
// little-endian hosts; a byte-swapping port would go here.
std::string lidar_frame_blob(const PointCloudFrame& f)
{
    std::string out(f.ranges.size() * sizeof(float), '\0');
    auto* p = reinterpret_cast<float*>(out.data());
    for (std::size_t i = 0; i < f.ranges.size(); ++i)
        p[i] = float(f.ranges[i]);
    return out;
}

StreamStats stats_from_times(const std::vector<std::int64_t>& times)
{
    StreamStats s;
    s.count = std::int64_t(times.size());
    if (!times.empty())
    {
        s.first_t_ns = times.front();
        s.last_t_ns = times.back();
    }
    return s;
}

} // namespace

std::vector<std::int64_t> Dataset::stream_times(std::string_view stream) const
{
    std::vector<std::int64_t> t;
    if (stream == "link_28" || stream == "link_60")
    {
        const int band = stream == "link_28" ? 28 : 60;
        if (auto it = link.find(band); it != link.end())
            for (const auto& m : it->second)
                t.push_back(m.timestamp_ns);
        return t;
    }
    if (stream == "events")
    {
        for (const auto& e : events)
            t.push_back(e.t_ns);
        return t;
    }
    if (stream == "lidar")
    {
        for (const auto& f : lidar)
            t.push_back(f.t_ns);
        return t;
    }
    if (stream == "gps")
    {
        for (const auto& g : gps)
            t.push_back(g.t_ns);
        return t;
    }
    if (stream == "camera")
    {
        for (const auto& c : camera)
            t.push_back(c.t_ns);
        return t;
    }
    throw std::out_of_range("unknown stream id: " + std::string(stream));
}

void Recorder::check_order(const std::string& stream, std::int64_t t)
{
    if (auto it = last_t_.find(stream); it != last_t_.end() && t <= it->second)
        throw std::logic_error("non-increasing timestamp on stream " + stream);
    last_t_[stream] = t;
}

void Recorder::stamp_measurement(const BeamPairMeasurement& m)
{
    BeamPairMeasurement row = m;
    row.timestamp_ns = clock_.now_ns();
    check_order(m.band_id == 28 ? "link_28" : "link_60", row.timestamp_ns);
    data_.link[m.band_id].push_back(row);
}

void Recorder::stamp_event(const LinkEvent& e)
{
    LinkEvent row = e;
    row.t_ns = clock_.now_ns();
    check_order("events", row.t_ns);
    data_.events.push_back(std::move(row));
}

void Recorder::stamp_lidar(PointCloudFrame frame)
{
    frame.t_ns = clock_.now_ns();
    check_order("lidar", frame.t_ns);
    data_.lidar.push_back(std::move(frame));
}

void Recorder::stamp_gps(const GpsFix& fix)
{
    GpsFix row = fix;
    row.t_ns = clock_.now_ns();
    check_order("gps", row.t_ns);
    data_.gps.push_back(row);
}

void Recorder::stamp_camera(const CameraFrameMeta& meta)
{
    CameraFrameMeta row = meta;
    row.t_ns = clock_.now_ns();
    check_order("camera", row.t_ns);
    data_.camera.push_back(row);
}

std::string digest_hex(std::string_view bytes)
{
    const std::uint64_t h = fnv1a64(bytes.data(), bytes.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json DatasetManifest::to_json() const
{
    nlohmann::json j;
    j["schema_version"] = schema_version;
    j["seed"] = seed;
    j["config_digest"] = config_digest;
    j["scene_digest"] = scene_digest;
    nlohmann::json streams_j = nlohmann::json::object();
    for (const auto& [name, s] : streams)
    {
        nlohmann::json sj;
        sj["count"] = s.count;
        sj["rate_hz"] = s.rate_hz ? nlohmann::json(*s.rate_hz) : nlohmann::json(nullptr);
        sj["first_t_ns"] = s.first_t_ns ? nlohmann::json(*s.first_t_ns) : nlohmann::json(nullptr);
        sj["last_t_ns"] = s.last_t_ns ? nlohmann::json(*s.last_t_ns) : nlohmann::json(nullptr);
        sj["files"] = s.files;
        streams_j[name] = sj;
    }
    j["streams"] = streams_j;
    nlohmann::json books = nlohmann::json::object();
    for (const auto& [band, entries] : codebooks)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : entries)
            arr.push_back({{"index", e.index}, {"az_deg", e.az_deg}, {"el_deg", e.el_deg}});
        books[std::to_string(band)] = arr;
    }
    j["codebooks"] = books;
    return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j)
{
    DatasetManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.scene_digest = j.at("scene_digest").get<std::string>();
    for (const auto& [name, sj] : j.at("streams").items())
    {
        StreamStats s;
        s.count = sj.at("count").get<std::int64_t>();
        if (!sj.at("rate_hz").is_null())
            s.rate_hz = sj.at("rate_hz").get<double>();
        if (!sj.at("first_t_ns").is_null())
            s.first_t_ns = sj.at("first_t_ns").get<std::int64_t>();
        if (!sj.at("last_t_ns").is_null())
            s.last_t_ns = sj.at("last_t_ns").get<std::int64_t>();
        s.files = sj.at("files").get<std::vector<std::string>>();
        m.streams[name] = s;
    }
    for (const auto& [band, arr] : j.at("codebooks").items())
    {
        std::vector<CodebookDumpEntry> entries;
        for (const auto& e : arr)
            entries.push_back({e.at("index").get<int>(), e.at("az_deg").get<double>(),
                               e.at("el_deg").get<double>()});
        m.codebooks[std::stoi(band)] = entries;
    }
    return m;
}

std::string DatasetManifest::digest() const
{
    return digest_hex(to_json().dump(2));
}

std::vector<std::pair<std::size_t, std::size_t>> align_times(std::span<const std::int64_t> ref,
                                                             std::span<const std::int64_t> target,
                                                             std::int64_t tolerance_ns)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (target.empty())
        return out;
    for (std::size_t i = 0; i < ref.size(); ++i)
    {
        const std::int64_t t = ref[i];
        const auto it = std::lower_bound(target.begin(), target.end(), t);
        std::size_t best = 0;
        std::int64_t best_dt = 0;
        if (it == target.begin())
        {
            best = 0;
            best_dt = std::abs(target[0] - t);
        }
        else if (it == target.end())
        {
            best = target.size() - 1;
            best_dt = std::abs(target[best] - t);
        }
        else
        {
            const std::size_t hi = std::size_t(it - target.begin());
            const std::size_t lo = hi - 1;
            const std::int64_t dt_lo = std::abs(t - target[lo]);
            const std::int64_t dt_hi = std::abs(target[hi] - t);
            // ties break toward the earlier target sample
            if (dt_lo <= dt_hi)
            {
                best = lo;
                best_dt = dt_lo;
            }
            else
            {
                best = hi;
                best_dt = dt_hi;
            }
        }
        if (best_dt <= tolerance_ns)
            out.emplace_back(i, best);
    }
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> align(const Dataset& data,
                                                       std::string_view ref_stream,
                                                       std::string_view target_stream,
                                                       std::int64_t tolerance_ns)
{
    const auto ref = data.stream_times(ref_stream);
    const auto target = data.stream_times(target_stream);
    if (ref.empty() || target.empty())
        throw std::domain_error("align requires non-empty streams");
    return align_times(ref, target, tolerance_ns);
}

DatasetManifest export_dataset(const Dataset& data, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    fs::create_directories(out_dir / "link", ec);
    fs::create_directories(out_dir / "lidar", ec);
    fs::create_directories(out_dir / "gps", ec);
    fs::create_directories(out_dir / "camera", ec);
    if (!fs::is_directory(out_dir))
        throw std::runtime_error("cannot create dataset directory: " + out_dir.string());

    DatasetManifest manifest;
    manifest.seed = data.seed;
    manifest.config_digest = digest_hex(data.config_text);
    manifest.scene_digest = data.scene_digest;
    manifest.codebooks = data.codebooks;

    write_file(out_dir / "config.json", data.config_text);

    for (const std::string_view name : kStreamNames)
    {
        StreamStats s = stats_from_times(data.stream_times(name));
        if (auto it = data.stream_rates_hz.find(std::string(name));
            it != data.stream_rates_hz.end())
            s.rate_hz = it->second;
        manifest.streams[std::string(name)] = s;
    }

    for (const auto& [band, rows] : data.link)
    {
        const std::string rel = "link/" + std::to_string(band) + "/measurements.csv";
        fs::create_directories(out_dir / "link" / std::to_string(band), ec);
        write_file(out_dir / rel, measurements_csv(rows));
        manifest.streams[band == 28 ? "link_28" : "link_60"].files.push_back(rel);
    }
    write_file(out_dir / "link/events.csv", events_csv(data.events));
    manifest.streams["events"].files.push_back("link/events.csv");

    write_file(out_dir / "lidar/index.csv", lidar_index_csv(data.lidar));
    manifest.streams["lidar"].files.push_back("lidar/index.csv");
    for (std::size_t i = 0; i < data.lidar.size(); ++i)
    {
        const std::string rel = "lidar/frame_" + std::to_string(i) + ".bin";
        write_file(out_dir / rel, lidar_frame_blob(data.lidar[i]));
        manifest.streams["lidar"].files.push_back(rel);
    }

    write_file(out_dir / "gps/fixes.csv", gps_csv(data.gps));
    manifest.streams["gps"].files.push_back("gps/fixes.csv");
    write_file(out_dir / "camera/frames.csv", camera_csv(data.camera));
    manifest.streams["camera"].files.push_back("camera/frames.csv");

    // Consistency gate before the manifest lands: row/file counts on disk
    // must match what we are about to claim.
    auto count_rows = [&](const std::string& rel, std::string_view header) {
        const std::string text = read_file(out_dir / rel);
        std::int64_t rows = -1; // header line
        std::size_t start = 0;
        while (start < text.size())
        {
            std::size_t pos = text.find('\n', start);
            if (pos == std::string::npos)
                pos = text.size();
            ++rows;
            start = pos + 1;
        }
        (void)header;
        return rows;
    };
    for (const std::string_view name : kStreamNames)
    {
        const StreamStats& s = manifest.streams[std::string(name)];
        std::int64_t disk_count = 0;
        if (name == "lidar")
        {
            disk_count = count_rows("lidar/index.csv", kLidarIndexHeader);
            std::int64_t bins = 0;
            for (const auto& f : s.files)
                if (f.ends_with(".bin"))
                {
                    if (!fs::exists(out_dir / f) ||
                        fs::file_size(out_dir / f) !=
                            std::size_t(kLidarRows) * kLidarCols * sizeof(float))
                        throw std::runtime_error("lidar frame file inconsistent: " + f);
                    ++bins;
                }
            if (bins != disk_count)
                throw std::runtime_error("lidar index/frame count mismatch");
        }
        else if (name == "events")
            disk_count = count_rows("link/events.csv", kEventsHeader);
        else if (name == "gps")
            disk_count = count_rows("gps/fixes.csv", kGpsHeader);
        else if (name == "camera")
            disk_count = count_rows("camera/frames.csv", kCameraHeader);
        else // link streams
        {
            disk_count = 0;
            for (const auto& f : s.files)
                disk_count += count_rows(f, kMeasurementsHeader);
        }
        if (disk_count != s.count)
            throw std::runtime_error("manifest/disk count mismatch on stream " +
                                     std::string(name));
    }

    write_file(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

Dataset load_dataset(const std::filesystem::path& dir)
{
    Dataset data;
    const auto manifest =
        DatasetManifest::from_json(nlohmann::json::parse(read_file(dir / "manifest.json")));
    if (manifest.schema_version != kDatasetSchemaVersion)
        throw std::runtime_error("unsupported dataset schema version");

    data.config_text = read_file(dir / "config.json");
    data.scene_digest = manifest.scene_digest;
    data.seed = manifest.seed;
    data.codebooks = manifest.codebooks;
    for (const auto& [name, s] : manifest.streams)
        if (s.rate_hz)
            data.stream_rates_hz[name] = *s.rate_hz;

    for (const auto& [band, stream_name] :
         std::initializer_list<std::pair<int, std::string>>{{28, "link_28"}, {60, "link_60"}})
    {
        const auto& files = manifest.streams.at(stream_name).files;
        for (const auto& rel : files)
        {
            const std::string text = read_file(dir / rel);
            std::vector<BeamPairMeasurement> rows;
            for (const auto line : csv_lines(text, dir / rel, kMeasurementsHeader))
            {
                if (line.empty())
                    continue;
                const auto f = split_csv(line);
                if (f.size() != 12)
                    throw std::runtime_error("malformed measurement row in " + rel);
                BeamPairMeasurement m;
                m.band_id = int(parse_i64(f[0]));
                m.tx_entry_index = int(parse_i64(f[1]));
                m.rx_entry_index = int(parse_i64(f[2]));
                m.tx_mech = Orientation(parse_double(f[3]), parse_double(f[4]));
                m.rx_mech = Orientation(parse_double(f[5]), parse_double(f[6]));
                m.rss_dbm_est = parse_double(f[7]);
                m.cfo_hz_est = parse_double(f[8]);
                m.phase_rad_est = parse_double(f[9]);
                m.crc_ok = parse_i64(f[10]) != 0;
                m.timestamp_ns = parse_i64(f[11]);
                rows.push_back(std::move(m));
            }
            data.link[band] = std::move(rows);
        }
    }

    {
        const std::string text = read_file(dir / "link/events.csv");
        for (const auto line : csv_lines(text, dir / "link/events.csv", kEventsHeader))
        {
            if (line.empty())
                continue;
            const auto f = split_csv(line);
            if (f.size() != 5)
                throw std::runtime_error("malformed event row");
            data.events.push_back({parse_i64(f[0]), std::string(f[1]), std::string(f[2]),
                                   std::string(f[3]), std::string(f[4])});
        }
    }

    {
        const std::string text = read_file(dir / "lidar/index.csv");
        for (const auto line : csv_lines(text, dir / "lidar/index.csv", kLidarIndexHeader))
        {
            if (line.empty())
                continue;
            const auto f = split_csv(line);
            if (f.size() != 7)
                throw std::runtime_error("malformed lidar index row");
            PointCloudFrame frame;
            frame.t_ns = parse_i64(f[1]);
            frame.sensor_pos = {parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
            frame.sensor_orient = Orientation(parse_double(f[5]), parse_double(f[6]));
            const std::string blob =
                read_file(dir / ("lidar/frame_" + std::to_string(parse_i64(f[0])) + ".bin"));
            if (blob.size() != std::size_t(kLidarRows) * kLidarCols * sizeof(float))
                throw std::runtime_error("lidar frame blob has wrong size");
            frame.ranges.resize(std::size_t(kLidarRows) * kLidarCols);
            const auto* p = reinterpret_cast<const float*>(blob.data());
            for (std::size_t k = 0; k < frame.ranges.size(); ++k)
                frame.ranges[k] = double(p[k]);
            data.lidar.push_back(std::move(frame));
        }
    }

    {
        const std::string text = read_file(dir / "gps/fixes.csv");
        for (const auto line : csv_lines(text, dir / "gps/fixes.csv", kGpsHeader))
        {
            if (line.empty())
                continue;
            const auto f = split_csv(line);
            if (f.size() != 4)
                throw std::runtime_error("malformed gps row");
            data.gps.push_back(
                {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_i64(f[0])});
        }
    }

    {
        const std::string text = read_file(dir / "camera/frames.csv");
        for (const auto line : csv_lines(text, dir / "camera/frames.csv", kCameraHeader))
        {
            if (line.empty())
                continue;
            const auto f = split_csv(line);
            if (f.size() != 7)
                throw std::runtime_error("malformed camera row");
            CameraFrameMeta meta;
            meta.frame_index = parse_i64(f[0]);
            meta.t_ns = parse_i64(f[1]);
            meta.pos = {parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
            meta.orient = Orientation(parse_double(f[5]), parse_double(f[6]));
            data.camera.push_back(meta);
        }
    }

    return data;
}

} // namespace mmtwin
