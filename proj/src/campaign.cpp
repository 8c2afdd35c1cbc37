// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/campaign.hpp"

#include "mmtwin/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace mmtwin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::int64_t to_ns(double seconds)
{
    return std::int64_t(std::llround(seconds * 1e9));
}

std::string read_text(const fs::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Vec3 vec3_from_json(const json& arr, const std::string& path)
{
    if (!arr.is_array() || arr.size() != 3 || !arr[0].is_number() || !arr[1].is_number() ||
        !arr[2].is_number())
        throw std::runtime_error(path + ": expected an array of three numbers");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

std::vector<TrajectoryPoint> trajectory_from_json(const json& arr, const std::string& path,
                                                  const char* pos_key)
{
    if (!arr.is_array() || arr.empty())
        throw std::runtime_error(path + ": expected a non-empty waypoint array");
    std::vector<TrajectoryPoint> pts;
    for (std::size_t i = 0; i < arr.size(); ++i)
    {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const json& w = arr[i];
        if (!w.is_object() || !w.contains("t_s") || !w.contains(pos_key))
            throw std::runtime_error(p + ": waypoint needs t_s and " + pos_key);
        TrajectoryPoint tp;
        tp.t_s = w.at("t_s").get<double>();
        tp.pos = vec3_from_json(w.at(pos_key), p + "." + pos_key);
        if (!pts.empty() && tp.t_s <= pts.back().t_s)
            throw std::runtime_error(p + ".t_s: timestamps must be strictly increasing");
        pts.push_back(tp);
    }
    return pts;
}

Vec3 interpolate(const std::vector<TrajectoryPoint>& pts, double t_s)
{
    if (pts.empty())
        throw std::logic_error("empty trajectory");
    if (t_s <= pts.front().t_s)
        return pts.front().pos;
    if (t_s >= pts.back().t_s)
        return pts.back().pos;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (t_s <= pts[i].t_s)
        {
            const double a = (t_s - pts[i - 1].t_s) / (pts[i].t_s - pts[i - 1].t_s);
            return pts[i - 1].pos + (pts[i].pos - pts[i - 1].pos) * a;
        }
    return pts.back().pos;
}

} // namespace

Vec3 Trajectory::at(double t_s) const
{
    return interpolate(points, t_s);
}

Environment Scene::at_time(double t_s) const
{
    std::vector<Box> snapshot;
    snapshot.reserve(boxes.size());
    for (const SceneBox& b : boxes)
    {
        const Vec3 center = b.trajectory.empty() ? b.center : interpolate(b.trajectory, t_s);
        snapshot.push_back(Box::from_center(center, b.size));
    }
    return Environment(std::move(snapshot), reflectors, origin);
}

bool Scene::is_static() const
{
    for (const SceneBox& b : boxes)
        if (!b.trajectory.empty())
            return false;
    return true;
}

Scene parse_scene(const std::string& json_text)
{
    json j;
    try
    {
        j = json::parse(json_text);
    }
    catch (const json::exception& e)
    {
        throw std::runtime_error(std::string("scene JSON parse error: ") + e.what());
    }

    Scene scene;
    if (j.contains("origin_geodetic"))
    {
        const json& o = j.at("origin_geodetic");
        scene.origin.lat_deg = o.value("lat_deg", 0.0);
        scene.origin.lon_deg = o.value("lon_deg", 0.0);
        scene.origin.alt_m = o.value("alt_m", 0.0);
        if (std::abs(scene.origin.lat_deg) > 90.0 || std::abs(scene.origin.lon_deg) >= 180.0)
            throw std::runtime_error("origin_geodetic: latitude/longitude out of range");
    }

    for (std::size_t i = 0; j.contains("boxes") && i < j.at("boxes").size(); ++i)
    {
        const std::string path = "boxes[" + std::to_string(i) + "]";
        const json& b = j.at("boxes")[i];
        SceneBox box;
        box.center = vec3_from_json(b.at("center_m"), path + ".center_m");
        box.size = vec3_from_json(b.at("size_m"), path + ".size_m");
        if (box.size.x <= 0.0 || box.size.y <= 0.0 || box.size.z <= 0.0)
            throw std::runtime_error(path + ".size_m: extents must be strictly positive");
        if (b.contains("trajectory"))
            box.trajectory = trajectory_from_json(b.at("trajectory"), path + ".trajectory",
                                                  "center_m");
        scene.boxes.push_back(std::move(box));
    }

    for (std::size_t i = 0; j.contains("reflectors") && i < j.at("reflectors").size(); ++i)
    {
        const std::string path = "reflectors[" + std::to_string(i) + "]";
        const json& r = j.at("reflectors")[i];
        try
        {
            scene.reflectors.emplace_back(vec3_from_json(r.at("center_m"), path + ".center_m"),
                                          vec3_from_json(r.at("normal"), path + ".normal"),
                                          r.at("width_m").get<double>(),
                                          r.at("height_m").get<double>(),
                                          r.value("loss_db", 0.0));
        }
        catch (const std::invalid_argument& e)
        {
            throw std::runtime_error(path + ": " + e.what());
        }
    }
    return scene;
}

namespace {

HardwareProfile profile_from_string(const std::string& s)
{
    if (s == "X410")
        return HardwareProfile::X410;
    if (s == "X310")
        return HardwareProfile::X310;
    if (s == "N310")
        return HardwareProfile::N310;
    throw std::runtime_error("hardware_profile must be one of X410, X310, N310");
}

} // namespace

ConfigLoadResult parse_config(const std::string& json_text, const fs::path& base_dir)
{
    ConfigLoadResult result;
    auto fail = [&](const std::string& msg) { result.errors.push_back(msg); };

    json j;
    try
    {
        j = json::parse(json_text);
    }
    catch (const json::exception& e)
    {
        fail(std::string("config: JSON parse error: ") + e.what());
        return result;
    }

    CampaignConfig cfg;
    cfg.config_text = json_text;

    if (!j.contains("seed") || !j.at("seed").is_number_unsigned())
        fail("seed: required (reproducibility is mandatory) and must be a non-negative integer");
    else
        cfg.seed = j.at("seed").get<std::uint64_t>();

    cfg.out_dir = j.value("out_dir", std::string("dataset"));

    if (!j.contains("duration_s") || !j.at("duration_s").is_number() ||
        j.at("duration_s").get<double>() <= 0.0)
        fail("duration_s: required and must be positive");
    else
        cfg.duration_s = j.at("duration_s").get<double>();

    try
    {
        cfg.profile = profile_from_string(j.value("hardware_profile", std::string("X410")));
    }
    catch (const std::exception& e)
    {
        fail(std::string("hardware_profile: ") + e.what());
    }

    // Bands: one or two, distinct carriers, capped by the profile.
    if (!j.contains("bands") || !j.at("bands").is_array() || j.at("bands").empty() ||
        j.at("bands").size() > 2)
        fail("bands: one or two band objects are required");
    else
    {
        std::set<int> seen;
        for (std::size_t i = 0; i < j.at("bands").size(); ++i)
        {
            const std::string path = "bands[" + std::to_string(i) + "]";
            const json& bj = j.at("bands")[i];
            BandRun run;
            run.band.carrier_hz = bj.value("carrier_hz", 0.0);
            run.band.bandwidth_hz = bj.value("bandwidth_hz", 0.0);
            run.band.sample_rate_hz = bj.value("sample_rate_hz", run.band.bandwidth_hz);
            run.band.baseband_hz = bj.value("baseband_hz", 1e9);
            run.band.tx_power_dbm = bj.value("tx_power_dbm", 0.0);
            run.band.noise_figure_db = bj.value("noise_figure_db", 10.0);
            run.impairments.cfo_hz = bj.value("cfo_hz", 0.0);
            run.impairments.phase_rad = bj.value("phase_offset_rad", 0.0);
            run.impairments.noise = bj.value("noise", true);
            try
            {
                run.band.validate(cfg.profile);
                if (!seen.insert(run.band.band_id()).second)
                    fail(path + ".carrier_hz: duplicate band");
                else
                    cfg.bands.push_back(run);
            }
            catch (const std::exception& e)
            {
                fail(path + ": " + e.what());
            }
        }
    }

    if (j.contains("protocol"))
    {
        const json& p = j.at("protocol");
        cfg.protocol.policy.max_consecutive_failures = p.value("consecutive_failure_limit", 3);
        cfg.protocol.policy.drop_db = p.value("drop_db", 10.0);
        cfg.protocol.policy.min_rss_dbm = p.value("min_rss_dbm", -85.0);
        cfg.protocol.dwell = p.value("dwell", 1);
        cfg.protocol.mech_step_deg = p.value("mech_step_deg", 90.0);
        if (p.contains("el_positions_deg"))
            cfg.protocol.el_positions_deg = p.at("el_positions_deg").get<std::vector<double>>();
        cfg.protocol.track_interval_s = p.value("track_interval_ms", 10.0) / 1e3;
        cfg.protocol.element_gain_dbi = p.value("element_gain_dbi", kDefaultElementGainDbi);
        cfg.protocol.probe_payload_bytes = p.value("probe_payload_bytes", 8);
        cfg.protocol.turntable.slew_deg_per_s = p.value("slew_deg_per_s", 90.0);
        cfg.protocol.turntable.settle_s = p.value("settle_ms", 50.0) / 1e3;
    }
    if (cfg.protocol.policy.max_consecutive_failures < 1)
        fail("protocol.consecutive_failure_limit: must be at least 1");
    if (cfg.protocol.policy.drop_db <= 0.0)
        fail("protocol.drop_db: must be positive");
    if (cfg.protocol.dwell < 1)
        fail("protocol.dwell: must be at least 1");
    if (cfg.protocol.track_interval_s <= 0.0)
        fail("protocol.track_interval_ms: must be positive");
    if (cfg.protocol.probe_payload_bytes < 0 ||
        std::size_t(cfg.protocol.probe_payload_bytes) > kMaxPayloadBytes)
        fail("protocol.probe_payload_bytes: out of range");
    if (cfg.protocol.turntable.slew_deg_per_s <= 0.0)
        fail("protocol.slew_deg_per_s: must be positive");
    if (cfg.protocol.turntable.settle_s < 0.0)
        fail("protocol.settle_ms: must be non-negative");
    if (cfg.protocol.mech_step_deg <= 0.0 ||
        std::abs(360.0 / cfg.protocol.mech_step_deg -
                 std::round(360.0 / cfg.protocol.mech_step_deg)) > 1e-9)
        fail("protocol.mech_step_deg: must divide 360 evenly");
    {
        std::set<double> unique(cfg.protocol.el_positions_deg.begin(),
                                cfg.protocol.el_positions_deg.end());
        if (cfg.protocol.el_positions_deg.empty())
            fail("protocol.el_positions_deg: at least one pitch position is required");
        else if (unique.size() != cfg.protocol.el_positions_deg.size())
            fail("protocol.el_positions_deg: duplicate elevation positions");
        for (double el : cfg.protocol.el_positions_deg)
            if (el < -90.0 || el > 90.0)
                fail("protocol.el_positions_deg: pitch out of [-90, 90]");
    }

    if (j.contains("sensors"))
    {
        const json& s = j.at("sensors");
        if (s.contains("lidar"))
        {
            cfg.sensors.lidar_enabled = s.at("lidar").value("enabled", true);
            cfg.sensors.lidar_rate_hz = s.at("lidar").value("rate_hz", 20.0);
        }
        if (s.contains("gps"))
        {
            cfg.sensors.gps_enabled = s.at("gps").value("enabled", true);
            cfg.sensors.gps_rate_hz = s.at("gps").value("rate_hz", 1.0);
            cfg.sensors.gps_sigma_h_m = s.at("gps").value("sigma_h_m", 1.5);
            cfg.sensors.gps_sigma_v_m = s.at("gps").value("sigma_v_m", 3.0);
        }
        if (s.contains("camera"))
        {
            cfg.sensors.camera_enabled = s.at("camera").value("enabled", true);
            cfg.sensors.camera_rate_hz = s.at("camera").value("rate_hz", 30.0);
        }
        cfg.sensors.mount = s.value("mount", std::string("rx"));
    }
    if (cfg.sensors.lidar_rate_hz <= 0.0 || cfg.sensors.gps_rate_hz <= 0.0 ||
        cfg.sensors.camera_rate_hz <= 0.0)
        fail("sensors: rates must be positive");
    if (cfg.sensors.gps_sigma_h_m < 0.0 || cfg.sensors.gps_sigma_v_m < 0.0)
        fail("sensors.gps: noise sigmas must be non-negative");
    if (cfg.sensors.mount != "tx" && cfg.sensors.mount != "rx")
        fail("sensors.mount: must be \"tx\" or \"rx\"");

    for (const auto& [key, field] : std::initializer_list<std::pair<const char*, Trajectory*>>{
             {"tx_trajectory", &cfg.tx_trajectory}, {"rx_trajectory", &cfg.rx_trajectory}})
    {
        if (!j.contains(key))
        {
            fail(std::string(key) + ": required");
            continue;
        }
        try
        {
            field->points = trajectory_from_json(j.at(key), key, "pos_m");
        }
        catch (const std::exception& e)
        {
            fail(e.what());
        }
    }

    if (!j.contains("scene") || !j.at("scene").is_string())
        fail("scene: required path to the scene file");
    else
    {
        const fs::path scene_path = base_dir / j.at("scene").get<std::string>();
        try
        {
            cfg.scene_text = read_text(scene_path);
            cfg.scene = parse_scene(cfg.scene_text);
        }
        catch (const std::exception& e)
        {
            fail(std::string("scene: ") + e.what());
        }
    }

    if (!result.errors.empty())
        return result;
    result.config = std::move(cfg);
    return result;
}

ConfigLoadResult load_config(const fs::path& path)
{
    std::string text;
    try
    {
        text = read_text(path);
    }
    catch (const std::exception& e)
    {
        ConfigLoadResult r;
        r.errors.push_back(e.what());
        return r;
    }
    return parse_config(text, path.parent_path());
}

namespace {

struct BandTimeline {
    std::vector<BeamPairMeasurement> measurements;
    std::vector<LinkEvent> events;
    BandSummary summary;
};

std::optional<BeamPairMeasurement> best_clean(std::span<const BeamPairMeasurement> ms)
{
    const BeamPairMeasurement* best = nullptr;
    for (const auto& m : ms)
    {
        if (!m.crc_ok)
            continue;
        if (!best || m.rss_dbm_est > best->rss_dbm_est ||
            (m.rss_dbm_est == best->rss_dbm_est &&
             std::tie(m.tx_entry_index, m.rx_entry_index, m.timestamp_ns) <
                 std::tie(best->tx_entry_index, best->rx_entry_index, best->timestamp_ns)))
            best = &m;
    }
    if (!best)
        return std::nullopt;
    return *best;
}

BandTimeline simulate_band(const CampaignConfig& cfg, const BandRun& run, Exec exec)
{
    const Band& band = run.band;
    const int id = band.band_id();
    const std::string stream = id == 28 ? "link_28" : "link_60";
    const ArrayGeometry geom = ArrayGeometry::for_band(band);
    const auto codebook = generate_codebook(geom);
    const std::uint64_t seed_base = derive_seed(cfg.seed, stream);
    const std::int64_t duration_ns = to_ns(cfg.duration_s);

    std::vector<std::uint8_t> payload(std::size_t(cfg.protocol.probe_payload_bytes));
    for (std::size_t i = 0; i < payload.size(); ++i)
        payload[i] = std::uint8_t(0xA5u ^ (i * 0x31u));
    const Frame probe = make_frame(payload, 0);

    BandTimeline tl;
    tl.summary.band_id = id;

    CommonClock clock;
    SweepPhy phy;
    phy.probe = &probe;
    phy.impairments = run.impairments;
    phy.seed_base = seed_base;
    phy.turntable = cfg.protocol.turntable;
    phy.deadline_ns = duration_ns;

    auto add_event = [&](std::int64_t t, LinkMode from, LinkMode to, const char* trigger,
                         LinkAction action) {
        tl.events.push_back({t, link_mode_name(from), link_mode_name(to),
                             std::to_string(id) + ":" + trigger, link_action_name(action)});
    };

    const SweepPlan full_plan =
        plan_full_sweep(int(codebook.size()), cfg.protocol.mech_step_deg,
                        cfg.protocol.el_positions_deg, cfg.protocol.dwell);

    auto do_sweep = [&](const SweepPlan& plan) {
        const double t_s = double(clock.now_ns()) / 1e9;
        const Environment env = cfg.scene.at_time(t_s);
        SweepChannel ch;
        ch.env = &env;
        ch.tx_pos = cfg.tx_trajectory.at(t_s);
        ch.rx_pos = cfg.rx_trajectory.at(t_s);
        ch.band = band;
        ch.tx_codebook = &codebook;
        ch.rx_codebook = &codebook;
        ch.tx_geom = geom;
        ch.rx_geom = geom;
        ch.element_gain_dbi = cfg.protocol.element_gain_dbi;

        const std::int64_t start = clock.now_ns();
        auto ms = run_sweep(plan, ch, phy, clock, exec);
        tl.summary.sweep_durations_ns.push_back(clock.now_ns() - start);
        tl.measurements.insert(tl.measurements.end(), ms.begin(), ms.end());
        return ms;
    };

    // Repositions both turntables onto the established pair's orientation.
    auto aim_at_best = [&](const LinkState& state) {
        const std::int64_t move =
            std::max(phy.turntable.move_cost_ns(phy.tx_start, state.best->tx_mech),
                     phy.turntable.move_cost_ns(phy.rx_start, state.best->rx_mech));
        clock.advance(move);
        phy.tx_start = state.best->tx_mech;
        phy.rx_start = state.best->rx_mech;
    };

    add_event(0, LinkMode::Idle, LinkMode::Sweeping, "start", LinkAction::FullSweep);
    const auto initial = do_sweep(full_plan);

    LinkState state;
    if (initial.empty())
    {
        state.mode = LinkMode::Lost;
        add_event(clock.now_ns(), LinkMode::Sweeping, LinkMode::Lost, "no_measurements",
                  LinkAction::None);
    }
    else
    {
        state = establish(initial, cfg.protocol.policy.min_rss_dbm);
        if (state.mode == LinkMode::Established)
        {
            add_event(clock.now_ns(), LinkMode::Sweeping, LinkMode::Established, "sweep_complete",
                      LinkAction::None);
            aim_at_best(state);
        }
        else
            add_event(clock.now_ns(), LinkMode::Sweeping, LinkMode::Lost, "below_min_rss",
                      LinkAction::None);
    }

    const std::int64_t interval_ns = std::max<std::int64_t>(1, to_ns(cfg.protocol.track_interval_s));
    std::uint64_t seq = 1;

    while (state.mode == LinkMode::Established &&
           clock.now_ns() + interval_ns <= duration_ns)
    {
        clock.advance(interval_ns);
        const std::int64_t t_m = clock.now_ns();
        const double t_s = double(t_m) / 1e9;

        const Environment env = cfg.scene.at_time(t_s);
        const auto paths =
            trace_paths(env, cfg.tx_trajectory.at(t_s), cfg.rx_trajectory.at(t_s),
                        band.carrier_hz);

        const BeamCodebookEntry& te = codebook[std::size_t(state.best->tx_entry_index)];
        const BeamCodebookEntry& re = codebook[std::size_t(state.best->rx_entry_index)];
        const SteeredPattern tx_pat(geom, te.weights, state.best->tx_mech,
                                    cfg.protocol.element_gain_dbi);
        const SteeredPattern rx_pat(geom, re.weights, state.best->rx_mech,
                                    cfg.protocol.element_gain_dbi);
        const RssResult gt = rss_dbm(
            band, [&](const Direction& d) { return tx_pat.gain_dbi(d); },
            [&](const Direction& d) { return rx_pat.gain_dbi(d); }, paths);

        const Frame frame = make_frame(payload, std::uint8_t(seq & 0xFF));
        ++seq;
        Impairments imp = run.impairments;
        imp.seed = mix_seed(seed_base, phy.packet_counter++);
        const ProbeOutcome outcome = probe_link(frame, gt, band, imp);

        BeamPairMeasurement m;
        m.band_id = id;
        m.tx_entry_index = te.index;
        m.rx_entry_index = re.index;
        m.tx_mech = state.best->tx_mech;
        m.rx_mech = state.best->rx_mech;
        m.rss_dbm_est = outcome.rss_dbm_est;
        m.cfo_hz_est = outcome.cfo_hz_est;
        m.phase_rad_est = outcome.phase_rad_est;
        m.crc_ok = outcome.crc_ok;
        m.timestamp_ns = t_m;
        tl.measurements.push_back(m);

        const TransitionResult tr =
            on_packet_result(state, outcome.crc_ok, outcome.rss_dbm_est, cfg.protocol.policy);
        if (tr.transitioned)
        {
            add_event(t_m, LinkMode::Established, LinkMode::Recovering, tr.trigger, tr.action);
            ++tl.summary.recovery_count;
        }
        if (tr.action != LinkAction::LocalResweep)
            continue;

        // Stage 1: electronic re-sweep at the current orientations.
        SweepPlan local;
        local.turntable_positions = {{phy.tx_start, phy.rx_start}};
        local.tx_entries = full_plan.tx_entries;
        local.rx_entries = full_plan.rx_entries;
        local.dwell = cfg.protocol.dwell;

        const auto local_ms = do_sweep(local);
        LinkMode from = state.mode;
        TransitionResult sr = on_sweep_outcome(state, best_clean(local_ms), cfg.protocol.policy);
        add_event(clock.now_ns(), from, state.mode, sr.trigger, sr.action);

        if (sr.action == LinkAction::FullSweep)
        {
            // Stage 2: full mechanical sweep.
            const auto full_ms = do_sweep(full_plan);
            from = state.mode;
            sr = on_sweep_outcome(state, best_clean(full_ms), cfg.protocol.policy);
            add_event(clock.now_ns(), from, state.mode, sr.trigger, sr.action);
        }
        if (state.mode == LinkMode::Established)
            aim_at_best(state);
    }

    tl.summary.final_mode = link_mode_name(state.mode);
    if (state.best)
    {
        tl.summary.best_pair = {state.best->tx_entry_index, state.best->rx_entry_index};
        tl.summary.best_rss_dbm = state.best->rss_dbm_est;
    }
    tl.summary.measurement_count = std::int64_t(tl.measurements.size());
    if (!tl.measurements.empty())
    {
        double mn = tl.measurements.front().rss_dbm_est;
        double mx = mn;
        double acc = 0.0;
        for (const auto& m : tl.measurements)
        {
            mn = std::min(mn, m.rss_dbm_est);
            mx = std::max(mx, m.rss_dbm_est);
            acc += m.rss_dbm_est;
        }
        tl.summary.rss_min_dbm = mn;
        tl.summary.rss_max_dbm = mx;
        tl.summary.rss_mean_dbm = acc / double(tl.measurements.size());
    }
    return tl;
}

} // namespace

nlohmann::json CampaignSummary::to_json() const
{
    json j;
    j["out_dir"] = out_dir;
    j["manifest_digest"] = manifest_digest;
    j["sensor_counts"] = {{"lidar", lidar_count}, {"gps", gps_count}, {"camera", camera_count}};
    json arr = json::array();
    for (const auto& b : bands)
    {
        json bj;
        bj["band_id"] = b.band_id;
        bj["final_mode"] = b.final_mode;
        if (b.best_pair)
            bj["best_pair"] = {{"tx_idx", b.best_pair->first}, {"rx_idx", b.best_pair->second}};
        else
            bj["best_pair"] = nullptr;
        bj["best_rss_dbm"] = b.best_rss_dbm;
        bj["measurement_count"] = b.measurement_count;
        bj["rss_min_dbm"] = b.rss_min_dbm;
        bj["rss_max_dbm"] = b.rss_max_dbm;
        bj["rss_mean_dbm"] = b.rss_mean_dbm;
        bj["recovery_count"] = b.recovery_count;
        bj["sweep_durations_ns"] = b.sweep_durations_ns;
        arr.push_back(bj);
    }
    j["bands"] = arr;
    return j;
}

CampaignSummary run_campaign(const CampaignConfig& cfg, Exec exec)
{
    const std::int64_t duration_ns = to_ns(cfg.duration_s);

    Recorder rec;
    Dataset& data = rec.dataset();
    data.config_text = cfg.config_text;
    data.scene_digest = digest_hex(cfg.scene_text);
    data.seed = cfg.seed;

    CampaignSummary summary;
    summary.out_dir = cfg.out_dir;

    // Link processes, one per band, on band-local planning cursors.
    std::vector<BandTimeline> timelines;
    for (const BandRun& run : cfg.bands)
    {
        data.link[run.band.band_id()]; // ensure the stream exists even if empty
        const ArrayGeometry geom = ArrayGeometry::for_band(run.band);
        std::vector<CodebookDumpEntry> dump;
        for (const auto& e : generate_codebook(geom))
            dump.push_back({e.index, e.az_deg, e.el_deg});
        data.codebooks[run.band.band_id()] = std::move(dump);
        timelines.push_back(simulate_band(cfg, run, exec));
        summary.bands.push_back(timelines.back().summary);
    }

    // Sensor producers on their native grids; the mounted platform's
    // trajectory provides the poses.
    const Trajectory& mount =
        cfg.sensors.mount == "tx" ? cfg.tx_trajectory : cfg.rx_trajectory;
    const Orientation sensor_orient{};

    std::vector<PointCloudFrame> lidar_frames;
    if (cfg.sensors.lidar_enabled)
    {
        data.stream_rates_hz["lidar"] = cfg.sensors.lidar_rate_hz;
        const std::int64_t n = sensor_tick_count(duration_ns, cfg.sensors.lidar_rate_hz);
        for (std::int64_t k = 0; k < n; ++k)
        {
            const std::int64_t t = sensor_grid_ns(k, cfg.sensors.lidar_rate_hz);
            const double t_s = double(t) / 1e9;
            lidar_frames.push_back(
                lidar_scan(cfg.scene.at_time(t_s), mount.at(t_s), sensor_orient, t, exec));
        }
    }

    std::vector<GpsFix> gps_fixes;
    if (cfg.sensors.gps_enabled)
    {
        data.stream_rates_hz["gps"] = cfg.sensors.gps_rate_hz;
        const std::uint64_t gps_seed = derive_seed(cfg.seed, "gps");
        const std::int64_t n = sensor_tick_count(duration_ns, cfg.sensors.gps_rate_hz);
        for (std::int64_t k = 0; k < n; ++k)
        {
            const std::int64_t t = sensor_grid_ns(k, cfg.sensors.gps_rate_hz);
            gps_fixes.push_back(gps_fix(mount.at(double(t) / 1e9), cfg.scene.origin,
                                        cfg.sensors.gps_sigma_h_m, cfg.sensors.gps_sigma_v_m,
                                        mix_seed(gps_seed, std::uint64_t(k)), t));
        }
    }

    std::vector<CameraFrameMeta> camera_metas;
    if (cfg.sensors.camera_enabled)
    {
        data.stream_rates_hz["camera"] = cfg.sensors.camera_rate_hz;
        const std::int64_t n = sensor_tick_count(duration_ns, cfg.sensors.camera_rate_hz);
        for (std::int64_t k = 0; k < n; ++k)
        {
            const std::int64_t t = sensor_grid_ns(k, cfg.sensors.camera_rate_hz);
            camera_metas.push_back(
                camera_tick(t, mount.at(double(t) / 1e9), sensor_orient,
                            cfg.sensors.camera_rate_hz));
        }
    }

    // Merge the shared events log; simultaneous transitions from independent
    // bands serialize with 1 ns separation, mirroring a single log writer.
    std::vector<LinkEvent> events;
    for (const auto& tl : timelines)
        events.insert(events.end(), tl.events.begin(), tl.events.end());
    std::stable_sort(events.begin(), events.end(),
                     [](const LinkEvent& a, const LinkEvent& b) { return a.t_ns < b.t_ns; });
    for (std::size_t i = 1; i < events.size(); ++i)
        if (events[i].t_ns <= events[i - 1].t_ns)
            events[i].t_ns = events[i - 1].t_ns + 1;

    // Global dispatch in time order through the one common clock.
    struct Item {
        std::int64_t t;
        int prio;
        std::size_t list; // band index for link items
        std::size_t idx;
    };
    std::vector<Item> items;
    for (std::size_t b = 0; b < timelines.size(); ++b)
    {
        const int prio = timelines[b].summary.band_id == 28 ? 0 : 1;
        for (std::size_t i = 0; i < timelines[b].measurements.size(); ++i)
            items.push_back({timelines[b].measurements[i].timestamp_ns, prio, b, i});
    }
    for (std::size_t i = 0; i < events.size(); ++i)
        items.push_back({events[i].t_ns, 2, 0, i});
    for (std::size_t i = 0; i < lidar_frames.size(); ++i)
        items.push_back({lidar_frames[i].t_ns, 3, 0, i});
    for (std::size_t i = 0; i < gps_fixes.size(); ++i)
        items.push_back({gps_fixes[i].t_ns, 4, 0, i});
    for (std::size_t i = 0; i < camera_metas.size(); ++i)
        items.push_back({camera_metas[i].t_ns, 5, 0, i});

    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return a.t != b.t ? a.t < b.t : a.prio < b.prio;
    });

    for (const Item& item : items)
    {
        rec.clock().advance_to(item.t);
        switch (item.prio)
        {
        case 0:
        case 1: rec.stamp_measurement(timelines[item.list].measurements[item.idx]); break;
        case 2: rec.stamp_event(events[item.idx]); break;
        case 3: rec.stamp_lidar(std::move(lidar_frames[item.idx])); break;
        case 4: rec.stamp_gps(gps_fixes[item.idx]); break;
        case 5: rec.stamp_camera(camera_metas[item.idx]); break;
        }
    }

    const DatasetManifest manifest = export_dataset(data, cfg.out_dir);
    summary.manifest_digest = manifest.digest();
    summary.lidar_count = std::int64_t(data.lidar.size());
    summary.gps_count = std::int64_t(data.gps.size());
    summary.camera_count = std::int64_t(data.camera.size());
    return summary;
}

VerifyReport verify_dataset(const fs::path& dir)
{
    VerifyReport report;
    auto flag = [&](const std::string& v) { report.violations.push_back(v); };

    DatasetManifest manifest;
    try
    {
        manifest = DatasetManifest::from_json(
            json::parse(read_text(dir / "manifest.json")));
    }
    catch (const std::exception& e)
    {
        flag(std::string("manifest.json: ") + e.what());
        return report;
    }
    if (manifest.schema_version != kDatasetSchemaVersion)
        flag("manifest.json: unsupported schema version " +
             std::to_string(manifest.schema_version));

    Dataset data;
    try
    {
        data = load_dataset(dir);
    }
    catch (const std::exception& e)
    {
        flag(e.what());
        return report;
    }

    try
    {
        if (digest_hex(data.config_text) != manifest.config_digest)
            flag("config.json: digest does not match the manifest");
    }
    catch (const std::exception& e)
    {
        flag(e.what());
    }

    for (const std::string_view name : kStreamNames)
    {
        const std::string key{name};
        const auto times = data.stream_times(name);
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i] <= times[i - 1])
            {
                flag(key + ": timestamp ordering violation at row " + std::to_string(i));
                break;
            }
        const auto it = manifest.streams.find(key);
        if (it == manifest.streams.end())
        {
            flag("manifest.json: stream " + key + " missing");
            continue;
        }
        if (it->second.count != std::int64_t(times.size()))
            flag(key + ": manifest count " + std::to_string(it->second.count) +
                 " does not match " + std::to_string(times.size()) + " rows on disk");
    }
    return report;
}

std::string heatmap_csv(const fs::path& dataset_dir, int band_id)
{
    const Dataset data = load_dataset(dataset_dir);
    const auto it = data.link.find(band_id);
    if (it == data.link.end())
        throw std::invalid_argument("band " + std::to_string(band_id) + " not in dataset");

    std::map<std::pair<int, int>, std::pair<double, std::int64_t>> cells; // max rss, count
    for (const auto& m : it->second)
    {
        auto [cell, inserted] =
            cells.try_emplace({m.tx_entry_index, m.rx_entry_index}, m.rss_dbm_est, 0);
        cell->second.first = std::max(cell->second.first, m.rss_dbm_est);
        ++cell->second.second;
    }

    std::string out = "tx_idx,rx_idx,rss_dbm_max,count\n";
    for (const auto& [pair, v] : cells)
    {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), v.first);
        out += std::to_string(pair.first) + ',' + std::to_string(pair.second) + ',' +
               std::string(buf, res.ptr) + ',' + std::to_string(v.second) + '\n';
    }
    return out;
}

} // namespace mmtwin
