// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/sensors.hpp"

#include "mmtwin/rng.hpp"

#include <cmath>

namespace mmtwin {

Direction lidar_ray_direction(int row, int col)
{
    const double az = -180.0 + double(col) * (360.0 / double(kLidarCols));
    const double el = -kLidarVerticalFovDeg / 2.0 +
                      double(row) * (kLidarVerticalFovDeg / double(kLidarRows - 1));
    return direction_from_angles(az, el);
}

namespace {

void scan_row(const Environment& env, const Vec3& pos, const Mat3& to_global, int row,
              double* out)
{
    for (int col = 0; col < kLidarCols; ++col)
    {
        const Direction d = to_global.apply(lidar_ray_direction(row, col));
        const auto hit = env.raycast(pos, d, kLidarMaxRangeM);
        out[col] = (hit && *hit >= kLidarMinRangeM) ? *hit : kNoReturnRange;
    }
}

} // namespace

PointCloudFrame lidar_scan(const Environment& env, const Vec3& pos, const Orientation& orient,
                           std::int64_t t_ns, Exec exec)
{
    if (env.point_inside_obstacle(pos))
        throw std::domain_error("lidar pose lies inside an obstacle");

    PointCloudFrame frame;
    frame.t_ns = t_ns;
    frame.sensor_pos = pos;
    frame.sensor_orient = orient;
    frame.ranges.resize(std::size_t(kLidarRows) * kLidarCols);

    const Mat3 to_global = rotation_local_to_global(orient);

    if (exec == Exec::Parallel)
    {
#pragma omp parallel for schedule(static)
        for (int row = 0; row < kLidarRows; ++row)
            scan_row(env, pos, to_global, row, frame.ranges.data() + std::size_t(row) * kLidarCols);
    }
    else
    {
        for (int row = 0; row < kLidarRows; ++row)
            scan_row(env, pos, to_global, row, frame.ranges.data() + std::size_t(row) * kLidarCols);
    }
    return frame;
}

namespace {

// WGS-84 ellipsoid
constexpr double kWgsA = 6378137.0;
constexpr double kWgsF = 1.0 / 298.257223563;
constexpr double kWgsE2 = kWgsF * (2.0 - kWgsF);

} // namespace

Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m)
{
    const double lat = deg2rad(lat_deg);
    const double lon = deg2rad(lon_deg);
    const double sl = std::sin(lat);
    const double n = kWgsA / std::sqrt(1.0 - kWgsE2 * sl * sl);
    return {(n + alt_m) * std::cos(lat) * std::cos(lon),
            (n + alt_m) * std::cos(lat) * std::sin(lon), (n * (1.0 - kWgsE2) + alt_m) * sl};
}

GeodeticOrigin ecef_to_geodetic(const Vec3& ecef)
{
    const double p = std::hypot(ecef.x, ecef.y);
    const double lon = std::atan2(ecef.y, ecef.x);

    // Bowring start, then fixed-point refinement to machine precision.
    double lat = std::atan2(ecef.z, p * (1.0 - kWgsE2));
    double alt = 0.0;
    for (int i = 0; i < 6; ++i)
    {
        const double sl = std::sin(lat);
        const double n = kWgsA / std::sqrt(1.0 - kWgsE2 * sl * sl);
        alt = p / std::cos(lat) - n;
        lat = std::atan2(ecef.z, p * (1.0 - kWgsE2 * n / (n + alt)));
    }
    return {rad2deg(lat), rad2deg(lon), alt};
}

Vec3 geodetic_to_enu(double lat_deg, double lon_deg, double alt_m, const GeodeticOrigin& origin)
{
    const Vec3 d = geodetic_to_ecef(lat_deg, lon_deg, alt_m) -
                   geodetic_to_ecef(origin.lat_deg, origin.lon_deg, origin.alt_m);
    const double lat = deg2rad(origin.lat_deg);
    const double lon = deg2rad(origin.lon_deg);
    const double sl = std::sin(lat), cl = std::cos(lat);
    const double so = std::sin(lon), co = std::cos(lon);
    return {-so * d.x + co * d.y, -sl * co * d.x - sl * so * d.y + cl * d.z,
            cl * co * d.x + cl * so * d.y + sl * d.z};
}

GeodeticOrigin enu_to_geodetic(const Vec3& enu, const GeodeticOrigin& origin)
{
    const double lat = deg2rad(origin.lat_deg);
    const double lon = deg2rad(origin.lon_deg);
    const double sl = std::sin(lat), cl = std::cos(lat);
    const double so = std::sin(lon), co = std::cos(lon);
    const Vec3 d{-so * enu.x - sl * co * enu.y + cl * co * enu.z,
                 co * enu.x - sl * so * enu.y + cl * so * enu.z, cl * enu.y + sl * enu.z};
    return ecef_to_geodetic(geodetic_to_ecef(origin.lat_deg, origin.lon_deg, origin.alt_m) + d);
}

GpsFix gps_fix(const Vec3& true_position_enu, const GeodeticOrigin& origin, double sigma_h_m,
               double sigma_v_m, std::uint64_t seed, std::int64_t t_ns)
{
    SplitMix64 rng(seed);
    const auto gh = rng.gaussian_pair();
    const auto gv = rng.gaussian_pair();
    const Vec3 noisy = true_position_enu +
                       Vec3{sigma_h_m * gh.real(), sigma_h_m * gh.imag(), sigma_v_m * gv.real()};
    const GeodeticOrigin geo = enu_to_geodetic(noisy, origin);
    return {geo.lat_deg, geo.lon_deg, geo.alt_m, t_ns};
}

std::int64_t sensor_grid_ns(std::int64_t k, double rate_hz)
{
    if (rate_hz <= 0.0)
        throw std::invalid_argument("sensor rate must be positive");
    // Round-half-up in integer nanoseconds; exact for rates dividing 1e9.
    const double period = 1e9 / rate_hz;
    return std::int64_t(std::llround(double(k) * period));
}

std::int64_t sensor_tick_count(std::int64_t duration_ns, double rate_hz)
{
    if (duration_ns <= 0)
        return 0;
    std::int64_t k = std::int64_t(double(duration_ns) * rate_hz / 1e9) + 2;
    while (k > 0 && sensor_grid_ns(k - 1, rate_hz) >= duration_ns)
        --k;
    return k;
}

CameraFrameMeta camera_tick(std::int64_t t_ns, const Vec3& pos, const Orientation& orient,
                            double rate_hz)
{
    const std::int64_t k = std::int64_t(std::llround(double(t_ns) * rate_hz / 1e9));
    if (sensor_grid_ns(k, rate_hz) != t_ns)
        throw std::logic_error("camera tick timestamp is off the frame grid");

    CameraFrameMeta meta;
    meta.frame_index = k;
    meta.t_ns = t_ns;
    meta.pos = pos;
    meta.orient = orient;
    meta.fov_deg = 360.0;
    return meta;
}

} // namespace mmtwin
