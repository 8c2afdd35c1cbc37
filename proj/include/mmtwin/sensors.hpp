// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/channel.hpp"
#include "mmtwin/geometry.hpp"

#include <cstdint>
#include <vector>

namespace mmtwin {

// Kernel execution policy. Parallel and Serial are bit-identical by
// construction; Serial is the reference the tests compare against.
enum class Exec { Serial, Parallel };

inline constexpr int kLidarRows = 128;
inline constexpr int kLidarCols = 2048;
inline constexpr double kLidarMinRangeM = 0.3;
inline constexpr double kLidarMaxRangeM = 200.0;
inline constexpr double kLidarVerticalFovDeg = 45.0; // +/- 22.5
inline constexpr double kNoReturnRange = 0.0;

// One LiDAR revolution as a 128x2048 range image (row = vertical channel,
// column = horizontal step), row-major, meters, 0.0 = no return. Kept in
// double precision in memory; the exported .bin files quantize to float32.
struct PointCloudFrame {
    std::int64_t t_ns = 0;
    Vec3 sensor_pos;
    Orientation sensor_orient;
    std::vector<double> ranges; // kLidarRows * kLidarCols

    double at(int row, int col) const { return ranges[std::size_t(row) * kLidarCols + col]; }
};

// Ray (i, j) leaves at azimuth -180 + j*(360/2048) and elevation
// -22.5 + i*(45/127) degrees in the sensor frame.
Direction lidar_ray_direction(int row, int col);

PointCloudFrame lidar_scan(const Environment& env, const Vec3& pos, const Orientation& orient,
                           std::int64_t t_ns, Exec exec = Exec::Parallel);

struct GpsFix {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double alt_m = 0.0;
    std::int64_t t_ns = 0;
};

// WGS-84 conversions (via ECEF).
Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m);
GeodeticOrigin ecef_to_geodetic(const Vec3& ecef);
Vec3 geodetic_to_enu(double lat_deg, double lon_deg, double alt_m, const GeodeticOrigin& origin);
GeodeticOrigin enu_to_geodetic(const Vec3& enu, const GeodeticOrigin& origin);

// ENU position -> geodetic fix with zero-mean Gaussian ENU noise
// (sigma_h per horizontal axis, sigma_v vertical). Same seed, same fix.
GpsFix gps_fix(const Vec3& true_position_enu, const GeodeticOrigin& origin, double sigma_h_m,
               double sigma_v_m, std::uint64_t seed, std::int64_t t_ns);

struct CameraFrameMeta {
    std::int64_t frame_index = 0;
    std::int64_t t_ns = 0;
    Vec3 pos;
    Orientation orient;
    double fov_deg = 360.0;
};

// k-th tick of a rate_hz grid, rounded to integer nanoseconds.
std::int64_t sensor_grid_ns(std::int64_t k, double rate_hz);

// Number of grid ticks in [0, duration_ns).
std::int64_t sensor_tick_count(std::int64_t duration_ns, double rate_hz);

// Frame metadata for a tick of the camera grid; off-grid timestamps are a
// contract violation.
CameraFrameMeta camera_tick(std::int64_t t_ns, const Vec3& pos, const Orientation& orient,
                            double rate_hz = 30.0);

} // namespace mmtwin
