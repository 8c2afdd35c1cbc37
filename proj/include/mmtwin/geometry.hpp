// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mmtwin {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0; // m/s

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

// Wrap an angle into [-180, 180).
inline double wrap_deg(double d)
{
    double w = std::fmod(d + 180.0, 360.0);
    if (w < 0.0)
        w += 360.0;
    return w - 180.0;
}

// Wrap a phase into [-pi, pi).
inline double wrap_rad(double r)
{
    double w = std::fmod(r + kPi, 2.0 * kPi);
    if (w < 0.0)
        w += 2.0 * kPi;
    return w - kPi;
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const
    {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const
    {
        const double n = norm();
        if (n == 0.0)
            throw std::domain_error("cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
};

// Global pointing direction: unit 3-vector, x = boresight of the world frame.
using Direction = Vec3;

// Mechanical turntable angles. Roll is fixed at 0.
struct Orientation {
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;

    Orientation() = default;
    Orientation(double yaw, double pitch) : yaw_deg(yaw), pitch_deg(pitch)
    {
        if (yaw_deg < -180.0 || yaw_deg >= 180.0)
            throw std::invalid_argument("orientation yaw out of [-180, 180)");
        if (pitch_deg < -90.0 || pitch_deg > 90.0)
            throw std::invalid_argument("orientation pitch out of [-90, 90]");
    }

    bool operator==(const Orientation& o) const
    {
        return yaw_deg == o.yaw_deg && pitch_deg == o.pitch_deg;
    }
};

// Row-major 3x3 matrix; enough linear algebra for frame rotations.
struct Mat3 {
    std::array<double, 9> m{};

    Vec3 apply(const Vec3& v) const
    {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 transposed() const
    {
        return {{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
    }

    static Mat3 multiply(const Mat3& a, const Mat3& b)
    {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[3 * i + j] = a.m[3 * i] * b.m[j] + a.m[3 * i + 1] * b.m[3 + j] +
                                 a.m[3 * i + 2] * b.m[6 + j];
        return r;
    }
};

// Intrinsic yaw-then-pitch, right-handed, x = boresight, z = up.
// Positive yaw turns the boresight toward +y, positive pitch raises it
// toward +z. The matrix maps turntable-local coordinates to global ones.
inline Mat3 rotation_local_to_global(const Orientation& o)
{
    const double cy = std::cos(deg2rad(o.yaw_deg));
    const double sy = std::sin(deg2rad(o.yaw_deg));
    const double cp = std::cos(deg2rad(o.pitch_deg));
    const double sp = std::sin(deg2rad(o.pitch_deg));
    const Mat3 yaw{{cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0}};
    const Mat3 pitch{{cp, 0.0, -sp, 0.0, 1.0, 0.0, sp, 0.0, cp}};
    return Mat3::multiply(yaw, pitch);
}

// Unit vector for (azimuth, elevation) in a frame with x = boresight.
inline Direction direction_from_angles(double az_deg, double el_deg)
{
    const double az = deg2rad(az_deg);
    const double el = deg2rad(el_deg);
    return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

struct AzEl {
    double az_deg;
    double el_deg;
};

inline AzEl angles_from_direction(const Direction& d)
{
    const double el = std::asin(std::clamp(d.z, -1.0, 1.0));
    const double az = std::atan2(d.y, d.x);
    return {rad2deg(az), rad2deg(el)};
}

// WGS-84 geodetic anchor of the local ENU frame.
struct GeodeticOrigin {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double alt_m = 0.0;
};

} // namespace mmtwin
