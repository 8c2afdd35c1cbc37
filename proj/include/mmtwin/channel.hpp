// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/band.hpp"
#include "mmtwin/geometry.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mmtwin {

// "No energy arrives" sentinel; keeps RSS columns numeric and sortable.
inline constexpr double kRssSentinelDbm = -1000.0;

// Axis-aligned blocker. Boxes obstruct rays and LOS/reflection segments but
// never act as reflectors.
struct Box {
    Vec3 min;
    Vec3 max;

    Box() = default;
    Box(const Vec3& mn, const Vec3& mx) : min(mn), max(mx)
    {
        if (!(max.x > min.x && max.y > min.y && max.z > min.z))
            throw std::invalid_argument("box extents must be strictly positive");
    }
    static Box from_center(const Vec3& center, const Vec3& size)
    {
        return {center - size * 0.5, center + size * 0.5};
    }
    bool contains(const Vec3& p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
               p.z <= max.z;
    }
};

// Finite rectangular reflector: a plane patch that produces one specular
// bounce (image method) and also blocks segments crossing it.
struct Reflector {
    Vec3 center;
    Vec3 normal;   // unit
    double width_m = 0.0;  // extent along u
    double height_m = 0.0; // extent along v
    double loss_db = 0.0;  // material reflection loss, >= 0
    Vec3 u, v;             // in-plane basis, built at construction

    Reflector() = default;
    Reflector(const Vec3& c, const Vec3& n, double width, double height, double loss);
};

// Immutable scene snapshot: all queries are const and safe to share across
// threads.
class Environment {
  public:
    Environment() = default;
    Environment(std::vector<Box> boxes, std::vector<Reflector> reflectors,
                GeodeticOrigin origin = {});

    const std::vector<Box>& boxes() const { return boxes_; }
    const std::vector<Reflector>& reflectors() const { return reflectors_; }
    const GeodeticOrigin& origin() const { return origin_; }

    bool point_inside_obstacle(const Vec3& p) const;

    // Whether the open segment a->b crosses any box or reflector surface.
    // `skip` excludes one reflector (the one a bounce path terminates on).
    bool segment_blocked(const Vec3& a, const Vec3& b, const Reflector* skip = nullptr) const;

    // Distance to the nearest box/reflector surface along origin + t*dir,
    // t in (0, t_max]; nullopt when nothing is hit. dir must be unit length.
    std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double t_max) const;

  private:
    std::vector<Box> boxes_;
    std::vector<Reflector> reflectors_;
    GeodeticOrigin origin_;
};

enum class PathKind { Los, Reflection };

// One propagation path from TX to RX.
struct PathComponent {
    PathKind kind = PathKind::Los;
    Direction aod;          // unit, from the TX toward the first path point
    Direction aoa;          // unit, from the RX toward the last path point
    double length_m = 0.0;
    double delay_s = 0.0;   // length / c
    double gain_db = 0.0;   // -(Friis loss) - reflection loss
    double phase_rad = 0.0; // -2*pi*length/lambda, wrapped to [-pi, pi)
    Vec3 reflection_point;  // valid for Reflection paths
    int reflector_index = -1;
};

// Free-space path loss 20*log10(4*pi*d*f/c).
double friis_loss_db(double carrier_hz, double distance_m);

// LOS plus first-order specular reflections via the image method, blockage
// tested against the whole scene; sorted by increasing delay.
std::vector<PathComponent> trace_paths(const Environment& env, const Vec3& tx_pos,
                                       const Vec3& rx_pos, double carrier_hz);

using GainFn = std::function<double(const Direction&)>;

struct RssResult {
    double rss_dbm = kRssSentinelDbm;
    double phase_rad = 0.0;
};

// Coherent per-beam-pair received signal strength: sums path amplitudes with
// their carrier phases and the TX/RX pattern gains applied per path.
RssResult rss_dbm(const Band& band, const GainFn& tx_gain, const GainFn& rx_gain,
                  std::span<const PathComponent> paths);

} // namespace mmtwin
