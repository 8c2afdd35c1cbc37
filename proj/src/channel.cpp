// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/channel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace mmtwin {

namespace {

constexpr double kSegmentEps = 1e-9; // parametric slack at segment endpoints

// Slab test: does the segment a + t*(b-a), t in (eps, 1-eps), pass through
// the box interior?
bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box)
{
    const Vec3 d = b - a;
    double t0 = kSegmentEps;
    double t1 = 1.0 - kSegmentEps;

    const double av[3] = {a.x, a.y, a.z};
    const double dv[3] = {d.x, d.y, d.z};
    const double mn[3] = {box.min.x, box.min.y, box.min.z};
    const double mx[3] = {box.max.x, box.max.y, box.max.z};

    for (int i = 0; i < 3; ++i)
    {
        if (dv[i] == 0.0)
        {
            if (av[i] < mn[i] || av[i] > mx[i])
                return false;
            continue;
        }
        double lo = (mn[i] - av[i]) / dv[i];
        double hi = (mx[i] - av[i]) / dv[i];
        if (lo > hi)
            std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (t0 > t1)
            return false;
    }
    return true;
}

// Crossing point of the segment with the reflector's plane, if it lies
// within the rectangle extents.
std::optional<double> segment_hits_rect(const Vec3& a, const Vec3& b, const Reflector& r)
{
    const Vec3 d = b - a;
    const double denom = d.dot(r.normal);
    if (denom == 0.0)
        return std::nullopt; // parallel; grazing contact does not block
    const double t = (r.center - a).dot(r.normal) / denom;
    if (t <= kSegmentEps || t >= 1.0 - kSegmentEps)
        return std::nullopt;
    const Vec3 p = a + d * t;
    const Vec3 rel = p - r.center;
    if (std::abs(rel.dot(r.u)) > 0.5 * r.width_m || std::abs(rel.dot(r.v)) > 0.5 * r.height_m)
        return std::nullopt;
    return t;
}

// Ray-box slab intersection: nearest t > 0 where the ray enters the box.
std::optional<double> ray_hits_box(const Vec3& o, const Vec3& dir, const Box& box)
{
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();

    const double ov[3] = {o.x, o.y, o.z};
    const double dv[3] = {dir.x, dir.y, dir.z};
    const double mn[3] = {box.min.x, box.min.y, box.min.z};
    const double mx[3] = {box.max.x, box.max.y, box.max.z};

    for (int i = 0; i < 3; ++i)
    {
        if (dv[i] == 0.0)
        {
            if (ov[i] < mn[i] || ov[i] > mx[i])
                return std::nullopt;
            continue;
        }
        double lo = (mn[i] - ov[i]) / dv[i];
        double hi = (mx[i] - ov[i]) / dv[i];
        if (lo > hi)
            std::swap(lo, hi);
        t0 = std::max(t0, lo);
        t1 = std::min(t1, hi);
        if (t0 > t1)
            return std::nullopt;
    }
    if (t1 <= 0.0)
        return std::nullopt;
    return t0 > 0.0 ? t0 : t1;
}

std::optional<double> ray_hits_rect(const Vec3& o, const Vec3& dir, const Reflector& r)
{
    const double denom = dir.dot(r.normal);
    if (denom == 0.0)
        return std::nullopt;
    const double t = (r.center - o).dot(r.normal) / denom;
    if (t <= 0.0)
        return std::nullopt;
    const Vec3 p = o + dir * t;
    const Vec3 rel = p - r.center;
    if (std::abs(rel.dot(r.u)) > 0.5 * r.width_m || std::abs(rel.dot(r.v)) > 0.5 * r.height_m)
        return std::nullopt;
    return t;
}

} // namespace

Reflector::Reflector(const Vec3& c, const Vec3& n, double width, double height, double loss)
    : center(c), width_m(width), height_m(height), loss_db(loss)
{
    if (width_m <= 0.0 || height_m <= 0.0)
        throw std::invalid_argument("reflector extents must be strictly positive");
    if (loss_db < 0.0)
        throw std::invalid_argument("reflection loss must be >= 0 dB");
    normal = n.normalized();
    // Deterministic in-plane basis: u horizontal when possible, v completes
    // the right-handed triad.
    const Vec3 up{0.0, 0.0, 1.0};
    if (std::abs(normal.dot(up)) > 1.0 - 1e-9)
        u = Vec3{1.0, 0.0, 0.0};
    else
        u = up.cross(normal).normalized();
    v = normal.cross(u);
}

Environment::Environment(std::vector<Box> boxes, std::vector<Reflector> reflectors,
                         GeodeticOrigin origin)
    : boxes_(std::move(boxes)), reflectors_(std::move(reflectors)), origin_(origin)
{
}

bool Environment::point_inside_obstacle(const Vec3& p) const
{
    for (const Box& b : boxes_)
        if (b.contains(p))
            return true;
    return false;
}

bool Environment::segment_blocked(const Vec3& a, const Vec3& b, const Reflector* skip) const
{
    for (const Box& box : boxes_)
        if (segment_hits_box(a, b, box))
            return true;
    for (const Reflector& r : reflectors_)
    {
        if (&r == skip)
            continue;
        if (segment_hits_rect(a, b, r))
            return true;
    }
    return false;
}

std::optional<double> Environment::raycast(const Vec3& origin, const Vec3& dir,
                                           double t_max) const
{
    double best = t_max;
    bool hit = false;
    for (const Box& b : boxes_)
        if (auto t = ray_hits_box(origin, dir, b); t && *t <= best)
        {
            best = *t;
            hit = true;
        }
    for (const Reflector& r : reflectors_)
        if (auto t = ray_hits_rect(origin, dir, r); t && *t <= best)
        {
            best = *t;
            hit = true;
        }
    return hit ? std::optional<double>(best) : std::nullopt;
}

double friis_loss_db(double carrier_hz, double distance_m)
{
    if (distance_m <= 0.0)
        throw std::domain_error("friis distance must be positive");
    return 20.0 * std::log10(4.0 * kPi * distance_m * carrier_hz / kSpeedOfLight);
}

std::vector<PathComponent> trace_paths(const Environment& env, const Vec3& tx_pos,
                                       const Vec3& rx_pos, double carrier_hz)
{
    if ((rx_pos - tx_pos).norm() < 1e-12)
        throw std::domain_error("TX and RX positions coincide");

    const double lambda = kSpeedOfLight / carrier_hz;
    std::vector<PathComponent> paths;

    auto finalize = [&](PathComponent& p) {
        p.delay_s = p.length_m / kSpeedOfLight;
        p.phase_rad = wrap_rad(-2.0 * kPi * p.length_m / lambda);
    };

    if (!env.segment_blocked(tx_pos, rx_pos))
    {
        PathComponent p;
        p.kind = PathKind::Los;
        p.length_m = (rx_pos - tx_pos).norm();
        p.aod = (rx_pos - tx_pos).normalized();
        p.aoa = (tx_pos - rx_pos).normalized();
        p.gain_db = -friis_loss_db(carrier_hz, p.length_m);
        finalize(p);
        paths.push_back(std::move(p));
    }

    const auto& reflectors = env.reflectors();
    for (std::size_t i = 0; i < reflectors.size(); ++i)
    {
        const Reflector& r = reflectors[i];
        const double d_tx = (tx_pos - r.center).dot(r.normal);
        const double d_rx = (rx_pos - r.center).dot(r.normal);
        if (d_tx * d_rx <= 0.0)
            continue; // opposite sides, or an endpoint on the plane

        // Mirror the TX across the plane; the specular point is where the
        // image-RX segment crosses it.
        const Vec3 image = tx_pos - r.normal * (2.0 * d_tx);
        const Vec3 seg = rx_pos - image;
        const double denom = seg.dot(r.normal);
        if (denom == 0.0)
            continue;
        const double t = (r.center - image).dot(r.normal) / denom;
        if (t <= 0.0 || t >= 1.0)
            continue;
        const Vec3 p = image + seg * t;
        const Vec3 rel = p - r.center;
        if (std::abs(rel.dot(r.u)) > 0.5 * r.width_m || std::abs(rel.dot(r.v)) > 0.5 * r.height_m)
            continue;
        if (env.segment_blocked(tx_pos, p, &r) || env.segment_blocked(p, rx_pos, &r))
            continue;

        PathComponent pc;
        pc.kind = PathKind::Reflection;
        pc.reflection_point = p;
        pc.reflector_index = int(i);
        pc.length_m = (p - tx_pos).norm() + (rx_pos - p).norm();
        pc.aod = (p - tx_pos).normalized();
        pc.aoa = (p - rx_pos).normalized();
        pc.gain_db = -friis_loss_db(carrier_hz, pc.length_m) - r.loss_db;
        finalize(pc);
        paths.push_back(std::move(pc));
    }

    std::stable_sort(paths.begin(), paths.end(),
                     [](const PathComponent& a, const PathComponent& b) {
                         return a.delay_s < b.delay_s;
                     });
    return paths;
}

RssResult rss_dbm(const Band& band, const GainFn& tx_gain, const GainFn& rx_gain,
                  std::span<const PathComponent> paths)
{
    if (paths.empty())
        return {kRssSentinelDbm, 0.0};

    std::complex<double> v{0.0, 0.0};
    double amp_sum = 0.0;
    for (const PathComponent& p : paths)
    {
        const double level_db =
            band.tx_power_dbm + tx_gain(p.aod) + rx_gain(p.aoa) + p.gain_db;
        const double amp = std::pow(10.0, level_db / 20.0);
        amp_sum += amp;
        v += amp * std::complex<double>(std::cos(p.phase_rad), std::sin(p.phase_rad));
    }

    const double mag = std::abs(v);
    // Residuals below the coherent sum's floating-point noise are treated as
    // perfect cancellation.
    if (mag <= amp_sum * 1e-12)
        return {kRssSentinelDbm, 0.0};
    return {20.0 * std::log10(mag), std::arg(v)};
}

} // namespace mmtwin
