// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/beam_codebook.hpp"

#include <cmath>

namespace mmtwin {

ArrayGeometry ArrayGeometry::for_band(const Band& band)
{
    switch (band.band_id())
    {
    case 28: return {8, 2, 0.5, band.carrier_hz};
    case 60: return {8, 4, 0.5, band.carrier_hz};
    }
    throw std::invalid_argument("no array geometry for this band");
}

namespace {

// Per-element phase of the ideal response toward (az, el): element (p, q)
// sits at (p*d, q*d) wavelengths along the azimuth/elevation axes.
inline double response_phase(const ArrayGeometry& g, int p, int q, double sin_az_cos_el,
                             double sin_el)
{
    return 2.0 * kPi * g.spacing_wavelengths * (double(p) * sin_az_cos_el + double(q) * sin_el);
}

} // namespace

std::vector<std::complex<double>> steering_weights(const ArrayGeometry& geom, double az_deg,
                                                   double el_deg)
{
    if (std::abs(az_deg) > 90.0 || std::abs(el_deg) > 90.0)
        throw std::invalid_argument("steering angles must lie within +/-90 degrees");

    const double az = deg2rad(az_deg);
    const double el = deg2rad(el_deg);
    const double sac = std::sin(az) * std::cos(el);
    const double se = std::sin(el);

    std::vector<std::complex<double>> w;
    w.reserve(std::size_t(geom.element_count()));
    for (int q = 0; q < geom.n_el; ++q)
        for (int p = 0; p < geom.n_az; ++p)
        {
            const double phase = -response_phase(geom, p, q, sac, se);
            w.emplace_back(std::cos(phase), std::sin(phase));
        }
    return w;
}

double array_gain_dbi(const ArrayGeometry& geom, std::span<const std::complex<double>> weights,
                      double dir_az_deg, double dir_el_deg, double element_gain_dbi)
{
    const std::size_t n = std::size_t(geom.element_count());
    if (weights.size() != n)
        throw std::invalid_argument("weight vector length does not match array geometry");

    const Direction d = direction_from_angles(dir_az_deg, dir_el_deg);
    if (d.x <= 0.0)
        return kGainFloorDb; // behind the array plane

    const double az = deg2rad(dir_az_deg);
    const double el = deg2rad(dir_el_deg);
    const double sac = std::sin(az) * std::cos(el);
    const double se = std::sin(el);

    std::complex<double> sum{0.0, 0.0};
    std::size_t k = 0;
    for (int q = 0; q < geom.n_el; ++q)
        for (int p = 0; p < geom.n_az; ++p, ++k)
        {
            const double phase = response_phase(geom, p, q, sac, se);
            sum += weights[k] * std::complex<double>(std::cos(phase), std::sin(phase));
        }

    const double power = std::norm(sum) / double(n);
    if (power <= 0.0)
        return kGainFloorDb;
    const double gain = 10.0 * std::log10(power) + element_gain_dbi;
    return std::max(gain, kGainFloorDb);
}

std::vector<BeamCodebookEntry> generate_codebook(const ArrayGeometry& geom)
{
    std::vector<BeamCodebookEntry> book;
    book.reserve(kCodebookSize);
    const double step = (kCodebookMaxAzDeg - kCodebookMinAzDeg) / double(kCodebookSize - 1);
    for (int i = 0; i < kCodebookSize; ++i)
    {
        BeamCodebookEntry e;
        e.index = i;
        e.az_deg = kCodebookMinAzDeg + double(i) * step;
        e.el_deg = 0.0;
        e.weights = steering_weights(geom, e.az_deg, e.el_deg);
        book.push_back(std::move(e));
    }
    return book;
}

Direction compose_orientation(const Orientation& mech, const BeamCodebookEntry& entry)
{
    const Direction local = direction_from_angles(entry.az_deg, entry.el_deg);
    return rotation_local_to_global(mech).apply(local);
}

} // namespace mmtwin
