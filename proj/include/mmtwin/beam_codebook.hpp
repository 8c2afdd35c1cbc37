// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/band.hpp"
#include "mmtwin/geometry.hpp"

#include <complex>
#include <span>
#include <vector>

namespace mmtwin {

// Gain floor for pattern nulls and back-hemisphere directions. Keeps link
// budgets finite and records numeric/sortable.
inline constexpr double kGainFloorDb = -200.0;

inline constexpr int kCodebookSize = 22;
inline constexpr double kCodebookMinAzDeg = -45.0;
inline constexpr double kCodebookMaxAzDeg = 45.0;
inline constexpr double kDefaultElementGainDbi = 5.0;

// Uniform planar array in the y-z plane, boresight +x. Azimuth axis = y,
// elevation axis = z, half-wavelength spacing by default.
struct ArrayGeometry {
    int n_az = 1;
    int n_el = 1;
    double spacing_wavelengths = 0.5;
    double carrier_hz = 28e9;

    ArrayGeometry() = default;
    ArrayGeometry(int az, int el, double spacing, double carrier)
        : n_az(az), n_el(el), spacing_wavelengths(spacing), carrier_hz(carrier)
    {
        if (n_az < 1 || n_el < 1)
            throw std::invalid_argument("array needs at least one element per axis");
        if (spacing_wavelengths <= 0.0)
            throw std::invalid_argument("element spacing must be positive");
        if (carrier_hz <= 0.0)
            throw std::invalid_argument("carrier frequency must be positive");
    }

    int element_count() const { return n_az * n_el; }

    // 8x2 at 28 GHz, 8x4 at 60 GHz.
    static ArrayGeometry for_band(const Band& band);
};

// One electronic beam: phase-only steering weights for every element.
struct BeamCodebookEntry {
    int index = 0;
    double az_deg = 0.0;
    double el_deg = 0.0;
    std::vector<std::complex<double>> weights;
};

// Unit-modulus steering weights, conjugate-matched so the array response is
// maximal toward (az, el). Element (p, q) gets phase
// -2*pi*spacing*(p*sin(az)*cos(el) + q*sin(el)).
std::vector<std::complex<double>> steering_weights(const ArrayGeometry& geom, double az_deg,
                                                   double el_deg);

// 10*log10(|sum_k w_k a_k(dir)|^2 / N) + element_gain_dbi with a hemispheric
// cutoff: directions behind the array plane report kGainFloorDb, as do
// pattern nulls. Peak gain at the steered direction is
// 10*log10(N) + element_gain_dbi.
double array_gain_dbi(const ArrayGeometry& geom, std::span<const std::complex<double>> weights,
                      double dir_az_deg, double dir_el_deg,
                      double element_gain_dbi = kDefaultElementGainDbi);

// The 22-entry electronic codebook: azimuths uniformly spaced over
// [-45, +45] inclusive, elevation 0, indices ascending with azimuth.
std::vector<BeamCodebookEntry> generate_codebook(const ArrayGeometry& geom);

// Global pointing direction of an electronic beam mounted on a turntable.
// Composing with mech = (0, 0) is the identity.
Direction compose_orientation(const Orientation& mech, const BeamCodebookEntry& entry);

// An electronic beam composed with a mechanical orientation, evaluated in
// global coordinates. This is the gain callback handed to the channel.
class SteeredPattern {
  public:
    SteeredPattern(const ArrayGeometry& geom, std::span<const std::complex<double>> weights,
                   const Orientation& mech, double element_gain_dbi = kDefaultElementGainDbi)
        : geom_(geom), weights_(weights.begin(), weights.end()),
          global_to_local_(rotation_local_to_global(mech).transposed()),
          element_gain_dbi_(element_gain_dbi)
    {
    }

    double gain_dbi(const Direction& global_dir) const
    {
        const Vec3 local = global_to_local_.apply(global_dir);
        const AzEl a = angles_from_direction(local);
        return array_gain_dbi(geom_, weights_, a.az_deg, a.el_deg, element_gain_dbi_);
    }

  private:
    ArrayGeometry geom_;
    std::vector<std::complex<double>> weights_;
    Mat3 global_to_local_;
    double element_gain_dbi_;
};

} // namespace mmtwin
