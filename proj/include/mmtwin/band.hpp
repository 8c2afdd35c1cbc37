// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mmtwin {

// Host SDR model; sets the instantaneous-bandwidth cap.
enum class HardwareProfile { X410, X310, N310 };

inline double bandwidth_cap_hz(HardwareProfile p)
{
    switch (p)
    {
    case HardwareProfile::X410: return 400e6;
    case HardwareProfile::X310: return 160e6;
    case HardwareProfile::N310: return 100e6;
    }
    throw std::logic_error("unknown hardware profile");
}

inline const char* hardware_profile_name(HardwareProfile p)
{
    switch (p)
    {
    case HardwareProfile::X410: return "X410";
    case HardwareProfile::X310: return "X310";
    case HardwareProfile::N310: return "N310";
    }
    return "?";
}

// One RF chain: carrier, baseband rates and the TX/RX budget knobs.
struct Band {
    double carrier_hz = 28e9;     // 28e9 or 60e9
    double bandwidth_hz = 400e6;  // occupied bandwidth, capped by the profile
    double baseband_hz = 1e9;     // IF at which the SDR hands samples to the front end
    double sample_rate_hz = 400e6;
    double tx_power_dbm = 0.0;
    double noise_figure_db = 10.0;

    // 28 or 60; also the <band_id> directory name in exported datasets.
    int band_id() const
    {
        if (carrier_hz == 28e9)
            return 28;
        if (carrier_hz == 60e9)
            return 60;
        throw std::invalid_argument("band carrier must be 28 GHz or 60 GHz");
    }

    double wavelength_m() const { return kSpeedOfLight / carrier_hz; }

    void validate(HardwareProfile profile) const
    {
        band_id(); // checks the carrier
        if (bandwidth_hz <= 0.0)
            throw std::invalid_argument("band bandwidth must be positive");
        if (bandwidth_hz > bandwidth_cap_hz(profile))
            throw std::invalid_argument(std::string("bandwidth exceeds profile cap ") +
                                        std::to_string(int(bandwidth_cap_hz(profile) / 1e6)) +
                                        " MHz");
        if (sample_rate_hz < bandwidth_hz)
            throw std::invalid_argument("sample rate must be >= bandwidth");
    }
};

// Thermal floor plus receiver noise figure over the occupied bandwidth.
inline double noise_floor_dbm(const Band& b)
{
    return -174.0 + b.noise_figure_db + 10.0 * std::log10(b.bandwidth_hz);
}

} // namespace mmtwin
