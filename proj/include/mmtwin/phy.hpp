// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/band.hpp"
#include "mmtwin/channel.hpp"
#include "mmtwin/geometry.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmtwin {

using Cplx = std::complex<double>;

// Frame layout in QPSK symbols (one complex baseband sample per symbol):
//   preamble: two identical 64-symbol PN halves (Schmidl-Cox style)
//   header:   16-bit payload length + 8-bit sequence number = 12 symbols
//   payload:  4 symbols per byte
//   crc:      CRC-32 over header+payload bytes = 16 symbols
inline constexpr int kPreambleHalfSymbols = 64;
inline constexpr int kPreambleSymbols = 2 * kPreambleHalfSymbols;
inline constexpr int kHeaderSymbols = 12;
inline constexpr int kCrcSymbols = 16;
inline constexpr std::size_t kMaxPayloadBytes = 65535;

// Minimum repeated-half correlation metric for preamble detection. The
// metric settles near snr/(1+snr), so 0.45 keeps frames at 0 dB SNR mostly
// detectable while noise-only windows false-alarm with probability < 1e-5.
inline constexpr double kDetectionThreshold = 0.45;

// Thrown when the preamble correlator finds no frame in the sample window.
class DetectionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// CRC-32 (polynomial 0x04C11DB7, reflected, init and final xor 0xFFFFFFFF).
std::uint32_t crc32(std::span<const std::uint8_t> data);

struct Frame {
    std::vector<std::uint8_t> payload;
    std::uint8_t seq = 0;
    std::uint32_t crc = 0;
    std::vector<Cplx> samples; // unit mean symbol energy

    std::size_t symbol_count() const { return samples.size(); }
};

// The fixed PN preamble, known to both ends (128 symbols, two equal halves).
std::span<const Cplx> preamble_sequence();

// Deterministic framing: same payload and seq give bit-identical samples.
Frame make_frame(std::span<const std::uint8_t> payload, std::uint8_t seq);

// Channel impairments applied on top of the ground-truth RSS/phase.
// Identical seeds produce identical noise realizations.
struct Impairments {
    double cfo_hz = 0.0;
    double phase_rad = 0.0;
    bool noise = true;
    std::uint64_t seed = 0;
};

// Scales the frame to the ground-truth RSS, rotates it by the composite
// channel phase plus the static impairment phase, applies the progressive
// CFO rotation and adds thermal noise at the band's floor.
std::vector<Cplx> apply_channel(const Frame& frame, const RssResult& ground_truth,
                                const Band& band, const Impairments& imp);

// Schmidl-Cox repeated-half correlator over the 2x64-symbol preamble.
// Unambiguous range is +/- f_s / (2*64). Throws DetectionError when the
// correlation metric stays below kDetectionThreshold.
double estimate_cfo_hz(std::span<const Cplx> received, const Band& band);

// 10*log10(mean |r|^2); same scale as the ground-truth RSS. All-zero input
// returns the kRssSentinelDbm floor.
double estimate_rss_dbm(std::span<const Cplx> received);

// Data-aided phase estimate against the known preamble, after derotating
// with the given CFO.
double estimate_phase_rad(std::span<const Cplx> received, double cfo_hz, const Band& band);

struct DecodeResult {
    std::vector<std::uint8_t> payload;
    std::uint8_t seq = 0;
    bool crc_ok = false;
};

// Hard-decision QPSK demap after optional CFO + phase correction. A CRC
// mismatch is a result, not an error; a missed preamble throws.
DecodeResult decode(std::span<const Cplx> received, const Band& band, bool cfo_correction);

// Per TX/RX beam-pair record, one row of the measurements CSV.
struct BeamPairMeasurement {
    int band_id = 0;
    int tx_entry_index = 0;
    int rx_entry_index = 0;
    Orientation tx_mech;
    Orientation rx_mech;
    double rss_dbm_est = kRssSentinelDbm;
    double cfo_hz_est = 0.0;
    double phase_rad_est = 0.0;
    bool crc_ok = false;
    std::int64_t timestamp_ns = 0;
};

// One probe exchange: channel, estimators, CRC. When the preamble is not
// detected (blocked pair, noise only) the record carries the RSS sentinel
// and crc_ok = false.
struct ProbeOutcome {
    double rss_dbm_est = kRssSentinelDbm;
    double cfo_hz_est = 0.0;
    double phase_rad_est = 0.0;
    bool crc_ok = false;
};

ProbeOutcome probe_link(const Frame& probe, const RssResult& ground_truth, const Band& band,
                        const Impairments& imp);

} // namespace mmtwin
