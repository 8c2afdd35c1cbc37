// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/phy.hpp"

#include "mmtwin/rng.hpp"

#include <array>
#include <cmath>

namespace mmtwin {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;

// Gray-free direct map: bit0 drives I, bit1 drives Q.
inline Cplx qpsk_symbol(unsigned b0, unsigned b1)
{
    return {(b0 ? -1.0 : 1.0) * kInvSqrt2, (b1 ? -1.0 : 1.0) * kInvSqrt2};
}

void append_bytes_as_symbols(std::vector<Cplx>& out, std::span<const std::uint8_t> bytes)
{
    for (std::uint8_t byte : bytes)
        for (int b = 6; b >= 0; b -= 2) // MSB first, two bits per symbol
            out.push_back(qpsk_symbol((byte >> (b + 1)) & 1u, (byte >> b) & 1u));
}

const std::array<std::uint32_t, 256>& crc_table()
{
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i)
        {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

std::array<std::uint8_t, 3> header_bytes(std::size_t payload_len, std::uint8_t seq)
{
    return {std::uint8_t(payload_len >> 8), std::uint8_t(payload_len & 0xFF), seq};
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> data)
{
    const auto& t = crc_table();
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::uint8_t b : data)
        c = t[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::span<const Cplx> preamble_sequence()
{
    static const std::vector<Cplx> seq = [] {
        std::vector<Cplx> s;
        s.reserve(kPreambleSymbols);
        SplitMix64 pn(0x70616d626c653634ull); // fixed: both ends know the preamble
        for (int i = 0; i < kPreambleHalfSymbols; ++i)
        {
            const std::uint64_t r = pn.next();
            s.push_back(qpsk_symbol(unsigned(r & 1u), unsigned((r >> 1) & 1u)));
        }
        s.insert(s.end(), s.begin(), s.begin() + kPreambleHalfSymbols);
        return s;
    }();
    return seq;
}

Frame make_frame(std::span<const std::uint8_t> payload, std::uint8_t seq)
{
    if (payload.size() > kMaxPayloadBytes)
        throw std::domain_error("payload exceeds 65535 bytes");

    Frame f;
    f.payload.assign(payload.begin(), payload.end());
    f.seq = seq;

    const auto hdr = header_bytes(payload.size(), seq);
    std::vector<std::uint8_t> crc_input(hdr.begin(), hdr.end());
    crc_input.insert(crc_input.end(), payload.begin(), payload.end());
    f.crc = crc32(crc_input);

    const auto pre = preamble_sequence();
    f.samples.assign(pre.begin(), pre.end());
    f.samples.reserve(pre.size() + kHeaderSymbols + 4 * payload.size() + kCrcSymbols);
    append_bytes_as_symbols(f.samples, hdr);
    append_bytes_as_symbols(f.samples, payload);
    const std::array<std::uint8_t, 4> crc_bytes = {
        std::uint8_t(f.crc >> 24), std::uint8_t(f.crc >> 16), std::uint8_t(f.crc >> 8),
        std::uint8_t(f.crc & 0xFF)};
    append_bytes_as_symbols(f.samples, crc_bytes);
    return f;
}

std::vector<Cplx> apply_channel(const Frame& frame, const RssResult& ground_truth,
                                const Band& band, const Impairments& imp)
{
    // The sentinel means no energy arrives at all, not a very weak copy.
    const double amp = ground_truth.rss_dbm <= kRssSentinelDbm
                           ? 0.0
                           : std::pow(10.0, ground_truth.rss_dbm / 20.0);
    const double phase0 = ground_truth.phase_rad + imp.phase_rad;
    const double omega = 2.0 * kPi * imp.cfo_hz / band.sample_rate_hz;

    double noise_sigma = 0.0;
    if (imp.noise)
    {
        const double noise_power_mw = std::pow(10.0, noise_floor_dbm(band) / 10.0);
        noise_sigma = std::sqrt(noise_power_mw / 2.0); // per I/Q component
    }

    SplitMix64 rng(imp.seed);
    std::vector<Cplx> out;
    out.reserve(frame.samples.size());
    for (std::size_t n = 0; n < frame.samples.size(); ++n)
    {
        const double ph = phase0 + omega * double(n);
        Cplx r = frame.samples[n] * amp * Cplx{std::cos(ph), std::sin(ph)};
        if (imp.noise)
            r += noise_sigma * rng.gaussian_pair();
        out.push_back(r);
    }
    return out;
}

namespace {

struct PreambleCorrelation {
    Cplx p{0.0, 0.0};
    double metric = 0.0;
};

PreambleCorrelation correlate_halves(std::span<const Cplx> received)
{
    PreambleCorrelation c;
    if (received.size() < std::size_t(kPreambleSymbols))
        return c;
    double e1 = 0.0;
    double e2 = 0.0;
    for (int n = 0; n < kPreambleHalfSymbols; ++n)
    {
        c.p += std::conj(received[n]) * received[n + kPreambleHalfSymbols];
        e1 += std::norm(received[n]);
        e2 += std::norm(received[n + kPreambleHalfSymbols]);
    }
    const double denom = 0.5 * (e1 + e2);
    c.metric = denom > 0.0 ? std::abs(c.p) / denom : 0.0;
    return c;
}

} // namespace

double estimate_cfo_hz(std::span<const Cplx> received, const Band& band)
{
    const PreambleCorrelation c = correlate_halves(received);
    if (c.metric < kDetectionThreshold)
        throw DetectionError("preamble not detected");
    const double ts = 1.0 / band.sample_rate_hz;
    return std::arg(c.p) / (2.0 * kPi * double(kPreambleHalfSymbols) * ts);
}

double estimate_rss_dbm(std::span<const Cplx> received)
{
    if (received.empty())
        throw std::domain_error("empty sample window");
    double acc = 0.0;
    for (const Cplx& r : received)
        acc += std::norm(r);
    const double mean = acc / double(received.size());
    if (mean <= 0.0)
        return kRssSentinelDbm;
    return std::max(10.0 * std::log10(mean), kRssSentinelDbm);
}

double estimate_phase_rad(std::span<const Cplx> received, double cfo_hz, const Band& band)
{
    if (received.size() < std::size_t(kPreambleSymbols))
        throw DetectionError("sample window shorter than the preamble");
    const auto pre = preamble_sequence();
    const double omega = 2.0 * kPi * cfo_hz / band.sample_rate_hz;
    Cplx acc{0.0, 0.0};
    for (int n = 0; n < kPreambleSymbols; ++n)
    {
        const Cplx derot = received[n] * Cplx{std::cos(-omega * n), std::sin(-omega * n)};
        acc += std::conj(pre[n]) * derot;
    }
    return std::arg(acc);
}

DecodeResult decode(std::span<const Cplx> received, const Band& band, bool cfo_correction)
{
    const std::size_t min_len = std::size_t(kPreambleSymbols + kHeaderSymbols + kCrcSymbols);
    if (received.size() < min_len)
        throw DetectionError("sample window shorter than a minimal frame");
    const PreambleCorrelation c = correlate_halves(received);
    if (c.metric < kDetectionThreshold)
        throw DetectionError("preamble not detected");

    std::vector<Cplx> work(received.begin(), received.end());
    if (cfo_correction)
    {
        const double ts = 1.0 / band.sample_rate_hz;
        const double cfo = std::arg(c.p) / (2.0 * kPi * double(kPreambleHalfSymbols) * ts);
        const double omega = 2.0 * kPi * cfo / band.sample_rate_hz;
        for (std::size_t n = 0; n < work.size(); ++n)
            work[n] *= Cplx{std::cos(-omega * double(n)), std::sin(-omega * double(n))};

        const auto pre = preamble_sequence();
        Cplx acc{0.0, 0.0};
        for (int n = 0; n < kPreambleSymbols; ++n)
            acc += std::conj(pre[n]) * work[n];
        const double phase = std::arg(acc);
        const Cplx derot{std::cos(-phase), std::sin(-phase)};
        for (Cplx& s : work)
            s *= derot;
    }

    auto demap_bits = [&](std::size_t sym_offset, std::size_t n_bytes,
                          std::vector<std::uint8_t>& out) {
        for (std::size_t i = 0; i < n_bytes; ++i)
        {
            std::uint8_t byte = 0;
            for (int s = 0; s < 4; ++s)
            {
                const Cplx& sym = work[sym_offset + 4 * i + std::size_t(s)];
                byte = std::uint8_t(byte << 2) | std::uint8_t((sym.real() < 0.0 ? 2 : 0) |
                                                              (sym.imag() < 0.0 ? 1 : 0));
            }
            out.push_back(byte);
        }
    };

    DecodeResult res;
    std::vector<std::uint8_t> hdr;
    demap_bits(std::size_t(kPreambleSymbols), 3, hdr);
    const std::size_t payload_len = (std::size_t(hdr[0]) << 8) | hdr[1];
    res.seq = hdr[2];

    const std::size_t need =
        std::size_t(kPreambleSymbols + kHeaderSymbols + kCrcSymbols) + 4 * payload_len;
    if (received.size() < need)
        return res; // corrupted length field: crc_ok stays false

    demap_bits(std::size_t(kPreambleSymbols + kHeaderSymbols), payload_len, res.payload);
    std::vector<std::uint8_t> crc_bytes;
    demap_bits(std::size_t(kPreambleSymbols + kHeaderSymbols) + 4 * payload_len, 4, crc_bytes);
    const std::uint32_t rx_crc = (std::uint32_t(crc_bytes[0]) << 24) |
                                 (std::uint32_t(crc_bytes[1]) << 16) |
                                 (std::uint32_t(crc_bytes[2]) << 8) | crc_bytes[3];

    std::vector<std::uint8_t> crc_input(hdr.begin(), hdr.end());
    crc_input.insert(crc_input.end(), res.payload.begin(), res.payload.end());
    res.crc_ok = crc32(crc_input) == rx_crc;
    return res;
}

ProbeOutcome probe_link(const Frame& probe, const RssResult& ground_truth, const Band& band,
                        const Impairments& imp)
{
    const auto received = apply_channel(probe, ground_truth, band, imp);
    ProbeOutcome out;
    try
    {
        const DecodeResult dec = decode(received, band, /*cfo_correction=*/true);
        out.crc_ok = dec.crc_ok;
        out.cfo_hz_est = estimate_cfo_hz(received, band);
        out.phase_rad_est = estimate_phase_rad(received, out.cfo_hz_est, band);
        out.rss_dbm_est = estimate_rss_dbm(received);
    }
    catch (const DetectionError&)
    {
        // No frame found: report the sentinel rather than the noise floor.
        out = ProbeOutcome{};
    }
    return out;
}

} // namespace mmtwin
