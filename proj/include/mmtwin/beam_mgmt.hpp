// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#pragma once

#include "mmtwin/beam_codebook.hpp"
#include "mmtwin/channel.hpp"
#include "mmtwin/phy.hpp"
#include "mmtwin/recorder.hpp"
#include "mmtwin/sensors.hpp" // Exec

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace mmtwin {

// Exhaustive sweep schedule: every electronic TX/RX pair at every turntable
// position pair, `dwell` packets each.
struct SweepPlan {
    std::vector<std::pair<Orientation, Orientation>> turntable_positions; // (tx, rx)
    std::vector<int> tx_entries;
    std::vector<int> rx_entries;
    int dwell = 1;

    std::size_t measurement_count() const
    {
        return turntable_positions.size() * tx_entries.size() * rx_entries.size() *
               std::size_t(dwell);
    }
};

// Mechanical yaw positions spaced by az_step_mech_deg tile the circle; the
// +-45 degree electronic fan fills the gaps. Crossed with the given pitch
// positions and all codebook pairs.
SweepPlan plan_full_sweep(int codebook_size, double az_step_mech_deg,
                          std::span<const double> el_positions_deg, int dwell = 1);

// Constant-rate turntable with a settle time per move; moving both axes
// happens simultaneously, TX and RX tables move in parallel.
struct TurntableModel {
    double slew_deg_per_s = 90.0;
    double settle_s = 0.05;

    std::int64_t move_cost_ns(const Orientation& from, const Orientation& to) const;
};

// Channel side of a sweep: scene snapshot and endpoint state, frozen for the
// duration of the sweep.
struct SweepChannel {
    const Environment* env = nullptr;
    Vec3 tx_pos;
    Vec3 rx_pos;
    Band band;
    const std::vector<BeamCodebookEntry>* tx_codebook = nullptr;
    const std::vector<BeamCodebookEntry>* rx_codebook = nullptr;
    ArrayGeometry tx_geom;
    ArrayGeometry rx_geom;
    double element_gain_dbi = kDefaultElementGainDbi;
};

// PHY side of a sweep: the probe frame and per-packet impairments. Packet
// seeds derive from seed_base and a running packet counter.
struct SweepPhy {
    const Frame* probe = nullptr;
    Impairments impairments;    // cfo/phase/noise template; seed is per packet
    std::uint64_t seed_base = 0;
    std::uint64_t packet_counter = 0; // advanced by run_sweep
    Orientation tx_start;             // turntable pose before the sweep
    Orientation rx_start;
    TurntableModel turntable;
    std::int64_t deadline_ns = std::numeric_limits<std::int64_t>::max();
};

// Runs the plan: one measurement per (position, tx, rx, dwell) in plan
// order, timestamped from the clock; turntable moves and packet durations
// advance the clock. Blocked pairs yield sentinel RSS with crc_ok = false.
// Entries past the deadline are dropped. Parallel and Serial execution
// produce bit-identical measurements.
std::vector<BeamPairMeasurement> run_sweep(const SweepPlan& plan, const SweepChannel& channel,
                                           SweepPhy& phy, CommonClock& clock,
                                           Exec exec = Exec::Parallel);

enum class LinkMode { Idle, Sweeping, Established, Recovering, Lost };

const char* link_mode_name(LinkMode m);

enum class LinkAction { None, LocalResweep, FullSweep };

const char* link_action_name(LinkAction a);

enum class RecoveryStage { LocalResweep, FullSweep };

struct LinkState {
    LinkMode mode = LinkMode::Idle;
    std::optional<BeamPairMeasurement> best;
    double baseline_rss_dbm = kRssSentinelDbm;
    int consecutive_failures = 0;
    RecoveryStage recovery_stage = RecoveryStage::LocalResweep;
};

struct LinkPolicy {
    int max_consecutive_failures = 3; // K
    double drop_db = 10.0;
    double min_rss_dbm = -85.0;
};

// Best measured pair: argmax of estimated RSS among CRC-clean records, ties
// broken by (lower tx index, lower rx index, earlier timestamp). Below the
// threshold (or no clean record) the link is Lost.
LinkState establish(std::span<const BeamPairMeasurement> measurements, double min_rss_dbm);

struct TransitionResult {
    LinkAction action = LinkAction::None;
    bool transitioned = false;
    const char* trigger = "";
};

// Tracked-packet bookkeeping: consecutive CRC failures and the RSS-drop rule
// move an Established link into Recovering with a LocalResweep action.
// Illegal in Idle/Sweeping.
TransitionResult on_packet_result(LinkState& state, bool crc_ok, double rss_dbm_est,
                                  const LinkPolicy& policy);

// Outcome of a recovery sweep (best clean measurement, if any). Local
// re-sweep failure escalates to FullSweep; full-sweep failure is Lost.
// Illegal outside Recovering.
TransitionResult on_sweep_outcome(LinkState& state,
                                  const std::optional<BeamPairMeasurement>& best,
                                  const LinkPolicy& policy);

} // namespace mmtwin
