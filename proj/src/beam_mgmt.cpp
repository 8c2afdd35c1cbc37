// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
#include "mmtwin/beam_mgmt.hpp"

#include "mmtwin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mmtwin {

SweepPlan plan_full_sweep(int codebook_size, double az_step_mech_deg,
                          std::span<const double> el_positions_deg, int dwell)
{
    if (codebook_size < 1)
        throw std::invalid_argument("codebook size must be positive");
    if (dwell < 1)
        throw std::invalid_argument("dwell must be at least 1 packet");
    if (az_step_mech_deg <= 0.0 ||
        std::abs(360.0 / az_step_mech_deg - std::round(360.0 / az_step_mech_deg)) > 1e-9)
        throw std::invalid_argument("mechanical azimuth step must divide 360 evenly");
    if (el_positions_deg.empty())
        throw std::invalid_argument("at least one elevation position is required");
    {
        std::set<double> unique(el_positions_deg.begin(), el_positions_deg.end());
        if (unique.size() != el_positions_deg.size())
            throw std::invalid_argument("duplicate elevation positions");
    }

    const int yaw_count = int(std::round(360.0 / az_step_mech_deg));
    std::vector<Orientation> orientations;
    for (int k = 0; k < yaw_count; ++k)
        for (const double el : el_positions_deg)
            orientations.emplace_back(wrap_deg(double(k) * az_step_mech_deg), el);

    SweepPlan plan;
    plan.dwell = dwell;
    for (const Orientation& tx : orientations)
        for (const Orientation& rx : orientations)
            plan.turntable_positions.emplace_back(tx, rx);
    for (int i = 0; i < codebook_size; ++i)
    {
        plan.tx_entries.push_back(i);
        plan.rx_entries.push_back(i);
    }
    return plan;
}

std::int64_t TurntableModel::move_cost_ns(const Orientation& from, const Orientation& to) const
{
    const double dyaw = std::abs(wrap_deg(to.yaw_deg - from.yaw_deg));
    const double dpitch = std::abs(to.pitch_deg - from.pitch_deg);
    const double travel = std::max(dyaw, dpitch); // both axes slew together
    if (travel == 0.0)
        return 0;
    return std::int64_t(std::llround((travel / slew_deg_per_s + settle_s) * 1e9));
}

namespace {

struct SweepTask {
    std::size_t pos_index;
    int tx_idx;
    int rx_idx;
    std::int64_t t_ns;
    std::uint64_t seed;
};

} // namespace

std::vector<BeamPairMeasurement> run_sweep(const SweepPlan& plan, const SweepChannel& channel,
                                           SweepPhy& phy, CommonClock& clock, Exec exec)
{
    if (plan.turntable_positions.empty() || plan.tx_entries.empty() || plan.rx_entries.empty())
        throw std::invalid_argument("sweep plan is empty");
    if (!channel.env || !channel.tx_codebook || !channel.rx_codebook || !phy.probe)
        throw std::invalid_argument("sweep context is incomplete");

    const std::int64_t packet_ns =
        std::int64_t(std::llround(double(phy.probe->samples.size()) /
                                  channel.band.sample_rate_hz * 1e9));

    // Pass 1 (serial): walk the plan, advance the clock through turntable
    // moves and packet slots, and fix the per-packet seeds. This pins every
    // timestamp and noise realization independent of thread scheduling.
    std::vector<SweepTask> tasks;
    tasks.reserve(plan.measurement_count());
    Orientation tx_at = phy.tx_start;
    Orientation rx_at = phy.rx_start;
    for (std::size_t pi = 0; pi < plan.turntable_positions.size(); ++pi)
    {
        const auto& [tx_o, rx_o] = plan.turntable_positions[pi];
        const std::int64_t move =
            std::max(phy.turntable.move_cost_ns(tx_at, tx_o), phy.turntable.move_cost_ns(rx_at, rx_o));
        if (clock.now_ns() + move > phy.deadline_ns)
            break;
        clock.advance(move);
        tx_at = tx_o;
        rx_at = rx_o;
        bool out_of_time = false;
        for (const int ti : plan.tx_entries)
        {
            for (const int ri : plan.rx_entries)
                for (int d = 0; d < plan.dwell; ++d)
                {
                    if (clock.now_ns() + packet_ns > phy.deadline_ns)
                    {
                        out_of_time = true;
                        break;
                    }
                    clock.advance(packet_ns);
                    tasks.push_back(
                        {pi, ti, ri, clock.now_ns(), mix_seed(phy.seed_base, phy.packet_counter++)});
                }
            if (out_of_time)
                break;
        }
        if (out_of_time)
            break;
    }

    // Pass 2: evaluate the pairs. Tasks are independent; results land in
    // pre-sized slots, so the parallel path is bit-identical to the serial
    // reference.
    const auto paths = trace_paths(*channel.env, channel.tx_pos, channel.rx_pos,
                                   channel.band.carrier_hz);
    std::vector<BeamPairMeasurement> out(tasks.size());

    auto evaluate = [&](std::size_t i) {
        const SweepTask& task = tasks[i];
        const auto& [tx_o, rx_o] = plan.turntable_positions[task.pos_index];
        const BeamCodebookEntry& te = (*channel.tx_codebook)[std::size_t(task.tx_idx)];
        const BeamCodebookEntry& re = (*channel.rx_codebook)[std::size_t(task.rx_idx)];

        const SteeredPattern tx_pat(channel.tx_geom, te.weights, tx_o, channel.element_gain_dbi);
        const SteeredPattern rx_pat(channel.rx_geom, re.weights, rx_o, channel.element_gain_dbi);
        const RssResult gt = rss_dbm(
            channel.band, [&](const Direction& d) { return tx_pat.gain_dbi(d); },
            [&](const Direction& d) { return rx_pat.gain_dbi(d); }, paths);

        Impairments imp = phy.impairments;
        imp.seed = task.seed;
        const ProbeOutcome probe = probe_link(*phy.probe, gt, channel.band, imp);

        BeamPairMeasurement& m = out[i];
        m.band_id = channel.band.band_id();
        m.tx_entry_index = task.tx_idx;
        m.rx_entry_index = task.rx_idx;
        m.tx_mech = tx_o;
        m.rx_mech = rx_o;
        m.rss_dbm_est = probe.rss_dbm_est;
        m.cfo_hz_est = probe.cfo_hz_est;
        m.phase_rad_est = probe.phase_rad_est;
        m.crc_ok = probe.crc_ok;
        m.timestamp_ns = task.t_ns;
    };

    if (exec == Exec::Parallel)
    {
#pragma omp parallel for schedule(dynamic, 16)
        for (long long i = 0; i < (long long)tasks.size(); ++i)
            evaluate(std::size_t(i));
    }
    else
    {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            evaluate(i);
    }

    phy.tx_start = tx_at;
    phy.rx_start = rx_at;
    return out;
}

const char* link_mode_name(LinkMode m)
{
    switch (m)
    {
    case LinkMode::Idle: return "idle";
    case LinkMode::Sweeping: return "sweeping";
    case LinkMode::Established: return "established";
    case LinkMode::Recovering: return "recovering";
    case LinkMode::Lost: return "lost";
    }
    return "?";
}

const char* link_action_name(LinkAction a)
{
    switch (a)
    {
    case LinkAction::None: return "none";
    case LinkAction::LocalResweep: return "local_resweep";
    case LinkAction::FullSweep: return "full_sweep";
    }
    return "?";
}

namespace {

// (higher RSS, lower tx, lower rx, earlier) wins.
bool better_measurement(const BeamPairMeasurement& a, const BeamPairMeasurement& b)
{
    if (a.rss_dbm_est != b.rss_dbm_est)
        return a.rss_dbm_est > b.rss_dbm_est;
    if (a.tx_entry_index != b.tx_entry_index)
        return a.tx_entry_index < b.tx_entry_index;
    if (a.rx_entry_index != b.rx_entry_index)
        return a.rx_entry_index < b.rx_entry_index;
    return a.timestamp_ns < b.timestamp_ns;
}

} // namespace

LinkState establish(std::span<const BeamPairMeasurement> measurements, double min_rss_dbm)
{
    if (measurements.empty())
        throw std::domain_error("cannot establish from an empty measurement set");

    const BeamPairMeasurement* best = nullptr;
    for (const auto& m : measurements)
    {
        if (!m.crc_ok)
            continue;
        if (!best || better_measurement(m, *best))
            best = &m;
    }

    LinkState state;
    if (!best || best->rss_dbm_est < min_rss_dbm)
    {
        state.mode = LinkMode::Lost;
        return state;
    }
    state.mode = LinkMode::Established;
    state.best = *best;
    state.baseline_rss_dbm = best->rss_dbm_est;
    state.consecutive_failures = 0;
    return state;
}

TransitionResult on_packet_result(LinkState& state, bool crc_ok, double rss_dbm_est,
                                  const LinkPolicy& policy)
{
    if (state.mode != LinkMode::Established && state.mode != LinkMode::Recovering)
        throw std::logic_error("packet results are only valid in Established or Recovering");

    TransitionResult res;
    if (state.mode == LinkMode::Recovering)
        return res; // recovery progress is driven by sweep outcomes

    if (crc_ok)
        state.consecutive_failures = 0;
    else
        ++state.consecutive_failures;

    const bool too_many_failures = state.consecutive_failures >= policy.max_consecutive_failures;
    const bool dropped = crc_ok && rss_dbm_est <= state.baseline_rss_dbm - policy.drop_db;
    if (too_many_failures || dropped)
    {
        state.mode = LinkMode::Recovering;
        state.recovery_stage = RecoveryStage::LocalResweep;
        state.consecutive_failures = 0;
        res.action = LinkAction::LocalResweep;
        res.transitioned = true;
        res.trigger = too_many_failures ? "crc_failures" : "rss_drop";
    }
    return res;
}

TransitionResult on_sweep_outcome(LinkState& state,
                                  const std::optional<BeamPairMeasurement>& best,
                                  const LinkPolicy& policy)
{
    if (state.mode != LinkMode::Recovering)
        throw std::logic_error("sweep outcomes are only valid in Recovering");

    TransitionResult res;
    const bool success = best && best->crc_ok && best->rss_dbm_est >= policy.min_rss_dbm;
    if (success)
    {
        state.mode = LinkMode::Established;
        state.best = *best;
        state.baseline_rss_dbm = best->rss_dbm_est;
        state.consecutive_failures = 0;
        res.transitioned = true;
        res.trigger = state.recovery_stage == RecoveryStage::LocalResweep
                          ? "local_resweep_success"
                          : "full_sweep_success";
        return res;
    }
    if (state.recovery_stage == RecoveryStage::LocalResweep)
    {
        state.recovery_stage = RecoveryStage::FullSweep;
        res.action = LinkAction::FullSweep;
        res.trigger = "local_resweep_failed";
        return res;
    }
    state.mode = LinkMode::Lost;
    state.best.reset();
    res.transitioned = true;
    res.trigger = "full_sweep_failed";
    return res;
}

} // namespace mmtwin
