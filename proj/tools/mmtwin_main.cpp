// SPDX-License-Identifier: Apache-2.0
//
// mmtwin: software twin of a multi-band mm-wave measurement platform
//
// CLI surface:
//   mmtwin run --config <path> [--out <dir>] [--seed <u64>] [--serial]
//   mmtwin verify <dir>
//   mmtwin plot-summary <dir> --band <id>
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 verify failure.
#include "mmtwin/campaign.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::optional<std::uint64_t>& seed_override, bool serial)
{
    auto loaded = mmtwin::load_config(config_path);
    if (!loaded.ok())
    {
        for (const auto& err : loaded.errors)
            std::cerr << "config error: " << err << "\n";
        return 1;
    }
    mmtwin::CampaignConfig cfg = std::move(*loaded.config);
    if (!out_override.empty())
        cfg.out_dir = out_override;
    if (seed_override)
        cfg.seed = *seed_override;

    try
    {
        const auto summary =
            mmtwin::run_campaign(cfg, serial ? mmtwin::Exec::Serial : mmtwin::Exec::Parallel);
        std::cout << summary.to_json().dump(2) << "\n";
        return 0;
    }
    catch (const std::exception& e)
    {
        std::cerr << "campaign failed: " << e.what() << "\n";
        return 2;
    }
}

int cmd_verify(const std::string& dir)
{
    try
    {
        const auto report = mmtwin::verify_dataset(dir);
        if (report.ok())
        {
            std::cout << "dataset OK: " << dir << "\n";
            return 0;
        }
        for (const auto& v : report.violations)
            std::cerr << "violation: " << v << "\n";
        return 3;
    }
    catch (const std::exception& e)
    {
        std::cerr << "verify failed: " << e.what() << "\n";
        return 2;
    }
}

int cmd_plot_summary(const std::string& dir, int band)
{
    try
    {
        std::cout << mmtwin::heatmap_csv(dir, band);
        return 0;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mmtwin: multi-band mm-wave measurement platform twin"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool serial = false;
    auto* run = app.add_subcommand("run", "run a measurement campaign from a config file");
    run->add_option("--config", config_path, "campaign config JSON")->required();
    run->add_option("--out", out_dir, "output dataset directory (overrides the config)");
    auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
    run->add_flag("--serial", serial, "use the serial reference kernels");

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "re-check an exported dataset");
    verify->add_option("dir", verify_dir, "dataset directory")->required();

    std::string plot_dir;
    int band = 28;
    auto* plot = app.add_subcommand("plot-summary", "emit per-sweep RSS heatmap data as CSV");
    plot->add_option("dir", plot_dir, "dataset directory")->required();
    plot->add_option("--band", band, "band id (28 or 60)")->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed())
        return cmd_run(config_path, out_dir,
                       seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       serial);
    if (verify->parsed())
        return cmd_verify(verify_dir);
    if (plot->parsed())
        return cmd_plot_summary(plot_dir, band);
    return 1;
}
