#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "accdiff/cli.hpp"
#include "accdiff/error.hpp"

int main(int argc, char** argv) {
    namespace cli = accdiff::cli;
    CLI::App app{"accdiff: patch-wise higher-resolution latent diffusion with content-aware prompts"};
    app.require_subcommand(1);

    cli::RunOptions run;
    std::string ablate = "none";
    std::uint64_t seed = 0;
    std::size_t scale = 0, se_radius = 0, workers = 0;
    double c = 0.0;
    std::string out_dir;
    auto* run_cmd = app.add_subcommand("run", "run the pipeline from a JSON config");
    run_cmd->add_option("config", run.config_path, "pipeline config (JSON)")->required();
    auto* seed_opt = run_cmd->add_option("--seed", seed, "override the RNG seed");
    auto* scale_opt = run_cmd->add_option("--scale", scale, "target = pretrained latent size x scale");
    auto* c_opt = run_cmd->add_option("--c", c, "prompt inclusion threshold in (0, 1)");
    auto* se_opt = run_cmd->add_option("--se-radius", se_radius, "opening structuring-element radius");
    auto* workers_opt = run_cmd->add_option("--workers", workers, "worker threads");
    auto* out_opt = run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--ablate", ablate, "none | no-patch-prompts | no-window-interaction | both")
        ->check(CLI::IsMember({"none", "no-patch-prompts", "no-window-interaction", "both"}));
    run_cmd->add_flag("--quiet", run.quiet, "suppress progress output");

    std::string masks_config, masks_out;
    auto* masks_cmd = app.add_subcommand("dump-masks", "write per-token mask stages as PGM");
    masks_cmd->add_option("config", masks_config)->required();
    masks_cmd->add_option("out_dir", masks_out)->required();

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "print tensor file statistics");
    inspect_cmd->add_option("tensor", inspect_path)->required();

    std::string manifest, replay_out;
    double tolerance = 1e-3;
    auto* replay_cmd = app.add_subcommand("replay", "replay a recorded phase-1 trajectory");
    replay_cmd->add_option("manifest", manifest)->required();
    replay_cmd->add_option("--tolerance", tolerance, "per-step max-abs tolerance");
    auto* replay_out_opt = replay_cmd->add_option("--out", replay_out, "write replayed latents here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::kConfigError;
    }

    try {
        if (*run_cmd) {
            if (*seed_opt) run.seed = seed;
            if (*scale_opt) run.scale = scale;
            if (*c_opt) run.c = c;
            if (*se_opt) run.se_radius = se_radius;
            if (*workers_opt) run.workers = workers;
            if (*out_opt) run.output_dir = out_dir;
            run.ablation = cli::parse_ablation(ablate);
            return cli::cmd_run(run, std::cout, std::cerr);
        }
        if (*masks_cmd) return cli::cmd_dump_masks(masks_config, masks_out, std::cout, std::cerr);
        if (*inspect_cmd) return cli::cmd_inspect(inspect_path, std::cout, std::cerr);
        if (*replay_cmd) {
            std::optional<std::filesystem::path> out;
            if (*replay_out_opt) out = replay_out;
            return cli::cmd_replay(manifest, tolerance, out, std::cout, std::cerr);
        }
    } catch (const accdiff::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kConfigError;
    }
    return cli::kOk;
}
