#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace accdiff::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

enum class Ablation { None, NoPatchPrompts, NoWindowInteraction, Both };

Ablation parse_ablation(const std::string& name);

struct RunOptions {
    std::filesystem::path config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> scale;  // target = pretrained latent size x scale
    std::optional<double> c;
    std::optional<std::size_t> se_radius;
    std::optional<std::size_t> workers;
    std::optional<std::filesystem::path> output_dir;
    Ablation ablation = Ablation::None;
    bool quiet = false;
};

int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_dump_masks(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                   std::ostream& out, std::ostream& err);
int cmd_inspect(const std::filesystem::path& tensor_path, std::ostream& out, std::ostream& err);
int cmd_replay(const std::filesystem::path& manifest_path, double tolerance,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& out, std::ostream& err);

}  // namespace accdiff::cli
