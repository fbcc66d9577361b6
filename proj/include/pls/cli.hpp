#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace pls {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& log);

struct EvalFlags {
  bool ece = false;
  bool hist = false;
  bool temperature = false;
  bool ood = false;
};

int cmd_eval(const std::filesystem::path& checkpoint_path, const std::filesystem::path& config_path,
             const EvalFlags& flags, const std::filesystem::path& out_dir, std::ostream& log);

// axis is one of "w", "alpha", "strategy".
int cmd_sweep(const std::filesystem::path& config_path, const std::string& axis, const std::vector<std::string>& values,
              const std::filesystem::path& out_dir, std::ostream& log);

// Finite-difference check on a small random network (D=6, hidden 8, m=5, K=3, B=4).
int cmd_gradcheck(const std::vector<std::string>& strategies, std::uint64_t seed, double tolerance, std::ostream& log);

}  // namespace pls
