#pragma once

#include "qmisdr/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace qmisdr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;  // 0 uses every hardware thread
};

// Each returns an exit code; config and IO problems surface as ConfigError.
int run_illustrate(const Section& cfg, const RunOptions& opts);
int run_sdr(const Section& cfg, const RunOptions& opts);
int run_bench(const Section& cfg, const RunOptions& opts);

// Dispatches on the section name and maps every failure to an exit code,
// printing a one-line reason to `err`.
int run_command(const Section& cfg, const RunOptions& opts, std::ostream& err);

// Comment lines placed at the top of every CSV output.
std::string metadata_header(const Section& cfg, std::uint64_t seed);

}  // namespace qmisdr::cli
