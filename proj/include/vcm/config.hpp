#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vcm/bayes.hpp"
#include "vcm/bootstrap.hpp"
#include "vcm/io.hpp"

namespace vcm {

struct IoConfig {
    std::string out_dir = "out";
    /// "json" or "csv": format of the report echoed to stdout.
    std::string format = "json";
};

/// Every tunable of a run. `sampler.seed` seeds all randomness of a command.
struct RunConfig {
    PriorConfig prior{};
    SamplerConfig sampler{};
    MleSettings mle{};
    BootstrapSettings bootstrap{};
    /// Replicates per prefix length in the cumulative bootstrap trace.
    int trace_n_rep = 1000;
    IoConfig io{};
    unsigned threads = 0;

    /// Sets one `section.key`; throws ConfigError on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Resolved configuration as ordered (key, value) pairs.
    std::vector<std::pair<std::string, std::string>> entries() const;
    /// `key = value` lines, loadable by load_config_file.
    std::string to_text() const;
    Json to_json() const;
    void validate() const;
};

/// Defaults, with io.out_dir taken from VCM_OUT_DIR when set.
RunConfig default_run_config();

/// Parses `section.key = value` lines; '#' starts a comment. Throws ParseError
/// naming the line.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);
/// Applies a config file on top of `base`.
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base);

}  // namespace vcm
