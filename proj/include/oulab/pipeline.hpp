#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "oulab/analysis.hpp"
#include "oulab/bm.hpp"
#include "oulab/geometry.hpp"
#include "oulab/spectral.hpp"

namespace oulab::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration; the message names the offending field.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Domain from {"type": "interval", "a", "b"}, {"type": "box", "lo", "hi"},
/// {"type": "polygon", "vertices"} or a shorthand string (see parse_domain_text).
ConvexDomain parse_domain(const json& j, const std::string& field);
/// JSON text, or the shorthand "interval:a,b", "box:x0,y0,x1,y1",
/// "polygon:x,y;x,y;...".
ConvexDomain parse_domain_text(const std::string& text, const std::string& field);
json domain_to_json(const ConvexDomain& d);

/// {"n": n | [n0, n1], optional "lo", "hi"}; bounds default to the domain's box.
Grid parse_grid(const json& j, const ConvexDomain& domain, const std::string& field);
json grid_to_json(const Grid& g);

/// "auto" or a number.
Tolerance parse_tolerance(const json& j, const std::string& field);

struct Check {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
};

struct StageResult {
    std::string name;
    std::string kind;
    std::vector<Check> checks;
    std::vector<fs::path> files;
    double seconds = 0.0;
    json summary;

    bool passed() const;
};

struct RunContext {
    fs::path out_dir = ".";
    std::uint64_t seed = 20240611;
    Tolerance tol = Tolerance::auto_scaled();
};

/// Executes one stage ({"kind": "mehler" | "kernel" | "eigs" | "logcc" |
/// "trace" | "bm" | "evolve", ...}) and writes its artifacts into ctx.out_dir.
StageResult run_stage(const json& stage, const RunContext& ctx);

struct RunOutcome {
    int exit_code = 0;  // 0 all checks pass, 1 a check failed, 2 invalid config
    std::vector<StageResult> stages;
    fs::path manifest;
    std::string message;
};

/// Runs every stage of a configuration {"output", "seed", "tolerance",
/// "stages": [...]} and writes manifest.json (config echo, version, per-file
/// SHA-256, wall-clock per stage). Never throws for configuration problems;
/// they surface as exit code 2.
RunOutcome run(const json& config);

json load_config(const fs::path& path);

/// Plot-ready long-format CSVs.
struct PlotData {
    std::optional<TraceCurve> trace;
    std::optional<SpectralDecomposition> eigen;
    std::vector<BMReport> bm;
};

/// kind: "trace" (t, Z, logZ), "eigenfunction" (x[, y], phi1, log_phi1) or
/// "bm" (s, lhs, rhs, margin). Throws std::invalid_argument for unknown kinds
/// or missing data.
std::vector<fs::path> emit_plot_data(const PlotData& data, const std::string& kind,
                                     const fs::path& dir, const std::string& stem = "");

std::string sha256_file(const fs::path& path);

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);
std::string format_number(double v);

std::vector<std::vector<std::string>> read_csv(const fs::path& path);

json report_to_json(const LogConcavityReport& r);

}  // namespace oulab::pipeline
