#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "decoyvis/chart.hpp"
#include "decoyvis/decoy.hpp"
#include "decoyvis/optimizer.hpp"
#include "decoyvis/percept.hpp"

namespace decoyvis {

inline constexpr const char* kReportSchemaVersion = "1.0.0";
inline constexpr const char* kConfigEnvVar = "DECOYVIS_CONFIG";

enum class InputMode { spec_input, image_input };

std::string to_string(InputMode m);
InputMode input_mode_from_string(const std::string& s);

/// Everything a protect run depends on. Relative paths in a config file are
/// resolved against the file's directory.
struct RunConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir = "decoyvis-out";
    std::optional<InputMode> mode;          // inferred from the input extension when unset
    std::optional<ChartType> chart_type;    // required for image input
    ViewingSetup viewing;
    DecoyConstraints constraints;           // constraints.seed mirrors seed
    std::string grid_preset = "coarse";
    std::optional<SearchGrid> grid;         // explicit lists override the preset
    double alpha = 0.5;
    double beta = 0.5;
    std::uint64_t seed = 0;
    int threads = 1;
    Rgb background = kWhite;
    bool emit_decoy = false;

    InputMode effective_mode() const;
};

/// Distances positive with far > close, weights finite, threads >= 1.
void validate(const RunConfig& c);

nlohmann::json to_json(const ViewingSetup& v);
ViewingSetup viewing_from_json(const nlohmann::json& j);

/// Every field, defaults included.
nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Input chart plus its geometry, from a spec or an image.
struct LoadedChart {
    RasterImage image;
    GeometrySet geometry;
};
LoadedChart load_chart(const RunConfig& c);

/// Renders or extracts, generates and colors the decoy, optimizes and writes
/// original.png, decoy.png, protected.png, preview_close.png,
/// preview_far.png and report.json into c.output_dir. Returns the report.
nlohmann::json cmd_protect(const RunConfig& c);

/// The bundle's protected image as perceived at distance_cm under the
/// bundle's recorded viewing setup.
RasterImage cmd_preview(const std::filesystem::path& bundle_dir, double distance_cm);

/// Gaps and score of an externally produced triple.
nlohmann::json cmd_score(const std::filesystem::path& original, const std::filesystem::path& decoy,
                         const std::filesystem::path& protected_path, const RunConfig& c);

/// Geometry of a spec (rendered) or an image (extracted with chart_type).
nlohmann::json cmd_inspect(const std::filesystem::path& input, std::optional<ChartType> chart_type, Rgb background);

/// Protects every *.json spec in spec_dir into c.output_dir/<stem>/ and
/// writes summary.json (deterministic) and timing.json there. Rows sorted by
/// spec path; failures are recorded, not thrown.
struct BatchResult {
    nlohmann::json summary;
    nlohmann::json timing;
    bool all_ok = true;
};
BatchResult cmd_batch(const std::filesystem::path& spec_dir, const RunConfig& c);

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitExtraction = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitBatchFailure = 1;

/// Single-line stderr form: error kind=<kind> message="<escaped>".
std::string format_error(ErrorKind kind, const std::string& message);

/// Full command-line entry point; returns the exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace decoyvis
