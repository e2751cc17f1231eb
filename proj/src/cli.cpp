#include "decoyvis/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "decoyvis/error.hpp"
#include "decoyvis/extract.hpp"

namespace decoyvis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail_validation("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write " + path.string());
    out << text;
    if (!out) fail_io("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) fail_io("cannot create directory " + dir.string());
}

json size_json(const RasterImage& img) { return json::array({img.width(), img.height()}); }

template <typename T>
void read_field(const json& j, const char* key, T& field, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail_validation(where + "." + key + ": " + e.what());
    }
}

}  // namespace

std::string to_string(InputMode m) { return m == InputMode::spec_input ? "spec-input" : "image-input"; }

InputMode input_mode_from_string(const std::string& s) {
    if (s == "spec-input") return InputMode::spec_input;
    if (s == "image-input") return InputMode::image_input;
    fail_validation("unknown input mode '" + s + "'");
}

InputMode RunConfig::effective_mode() const {
    if (mode) return *mode;
    std::string ext = input.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".png" ? InputMode::image_input : InputMode::spec_input;
}

void validate(const RunConfig& c) {
    validate(c.viewing);
    if (!(c.viewing.far_cm > c.viewing.close_cm)) fail_validation("far distance must exceed close distance");
    if (!std::isfinite(c.alpha) || !std::isfinite(c.beta)) fail_validation("weights must be finite");
    if (c.threads < 1) fail_validation("threads must be at least 1");
    validate_constraints(c.constraints);
    if (c.constraints.seed != c.seed) fail_validation("constraint seed differs from run seed");
    if (!c.grid) (void)grid_preset(c.grid_preset, 1, 1, {1, 1});
}

json to_json(const ViewingSetup& v) {
    return {{"close_cm", v.close_cm},
            {"far_cm", v.far_cm},
            {"theta_h_deg", v.theta_h_deg},
            {"theta_w_deg", v.theta_w_deg},
            {"density_px_per_cm", v.density_px_per_cm}};
}

ViewingSetup viewing_from_json(const json& j) {
    if (!j.is_object()) fail_validation("viewing must be an object");
    ViewingSetup v;
    read_field(j, "close_cm", v.close_cm, "viewing");
    read_field(j, "far_cm", v.far_cm, "viewing");
    read_field(j, "theta_h_deg", v.theta_h_deg, "viewing");
    read_field(j, "theta_w_deg", v.theta_w_deg, "viewing");
    read_field(j, "density_px_per_cm", v.density_px_per_cm, "viewing");
    return v;
}

json to_json(const RunConfig& c) {
    json j;
    j["input"] = c.input.generic_string();
    j["output_dir"] = c.output_dir.generic_string();
    j["mode"] = to_string(c.effective_mode());
    j["chart_type"] = c.chart_type ? json(to_string(*c.chart_type)) : json(nullptr);
    j["viewing"] = to_json(c.viewing);
    j["constraints"] = to_json(c.constraints);
    j["grid"] = c.grid ? to_json(*c.grid) : json{{"preset", c.grid_preset}};
    j["weights"] = {{"alpha", c.alpha}, {"beta", c.beta}};
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["background"] = rgb_to_hex(c.background);
    j["emit_decoy"] = c.emit_decoy;
    return j;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) fail_validation("config must be an object");
    static const char* const known[] = {"input", "output_dir", "mode",    "chart_type", "viewing",    "constraints",
                                        "grid",  "weights",    "seed",    "threads",    "background", "emit_decoy"};
    for (const auto& [key, value] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known))
            fail_validation("unknown config field '" + key + "'");

    RunConfig c;
    auto resolve = [&](const std::string& p) {
        const fs::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    std::string text;
    if (j.contains("input") && !j.at("input").is_null()) {
        read_field(j, "input", text, "config");
        c.input = resolve(text);
    }
    if (j.contains("output_dir")) {
        read_field(j, "output_dir", text, "config");
        c.output_dir = resolve(text);
    }
    if (j.contains("mode") && !j.at("mode").is_null()) {
        read_field(j, "mode", text, "config");
        c.mode = input_mode_from_string(text);
    }
    if (j.contains("chart_type") && !j.at("chart_type").is_null()) {
        read_field(j, "chart_type", text, "config");
        c.chart_type = chart_type_from_string(text);
    }
    if (j.contains("viewing")) c.viewing = viewing_from_json(j.at("viewing"));
    read_field(j, "seed", c.seed, "config");
    if (j.contains("constraints")) c.constraints = constraints_from_json(j.at("constraints"));
    c.constraints.seed = c.seed;
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        if (!g.is_object()) fail_validation("grid must be an object");
        if (g.contains("preset")) {
            if (g.size() != 1) fail_validation("grid: give either a preset or explicit lists");
            read_field(g, "preset", c.grid_preset, "grid");
        } else {
            c.grid = grid_from_json(g);
        }
    }
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        if (!w.is_object()) fail_validation("weights must be an object");
        read_field(w, "alpha", c.alpha, "weights");
        read_field(w, "beta", c.beta, "weights");
    }
    read_field(j, "threads", c.threads, "config");
    if (j.contains("background")) c.background = rgb_from_json(j.at("background"));
    read_field(j, "emit_decoy", c.emit_decoy, "config");
    validate(c);
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    return run_config_from_json(read_json_file(path), path.parent_path());
}

LoadedChart load_chart(const RunConfig& c) {
    if (c.input.empty()) fail_validation("no input given");
    if (!fs::exists(c.input)) fail_io("input not found: " + c.input.string());
    if (c.effective_mode() == InputMode::spec_input) {
        auto r = render_chart(chart_spec_from_json(read_json_file(c.input)));
        return {std::move(r.image), std::move(r.geometry)};
    }
    if (!c.chart_type) fail_validation("image input requires chart_type");
    if (*c.chart_type == ChartType::pie) fail_extraction("pie charts are supported as spec input only");
    RasterImage img = read_png(c.input);
    img.set_has_alpha(false);
    GeometrySet g = extract_geometry(img, *c.chart_type, c.background);
    return {std::move(img), std::move(g)};
}

namespace {

struct Prepared {
    CandidateInputs inputs;
    SearchGrid grid;
};

Prepared prepare(const RunConfig& c) {
    validate(c);
    LoadedChart chart = load_chart(c);
    Prepared p;
    p.inputs.original = std::move(chart.image);
    p.inputs.original_geometry = std::move(chart.geometry);
    p.inputs.background = c.background;
    p.inputs.decoy_geometry = gen_decoy(p.inputs.original_geometry, c.constraints);
    p.inputs.hues = plan_decoy_colors(p.inputs.original_geometry, p.inputs.decoy_geometry);
    const int w = p.inputs.original.width(), h = p.inputs.original.height();
    p.grid = c.grid ? *c.grid : grid_preset(c.grid_preset, w, h, p.inputs.original_geometry.element_extent);
    return p;
}

// The report's config omits the output location so that runs differing only
// in where they write produce identical reports.
json report_config(const RunConfig& c) {
    json j = to_json(c);
    j.erase("output_dir");
    return j;
}

}  // namespace

json cmd_protect(const RunConfig& c) {
    const Prepared p = prepare(c);
    SearchOptions opt;
    opt.viewing = c.viewing;
    opt.alpha = c.alpha;
    opt.beta = c.beta;
    opt.threads = c.threads;
    const ProtectedBundle b = optimize(p.inputs, p.grid, opt);

    ensure_dir(c.output_dir);
    write_png(c.output_dir / "original.png", b.original);
    write_png(c.output_dir / "decoy.png", b.decoy);
    write_png(c.output_dir / "protected.png", b.protected_image);
    write_png(c.output_dir / "preview_close.png", b.protected_preview.close);
    write_png(c.output_dir / "preview_far.png", b.protected_preview.far);

    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["manifest_version"] = default_metric_manifest().version;
    report["chart_type"] = to_string(p.inputs.original_geometry.chart_type);
    report["params"] = to_json(b.best.params);
    report["scores"] = to_json(b.best.scores);
    report["gamma"] = {{"close", b.protected_preview.gamma_close}, {"far", b.protected_preview.gamma_far}};
    report["sizes"] = {{"native", size_json(b.original)},
                       {"close", size_json(b.protected_preview.close)},
                       {"far", size_json(b.protected_preview.far)}};
    report["grid"] = to_json(p.grid);
    report["evaluated"] = b.evaluated;
    report["decoy_marks"] = p.inputs.decoy_geometry.marks.size();
    report["config"] = report_config(c);
    write_json(c.output_dir / "report.json", report);
    if (c.emit_decoy) {
        json d = to_json(p.inputs.decoy_geometry);
        d["hues"] = p.inputs.hues.hues;
        write_json(c.output_dir / "decoy_geometry.json", d);
    }
    return report;
}

RasterImage cmd_preview(const fs::path& bundle_dir, double distance_cm) {
    if (!fs::is_directory(bundle_dir)) fail_io("bundle not found: " + bundle_dir.string());
    const json report = read_json_file(bundle_dir / "report.json");
    if (!report.contains("config") || !report["config"].contains("viewing"))
        fail_validation("report.json lacks the viewing setup");
    const ViewingSetup setup = viewing_from_json(report["config"]["viewing"]);
    if (!(distance_cm > 0.0) || !std::isfinite(distance_cm)) fail_validation("distance must be positive");
    const RasterImage img = read_png(bundle_dir / "protected.png");
    return simulate_perception(img, setup.context(distance_cm, img.width(), img.height()));
}

json cmd_score(const fs::path& original, const fs::path& decoy, const fs::path& protected_path, const RunConfig& c) {
    validate(c);
    const RasterImage o = read_png(original), d = read_png(decoy), p = read_png(protected_path);
    if (o.width() != d.width() || o.width() != p.width() || o.height() != d.height() || o.height() != p.height())
        fail_validation("original, decoy and protected images differ in size");
    const int w = o.width(), h = o.height();
    const GapScores s = evaluate_candidate(o, d, p, c.viewing.context(c.viewing.close_cm, w, h),
                                           c.viewing.context(c.viewing.far_cm, w, h), c.alpha, c.beta);
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["manifest_version"] = default_metric_manifest().version;
    j["scores"] = to_json(s);
    j["gamma"] = {{"close", gamma(c.viewing.context(c.viewing.close_cm, w, h))},
                  {"far", gamma(c.viewing.context(c.viewing.far_cm, w, h))}};
    return j;
}

json cmd_inspect(const fs::path& input, std::optional<ChartType> chart_type, Rgb background) {
    RunConfig c;
    c.input = input;
    c.chart_type = chart_type;
    c.background = background;
    const LoadedChart chart = load_chart(c);
    json j;
    j["mode"] = to_string(c.effective_mode());
    j["size"] = size_json(chart.image);
    j["geometry"] = to_json(chart.geometry);
    return j;
}

BatchResult cmd_batch(const fs::path& spec_dir, const RunConfig& c) {
    validate(c);
    if (!fs::is_directory(spec_dir)) fail_io("spec directory not found: " + spec_dir.string());
    std::vector<fs::path> specs;
    for (const auto& entry : fs::directory_iterator(spec_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json") specs.push_back(entry.path());
    std::sort(specs.begin(), specs.end());

    ensure_dir(c.output_dir);
    BatchResult r;
    json rows = json::array(), timing_rows = json::array();
    struct Sums {
        int count = 0;
        double gap1 = 0, gap2 = 0, score = 0, seconds = 0;
    };
    std::map<std::string, Sums> per_type;
    for (const fs::path& spec : specs) {
        const std::string name = spec.filename().generic_string();
        RunConfig sc = c;
        sc.input = spec;
        sc.mode = InputMode::spec_input;
        sc.output_dir = c.output_dir / spec.stem();
        json row{{"spec", name}};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const json report = cmd_protect(sc);
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const std::string type = report["chart_type"];
            row["ok"] = true;
            row["chart_type"] = type;
            row["gap1"] = report["scores"]["gap1"];
            row["gap2"] = report["scores"]["gap2"];
            row["score"] = report["scores"]["score"];
            row["params"] = report["params"];
            Sums& s = per_type[type];
            ++s.count;
            s.gap1 += report["scores"]["gap1"].get<double>();
            s.gap2 += report["scores"]["gap2"].get<double>();
            s.score += report["scores"]["score"].get<double>();
            s.seconds += seconds;
            timing_rows.push_back({{"spec", name}, {"seconds", seconds}});
        } catch (const Error& e) {
            r.all_ok = false;
            row["ok"] = false;
            row["error"] = {{"kind", e.kind() == ErrorKind::validation   ? "validation"
                                     : e.kind() == ErrorKind::extraction ? "extraction"
                                                                         : "io"},
                            {"message", e.what()}};
        }
        rows.push_back(row);
    }
    json types = json::object(), type_times = json::object();
    for (const auto& [type, s] : per_type) {
        types[type] = {{"count", s.count},
                       {"mean_gap1", s.gap1 / s.count},
                       {"mean_gap2", s.gap2 / s.count},
                       {"mean_score", s.score / s.count}};
        type_times[type] = {{"count", s.count}, {"mean_seconds", s.seconds / s.count}};
    }
    r.summary = {{"schema_version", kReportSchemaVersion}, {"specs", rows}, {"per_type", types}};
    r.timing = {{"specs", timing_rows}, {"per_type", type_times}};
    write_json(c.output_dir / "summary.json", r.summary);
    write_json(c.output_dir / "timing.json", r.timing);
    return r;
}

std::string format_error(ErrorKind kind, const std::string& message) {
    const char* name = kind == ErrorKind::validation ? "validation" : kind == ErrorKind::extraction ? "extraction" : "io";
    std::string escaped;
    for (char ch : message) {
        switch (ch) {
            case '"': escaped += "\\\""; break;
            case '\\': escaped += "\\\\"; break;
            case '\n': escaped += "\\n"; break;
            case '\r': escaped += "\\r"; break;
            case '\t': escaped += "\\t"; break;
            default: escaped += ch;
        }
    }
    return std::string("error kind=") + name + " message=\"" + escaped + "\"";
}

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation: return kExitValidation;
        case ErrorKind::extraction: return kExitExtraction;
        case ErrorKind::io: return kExitIo;
    }
    return kExitValidation;
}

RunConfig base_config(const std::string& config_path) {
    if (!config_path.empty()) return load_run_config(config_path);
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_run_config(env);
    return RunConfig{};
}

void emit_json(const json& j, const std::string& out_path, std::ostream& out) {
    if (out_path.empty())
        out << j.dump(2) << "\n";
    else
        write_json(out_path, j);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distance-dependent chart protection: decoy overlays legible only up close."};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Run config JSON (default: $" + std::string(kConfigEnvVar) + ")");

    std::string input, out_path, type_name, grid_name, bundle, original, decoy, protected_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    double distance = 0.0;
    bool emit_decoy = false;

    auto* render = app.add_subcommand("render", "Render a chart spec to PNG");
    render->add_option("spec", input, "ChartSpec JSON")->required();
    render->add_option("--out", out_path, "Output PNG")->required();
    render->add_option("--seed", seed, "Decoy seed for --emit-decoy");
    render->add_flag("--emit-decoy", emit_decoy, "Also write the decoy geometry as <out>.decoy.json");

    auto* protect = app.add_subcommand("protect", "Build a protected chart bundle");
    protect->add_option("input", input, "ChartSpec JSON or chart PNG (overrides config input)");
    protect->add_option("--out", out_path, "Bundle directory");
    protect->add_option("--seed", seed, "Decoy seed");
    protect->add_option("--grid-preset", grid_name, "coarse | fine | paper-literal-subset")
        ->check(CLI::IsMember({"coarse", "fine", "paper-literal-subset"}));
    protect->add_option("--type", type_name, "Chart type for image input");
    protect->add_option("--threads", threads, "Worker threads");
    protect->add_flag("--emit-decoy", emit_decoy, "Also write decoy_geometry.json");

    auto* preview = app.add_subcommand("preview", "Perceived protected chart at a distance");
    preview->add_option("bundle", bundle, "Bundle directory")->required();
    preview->add_option("--distance", distance, "Viewing distance in cm")->required();
    preview->add_option("--out", out_path, "Output PNG (default: stdout)");

    auto* inspect = app.add_subcommand("inspect", "Print chart geometry");
    inspect->add_option("input", input, "ChartSpec JSON or chart PNG")->required();
    inspect->add_option("--type", type_name, "Chart type for image input");
    inspect->add_option("--out", out_path, "Output JSON (default: stdout)");

    auto* score = app.add_subcommand("score", "Score an original, decoy, protected triple");
    score->add_option("original", original)->required();
    score->add_option("decoy", decoy)->required();
    score->add_option("protected", protected_path)->required();
    score->add_option("--out", out_path, "Output JSON (default: stdout)");

    auto* batch = app.add_subcommand("batch", "Protect every spec in a directory");
    batch->add_option("spec_dir", input, "Directory of ChartSpec JSON files")->required();
    batch->add_option("--out", out_path, "Output directory");
    batch->add_option("--seed", seed, "Decoy seed");
    batch->add_option("--grid-preset", grid_name, "coarse | fine | paper-literal-subset")
        ->check(CLI::IsMember({"coarse", "fine", "paper-literal-subset"}));
    batch->add_option("--threads", threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::string what = e.what();
        std::replace(what.begin(), what.end(), '\n', ' ');
        err << format_error(ErrorKind::validation, what) << "\n";
        return kExitValidation;
    }

    try {
        RunConfig cfg = base_config(config_path);
        if (seed) {
            cfg.seed = *seed;
            cfg.constraints.seed = *seed;
        }
        if (threads) cfg.threads = *threads;
        if (!grid_name.empty()) {
            cfg.grid_preset = grid_name;
            cfg.grid.reset();
        }
        if (!type_name.empty()) cfg.chart_type = chart_type_from_string(type_name);
        if (emit_decoy) cfg.emit_decoy = true;

        if (*render) {
            const auto r = render_chart(chart_spec_from_json(read_json_file(input)));
            write_png(out_path, r.image);
            if (cfg.emit_decoy) {
                validate(cfg);
                const DecoyGeometry d = gen_decoy(r.geometry, cfg.constraints);
                json j = to_json(d);
                j["hues"] = plan_decoy_colors(r.geometry, d).hues;
                fs::path decoy_path = out_path;
                decoy_path.replace_extension(".decoy.json");
                write_json(decoy_path, j);
            }
        } else if (*protect) {
            if (!input.empty()) {
                cfg.input = input;
                cfg.mode.reset();
            }
            if (!out_path.empty()) cfg.output_dir = out_path;
            const json report = cmd_protect(cfg);
            out << json{{"output_dir", cfg.output_dir.generic_string()},
                        {"params", report["params"]},
                        {"gap1", report["scores"]["gap1"]},
                        {"gap2", report["scores"]["gap2"]},
                        {"score", report["scores"]["score"]}}
                       .dump()
                << "\n";
        } else if (*preview) {
            const RasterImage img = cmd_preview(bundle, distance);
            if (out_path.empty()) {
                const auto bytes = encode_png(img);
                out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            } else {
                write_png(out_path, img);
            }
        } else if (*inspect) {
            emit_json(cmd_inspect(input, cfg.chart_type, cfg.background), out_path, out);
        } else if (*score) {
            emit_json(cmd_score(original, decoy, protected_path, cfg), out_path, out);
        } else if (*batch) {
            if (!out_path.empty()) cfg.output_dir = out_path;
            const BatchResult r = cmd_batch(input, cfg);
            out << r.summary.dump(2) << "\n";
            if (!r.all_ok) return kExitBatchFailure;
        }
    } catch (const Error& e) {
        err << format_error(e.kind(), e.what()) << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << format_error(ErrorKind::io, e.what()) << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace decoyvis
