#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "decoyvis/cli.hpp"
#include "decoyvis/error.hpp"
#include "schema_check.hpp"

using namespace decoyvis;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = DECOYVIS_SOURCE_DIR;

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("decoyvis_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

const Scratch& scratch() {
    static Scratch s;
    return s;
}

struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "decoyvis");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

json small_spec(const std::string& type) {
    json j{{"chart_type", type}, {"canvas_width", 240}, {"canvas_height", 180},
           {"margins", {{"left", 30}, {"right", 10}, {"top", 10}, {"bottom", 30}}}};
    if (type == "bar") j["data"] = {{"bar_heights", {3, 5, 2, 6}}};
    if (type == "line") j["data"] = {{"line_series", {{{0, 1}, {1, 3}, {2, 2}, {3, 4}}}}};
    if (type == "scatter") j["data"] = {{"scatter_points", {{0, 0, 6}, {1, 4, 6}, {2, 1, 6}, {3, 5, 6}, {4, 2, 6}}}};
    if (type == "pie") j["data"] = {{"pie_fractions", {3, 2, 1}}};
    return j;
}

// Small canvas, reduced density and a 16-point grid keep each run short.
fs::path small_config(const std::string& type, std::uint64_t seed = 3) {
    const fs::path dir = scratch().dir / ("cfg_" + type + "_" + std::to_string(seed));
    fs::create_directories(dir);
    write(dir / "spec.json", small_spec(type).dump());
    json cfg{{"input", "spec.json"},
             {"output_dir", "bundle"},
             {"seed", seed},
             {"viewing", {{"density_px_per_cm", 9.0}}},
             {"grid", {{"l_values", {20, 60}}, {"c_values", {0, 60}}, {"k_values", {1, 5}}, {"m_values", {2, 3}},
                       {"stage_plan", "single-pass"}}}};
    write(dir / "config.json", cfg.dump(2));
    return dir / "config.json";
}

bool single_machine_line(const std::string& err) {
    return err.rfind("error kind=", 0) == 0 && err.find(" message=\"") != std::string::npos &&
           err.find('\n') == err.size() - 1;
}

}  // namespace

TEST_CASE("config round trip keeps every field") {
    const RunConfig c = load_run_config(small_config("bar"));
    const json j = to_json(c);
    const RunConfig back = run_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(j["weights"]["alpha"] == 0.5);
    CHECK(j["viewing"]["close_cm"] == 30.0);
    CHECK(j["viewing"]["far_cm"] == 90.0);
    CHECK(j["constraints"]["seed"] == 3);
    CHECK(c.effective_mode() == InputMode::spec_input);
}

TEST_CASE("config rejects unknown fields and non-physical distances") {
    CHECK_THROWS_AS(run_config_from_json(json{{"inputs", "x.json"}}), Error);
    CHECK_THROWS_AS(run_config_from_json(json{{"viewing", {{"close_cm", 90}, {"far_cm", 30}}}}), Error);
    CHECK_THROWS_AS(run_config_from_json(json{{"viewing", {{"close_cm", 30}, {"far_cm", 30}}}}), Error);
    CHECK_THROWS_AS(run_config_from_json(json{{"grid", {{"preset", "dense"}}}}), Error);
    CHECK_THROWS_AS(run_config_from_json(json{{"threads", 0}}), Error);
}

TEST_CASE("protect writes a reproducible bundle whose report fits the schema") {
    const fs::path cfg = small_config("bar");
    const fs::path a = scratch().dir / "protect_a", b = scratch().dir / "protect_b";
    const Run ra = cli({"--config", cfg.string(), "protect", "--out", a.string()});
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    const Run rb = cli({"--config", cfg.string(), "protect", "--out", b.string()});
    REQUIRE(rb.code == 0);
    for (const char* name :
         {"original.png", "decoy.png", "protected.png", "preview_close.png", "preview_far.png", "report.json"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    const json report = json::parse(slurp(a / "report.json"));
    const auto errors = schema_check::load((kSource / "schema/report.schema.json").string()).check(report);
    CHECK_MESSAGE(errors.empty(), (errors.empty() ? "" : errors.front()));
    CHECK(report["schema_version"] == kReportSchemaVersion);
    CHECK(report["evaluated"] == 16);
    CHECK(report["gamma"]["far"].get<double>() < report["gamma"]["close"].get<double>());
    CHECK(json::parse(ra.out)["score"] == report["scores"]["score"]);
}

TEST_CASE("schema checker flags missing and unexpected fields") {
    const auto checker = schema_check::load((kSource / "schema/report.schema.json").string());
    const json report = json::parse(slurp(scratch().dir / "protect_a" / "report.json"));
    json missing = report;
    missing.erase("gamma");
    CHECK_FALSE(checker.check(missing).empty());
    json extra = report;
    extra["runtime"] = 1.0;
    CHECK_FALSE(checker.check(extra).empty());
    json wrong = report;
    wrong["params"]["kernel_size"] = "five";
    CHECK_FALSE(checker.check(wrong).empty());
}

TEST_CASE("preview reproduces the bundle previews") {
    const fs::path bundle = scratch().dir / "protect_a";
    const fs::path close = scratch().dir / "p30.png", far = scratch().dir / "p90.png", mid = scratch().dir / "p60.png";
    REQUIRE(cli({"preview", bundle.string(), "--distance", "30", "--out", close.string()}).code == 0);
    REQUIRE(cli({"preview", bundle.string(), "--distance", "90", "--out", far.string()}).code == 0);
    REQUIRE(cli({"preview", bundle.string(), "--distance", "60", "--out", mid.string()}).code == 0);
    CHECK(slurp(close) == slurp(bundle / "preview_close.png"));
    CHECK(slurp(far) == slurp(bundle / "preview_far.png"));
    const RasterImage c = read_png(close), f = read_png(far), m = read_png(mid);
    CHECK(m.width() < c.width());
    CHECK(m.width() > f.width());
    CHECK(m.height() < c.height());
    CHECK(m.height() > f.height());

    const Run to_stdout = cli({"preview", bundle.string(), "--distance", "90"});
    CHECK(to_stdout.code == 0);
    CHECK(to_stdout.out == slurp(bundle / "preview_far.png"));
}

TEST_CASE("score of an unchanged triple and zero weights") {
    const fs::path bundle = scratch().dir / "protect_a";
    const std::string o = (bundle / "original.png").string(), d = (bundle / "decoy.png").string(),
                      p = (bundle / "protected.png").string();
    const fs::path cfg = small_config("bar");
    const Run same = cli({"--config", cfg.string(), "score", o, d, o});
    REQUIRE(same.code == 0);
    const json js = json::parse(same.out);
    CHECK(std::abs(js["scores"]["gap1"].get<double>()) <= 1e-9);

    const Run full = cli({"--config", cfg.string(), "score", o, d, p});
    REQUIRE(full.code == 0);
    const json jf = json::parse(full.out);
    for (const char* key : {"gap1", "gap2", "score"}) CHECK(std::isfinite(jf["scores"][key].get<double>()));
    CHECK(jf["gamma"].contains("close"));
    CHECK(jf["gamma"].contains("far"));
    const json report = json::parse(slurp(bundle / "report.json"));
    CHECK(jf["scores"]["score"] == report["scores"]["score"]);

    json zero = json::parse(slurp(cfg));
    zero["weights"] = {{"alpha", 0.0}, {"beta", 0.0}};
    const fs::path zero_cfg = cfg.parent_path() / "zero.json";
    write(zero_cfg, zero.dump());
    const Run z = cli({"--config", zero_cfg.string(), "score", o, d, p});
    REQUIRE(z.code == 0);
    CHECK(json::parse(z.out)["scores"]["score"] == 0.0);
}

TEST_CASE("score rejects mismatched sizes") {
    const fs::path bundle = scratch().dir / "protect_a";
    const Run r = cli({"score", (bundle / "original.png").string(), (bundle / "decoy.png").string(),
                       (bundle / "preview_far.png").string()});
    CHECK(r.code == kExitValidation);
    CHECK(single_machine_line(r.err));
}

TEST_CASE("exit codes and error lines") {
    const Run missing_bundle = cli({"preview", (scratch().dir / "nothing").string(), "--distance", "60"});
    CHECK(missing_bundle.code == kExitIo);
    CHECK(single_machine_line(missing_bundle.err));
    CHECK(missing_bundle.err.find("kind=io") != std::string::npos);

    const fs::path pie_png = scratch().dir / "pie.png";
    write(scratch().dir / "pie.json", small_spec("pie").dump());
    REQUIRE(cli({"render", (scratch().dir / "pie.json").string(), "--out", pie_png.string()}).code == 0);
    const Run pie = cli({"protect", pie_png.string(), "--type", "pie", "--out", (scratch().dir / "pie_out").string()});
    CHECK(pie.code == kExitExtraction);
    CHECK(single_machine_line(pie.err));

    const Run no_type = cli({"protect", pie_png.string(), "--out", (scratch().dir / "pie_out").string()});
    CHECK(no_type.code == kExitValidation);

    write(scratch().dir / "broken.json", "{ not json");
    const Run broken = cli({"--config", (scratch().dir / "broken.json").string(), "protect"});
    CHECK(broken.code == kExitValidation);
    CHECK(single_machine_line(broken.err));

    const Run bad_flag = cli({"protect", "--grid-preset", "dense"});
    CHECK(bad_flag.code == kExitValidation);
    CHECK(single_machine_line(bad_flag.err));

    const Run no_config = cli({"--config", (scratch().dir / "absent.json").string(), "protect"});
    CHECK(no_config.code == kExitIo);

    CHECK(format_error(ErrorKind::validation, "say \"hi\"\nthere") ==
          "error kind=validation message=\"say \\\"hi\\\"\\nthere\"");
}

TEST_CASE("config path from the environment") {
    const fs::path cfg = small_config("line", 4);
    ::setenv(kConfigEnvVar, cfg.string().c_str(), 1);
    const fs::path out = scratch().dir / "env_bundle";
    const Run r = cli({"protect", "--out", out.string()});
    ::unsetenv(kConfigEnvVar);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json report = json::parse(slurp(out / "report.json"));
    CHECK(report["chart_type"] == "line");
    CHECK(report["config"]["seed"] == 4);
}

TEST_CASE("flags override config fields") {
    const fs::path cfg = small_config("scatter");
    const fs::path out = scratch().dir / "override";
    const Run r = cli({"--config", cfg.string(), "protect", "--seed", "11", "--out", out.string(), "--emit-decoy"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const json report = json::parse(slurp(out / "report.json"));
    CHECK(report["config"]["seed"] == 11);
    CHECK(report["config"]["constraints"]["seed"] == 11);
    CHECK(report["config"]["emit_decoy"] == true);
    CHECK(fs::exists(out / "decoy_geometry.json"));
}

TEST_CASE("render and inspect") {
    write(scratch().dir / "bar.json", small_spec("bar").dump());
    const fs::path png = scratch().dir / "bar.png";
    const Run r = cli({"render", (scratch().dir / "bar.json").string(), "--out", png.string(), "--emit-decoy"});
    REQUIRE(r.code == 0);
    CHECK(read_png(png).width() == 240);
    const json decoy = json::parse(slurp(scratch().dir / "bar.decoy.json"));
    CHECK(decoy["hues"].size() == decoy["marks"].size());

    const Run spec = cli({"inspect", (scratch().dir / "bar.json").string()});
    REQUIRE(spec.code == 0);
    const json g = json::parse(spec.out);
    CHECK(g["mode"] == "spec-input");
    CHECK(g["geometry"]["chart_type"] == "bar");

    const Run image = cli({"inspect", png.string(), "--type", "bar"});
    REQUIRE_MESSAGE(image.code == 0, image.err);
    const json gi = json::parse(image.out);
    CHECK(gi["mode"] == "image-input");
    std::size_t bars = 0;
    for (const auto& m : gi["geometry"]["elements"]) bars += m.value("auxiliary", false) ? 0 : 1;
    CHECK(bars == 4);
}

TEST_CASE("batch over an empty and a small corpus") {
    const fs::path empty = scratch().dir / "empty_specs";
    fs::create_directories(empty);
    const Run e = cli({"batch", empty.string(), "--out", (scratch().dir / "batch_empty").string()});
    REQUIRE(e.code == 0);
    CHECK(json::parse(e.out)["specs"].empty());

    const fs::path specs = scratch().dir / "specs";
    fs::create_directories(specs);
    write(specs / "b_line.json", small_spec("line").dump());
    write(specs / "a_bar.json", small_spec("bar").dump());
    const fs::path cfg = small_config("bar");
    const fs::path out1 = scratch().dir / "batch1", out2 = scratch().dir / "batch2";
    const Run r1 = cli({"--config", cfg.string(), "batch", specs.string(), "--out", out1.string()});
    REQUIRE_MESSAGE(r1.code == 0, r1.err);
    const Run r2 = cli({"--config", cfg.string(), "batch", specs.string(), "--out", out2.string()});
    REQUIRE(r2.code == 0);
    CHECK(slurp(out1 / "summary.json") == slurp(out2 / "summary.json"));
    const json s = json::parse(slurp(out1 / "summary.json"));
    REQUIRE(s["specs"].size() == 2);
    CHECK(s["specs"][0]["spec"] == "a_bar.json");
    CHECK(s["specs"][1]["spec"] == "b_line.json");
    CHECK(s["per_type"].size() == 2);
    CHECK(fs::exists(out1 / "a_bar" / "report.json"));
    CHECK(json::parse(slurp(out1 / "timing.json"))["specs"].size() == 2);

    write(specs / "c_bad.json", "{\"chart_type\": \"pie\", \"data\": {\"pie_fractions\": []}}");
    const Run bad = cli({"--config", cfg.string(), "batch", specs.string(), "--out", (scratch().dir / "batch3").string()});
    CHECK(bad.code == kExitBatchFailure);
    const json sb = json::parse(bad.out);
    CHECK(sb["specs"][2]["ok"] == false);
    CHECK(sb["specs"][2]["error"]["kind"] == "validation");
}
