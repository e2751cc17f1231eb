#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "decoyvis/chart.hpp"
#include "decoyvis/error.hpp"

using namespace decoyvis;

namespace {

std::string error_message(const ChartSpec& s) {
    try {
        validate_spec(s);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

ChartSpec bar_spec() {
    ChartSpec s;
    s.chart_type = ChartType::bar;
    s.canvas_width = 400;
    s.canvas_height = 300;
    s.bar_heights = {10, 20, 30};
    return s;
}

}  // namespace

TEST_CASE("validate_spec examples") {
    CHECK_NOTHROW(validate_spec(bar_spec()));

    ChartSpec pie;
    pie.chart_type = ChartType::pie;
    CHECK(error_message(pie) == "empty data");

    auto zero = bar_spec();
    zero.canvas_width = 0;
    CHECK(error_message(zero) == "non-positive canvas");

    auto neg = bar_spec();
    neg.bar_heights = {1, -2};
    CHECK(error_message(neg) == "negative bar height");

    auto margins = bar_spec();
    margins.margins = {250, 200, 10, 10};
    CHECK(error_message(margins) == "margins exceed canvas");
}

TEST_CASE("pie sweeps follow fractions, start at 12 o'clock") {
    ChartSpec s;
    s.chart_type = ChartType::pie;
    s.pie_fractions = {0.5, 0.3, 0.2};
    const auto r = render_chart(s);
    const auto marks = r.geometry.data_marks();
    REQUIRE(marks.size() == 3);
    const std::vector<double> expect{180.0, 108.0, 72.0};
    double start = 0.0, total = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& sl = std::get<Slice>(marks[i]->shape);
        CHECK(sl.sweep_angle == doctest::Approx(expect[i]).epsilon(1e-12));
        CHECK(sl.start_angle == doctest::Approx(start).epsilon(1e-12));
        start += sl.sweep_angle;
        total += sl.sweep_angle;
    }
    CHECK(std::abs(total - 360.0) < 1e-6);

    // Clockwise from the top: just right of 12 o'clock belongs to slice 0,
    // just left of it to the last slice.
    const auto& s0 = std::get<Slice>(marks[0]->shape);
    const auto right = r.image.at(int(s0.cx) + 3, int(s0.cy - s0.R / 2)).rgb();
    const auto left = r.image.at(int(s0.cx) - 4, int(s0.cy - s0.R / 2)).rgb();
    CHECK(right == marks[0]->color);
    CHECK(left == marks[2]->color);
}

TEST_CASE("pie sweep sum holds for awkward fractions") {
    ChartSpec s;
    s.chart_type = ChartType::pie;
    s.pie_fractions = {1.0 / 3, 1.0 / 7, 0.123456789, 2.0, 1e-3};
    const auto r = render_chart(s);
    double total = 0.0;
    for (const auto* m : r.geometry.data_marks()) total += std::get<Slice>(m->shape).sweep_angle;
    CHECK(std::abs(total - 360.0) < 1e-6);
}

TEST_CASE("bar heights map linearly onto the value height") {
    CHECK(bar_pixel_heights({0, 100}, 200) == std::vector<int>{0, 200});
    CHECK(bar_pixel_heights({10, 20, 30}, 90) == std::vector<int>{30, 60, 90});

    auto s = bar_spec();
    s.bar_heights = {0, 100, 50};
    const auto r = render_chart(s);
    const auto marks = r.geometry.data_marks();
    REQUIRE(marks.size() == 2);  // zero-height bar emits no mark
    const int value_height = int(std::lround(r.geometry.plot_rect.h * kBarValueFraction));
    CHECK(std::get<BarRect>(marks[0]->shape).h == value_height);
    CHECK(std::get<BarRect>(marks[0]->shape).y + std::get<BarRect>(marks[0]->shape).h == r.geometry.plot_rect.bottom());
}

TEST_CASE("line tilt in a square plot") {
    ChartSpec s;
    s.chart_type = ChartType::line;
    s.canvas_width = 300;
    s.canvas_height = 300;
    s.margins = {50, 50, 50, 50};
    s.line_series = {{{0, 0}, {1, 1}}};
    const auto r = render_chart(s);
    const auto marks = r.geometry.data_marks();
    REQUIRE(marks.size() == 1);
    // Pixel deltas are (iw, -ih) with iw == ih, so atan(ih / iw) = 45 degrees.
    CHECK(std::get<Segment>(marks[0]->shape).tilt_deg() == doctest::Approx(45.0).epsilon(1e-12));
}

TEST_CASE("line tilt follows the aspect of a non-square plot") {
    ChartSpec s;
    s.chart_type = ChartType::line;
    s.canvas_width = 500;
    s.canvas_height = 300;
    s.margins = {50, 50, 50, 50};
    s.line_series = {{{0, 0}, {1, 1}}};
    const auto r = render_chart(s);
    const double inset = s.line_thickness / 2 + 1.0;
    const double iw = 400 - 2 * inset, ih = 200 - 2 * inset;
    const auto& seg = std::get<Segment>(r.geometry.data_marks()[0]->shape);
    CHECK(seg.tilt_deg() == doctest::Approx(std::atan2(ih, iw) * 180.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("rendering is deterministic and geometry matches pixels") {
    std::vector<ChartSpec> specs;
    specs.push_back(bar_spec());
    ChartSpec line;
    line.chart_type = ChartType::line;
    line.line_series = {{{0, 1}, {1, 3}, {2, 2}, {3, 5}}, {{0, 4}, {1, 1}, {2, 3}, {3, 0.5}}};
    specs.push_back(line);
    ChartSpec scatter;
    scatter.chart_type = ChartType::scatter;
    scatter.scatter_points = {{1, 2, 5}, {3, 1, 8}, {2, 4, 6}, {5, 5, 4}};
    specs.push_back(scatter);
    ChartSpec pie;
    pie.chart_type = ChartType::pie;
    pie.pie_fractions = {3, 2, 1, 1};
    specs.push_back(pie);

    for (const auto& s : specs) {
        const auto a = render_chart(s);
        const auto b = render_chart(s);
        CHECK(encode_png(a.image) == encode_png(b.image));
        CHECK(a.geometry.element_extent.width >= 1);
        CHECK(a.geometry.element_extent.height >= 1);
        for (const auto& m : a.geometry.elements) {
            const auto fp = rasterize(m, s.canvas_width, s.canvas_height);
            REQUIRE(fp.count() > 0);
            std::size_t match = 0;
            for (int y = 0; y < fp.rect.h; ++y)
                for (int x = 0; x < fp.rect.w; ++x)
                    if (fp.mask[y * fp.rect.w + x] && a.image.at(fp.rect.x + x, fp.rect.y + y).rgb() == m.color) ++match;
            CHECK(match * 2 >= fp.count());
            if (!m.auxiliary) CHECK(a.geometry.plot_rect.contains(fp.rect));
        }
    }
}

TEST_CASE("chart spec JSON round trip") {
    ChartSpec s;
    s.chart_type = ChartType::scatter;
    s.palette = {{1, 2, 3}, {200, 100, 50}};
    s.scatter_points = {{1, 2, 5}, {3, 1, 8}};
    const auto back = chart_spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.palette[1] == Rgb{200, 100, 50});

    const auto j = nlohmann::json::parse(R"({"chart_type":"bar","data":{"bar_heights":[1,2]},"margins":10})");
    const auto parsed = chart_spec_from_json(j);
    CHECK(parsed.margins.left == 10);
    CHECK(parsed.bar_heights.size() == 2);
    CHECK_THROWS_AS(chart_spec_from_json(nlohmann::json::parse(R"({"chart_type":"donut","data":{}})")), Error);
}

TEST_CASE("mark JSON round trip") {
    const Mark m{Slice{10, 20, 30, 40, 50}, {9, 8, 7}, false};
    const auto back = mark_from_json(to_json(m));
    CHECK(to_json(back) == to_json(m));
}
