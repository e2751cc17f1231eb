#include "decoyvis/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "decoyvis/color.hpp"
#include "decoyvis/error.hpp"

namespace decoyvis {

namespace {

constexpr double kRad = std::numbers::pi / 180.0;
constexpr Rgb kAxisColor{64, 64, 64};
constexpr double kAxisThickness = 2.0;
constexpr double kTickLength = 6.0;
constexpr int kTickCount = 5;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool finite(double v) { return std::isfinite(v); }

}  // namespace

std::string to_string(ChartType t) {
    switch (t) {
        case ChartType::bar: return "bar";
        case ChartType::line: return "line";
        case ChartType::scatter: return "scatter";
        case ChartType::pie: return "pie";
    }
    return "bar";
}

ChartType chart_type_from_string(const std::string& s) {
    if (s == "bar") return ChartType::bar;
    if (s == "line") return ChartType::line;
    if (s == "scatter") return ChartType::scatter;
    if (s == "pie") return ChartType::pie;
    fail_validation("unknown chart_type '" + s + "'");
}

std::vector<Rgb> default_palette() {
    return {{76, 120, 168}, {245, 133, 24}, {84, 162, 75}, {228, 87, 86}, {114, 183, 178}, {178, 121, 162}};
}

void validate_spec(const ChartSpec& spec) {
    if (spec.canvas_width <= 0 || spec.canvas_height <= 0) fail_validation("non-positive canvas");
    const auto& m = spec.margins;
    if (m.left < 0 || m.right < 0 || m.top < 0 || m.bottom < 0) fail_validation("negative margin");
    if (m.left + m.right >= spec.canvas_width || m.top + m.bottom >= spec.canvas_height) {
        fail_validation("margins exceed canvas");
    }
    if (!(spec.line_thickness > 0.0) || !finite(spec.line_thickness)) fail_validation("non-positive line thickness");
    switch (spec.chart_type) {
        case ChartType::bar:
            if (spec.bar_heights.empty()) fail_validation("empty data");
            for (double h : spec.bar_heights) {
                if (!finite(h)) fail_validation("non-finite bar height");
                if (h < 0.0) fail_validation("negative bar height");
            }
            if (!spec.labels.empty() && spec.labels.size() != spec.bar_heights.size()) {
                fail_validation("label count differs from bar count");
            }
            break;
        case ChartType::line: {
            if (spec.line_series.empty()) fail_validation("empty data");
            double xmin = INFINITY, xmax = -INFINITY;
            for (const auto& series : spec.line_series) {
                if (series.size() < 2) fail_validation("line series needs at least two points");
                for (const auto& p : series) {
                    if (!finite(p.x) || !finite(p.y)) fail_validation("non-finite line point");
                    xmin = std::min(xmin, p.x);
                    xmax = std::max(xmax, p.x);
                }
            }
            if (!(xmax > xmin)) fail_validation("line x range is degenerate");
            break;
        }
        case ChartType::scatter:
            if (spec.scatter_points.empty()) fail_validation("empty data");
            for (const auto& p : spec.scatter_points) {
                if (!finite(p.x) || !finite(p.y)) fail_validation("non-finite scatter point");
                if (!(p.radius > 0.0) || !finite(p.radius)) fail_validation("non-positive dot radius");
            }
            break;
        case ChartType::pie: {
            if (spec.pie_fractions.empty()) fail_validation("empty data");
            for (double f : spec.pie_fractions) {
                if (!finite(f) || !(f > 0.0)) fail_validation("pie fractions must be positive");
            }
            break;
        }
    }
}

// ---------------------------------------------------------------------------

double Segment::tilt_deg() const { return std::atan2(-(y1 - y0), x1 - x0) / kRad; }

double Segment::length() const { return std::hypot(x1 - x0, y1 - y0); }

DataPoint Mark::center() const {
    return std::visit(overloaded{
                          [](const BarRect& b) { return DataPoint{b.x + b.w / 2, b.y + b.h / 2}; },
                          [](const Segment& s) { return DataPoint{(s.x0 + s.x1) / 2, (s.y0 + s.y1) / 2}; },
                          [](const Dot& d) { return DataPoint{d.cx, d.cy}; },
                          [](const Slice& s) {
                              const double mid = (s.start_angle + s.sweep_angle / 2) * kRad;
                              return DataPoint{s.cx + 0.5 * s.R * std::sin(mid), s.cy - 0.5 * s.R * std::cos(mid)};
                          },
                      },
                      shape);
}

Rect Mark::bounds() const {
    auto from = [](double x0, double y0, double x1, double y1) {
        const int ix0 = static_cast<int>(std::floor(x0));
        const int iy0 = static_cast<int>(std::floor(y0));
        const int ix1 = static_cast<int>(std::ceil(x1));
        const int iy1 = static_cast<int>(std::ceil(y1));
        return Rect{ix0, iy0, ix1 - ix0, iy1 - iy0};
    };
    return std::visit(overloaded{
                          [&](const BarRect& b) { return from(b.x, b.y, b.x + b.w, b.y + b.h); },
                          [&](const Segment& s) {
                              const double t = s.thickness / 2;
                              return from(std::min(s.x0, s.x1) - t, std::min(s.y0, s.y1) - t,
                                          std::max(s.x0, s.x1) + t, std::max(s.y0, s.y1) + t);
                          },
                          [&](const Dot& d) { return from(d.cx - d.r, d.cy - d.r, d.cx + d.r, d.cy + d.r); },
                          [&](const Slice& s) { return from(s.cx - s.R, s.cy - s.R, s.cx + s.R, s.cy + s.R); },
                      },
                      shape);
}

bool Mark::covers(double px, double py) const {
    return std::visit(
        overloaded{
            [&](const BarRect& b) { return px >= b.x && px < b.x + b.w && py >= b.y && py < b.y + b.h; },
            [&](const Segment& s) {
                const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
                const double len2 = dx * dx + dy * dy;
                double t = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
                t = std::clamp(t, 0.0, 1.0);
                const double ex = s.x0 + t * dx - px, ey = s.y0 + t * dy - py;
                const double half = s.thickness / 2;
                return ex * ex + ey * ey <= half * half;
            },
            [&](const Dot& d) {
                const double dx = px - d.cx, dy = py - d.cy;
                return dx * dx + dy * dy <= d.r * d.r;
            },
            [&](const Slice& s) {
                const double dx = px - s.cx, dy = py - s.cy;
                if (dx * dx + dy * dy > s.R * s.R) return false;
                if (s.sweep_angle >= 360.0) return true;
                const double ang = wrap_degrees(std::atan2(dx, -dy) / kRad);
                return wrap_degrees(ang - s.start_angle) < s.sweep_angle;
            },
        },
        shape);
}

std::vector<const Mark*> GeometrySet::data_marks() const {
    std::vector<const Mark*> out;
    for (const auto& m : elements)
        if (!m.auxiliary) out.push_back(&m);
    return out;
}

std::size_t Footprint::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

Footprint rasterize(const Mark& mark, int canvas_width, int canvas_height) {
    Rect b = mark.bounds();
    const int x0 = std::max(0, b.x), y0 = std::max(0, b.y);
    const int x1 = std::min(canvas_width, b.right()), y1 = std::min(canvas_height, b.bottom());
    Footprint fp;
    if (x1 <= x0 || y1 <= y0) return fp;
    std::vector<std::uint8_t> full(static_cast<std::size_t>(x1 - x0) * (y1 - y0), 0);
    int mx0 = x1, my0 = y1, mx1 = -1, my1 = -1;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (mark.covers(x + 0.5, y + 0.5)) {
                full[static_cast<std::size_t>(y - y0) * (x1 - x0) + (x - x0)] = 1;
                mx0 = std::min(mx0, x);
                mx1 = std::max(mx1, x);
                my0 = std::min(my0, y);
                my1 = std::max(my1, y);
            }
        }
    }
    if (mx1 < 0) return fp;
    fp.rect = {mx0, my0, mx1 - mx0 + 1, my1 - my0 + 1};
    fp.mask.resize(static_cast<std::size_t>(fp.rect.w) * fp.rect.h);
    for (int y = 0; y < fp.rect.h; ++y) {
        for (int x = 0; x < fp.rect.w; ++x) {
            fp.mask[static_cast<std::size_t>(y) * fp.rect.w + x] =
                full[static_cast<std::size_t>(y + my0 - y0) * (x1 - x0) + (x + mx0 - x0)];
        }
    }
    return fp;
}

void draw_mark(RasterImage& img, const Mark& mark) {
    const Footprint fp = rasterize(mark, img.width(), img.height());
    const Rgba c{mark.color.r, mark.color.g, mark.color.b, 255};
    for (int y = 0; y < fp.rect.h; ++y)
        for (int x = 0; x < fp.rect.w; ++x)
            if (fp.mask[static_cast<std::size_t>(y) * fp.rect.w + x]) img.set(fp.rect.x + x, fp.rect.y + y, c);
}

Extent compute_element_extent(const std::vector<Mark>& marks, int canvas_width, int canvas_height) {
    int w = INT32_MAX, h = INT32_MAX;
    for (const auto& m : marks) {
        if (m.auxiliary) continue;
        const Footprint fp = rasterize(m, canvas_width, canvas_height);
        if (fp.rect.empty()) continue;
        w = std::min(w, fp.rect.w);
        h = std::min(h, fp.rect.h);
    }
    if (w == INT32_MAX) return {1, 1};
    return {std::max(1, w), std::max(1, h)};
}

std::vector<int> bar_pixel_heights(const std::vector<double>& heights, int value_height) {
    const double max = heights.empty() ? 0.0 : *std::max_element(heights.begin(), heights.end());
    std::vector<int> out;
    out.reserve(heights.size());
    for (double h : heights) {
        out.push_back(max > 0.0 ? static_cast<int>(std::lround(h / max * value_height)) : 0);
    }
    return out;
}

namespace {

void add_axes(std::vector<Mark>& marks, const Rect& plot) {
    const double t = kAxisThickness;
    const double axis_y = plot.bottom() + t / 2;
    const double axis_x = plot.x - t / 2;
    marks.push_back({Segment{axis_x - t / 2, axis_y, static_cast<double>(plot.right()), axis_y, t}, kAxisColor, true});
    marks.push_back({Segment{axis_x, static_cast<double>(plot.y), axis_x, axis_y + t / 2, t}, kAxisColor, true});
    for (int i = 0; i < kTickCount; ++i) {
        const double fx = plot.x + (i + 0.5) * plot.w / kTickCount;
        marks.push_back({Segment{fx, plot.bottom() + t, fx, plot.bottom() + t + kTickLength, t}, kAxisColor, true});
        const double fy = plot.bottom() - (i + 1.0) * plot.h / kTickCount + t / 2;
        marks.push_back({Segment{plot.x - t, fy, plot.x - t - kTickLength, fy, t}, kAxisColor, true});
    }
}

}  // namespace

RenderedChart render_chart(const ChartSpec& spec) {
    validate_spec(spec);
    const auto palette = spec.palette.empty() ? default_palette() : spec.palette;
    auto color_at = [&](std::size_t i) { return palette[i % palette.size()]; };

    const auto& mg = spec.margins;
    const Rect plot{mg.left, mg.top, spec.canvas_width - mg.left - mg.right, spec.canvas_height - mg.top - mg.bottom};
    std::vector<Mark> marks;

    switch (spec.chart_type) {
        case ChartType::bar: {
            const int n = static_cast<int>(spec.bar_heights.size());
            const int value_height = static_cast<int>(std::lround(plot.h * kBarValueFraction));
            const auto px = bar_pixel_heights(spec.bar_heights, value_height);
            const double slot = static_cast<double>(plot.w) / n;
            const int bw = std::max(1, static_cast<int>(std::lround(slot * 0.6)));
            for (int i = 0; i < n; ++i) {
                if (px[i] <= 0) continue;
                const int x = plot.x + static_cast<int>(std::lround(i * slot + (slot - bw) / 2));
                marks.push_back({BarRect{static_cast<double>(x), static_cast<double>(plot.bottom() - px[i]),
                                         static_cast<double>(bw), static_cast<double>(px[i])},
                                 color_at(i), false});
            }
            break;
        }
        case ChartType::line: {
            double xmin = INFINITY, xmax = -INFINITY, ymin = 0.0, ymax = -INFINITY;
            for (const auto& s : spec.line_series)
                for (const auto& p : s) {
                    xmin = std::min(xmin, p.x);
                    xmax = std::max(xmax, p.x);
                    ymin = std::min(ymin, p.y);
                    ymax = std::max(ymax, p.y);
                }
            if (!(ymax > ymin)) ymax = ymin + 1.0;
            const double inset = spec.line_thickness / 2 + 1.0;
            const double ix = plot.x + inset, iw = plot.w - 2 * inset;
            const double iy = plot.y + inset, ih = plot.h - 2 * inset;
            for (std::size_t s = 0; s < spec.line_series.size(); ++s) {
                const auto& series = spec.line_series[s];
                for (std::size_t i = 0; i + 1 < series.size(); ++i) {
                    auto map = [&](const DataPoint& p) {
                        return DataPoint{ix + (p.x - xmin) / (xmax - xmin) * iw,
                                         iy + ih - (p.y - ymin) / (ymax - ymin) * ih};
                    };
                    const auto a = map(series[i]);
                    const auto b = map(series[i + 1]);
                    marks.push_back({Segment{a.x, a.y, b.x, b.y, spec.line_thickness}, color_at(s), false});
                }
            }
            break;
        }
        case ChartType::scatter: {
            double xmin = 0.0, xmax = -INFINITY, ymin = 0.0, ymax = -INFINITY, rmax = 0.0;
            for (const auto& p : spec.scatter_points) {
                xmin = std::min(xmin, p.x);
                xmax = std::max(xmax, p.x);
                ymin = std::min(ymin, p.y);
                ymax = std::max(ymax, p.y);
                rmax = std::max(rmax, p.radius);
            }
            if (!(xmax > xmin)) xmax = xmin + 1.0;
            if (!(ymax > ymin)) ymax = ymin + 1.0;
            const double inset = rmax + 1.0;
            const double ix = plot.x + inset, iw = plot.w - 2 * inset;
            const double iy = plot.y + inset, ih = plot.h - 2 * inset;
            for (std::size_t i = 0; i < spec.scatter_points.size(); ++i) {
                const auto& p = spec.scatter_points[i];
                marks.push_back({Dot{ix + (p.x - xmin) / (xmax - xmin) * iw, iy + ih - (p.y - ymin) / (ymax - ymin) * ih,
                                     p.radius},
                                 color_at(i), false});
            }
            break;
        }
        case ChartType::pie: {
            const double total = std::accumulate(spec.pie_fractions.begin(), spec.pie_fractions.end(), 0.0);
            const double cx = plot.x + plot.w / 2.0, cy = plot.y + plot.h / 2.0;
            const double R = 0.4 * std::min(plot.w, plot.h);
            double start = 0.0;
            for (std::size_t i = 0; i < spec.pie_fractions.size(); ++i) {
                const double sweep = i + 1 == spec.pie_fractions.size() ? 360.0 - start
                                                                         : spec.pie_fractions[i] / total * 360.0;
                marks.push_back({Slice{cx, cy, R, start, sweep}, color_at(i), false});
                start += sweep;
            }
            break;
        }
    }
    if (spec.chart_type != ChartType::pie) add_axes(marks, plot);

    RenderedChart out{RasterImage::solid(spec.canvas_width, spec.canvas_height, kWhite), {}};
    for (const auto& m : marks) draw_mark(out.image, m);
    out.geometry.chart_type = spec.chart_type;
    out.geometry.plot_rect = plot;
    out.geometry.element_extent = compute_element_extent(marks, spec.canvas_width, spec.canvas_height);
    out.geometry.elements = std::move(marks);
    return out;
}

// ---------------------------------------------------------------------------
// JSON

std::string rgb_to_hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

Rgb rgb_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        unsigned r = 0, g = 0, b = 0;
        if (s.size() != 7 || s[0] != '#' || std::sscanf(s.c_str() + 1, "%2x%2x%2x", &r, &g, &b) != 3) {
            fail_validation("bad color '" + s + "'");
        }
        return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
    }
    if (j.is_array() && j.size() == 3) {
        std::array<int, 3> v{};
        for (int i = 0; i < 3; ++i) {
            v[i] = j[i].get<int>();
            if (v[i] < 0 || v[i] > 255) fail_validation("color channel out of range");
        }
        return {static_cast<std::uint8_t>(v[0]), static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2])};
    }
    fail_validation("color must be \"#rrggbb\" or [r, g, b]");
}

ChartSpec chart_spec_from_json(const nlohmann::json& j) {
    try {
        ChartSpec s;
        s.chart_type = chart_type_from_string(j.at("chart_type").get<std::string>());
        s.canvas_width = j.value("canvas_width", s.canvas_width);
        s.canvas_height = j.value("canvas_height", s.canvas_height);
        if (j.contains("margins")) {
            const auto& m = j["margins"];
            if (m.is_number_integer()) {
                const int v = m.get<int>();
                s.margins = {v, v, v, v};
            } else {
                s.margins.left = m.value("left", s.margins.left);
                s.margins.right = m.value("right", s.margins.right);
                s.margins.top = m.value("top", s.margins.top);
                s.margins.bottom = m.value("bottom", s.margins.bottom);
            }
        }
        if (j.contains("palette"))
            for (const auto& c : j["palette"]) s.palette.push_back(rgb_from_json(c));
        s.line_thickness = j.value("line_thickness", s.line_thickness);

        const auto& d = j.at("data");
        if (d.contains("bar_heights")) s.bar_heights = d["bar_heights"].get<std::vector<double>>();
        if (d.contains("labels")) s.labels = d["labels"].get<std::vector<std::string>>();
        if (d.contains("line_series")) {
            for (const auto& series : d["line_series"]) {
                std::vector<DataPoint> pts;
                for (const auto& p : series) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
                s.line_series.push_back(std::move(pts));
            }
        }
        if (d.contains("scatter_points")) {
            for (const auto& p : d["scatter_points"]) {
                ScatterPoint sp{p.at(0).get<double>(), p.at(1).get<double>()};
                if (p.size() > 2) sp.radius = p.at(2).get<double>();
                s.scatter_points.push_back(sp);
            }
        }
        if (d.contains("pie_fractions")) s.pie_fractions = d["pie_fractions"].get<std::vector<double>>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail_validation(std::string("malformed chart spec: ") + e.what());
    }
}

nlohmann::json to_json(const ChartSpec& s) {
    nlohmann::json j;
    j["chart_type"] = to_string(s.chart_type);
    j["canvas_width"] = s.canvas_width;
    j["canvas_height"] = s.canvas_height;
    j["margins"] = {{"left", s.margins.left}, {"right", s.margins.right}, {"top", s.margins.top}, {"bottom", s.margins.bottom}};
    j["palette"] = nlohmann::json::array();
    for (const auto& c : s.palette) j["palette"].push_back(rgb_to_hex(c));
    j["line_thickness"] = s.line_thickness;
    nlohmann::json d = nlohmann::json::object();
    switch (s.chart_type) {
        case ChartType::bar:
            d["bar_heights"] = s.bar_heights;
            if (!s.labels.empty()) d["labels"] = s.labels;
            break;
        case ChartType::line:
            d["line_series"] = nlohmann::json::array();
            for (const auto& series : s.line_series) {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& p : series) arr.push_back({p.x, p.y});
                d["line_series"].push_back(arr);
            }
            break;
        case ChartType::scatter:
            d["scatter_points"] = nlohmann::json::array();
            for (const auto& p : s.scatter_points) d["scatter_points"].push_back({p.x, p.y, p.radius});
            break;
        case ChartType::pie: d["pie_fractions"] = s.pie_fractions; break;
    }
    j["data"] = d;
    return j;
}

nlohmann::json to_json(const Mark& mark) {
    nlohmann::json j = std::visit(
        overloaded{
            [](const BarRect& b) {
                return nlohmann::json{{"kind", "bar"}, {"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
            },
            [](const Segment& s) {
                return nlohmann::json{{"kind", "segment"}, {"x0", s.x0}, {"y0", s.y0}, {"x1", s.x1},
                                      {"y1", s.y1},        {"thickness", s.thickness}, {"tilt", s.tilt_deg()}};
            },
            [](const Dot& d) { return nlohmann::json{{"kind", "dot"}, {"cx", d.cx}, {"cy", d.cy}, {"r", d.r}}; },
            [](const Slice& s) {
                return nlohmann::json{{"kind", "slice"}, {"cx", s.cx},
                                      {"cy", s.cy},      {"R", s.R},
                                      {"start_angle", s.start_angle}, {"sweep_angle", s.sweep_angle}};
            },
        },
        mark.shape);
    j["color"] = rgb_to_hex(mark.color);
    j["auxiliary"] = mark.auxiliary;
    return j;
}

Mark mark_from_json(const nlohmann::json& j) {
    Mark m;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "bar") {
        m.shape = BarRect{j.at("x"), j.at("y"), j.at("w"), j.at("h")};
    } else if (kind == "segment") {
        m.shape = Segment{j.at("x0"), j.at("y0"), j.at("x1"), j.at("y1"), j.at("thickness")};
    } else if (kind == "dot") {
        m.shape = Dot{j.at("cx"), j.at("cy"), j.at("r")};
    } else if (kind == "slice") {
        m.shape = Slice{j.at("cx"), j.at("cy"), j.at("R"), j.at("start_angle"), j.at("sweep_angle")};
    } else {
        fail_validation("unknown mark kind '" + kind + "'");
    }
    m.color = rgb_from_json(j.at("color"));
    m.auxiliary = j.value("auxiliary", false);
    return m;
}

nlohmann::json to_json(const GeometrySet& g) {
    nlohmann::json j;
    j["chart_type"] = to_string(g.chart_type);
    j["plot_rect"] = {{"x", g.plot_rect.x}, {"y", g.plot_rect.y}, {"w", g.plot_rect.w}, {"h", g.plot_rect.h}};
    j["element_extent"] = {{"width", g.element_extent.width}, {"height", g.element_extent.height}};
    j["elements"] = nlohmann::json::array();
    for (const auto& m : g.elements) j["elements"].push_back(to_json(m));
    return j;
}

}  // namespace decoyvis
