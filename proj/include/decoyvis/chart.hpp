#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "decoyvis/raster.hpp"

namespace decoyvis {

enum class ChartType { bar, line, scatter, pie };

std::string to_string(ChartType t);
ChartType chart_type_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Declarative input

struct Margins {
    int left = 60, right = 30, top = 30, bottom = 60;
};

struct DataPoint {
    double x = 0.0, y = 0.0;
};

struct ScatterPoint {
    double x = 0.0, y = 0.0, radius = 6.0;
};

struct ChartSpec {
    ChartType chart_type = ChartType::bar;
    int canvas_width = 800;
    int canvas_height = 600;
    Margins margins;
    std::vector<Rgb> palette;  // empty -> default palette

    std::vector<double> bar_heights;
    std::vector<std::string> labels;
    std::vector<std::vector<DataPoint>> line_series;
    std::vector<ScatterPoint> scatter_points;
    std::vector<double> pie_fractions;

    double line_thickness = 3.0;
};

/// Throws ErrorKind::validation naming the first violated invariant.
void validate_spec(const ChartSpec& spec);

// ---------------------------------------------------------------------------
// Mark geometry, all in canvas pixels (y grows downward)

struct BarRect {
    double x = 0, y = 0, w = 0, h = 0;
};

struct Segment {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0, thickness = 1;

    /// Degrees counter-clockwise from the +x axis with y pointing up.
    double tilt_deg() const;
    double length() const;
};

struct Dot {
    double cx = 0, cy = 0, r = 1;
};

/// Angles in degrees, measured clockwise from 12 o'clock.
struct Slice {
    double cx = 0, cy = 0, R = 1, start_angle = 0, sweep_angle = 360;
};

using Shape = std::variant<BarRect, Segment, Dot, Slice>;

struct Mark {
    Shape shape;
    Rgb color;
    bool auxiliary = false;

    /// Center used for nearest-mark queries.
    DataPoint center() const;
    /// Conservative pixel bounds of every pixel the mark can cover.
    Rect bounds() const;
    /// Pixel-center coverage test used by the rasterizer.
    bool covers(double px, double py) const;
};

struct Extent {
    int width = 1, height = 1;  // V_w, V_h
};

struct GeometrySet {
    ChartType chart_type = ChartType::bar;
    std::vector<Mark> elements;
    Rect plot_rect;
    Extent element_extent;

    std::vector<const Mark*> data_marks() const;
};

/// A mark's covered pixels: bounding rect plus a row-major coverage bitmap.
struct Footprint {
    Rect rect;
    std::vector<std::uint8_t> mask;
    std::size_t count() const;
};

Footprint rasterize(const Mark& mark, int canvas_width, int canvas_height);

/// Fills mark pixels with its color at alpha 255, no anti-aliasing.
void draw_mark(RasterImage& img, const Mark& mark);

/// V_w, V_h: minimum footprint width and height over data marks.
Extent compute_element_extent(const std::vector<Mark>& marks, int canvas_width, int canvas_height);

// ---------------------------------------------------------------------------
// Rendering

/// Fraction of the plot height used by the bar value axis; the rest is
/// headroom for taller decoy bars.
inline constexpr double kBarValueFraction = 0.8;

/// Linear map of [0, max(heights)] onto [0, value_height], rounded to pixels.
std::vector<int> bar_pixel_heights(const std::vector<double>& heights, int value_height);

struct RenderedChart {
    RasterImage image;
    GeometrySet geometry;
};

/// Deterministic, white background, data marks aliased. Axes and ticks are
/// emitted as auxiliary marks.
RenderedChart render_chart(const ChartSpec& spec);

std::vector<Rgb> default_palette();

// ---------------------------------------------------------------------------
// JSON

std::string rgb_to_hex(Rgb c);
Rgb rgb_from_json(const nlohmann::json& j);

ChartSpec chart_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChartSpec& spec);
nlohmann::json to_json(const Mark& mark);
Mark mark_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeometrySet& geometry);

}  // namespace decoyvis
