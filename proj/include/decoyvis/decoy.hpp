#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "decoyvis/chart.hpp"

namespace decoyvis {

/// Portable seeded generator: mt19937_64 words mapped to doubles through the
/// top 53 bits, so draws agree across standard libraries.
class DecoyRng {
public:
    explicit DecoyRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

struct DecoyConstraints {
    std::uint64_t seed = 0;

    double bar_min_excess = 0.10;
    int bar_count_extra = 0;  // random-position bars beyond the interleaved ones

    double line_jitter = 0.15;  // fraction of plot height
    double line_trend_flip_prob = 0.5;
    double line_endpoint_pull = 0.10;  // fraction of end segment length

    // Absolute pixels when set; otherwise 1.5 r and 3 r of each source dot.
    std::optional<double> scatter_disp_min;
    std::optional<double> scatter_disp_max;
    double scatter_radius_scale = 1.6;
    int scatter_count_extra = 0;

    double pie_split_threshold = 120.0;
    int pie_split_parts = 2;
    double pie_merge_threshold = 30.0;
    double pie_radius_scale = 1.15;
};

/// Throws ErrorKind::validation on out-of-range constraint values.
void validate_constraints(const DecoyConstraints& c);

nlohmann::json to_json(const DecoyConstraints& c);
/// Missing keys keep their defaults.
DecoyConstraints constraints_from_json(const nlohmann::json& j);

struct DecoyGeometry {
    ChartType chart_type = ChartType::bar;
    std::vector<Mark> marks;
    std::vector<std::string> provenance;  // one entry per mark
};

nlohmann::json to_json(const DecoyGeometry& d);

/// Decoy bars at midpoints between neighbors and at both flanks, same width as
/// the originals and clipped horizontally to the plot. Each height is uniform
/// on [(1 + excess) h_ref, plot height], h_ref the tallest adjacent original.
DecoyGeometry gen_decoy_bar(const GeometrySet& orig, const DecoyConstraints& c);

/// Segments are chained into polylines by shared endpoints. Every vertex is
/// jittered vertically, each segment's rise is negated with the flip
/// probability, and both polyline ends slide along their segment. The result
/// is fitted into the plot by a vertical shift, compressed only if too tall.
DecoyGeometry gen_decoy_line(const std::vector<Segment>& orig, const Rect& plot_rect, const DecoyConstraints& c);

DecoyGeometry gen_decoy_scatter(const std::vector<Dot>& orig, const Rect& plot_rect, const DecoyConstraints& c);

/// Deterministic split of wide slices, then merge of maximal adjacent runs of
/// narrow slices. The seed is unused.
DecoyGeometry gen_decoy_pie(const std::vector<Slice>& orig, const DecoyConstraints& c);

/// Dispatches on the chart type using the data marks of orig.
DecoyGeometry gen_decoy(const GeometrySet& orig, const DecoyConstraints& c);

struct HuePlan {
    std::vector<double> hues;  // degrees, one per decoy mark
    bool single_hue = false;
};

/// Single-hue originals (pairwise hue distance < 5 degrees) pass their hue to
/// every decoy mark; otherwise each decoy mark takes the circular mean of its
/// two nearest originals. Bars compare horizontal centers, pie slices compare
/// mid-angles, other marks compare centers.
HuePlan plan_decoy_colors(const GeometrySet& orig, const DecoyGeometry& decoy);

}  // namespace decoyvis
