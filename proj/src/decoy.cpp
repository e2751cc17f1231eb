#include "decoyvis/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "decoyvis/color.hpp"
#include "decoyvis/error.hpp"

namespace decoyvis {

namespace {

// Placeholder color; the optimizer assigns L, C and the planned hue.
constexpr Rgb kUncolored{128, 128, 128};

void require(bool ok, const char* message) {
    if (!ok) fail_validation(message);
}

}  // namespace

void validate_constraints(const DecoyConstraints& c) {
    require(c.bar_min_excess >= 0.0, "bar_min_excess must be >= 0");
    require(c.bar_count_extra >= 0, "bar_count_extra must be >= 0");
    require(c.line_jitter >= 0.0, "line_jitter must be >= 0");
    require(c.line_trend_flip_prob >= 0.0 && c.line_trend_flip_prob <= 1.0, "line_trend_flip_prob must be in [0, 1]");
    require(c.line_endpoint_pull >= 0.0 && c.line_endpoint_pull < 0.5, "line_endpoint_pull must be in [0, 0.5)");
    require(!c.scatter_disp_min || *c.scatter_disp_min >= 0.0, "scatter_disp_min must be >= 0");
    require(!c.scatter_disp_min == !c.scatter_disp_max, "scatter_disp_min and scatter_disp_max must be set together");
    require(!c.scatter_disp_min || *c.scatter_disp_min <= *c.scatter_disp_max,
            "scatter_disp_min must not exceed scatter_disp_max");
    require(c.scatter_radius_scale > 1.0, "scatter_radius_scale must be > 1");
    require(c.scatter_count_extra >= 0, "scatter_count_extra must be >= 0");
    require(c.pie_split_threshold > 0.0, "pie_split_threshold must be > 0");
    require(c.pie_split_parts >= 2, "pie_split_parts must be >= 2");
    require(c.pie_merge_threshold >= 0.0, "pie_merge_threshold must be >= 0");
    require(c.pie_radius_scale > 1.0, "pie_radius_scale must be > 1");
}

nlohmann::json to_json(const DecoyConstraints& c) {
    nlohmann::json j{{"seed", c.seed},
                     {"bar_min_excess", c.bar_min_excess},
                     {"bar_count_extra", c.bar_count_extra},
                     {"line_jitter", c.line_jitter},
                     {"line_trend_flip_prob", c.line_trend_flip_prob},
                     {"line_endpoint_pull", c.line_endpoint_pull},
                     {"scatter_radius_scale", c.scatter_radius_scale},
                     {"scatter_count_extra", c.scatter_count_extra},
                     {"pie_split_threshold", c.pie_split_threshold},
                     {"pie_split_parts", c.pie_split_parts},
                     {"pie_merge_threshold", c.pie_merge_threshold},
                     {"pie_radius_scale", c.pie_radius_scale}};
    j["scatter_disp_min"] = c.scatter_disp_min ? nlohmann::json(*c.scatter_disp_min) : nlohmann::json(nullptr);
    j["scatter_disp_max"] = c.scatter_disp_max ? nlohmann::json(*c.scatter_disp_max) : nlohmann::json(nullptr);
    return j;
}

DecoyConstraints constraints_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail_validation("decoy constraints must be an object");
    DecoyConstraints c;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("seed", c.seed);
        get("bar_min_excess", c.bar_min_excess);
        get("bar_count_extra", c.bar_count_extra);
        get("line_jitter", c.line_jitter);
        get("line_trend_flip_prob", c.line_trend_flip_prob);
        get("line_endpoint_pull", c.line_endpoint_pull);
        get("scatter_radius_scale", c.scatter_radius_scale);
        get("scatter_count_extra", c.scatter_count_extra);
        get("pie_split_threshold", c.pie_split_threshold);
        get("pie_split_parts", c.pie_split_parts);
        get("pie_merge_threshold", c.pie_merge_threshold);
        get("pie_radius_scale", c.pie_radius_scale);
        if (j.contains("scatter_disp_min") && !j.at("scatter_disp_min").is_null())
            c.scatter_disp_min = j.at("scatter_disp_min").get<double>();
        if (j.contains("scatter_disp_max") && !j.at("scatter_disp_max").is_null())
            c.scatter_disp_max = j.at("scatter_disp_max").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail_validation(std::string("decoy constraints: ") + e.what());
    }
    validate_constraints(c);
    return c;
}

nlohmann::json to_json(const DecoyGeometry& d) {
    nlohmann::json marks = nlohmann::json::array();
    for (const auto& m : d.marks) marks.push_back(to_json(m));
    return {{"chart_type", to_string(d.chart_type)}, {"marks", marks}, {"provenance", d.provenance}};
}

// ---------------------------------------------------------------------------

DecoyGeometry gen_decoy_bar(const GeometrySet& orig, const DecoyConstraints& c) {
    validate_constraints(c);
    std::vector<BarRect> bars;
    for (const auto* m : orig.data_marks())
        if (const auto* b = std::get_if<BarRect>(&m->shape)) bars.push_back(*b);
    if (bars.empty()) fail_validation("bar decoy needs at least one original bar");
    std::stable_sort(bars.begin(), bars.end(), [](const auto& a, const auto& b) { return a.x < b.x; });

    const Rect& plot = orig.plot_rect;
    const double plot_h = plot.h;
    const double baseline = plot.bottom();
    DecoyRng rng(c.seed);
    DecoyGeometry out;
    out.chart_type = ChartType::bar;

    auto place = [&](double center_x, double width, double h_ref, std::string note) {
        const double lo = (1.0 + c.bar_min_excess) * h_ref;
        if (lo > plot_h) fail_validation("decoy bar bound exceeds plot height");
        const double h = rng.uniform(lo, plot_h);
        const double x0 = std::max<double>(plot.x, center_x - width / 2);
        const double x1 = std::min<double>(plot.right(), center_x + width / 2);
        if (x1 - x0 < 1.0) return;
        out.marks.push_back({BarRect{x0, baseline - h, x1 - x0, h}, kUncolored, false});
        out.provenance.push_back(std::move(note));
    };

    const std::size_t n = bars.size();
    auto cx = [&](std::size_t i) { return bars[i].x + bars[i].w / 2; };
    const double pitch = n > 1 ? (cx(n - 1) - cx(0)) / static_cast<double>(n - 1) : 2.0 * bars[0].w;

    place(cx(0) - pitch / 2, bars[0].w, bars[0].h, "interleaved-at:flank-left");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        place((cx(i) + cx(i + 1)) / 2, (bars[i].w + bars[i + 1].w) / 2, std::max(bars[i].h, bars[i + 1].h),
              "interleaved-at:" + std::to_string(i) + "-" + std::to_string(i + 1));
    }
    place(cx(n - 1) + pitch / 2, bars[n - 1].w, bars[n - 1].h, "interleaved-at:flank-right");

    const double tallest = std::max_element(bars.begin(), bars.end(), [](auto& a, auto& b) { return a.h < b.h; })->h;
    for (int e = 0; e < c.bar_count_extra; ++e) {
        const double w = bars[0].w;
        place(rng.uniform(plot.x + w / 2, plot.right() - w / 2), w, tallest, "extra:" + std::to_string(e));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

using Polyline = std::vector<DataPoint>;

// Chains segments whose endpoints coincide within tol, left to right.
std::vector<std::pair<Polyline, double>> chain_segments(std::vector<Segment> segs, double tol) {
    for (auto& s : segs)
        if (s.x1 < s.x0) {
            std::swap(s.x0, s.x1);
            std::swap(s.y0, s.y1);
        }
    std::stable_sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) { return a.x0 < b.x0; });
    std::vector<bool> used(segs.size(), false);
    std::vector<std::pair<Polyline, double>> chains;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        Polyline p{{segs[i].x0, segs[i].y0}, {segs[i].x1, segs[i].y1}};
        const double thickness = segs[i].thickness;
        for (bool extended = true; extended;) {
            extended = false;
            for (std::size_t j = 0; j < segs.size(); ++j) {
                if (used[j]) continue;
                const auto& tail = p.back();
                if (std::hypot(segs[j].x0 - tail.x, segs[j].y0 - tail.y) <= tol) {
                    p.push_back({segs[j].x1, segs[j].y1});
                    used[j] = true;
                    extended = true;
                    break;
                }
            }
        }
        chains.emplace_back(std::move(p), thickness);
    }
    return chains;
}

}  // namespace

DecoyGeometry gen_decoy_line(const std::vector<Segment>& orig, const Rect& plot_rect, const DecoyConstraints& c) {
    validate_constraints(c);
    if (orig.empty()) fail_validation("line decoy needs at least one original segment");
    DecoyRng rng(c.seed);
    DecoyGeometry out;
    out.chart_type = ChartType::line;

    double max_thickness = 1.0;
    for (const auto& s : orig) max_thickness = std::max(max_thickness, s.thickness);
    const auto chains = chain_segments(orig, std::max(2.0, max_thickness));

    for (std::size_t k = 0; k < chains.size(); ++k) {
        const auto& [src, thickness] = chains[k];
        const double inset = thickness / 2 + 1.0;
        const double x_lo = plot_rect.x + inset, x_hi = plot_rect.right() - inset;
        const double y_lo = plot_rect.y + inset, y_hi = plot_rect.bottom() - inset;
        const std::size_t n = src.size();

        std::vector<double> jittered(n);
        for (std::size_t i = 0; i < n; ++i)
            jittered[i] = src[i].y + rng.uniform(-c.line_jitter, c.line_jitter) * plot_rect.h;
        Polyline p = src;
        p[0].y = jittered[0];
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double rise = jittered[i + 1] - jittered[i];
            const bool flip = rng.unit() < c.line_trend_flip_prob;
            p[i + 1].y = p[i].y + (flip ? -rise : rise);
        }

        // Slide each end along its segment: positive pulls inward.
        auto slide = [&](DataPoint& end, const DataPoint& toward) {
            const double t = rng.uniform(-c.line_endpoint_pull, c.line_endpoint_pull);
            end.x += t * (toward.x - end.x);
            end.y += t * (toward.y - end.y);
        };
        slide(p[0], p[1]);
        slide(p[n - 1], p[n - 2]);

        // Fit vertically by the smallest shift, compressing only when the
        // span exceeds the plot; an increasing affine map keeps every rise's sign.
        const auto [lo_it, hi_it] =
            std::minmax_element(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
        const double top = lo_it->y, bottom = hi_it->y, room = std::max(0.0, y_hi - y_lo);
        const double scale = bottom - top > room ? room / (bottom - top) : 1.0;
        const double span = (bottom - top) * scale;
        const double new_top = std::clamp(top, y_lo, y_lo + room - span);
        for (auto& v : p) {
            v.y = new_top + (v.y - top) * scale;
            v.x = std::clamp(v.x, x_lo, std::max(x_lo, x_hi));
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            out.marks.push_back({Segment{p[i].x, p[i].y, p[i + 1].x, p[i + 1].y, thickness}, kUncolored, false});
            out.provenance.push_back("perturbed-from:polyline-" + std::to_string(k) + "-segment-" + std::to_string(i));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

DecoyGeometry gen_decoy_scatter(const std::vector<Dot>& orig, const Rect& plot_rect, const DecoyConstraints& c) {
    validate_constraints(c);
    if (orig.empty()) fail_validation("scatter decoy needs at least one original dot");
    DecoyRng rng(c.seed);
    DecoyGeometry out;
    out.chart_type = ChartType::scatter;

    auto clip = [&](Dot d) {
        auto axis = [](double v, double lo, double hi, double r) {
            return lo + r <= hi - r ? std::clamp(v, lo + r, hi - r) : (lo + hi) / 2;
        };
        d.cx = axis(d.cx, plot_rect.x, plot_rect.right(), d.r);
        d.cy = axis(d.cy, plot_rect.y, plot_rect.bottom(), d.r);
        return d;
    };

    double mean_r = 0.0;
    for (std::size_t i = 0; i < orig.size(); ++i) {
        const auto& o = orig[i];
        mean_r += o.r / static_cast<double>(orig.size());
        const double lo = c.scatter_disp_min.value_or(1.5 * o.r);
        const double hi = c.scatter_disp_max.value_or(3.0 * o.r);
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double mag = rng.uniform(lo, hi);
        const Dot d{o.cx + mag * std::cos(angle), o.cy + mag * std::sin(angle), c.scatter_radius_scale * o.r};
        out.marks.push_back({clip(d), kUncolored, false});
        out.provenance.push_back("displaced-from:" + std::to_string(i));
    }
    for (int e = 0; e < c.scatter_count_extra; ++e) {
        const Dot d{rng.uniform(plot_rect.x, plot_rect.right()), rng.uniform(plot_rect.y, plot_rect.bottom()),
                    c.scatter_radius_scale * mean_r};
        out.marks.push_back({clip(d), kUncolored, false});
        out.provenance.push_back("extra:" + std::to_string(e));
    }
    return out;
}

// ---------------------------------------------------------------------------

DecoyGeometry gen_decoy_pie(const std::vector<Slice>& orig, const DecoyConstraints& c) {
    validate_constraints(c);
    if (orig.empty()) fail_validation("pie decoy needs at least one original slice");
    double total = 0.0;
    for (const auto& s : orig) total += s.sweep_angle;
    if (std::abs(total - 360.0) > 1e-6) fail_validation("pie sweeps must sum to 360 degrees");

    struct Piece {
        double sweep;
        std::string note;
    };
    std::vector<Piece> split;
    for (std::size_t i = 0; i < orig.size(); ++i) {
        const double sweep = orig[i].sweep_angle;
        if (sweep > c.pie_split_threshold) {
            for (int p = 0; p < c.pie_split_parts; ++p)
                split.push_back({sweep / c.pie_split_parts, "split-from:" + std::to_string(i)});
        } else {
            split.push_back({sweep, "copied-from:" + std::to_string(i)});
        }
    }

    std::vector<Piece> merged;
    for (std::size_t i = 0; i < split.size();) {
        if (split[i].sweep >= c.pie_merge_threshold) {
            merged.push_back(split[i++]);
            continue;
        }
        std::size_t j = i;
        double sweep = 0.0;
        std::string note = "merged-from:";
        while (j < split.size() && split[j].sweep < c.pie_merge_threshold) {
            sweep += split[j].sweep;
            note += (j > i ? "+" : "") + split[j].note;
            ++j;
        }
        merged.push_back({sweep, j - i > 1 ? note : split[i].note});
        i = j;
    }

    const auto& first = orig.front();
    DecoyGeometry out;
    out.chart_type = ChartType::pie;
    double start = first.start_angle;
    for (auto& piece : merged) {
        out.marks.push_back(
            {Slice{first.cx, first.cy, c.pie_radius_scale * first.R, start, piece.sweep}, kUncolored, false});
        out.provenance.push_back(std::move(piece.note));
        start += piece.sweep;
    }
    return out;
}

DecoyGeometry gen_decoy(const GeometrySet& orig, const DecoyConstraints& c) {
    const auto data = orig.data_marks();
    switch (orig.chart_type) {
        case ChartType::bar:
            return gen_decoy_bar(orig, c);
        case ChartType::line: {
            std::vector<Segment> segs;
            for (const auto* m : data)
                if (const auto* s = std::get_if<Segment>(&m->shape)) segs.push_back(*s);
            return gen_decoy_line(segs, orig.plot_rect, c);
        }
        case ChartType::scatter: {
            std::vector<Dot> dots;
            for (const auto* m : data)
                if (const auto* d = std::get_if<Dot>(&m->shape)) dots.push_back(*d);
            return gen_decoy_scatter(dots, orig.plot_rect, c);
        }
        case ChartType::pie: {
            std::vector<Slice> slices;
            for (const auto* m : data)
                if (const auto* s = std::get_if<Slice>(&m->shape)) slices.push_back(*s);
            return gen_decoy_pie(slices, c);
        }
    }
    fail_validation("unknown chart type");
}

// ---------------------------------------------------------------------------

namespace {

double slice_mid_angle(const Slice& s) { return wrap_degrees(s.start_angle + s.sweep_angle / 2); }

// Distance used to find the originals adjacent to a decoy mark.
double mark_distance(const Mark& a, const Mark& b) {
    if (const auto* sa = std::get_if<Slice>(&a.shape))
        if (const auto* sb = std::get_if<Slice>(&b.shape))
            return circular_distance(slice_mid_angle(*sa), slice_mid_angle(*sb));
    const auto ca = a.center(), cb = b.center();
    if (std::holds_alternative<BarRect>(a.shape) && std::holds_alternative<BarRect>(b.shape))
        return std::abs(ca.x - cb.x);  // bars share a baseline
    return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

}  // namespace

HuePlan plan_decoy_colors(const GeometrySet& orig, const DecoyGeometry& decoy) {
    const auto data = orig.data_marks();
    HuePlan plan;
    if (data.empty()) fail_validation("hue planning needs original data marks");
    std::vector<double> hues;
    hues.reserve(data.size());
    for (const auto* m : data) hues.push_back(srgb_to_lch(m->color).H);

    plan.single_hue = true;
    for (std::size_t i = 0; i < hues.size() && plan.single_hue; ++i)
        for (std::size_t j = i + 1; j < hues.size(); ++j)
            if (circular_distance(hues[i], hues[j]) >= 5.0) {
                plan.single_hue = false;
                break;
            }

    if (plan.single_hue) {
        const double h = circular_mean_hue(hues).degrees;
        plan.hues.assign(decoy.marks.size(), h);
        return plan;
    }

    std::vector<std::size_t> order(data.size());
    for (const auto& dm : decoy.marks) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return mark_distance(dm, *data[a]) < mark_distance(dm, *data[b]);
        });
        const double pair[2] = {hues[order[0]], hues[order[1]]};
        plan.hues.push_back(circular_mean_hue(pair).degrees);
    }
    return plan;
}

}  // namespace decoyvis
