#include "decoyvis/extract.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <numbers>

#include "decoyvis/error.hpp"

namespace decoyvis {

namespace {

constexpr double kRad = std::numbers::pi / 180.0;

int luminance(Rgba c) { return static_cast<int>(std::lround(0.299 * c.r + 0.587 * c.g + 0.114 * c.b)); }

// Clockwise Moore neighborhood starting at west, image coordinates.
constexpr std::array<std::pair<int, int>, 8> kMoore{{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int moore_index(int dx, int dy) {
    for (int i = 0; i < 8; ++i)
        if (kMoore[i].first == dx && kMoore[i].second == dy) return i;
    return 0;
}

}  // namespace

double LineDetection::tilt_deg() const {
    double t = std::atan2(-(y1 - y0), x1 - x0) / kRad;
    if (t <= -90.0) t += 180.0;
    if (t > 90.0) t -= 180.0;
    return t;
}

std::vector<std::uint8_t> otsu_foreground(const RasterImage& img) {
    std::array<std::size_t, 256> hist{};
    const std::size_t n = static_cast<std::size_t>(img.width()) * img.height();
    std::vector<std::uint8_t> lum(n);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const int l = luminance(img.at(x, y));
            lum[static_cast<std::size_t>(y) * img.width() + x] = static_cast<std::uint8_t>(l);
            ++hist[l];
        }
    std::vector<std::uint8_t> fg(n, 0);
    if (std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }) < 2) return fg;

    double total_mean = 0.0;
    for (int i = 0; i < 256; ++i) total_mean += i * static_cast<double>(hist[i]);
    total_mean /= static_cast<double>(n);
    double best = -1.0, w0 = 0.0, sum0 = 0.0;
    int threshold = 0;
    for (int t = 0; t < 255; ++t) {
        w0 += static_cast<double>(hist[t]) / n;
        sum0 += t * static_cast<double>(hist[t]) / n;
        if (w0 <= 0.0 || w0 >= 1.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_mean - sum0) / (1.0 - w0);
        const double between = w0 * (1.0 - w0) * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            threshold = t;
        }
    }
    std::size_t low = 0;
    for (int i = 0; i <= threshold; ++i) low += hist[i];
    const bool background_is_low = low * 2 > n;
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_low = lum[i] <= threshold;
        fg[i] = is_low != background_is_low ? 1 : 0;
    }
    return fg;
}

std::vector<LineDetection> hough_lines(const RasterImage& img, int vote_threshold, double angle_step_deg,
                                       double rho_step) {
    if (!(angle_step_deg > 0.0) || !(rho_step > 0.0)) fail_validation("hough steps must be positive");
    const auto fg = otsu_foreground(img);
    const int W = img.width(), H = img.height();
    std::vector<std::pair<double, double>> pts;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (fg[static_cast<std::size_t>(y) * W + x]) pts.emplace_back(x + 0.5, y + 0.5);
    if (pts.empty()) return {};

    const int n_theta = std::max(1, static_cast<int>(std::lround(180.0 / angle_step_deg)));
    const double diag = std::hypot(W, H);
    const int rho_half = static_cast<int>(std::ceil(diag / rho_step));
    const int n_rho = 2 * rho_half + 1;
    std::vector<double> cs(n_theta), sn(n_theta);
    for (int t = 0; t < n_theta; ++t) {
        cs[t] = std::cos(t * angle_step_deg * kRad);
        sn[t] = std::sin(t * angle_step_deg * kRad);
    }
    std::vector<int> acc(static_cast<std::size_t>(n_theta) * n_rho, 0);
    for (const auto& [x, y] : pts) {
        for (int t = 0; t < n_theta; ++t) {
            const int r = static_cast<int>(std::lround((x * cs[t] + y * sn[t]) / rho_step)) + rho_half;
            ++acc[static_cast<std::size_t>(t) * n_rho + r];
        }
    }

    // Neighbor lookup wrapping theta: theta + 180 is the same line with -rho.
    auto cell = [&](int t, int r, std::size_t& idx) {
        if (t < 0) {
            t += n_theta;
            r = n_rho - 1 - r;
        } else if (t >= n_theta) {
            t -= n_theta;
            r = n_rho - 1 - r;
        }
        if (r < 0 || r >= n_rho) return false;
        idx = static_cast<std::size_t>(t) * n_rho + r;
        return true;
    };

    std::vector<LineDetection> out;
    for (int t = 0; t < n_theta; ++t) {
        for (int r = 0; r < n_rho; ++r) {
            const std::size_t here = static_cast<std::size_t>(t) * n_rho + r;
            const int v = acc[here];
            if (v < vote_threshold || v == 0) continue;
            bool is_max = true;
            for (int dt = -1; dt <= 1 && is_max; ++dt)
                for (int dr = -1; dr <= 1 && is_max; ++dr) {
                    if (dt == 0 && dr == 0) continue;
                    std::size_t idx;
                    if (!cell(t + dt, r + dr, idx)) continue;
                    // Plateaus resolve to the lowest index.
                    if (acc[idx] > v || (acc[idx] == v && idx < here)) is_max = false;
                }
            if (!is_max) continue;

            LineDetection d;
            d.theta = t * angle_step_deg;
            d.rho = (r - rho_half) * rho_step;
            d.votes = v;
            std::vector<double> along;
            for (const auto& [x, y] : pts) {
                if (std::abs(x * cs[t] + y * sn[t] - d.rho) <= 1.5) along.push_back(-x * sn[t] + y * cs[t]);
            }
            if (along.empty()) continue;
            std::sort(along.begin(), along.end());
            double best_lo = along.front(), best_hi = along.front(), lo = along.front();
            for (std::size_t i = 1; i <= along.size(); ++i) {
                if (i == along.size() || along[i] - along[i - 1] > 3.0) {
                    if (along[i - 1] - lo > best_hi - best_lo) {
                        best_lo = lo;
                        best_hi = along[i - 1];
                    }
                    if (i < along.size()) lo = along[i];
                }
            }
            d.x0 = d.rho * cs[t] - best_lo * sn[t];
            d.y0 = d.rho * sn[t] + best_lo * cs[t];
            d.x1 = d.rho * cs[t] - best_hi * sn[t];
            d.y1 = d.rho * sn[t] + best_hi * cs[t];
            if (d.x1 < d.x0 || (d.x1 == d.x0 && d.y1 < d.y0)) {
                std::swap(d.x0, d.x1);
                std::swap(d.y0, d.y1);
            }
            out.push_back(d);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.votes > b.votes; });
    return out;
}

namespace {

double point_segment_distance(double px, double py, const LineDetection& s) {
    const double dx = s.x1 - s.x0, dy = s.y1 - s.y0;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - s.x0) * dx + (py - s.y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(s.x0 + t * dx - px, s.y0 + t * dy - py);
}

}  // namespace

std::vector<LineDetection> merge_duplicate_lines(const std::vector<LineDetection>& lines, double angle_tol_deg,
                                                 double dist_tol) {
    std::vector<LineDetection> kept;
    for (const auto& d : lines) {
        bool dup = false;
        for (const auto& k : kept) {
            double dt = std::abs(d.tilt_deg() - k.tilt_deg());
            dt = std::min(dt, 180.0 - dt);
            if (dt <= angle_tol_deg && point_segment_distance(d.x0, d.y0, k) <= dist_tol &&
                point_segment_distance(d.x1, d.y1, k) <= dist_tol) {
                dup = true;
                break;
            }
        }
        if (!dup) kept.push_back(d);
    }
    return kept;
}

std::vector<DotDetection> hough_circles(const RasterImage& img, int r_min, int r_max, double score_threshold) {
    const int W = img.width(), H = img.height();
    if (r_min < 1 || r_max < r_min || 2 * r_max > std::min(W, H)) fail_validation("invalid circle radius range");
    const auto fg = otsu_foreground(img);
    auto is_fg = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < W && y < H && fg[static_cast<std::size_t>(y) * W + x] != 0;
    };
    std::vector<std::pair<int, int>> edges;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            if (is_fg(x, y) && (!is_fg(x - 1, y) || !is_fg(x + 1, y) || !is_fg(x, y - 1) || !is_fg(x, y + 1)))
                edges.emplace_back(x, y);
    if (edges.empty()) return {};

    const int n_r = r_max - r_min + 1;
    std::vector<std::vector<std::pair<int, int>>> rings(n_r);
    for (int dy = -r_max - 1; dy <= r_max + 1; ++dy)
        for (int dx = -r_max - 1; dx <= r_max + 1; ++dx) {
            const long r = static_cast<long>(std::ceil(std::hypot(dx, dy)));
            if (r >= r_min && r <= r_max) rings[r - r_min].emplace_back(dx, dy);
        }

    const std::size_t plane = static_cast<std::size_t>(W) * H;
    std::vector<std::uint16_t> acc(plane * n_r, 0);
    for (int ri = 0; ri < n_r; ++ri) {
        std::uint16_t* a = acc.data() + plane * ri;
        for (const auto& [ex, ey] : edges)
            for (const auto& [dx, dy] : rings[ri]) {
                const int cx = ex + dx, cy = ey + dy;
                if (cx >= 0 && cy >= 0 && cx < W && cy < H) ++a[static_cast<std::size_t>(cy) * W + cx];
            }
    }

    struct Candidate {
        double score;
        int r, x, y;
    };
    std::vector<Candidate> cands;
    for (int ri = 0; ri < n_r; ++ri) {
        const double ring = static_cast<double>(rings[ri].size());
        const std::uint16_t* a = acc.data() + plane * ri;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                const double s = a[static_cast<std::size_t>(y) * W + x] / ring;
                if (s >= score_threshold) cands.push_back({s, ri + r_min, x, y});
            }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.r != b.r) return a.r < b.r;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    std::vector<DotDetection> out;
    for (const auto& c : cands) {
        const double cx = c.x + 0.5, cy = c.y + 0.5;
        bool overlaps = false;
        for (const auto& d : out)
            if (std::hypot(d.cx - cx, d.cy - cy) < r_min) {
                overlaps = true;
                break;
            }
        if (overlaps) continue;
        // A dot is a filled disk: its interior must be foreground.
        int inside = 0, filled = 0;
        for (int dy = -c.r; dy <= c.r; ++dy)
            for (int dx = -c.r; dx <= c.r; ++dx) {
                if (std::hypot(dx, dy) > c.r - 1) continue;
                ++inside;
                filled += is_fg(c.x + dx, c.y + dy) ? 1 : 0;
            }
        if (inside > 0 && filled < 0.9 * inside) continue;
        out.push_back({cx, cy, static_cast<double>(c.r), c.score});
    }
    return out;
}

std::vector<std::pair<int, int>> trace_border(const std::vector<std::uint8_t>& mask, int width, int height,
                                              int start_x, int start_y) {
    auto on = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < width && y < height && mask[static_cast<std::size_t>(y) * width + x] != 0;
    };
    std::vector<std::pair<int, int>> contour{{start_x, start_y}};
    int px = start_x, py = start_y;
    int back = 0;  // west of the raster-first pixel is outside
    const std::size_t guard = static_cast<std::size_t>(width) * height * 4 + 8;
    for (std::size_t step = 0; step < guard; ++step) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (on(px + kMoore[d].first, py + kMoore[d].second)) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const int qx = px + kMoore[found].first, qy = py + kMoore[found].second;
        const int prev = (found + 7) % 8;
        const int bx = px + kMoore[prev].first, by = py + kMoore[prev].second;
        if (px == start_x && py == start_y && contour.size() >= 2 && contour[1] == std::pair{qx, qy}) break;
        back = moore_index(bx - qx, by - qy);
        px = qx;
        py = qy;
        contour.emplace_back(px, py);
    }
    if (contour.size() > 1 && contour.back() == contour.front()) contour.pop_back();
    return contour;
}

std::vector<Mark> extract_bars(const RasterImage& img, Rgb background, int min_side) {
    const int W = img.width(), H = img.height();
    std::vector<int> label(static_cast<std::size_t>(W) * H, -1);
    std::vector<Mark> bars;
    std::vector<std::pair<int, int>> stack;
    int next = 0;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * W + x;
            const Rgb c = img.at(x, y).rgb();
            if (label[i] >= 0 || c == background) continue;
            // Flood fill one same-colored component.
            const int id = next++;
            std::vector<std::uint8_t> comp(static_cast<std::size_t>(W) * H, 0);
            std::size_t area = 0;
            stack.assign(1, {x, y});
            label[i] = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                comp[static_cast<std::size_t>(cy) * W + cx] = 1;
                ++area;
                const std::array<std::pair<int, int>, 4> nb{{{cx + 1, cy}, {cx - 1, cy}, {cx, cy + 1}, {cx, cy - 1}}};
                for (auto [nx, ny] : nb) {
                    if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                    const std::size_t j = static_cast<std::size_t>(ny) * W + nx;
                    if (label[j] >= 0 || !(img.at(nx, ny).rgb() == c)) continue;
                    label[j] = id;
                    stack.emplace_back(nx, ny);
                }
            }
            const auto border = trace_border(comp, W, H, x, y);
            int x0 = W, y0 = H, x1 = -1, y1 = -1;
            for (auto [bx, by] : border) {
                x0 = std::min(x0, bx);
                x1 = std::max(x1, bx);
                y0 = std::min(y0, by);
                y1 = std::max(y1, by);
            }
            const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
            const double fill = static_cast<double>(area) / (static_cast<double>(bw) * bh);
            if (fill >= 0.95 && std::min(bw, bh) >= min_side) {
                bars.push_back({BarRect{double(x0), double(y0), double(bw), double(bh)}, c, false});
            }
        }
    }
    std::stable_sort(bars.begin(), bars.end(), [](const Mark& a, const Mark& b) {
        return std::get<BarRect>(a.shape).x < std::get<BarRect>(b.shape).x;
    });
    return bars;
}

namespace {

Rgb sample(const RasterImage& img, double x, double y) {
    const int ix = std::clamp(static_cast<int>(std::floor(x)), 0, img.width() - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(y)), 0, img.height() - 1);
    return img.at(ix, iy).rgb();
}

// Most frequent non-background color at nine evenly spaced interior points;
// background when the segment covers only background.
Rgb sample_along(const RasterImage& img, const LineDetection& d, Rgb background) {
    std::map<std::array<std::uint8_t, 3>, int> votes;
    Rgb best = background;
    int best_votes = 0;
    for (int i = 1; i <= 9; ++i) {
        const double t = i / 10.0;
        const Rgb c = sample(img, d.x0 + t * (d.x1 - d.x0), d.y0 + t * (d.y1 - d.y0));
        if (c == background) continue;
        const int v = ++votes[{c.r, c.g, c.b}];
        if (v > best_votes) {
            best_votes = v;
            best = c;
        }
    }
    return best;
}

Rect marks_bounds(const std::vector<Mark>& marks, int pad, int W, int H) {
    int x0 = W, y0 = H, x1 = 0, y1 = 0;
    for (const auto& m : marks) {
        const Rect b = m.bounds();
        x0 = std::min(x0, b.x);
        y0 = std::min(y0, b.y);
        x1 = std::max(x1, b.right());
        y1 = std::max(y1, b.bottom());
    }
    x0 = std::max(0, x0 - pad);
    y0 = std::max(0, y0 - pad);
    x1 = std::min(W, x1 + pad);
    y1 = std::min(H, y1 + pad);
    return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

GeometrySet extract_geometry(const RasterImage& img, ChartType type, Rgb background) {
    const int W = img.width(), H = img.height();
    GeometrySet g;
    g.chart_type = type;
    switch (type) {
        case ChartType::pie: fail_extraction("pie charts cannot be extracted from raster input");
        case ChartType::bar: {
            g.elements = extract_bars(img, background);
            if (g.elements.empty()) fail_extraction("no bars found in image");
            int baseline = 0;
            for (const auto& m : g.elements) baseline = std::max(baseline, m.bounds().bottom());
            g.plot_rect = {0, 0, W, baseline};
            break;
        }
        case ChartType::line: {
            const int threshold = std::max(20, std::min(W, H) / 20);
            const auto lines = merge_duplicate_lines(hough_lines(img, threshold));
            for (const auto& d : lines) {
                const double len = std::hypot(d.x1 - d.x0, d.y1 - d.y0);
                const double tilt = std::abs(d.tilt_deg());
                const bool axis_aligned = tilt < 1.0 || tilt > 89.0;
                if (axis_aligned && len >= 0.4 * std::min(W, H)) continue;  // chart axes
                if (len < 4.0) continue;
                const Rgb c = sample_along(img, d, background);
                if (c == background) continue;
                g.elements.push_back({Segment{d.x0, d.y0, d.x1, d.y1, 3.0}, c, false});
            }
            if (g.elements.empty()) fail_extraction("no line segments found in image");
            std::stable_sort(g.elements.begin(), g.elements.end(), [](const Mark& a, const Mark& b) {
                return std::get<Segment>(a.shape).x0 < std::get<Segment>(b.shape).x0;
            });
            g.plot_rect = marks_bounds(g.elements, 2, W, H);
            break;
        }
        case ChartType::scatter: {
            const int r_max = std::max(3, std::min(16, std::min(W, H) / 2));
            for (const auto& d : hough_circles(img, 3, r_max)) {
                g.elements.push_back({Dot{d.cx, d.cy, d.r}, sample(img, d.cx, d.cy), false});
            }
            if (g.elements.empty()) fail_extraction("no dots found in image");
            g.plot_rect = marks_bounds(g.elements, 2, W, H);
            break;
        }
    }
    g.element_extent = compute_element_extent(g.elements, W, H);
    return g;
}

nlohmann::json to_json(const LineDetection& d) {
    return {{"rho", d.rho}, {"theta", d.theta}, {"x0", d.x0}, {"y0", d.y0}, {"x1", d.x1},
            {"y1", d.y1},   {"votes", d.votes}, {"tilt", d.tilt_deg()}};
}

nlohmann::json to_json(const DotDetection& d) {
    return {{"cx", d.cx}, {"cy", d.cy}, {"r", d.r}, {"score", d.score}};
}

}  // namespace decoyvis
