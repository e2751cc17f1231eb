#pragma once

#include <nlohmann/json.hpp>

#include <vector>

#include "decoyvis/chart.hpp"
#include "decoyvis/raster.hpp"

namespace decoyvis {

/// A detected straight line in normal form. theta is the angle from the +x
/// axis to the line's normal in image coordinates (y down), in [0, 180);
/// rho = x cos(theta) + y sin(theta) for pixel coordinates (x, y).
struct LineDetection {
    double rho = 0.0;
    double theta = 0.0;
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int votes = 0;

    /// Tilt of the recovered segment, degrees in (-90, 90], y up.
    double tilt_deg() const;
};

struct DotDetection {
    double cx = 0, cy = 0, r = 0;
    double score = 0.0;  // votes / ring size
};

/// Foreground mask from an Otsu split of the luminance histogram; the class
/// holding the majority of pixels is treated as background. A single-level
/// image has no foreground.
std::vector<std::uint8_t> otsu_foreground(const RasterImage& img);

/// Standard (rho, theta) accumulator with 3x3 non-maximum suppression.
/// Endpoints come from the longest run of foreground pixels lying within
/// 1.5 px of the line (gaps up to 3 px bridged). Results sorted by votes.
std::vector<LineDetection> hough_lines(const RasterImage& img, int vote_threshold, double angle_step_deg = 1.0,
                                       double rho_step = 1.0);

/// Drops detections that repeat a stronger one: tilt within angle_tol and
/// both endpoints within dist_tol of the stronger segment.
std::vector<LineDetection> merge_duplicate_lines(const std::vector<LineDetection>& lines, double angle_tol_deg = 4.0,
                                                 double dist_tol = 4.0);

/// Plain 3-D (cx, cy, r) accumulator over foreground boundary pixels. Each
/// boundary pixel votes for every pixel center at distance d with
/// ceil(d) == r, the band an inner disk boundary occupies. A
/// candidate's score is votes over the ring size; candidates are accepted
/// greedily by score, rejecting centers closer than r_min to an accepted one
/// and candidates whose interior (distance <= r - 1) is under 90% foreground.
std::vector<DotDetection> hough_circles(const RasterImage& img, int r_min, int r_max, double score_threshold = 0.45);

/// Border-following extraction of same-colored, 4-connected non-background
/// components. Components whose bounding-box fill ratio is >= 0.95 and whose
/// shorter side is >= min_side are returned as bars, sorted by x.
std::vector<Mark> extract_bars(const RasterImage& img, Rgb background, int min_side = 3);

/// Outer border of a binary component, traced clockwise (Moore neighborhood)
/// starting from its top-left pixel.
std::vector<std::pair<int, int>> trace_border(const std::vector<std::uint8_t>& mask, int width, int height, int start_x,
                                              int start_y);

/// Image-input geometry for bar, line and scatter charts. Pie charts and
/// images yielding no marks raise ErrorKind::extraction.
GeometrySet extract_geometry(const RasterImage& img, ChartType type, Rgb background = kWhite);

nlohmann::json to_json(const LineDetection& d);
nlohmann::json to_json(const DotDetection& d);

}  // namespace decoyvis
