#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <string>

#include "decoyvis/imageops.hpp"
#include "decoyvis/raster.hpp"

namespace decoyvis {

/// Pixel density of a 6.67-inch 1080 x 2400 phone, px per cm.
inline const double kPhoneDensityPxPerCm = std::hypot(1080.0, 2400.0) / (6.67 * 2.54);

struct ViewingContext {
    double distance_cm = 30.0;
    double theta_h_deg = 40.0;
    double theta_w_deg = 50.0;
    double density_px_per_cm = kPhoneDensityPxPerCm;
    int image_width_px = 1;
    int image_height_px = 1;
};

/// Throws ErrorKind::validation for a non-physical context.
void validate(const ViewingContext& ctx);

/// sqrt(H_i W_i / (H_v W_v)) with the visual field converted to pixels,
/// H_v = 2 tan(theta_h / 2) D rho and likewise W_v; clamped to <= 1.
double gamma(const ViewingContext& ctx);

/// resample(img, gamma) for a context built from img's dimensions.
RasterImage simulate_perception(const RasterImage& img, const ViewingContext& ctx);

/// Close and far distances plus the shared field-of-view parameters.
struct ViewingSetup {
    double close_cm = 30.0;
    double far_cm = 90.0;
    double theta_h_deg = 40.0;
    double theta_w_deg = 50.0;
    double density_px_per_cm = kPhoneDensityPxPerCm;

    ViewingContext context(double distance_cm, int width, int height) const;
};

void validate(const ViewingSetup& setup);

struct PerceivedPair {
    RasterImage close;
    RasterImage far;
    double gamma_close = 1.0;
    double gamma_far = 1.0;
};

PerceivedPair perceive(const RasterImage& img, const ViewingSetup& setup);

// ---------------------------------------------------------------------------
// Metric constants

struct MetricManifest {
    std::string version = "1.0.0";

    // MS-SSIM on luminance
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
    std::array<double, 5> ms_ssim_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

    // VSI
    double vsi_c1 = 1.27;   // saliency
    double vsi_c2 = 386.0;  // gradient magnitude
    double vsi_c3 = 130.0;  // chrominance
    double vsi_alpha = 0.40;
    double vsi_beta = 0.02;
    int vsi_min_dimension = 32;
    int vsi_downsample_target = 256;  // block-average factor round(min dim / target)

    // Spectral-residual saliency
    int saliency_size = 64;
    int saliency_average = 3;
    double saliency_sigma = 2.5;
};

const MetricManifest& default_metric_manifest();
nlohmann::json to_json(const MetricManifest& m);
MetricManifest metric_manifest_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Metrics

/// Luminance MS-SSIM. Scale count is min(5, floor(log2(min dim / window)) + 1)
/// with the canonical weights renormalized over the scales used. Finer scales
/// contribute mean contrast-structure, the coarsest the full SSIM mean;
/// negative terms are clamped to 0.
double ms_ssim(const RasterImage& a, const RasterImage& b, const MetricManifest& m = default_metric_manifest());

/// Per-scale luminance and window statistics of one image, reusable when one
/// side of many MS-SSIM comparisons is fixed.
struct MsSsimFeatures {
    struct Scale {
        Plane luma, mean, variance;
    };
    int width = 0, height = 0;
    std::vector<Scale> scales;
};

MsSsimFeatures ms_ssim_features(const RasterImage& img, const MetricManifest& m = default_metric_manifest());
double ms_ssim(const MsSsimFeatures& a, const MsSsimFeatures& b, const MetricManifest& m = default_metric_manifest());

/// Spectral-residual saliency of a plane, min-max normalized to [0, 1] at the
/// input size (a flat result becomes all ones). Periodic under translation by
/// multiples of size / saliency_size.
Plane spectral_residual_saliency(const Plane& luminance, const MetricManifest& m = default_metric_manifest());

/// Saliency-weighted similarity over saliency, gradient magnitude and two
/// opponent chrominance channels.
double vsi(const RasterImage& a, const RasterImage& b, const MetricManifest& m = default_metric_manifest());

/// Per-image VSI inputs at the working resolution; computing them once lets
/// one side of many comparisons be reused.
struct VsiFeatures {
    int width = 0, height = 0;  // source image size
    Plane saliency, gradient, m, n;
};

VsiFeatures vsi_features(const RasterImage& img, const MetricManifest& m = default_metric_manifest());
double vsi(const VsiFeatures& a, const VsiFeatures& b, const MetricManifest& m = default_metric_manifest());

/// VSI's intensity channel, 0.06 R + 0.63 G + 0.27 B.
Plane vsi_luminance(const RasterImage& img);

// ---------------------------------------------------------------------------
// Distance gaps

struct GapScores {
    double vsi_close = 0, vsi_far = 0;      // original vs protected
    double ssim_close = 0, ssim_far = 0;    // decoy vs protected
    double gap1 = 0, gap2 = 0, score = 0;
    double alpha = 0.5, beta = 0.5;
};

/// gap1 = vsi_close - vsi_far, gap2 = ssim_far - ssim_close,
/// score = alpha gap1 + beta gap2.
GapScores combine_gaps(double vsi_close, double vsi_far, double ssim_far, double ssim_close, double alpha = 0.5,
                       double beta = 0.5);

GapScores gap_scores(const PerceivedPair& original, const PerceivedPair& decoy, const PerceivedPair& protected_,
                     double alpha = 0.5, double beta = 0.5, const MetricManifest& m = default_metric_manifest());

nlohmann::json to_json(const GapScores& g);

}  // namespace decoyvis
