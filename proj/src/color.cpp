#include "decoyvis/color.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "decoyvis/error.hpp"

namespace decoyvis {

namespace {

// D65 reference white, Y normalized to 1.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

constexpr double kDeg = std::numbers::pi / 180.0;

struct TransferTables {
    std::array<double, 256> decode{};
    // thresholds[i] is the linear value at which the rounded code moves from i to i + 1.
    std::array<double, 255> thresholds{};
    // first_code[b] = number of thresholds <= b / kBins; a search starting
    // there only ever steps forward a few codes.
    static constexpr int kBins = 4096;
    std::array<std::uint8_t, kBins + 1> first_code{};

    TransferTables() {
        for (int i = 0; i < 256; ++i) decode[i] = srgb_decode(i / 255.0);
        for (int i = 0; i < 255; ++i) thresholds[i] = srgb_decode((i + 0.5) / 255.0);
        for (int b = 0; b <= kBins; ++b)
            first_code[b] = static_cast<std::uint8_t>(
                std::upper_bound(thresholds.begin(), thresholds.end(), double(b) / kBins) - thresholds.begin());
    }
};

const TransferTables& tables() {
    static const TransferTables t;
    return t;
}

double lab_f(double t) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

double lab_f_inv(double f) {
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    const double f3 = f * f * f;
    return f3 > eps ? f3 : (116.0 * f - 16.0) / kappa;
}

}  // namespace

double srgb_decode(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }

double srgb_encode(double v) { return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055; }

double srgb_to_linear(std::uint8_t v) { return tables().decode[v]; }

std::uint8_t linear_to_srgb(double linear) {
    const auto& t = tables();
    if (!(linear > 0.0)) return 0;
    if (linear >= 1.0) return 255;
    int code = t.first_code[static_cast<int>(linear * TransferTables::kBins)];
    while (code < 255 && t.thresholds[static_cast<std::size_t>(code)] <= linear) ++code;
    return static_cast<std::uint8_t>(code);
}

double wrap_degrees(double deg) {
    double h = std::fmod(deg, 360.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    return h;
}

LchColor LchColor::normalized(double L, double C, double H) {
    return {std::clamp(L, 0.0, 100.0), std::max(C, 0.0), wrap_degrees(H)};
}

Lab srgb_to_lab(Rgb rgb) {
    const double r = srgb_to_linear(rgb.r);
    const double g = srgb_to_linear(rgb.g);
    const double b = srgb_to_linear(rgb.b);
    const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    const double fx = lab_f(X / kXn);
    const double fy = lab_f(Y / kYn);
    const double fz = lab_f(Z / kZn);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LchColor lab_to_lch(const Lab& lab) {
    const double C = std::hypot(lab.a, lab.b);
    const double H = wrap_degrees(std::atan2(lab.b, lab.a) / kDeg);
    return {lab.L, C, H};
}

Lab lch_to_lab(const LchColor& lch) {
    return {lch.L, lch.C * std::cos(lch.H * kDeg), lch.C * std::sin(lch.H * kDeg)};
}

LchColor srgb_to_lch(Rgb rgb) { return lab_to_lch(srgb_to_lab(rgb)); }

GamutMapped lch_to_srgb(const LchColor& lch) {
    const LchColor c = LchColor::normalized(lch.L, lch.C, lch.H);
    const Lab lab = lch_to_lab(c);
    const double fy = (lab.L + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const double X = lab_f_inv(fx) * kXn;
    const double Y = lab_f_inv(fy) * kYn;
    const double Z = lab_f_inv(fz) * kZn;
    const std::array<double, 3> lin{
        3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z,
        -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z,
        0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z,
    };
    constexpr double tol = 1e-6;
    GamutMapped out;
    std::array<std::uint8_t, 3> code{};
    for (int i = 0; i < 3; ++i) {
        if (lin[i] < -tol || lin[i] > 1.0 + tol) out.out_of_gamut = true;
        code[i] = linear_to_srgb(std::clamp(lin[i], 0.0, 1.0));
    }
    out.color = {code[0], code[1], code[2]};
    return out;
}

CircularMean circular_mean_hue(std::span<const double> hues_deg) {
    if (hues_deg.empty()) fail_validation("circular mean of an empty hue list");
    double s = 0.0, c = 0.0;
    for (double h : hues_deg) {
        s += std::sin(h * kDeg);
        c += std::cos(h * kDeg);
    }
    s /= static_cast<double>(hues_deg.size());
    c /= static_cast<double>(hues_deg.size());
    if (std::hypot(s, c) < 1e-9) return {wrap_degrees(hues_deg.front()), true};
    // Quantized to 1e-9 degrees so symmetric inputs land exactly on their axis.
    double mean = std::round(wrap_degrees(std::atan2(s, c) / kDeg) * 1e9) / 1e9;
    if (mean >= 360.0) mean = 0.0;
    return {mean, false};
}

double circular_distance(double a_deg, double b_deg) {
    const double d = wrap_degrees(a_deg - b_deg);
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace decoyvis
