#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "decoyvis/raster.hpp"

namespace decoyvis {

/// Cylindrical CIE Lab under D65 / 2-degree observer.
struct LchColor {
    double L = 0.0;  // [0, 100]
    double C = 0.0;  // >= 0
    double H = 0.0;  // degrees, [0, 360)

    /// Clamps L to [0, 100], C to >= 0 and wraps H into [0, 360).
    static LchColor normalized(double L, double C, double H);
};

struct Lab {
    double L = 0.0, a = 0.0, b = 0.0;
};

/// sRGB electro-optical transfer for one 8-bit code, exact table lookup.
double srgb_to_linear(std::uint8_t v);
/// Inverse transfer rounded to the nearest 8-bit code. Monotone, and
/// linear_to_srgb(srgb_to_linear(v)) == v for every code.
std::uint8_t linear_to_srgb(double linear);
/// Continuous transfer functions on [0, 1].
double srgb_decode(double encoded);
double srgb_encode(double linear);

Lab srgb_to_lab(Rgb rgb);
LchColor lab_to_lch(const Lab& lab);
Lab lch_to_lab(const LchColor& lch);

LchColor srgb_to_lch(Rgb rgb);

struct GamutMapped {
    Rgb color;
    bool out_of_gamut = false;  // true when any channel had to be clipped
};

GamutMapped lch_to_srgb(const LchColor& lch);

struct CircularMean {
    double degrees = 0.0;
    bool undefined = false;  // resultant length < 1e-9; degrees is the first input
};

/// Angle of the mean resultant vector, in [0, 360). Throws on empty input.
CircularMean circular_mean_hue(std::span<const double> hues_deg);

/// Smallest absolute angular difference, in [0, 180].
double circular_distance(double a_deg, double b_deg);

double wrap_degrees(double deg);

}  // namespace decoyvis
