#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "decoyvis/chart.hpp"
#include "decoyvis/decoy.hpp"
#include "decoyvis/percept.hpp"

namespace decoyvis {

struct AgnosticParams {
    double decoy_L = 50.0;
    double decoy_C = 50.0;
    int kernel_size = 1;
    int mask_area = 1;

    friend bool operator==(const AgnosticParams&, const AgnosticParams&) = default;
};

/// Ranges checked against the canvas and, for the mask cell, the element extent.
void validate(const AgnosticParams& p, int image_width, int image_height, Extent extent);

nlohmann::json to_json(const AgnosticParams& p);
AgnosticParams params_from_json(const nlohmann::json& j);

enum class StagePlan { single_pass, coarse_then_refine };

struct SearchGrid {
    std::vector<double> l_values;
    std::vector<double> c_values;
    std::vector<int> k_values;
    std::vector<int> m_values;
    StagePlan stage_plan = StagePlan::single_pass;

    std::size_t size() const { return l_values.size() * c_values.size() * k_values.size() * m_values.size(); }
};

/// Non-empty ascending lists inside the parameter ranges.
void validate(const SearchGrid& g, int image_width, int image_height, Extent extent);

/// "coarse" (default), "fine" or "paper-literal-subset". Kernel and mask lists
/// are intersected with their admissible ranges; an empty mask list falls
/// back to {1}.
SearchGrid grid_preset(const std::string& name, int image_width, int image_height, Extent extent);

nlohmann::json to_json(const SearchGrid& g);
SearchGrid grid_from_json(const nlohmann::json& j);

/// Strict preference: higher score, then smaller kernel, larger mask cell,
/// L nearest 50, C nearest 50, smaller L, smaller C.
bool better_candidate(double score_a, const AgnosticParams& a, double score_b, const AgnosticParams& b);

/// Second-pass points around a first-pass winner: the winner and the
/// midpoints toward its grid neighbors in each dimension (odd kernels,
/// integer mask cells), crossed.
SearchGrid refine_grid(const SearchGrid& g, const AgnosticParams& winner);

/// Everything a candidate needs besides its parameters.
struct CandidateInputs {
    RasterImage original;
    GeometrySet original_geometry;
    DecoyGeometry decoy_geometry;
    HuePlan hues;
    Rgb background = kWhite;
};

struct CandidateImages {
    RasterImage protected_image;
    RasterImage decoy_flat;  // blurred decoy layer over the background
    RasterImage decoy_layer; // blurred, transparent elsewhere
};

/// Original layer: the original with background pixels transparent, each
/// mark footprint masked keep-first with cell size mask_area. Decoy layer:
/// decoy marks in lch(L, C, planned hue), blurred with kernel_size.
CandidateImages build_candidate(const CandidateInputs& in, const AgnosticParams& params);

/// Original layer only, as used by build_candidate.
RasterImage masked_original_layer(const CandidateInputs& in, int mask_area);
/// Unblurred decoy layer, as used by build_candidate.
RasterImage decoy_mark_layer(const CandidateInputs& in, double L, double C);

GapScores evaluate_candidate(const RasterImage& original, const RasterImage& decoy_flat,
                             const RasterImage& protected_image, const ViewingContext& ctx_close,
                             const ViewingContext& ctx_far, double alpha, double beta);

struct ScoredCandidate {
    AgnosticParams params;
    GapScores scores;
    RasterImage protected_image;
};

struct ProtectedBundle {
    RasterImage original;
    RasterImage decoy;
    RasterImage protected_image;
    ScoredCandidate best;
    PerceivedPair original_preview;
    PerceivedPair decoy_preview;
    PerceivedPair protected_preview;
    std::size_t evaluated = 0;
};

struct SearchOptions {
    ViewingSetup viewing;
    double alpha = 0.5;
    double beta = 0.5;
    int threads = 1;
};

/// Exhaustive search; in coarse-then-refine mode a second pass covers
/// refine_grid around the first winner. The winner is independent of
/// evaluation order and thread count.
ProtectedBundle optimize(const CandidateInputs& in, const SearchGrid& grid, const SearchOptions& opt);

/// Every candidate of both passes, best first. Grids above 1000 points are
/// rejected.
std::vector<ScoredCandidate> oracle_enumerate(const CandidateInputs& in, const SearchGrid& grid,
                                              const SearchOptions& opt);

}  // namespace decoyvis
