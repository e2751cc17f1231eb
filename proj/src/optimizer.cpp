#include "decoyvis/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <tuple>

#include "decoyvis/color.hpp"
#include "decoyvis/error.hpp"
#include "decoyvis/imageops.hpp"

namespace decoyvis {

// ---------------------------------------------------------------------------
// Parameters and grids

namespace {

void check_basic(const AgnosticParams& p, int w, int h) {
    if (!(p.decoy_L >= 0.0 && p.decoy_L <= 100.0)) fail_validation("decoy_L must lie in [0, 100]");
    if (!(p.decoy_C >= 0.0 && p.decoy_C <= 100.0)) fail_validation("decoy_C must lie in [0, 100]");
    if (p.kernel_size < 1 || p.kernel_size % 2 == 0) fail_validation("kernel_size must be odd and >= 1");
    if (p.kernel_size > std::min(w, h)) fail_validation("kernel_size exceeds the image");
    if (p.mask_area < 1) fail_validation("mask_area must be >= 1");
}

template <typename T>
void check_list(const std::vector<T>& v, const char* name) {
    if (v.empty()) fail_validation(std::string(name) + " must not be empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i])) fail_validation(std::string(name) + " must be strictly ascending");
}

std::string to_string(StagePlan s) { return s == StagePlan::single_pass ? "single-pass" : "coarse-then-refine"; }

}  // namespace

void validate(const AgnosticParams& p, int image_width, int image_height, Extent extent) {
    check_basic(p, image_width, image_height);
    if (p.mask_area > std::min(extent.width, extent.height))
        fail_validation("mask_area exceeds the smallest element extent");
}

nlohmann::json to_json(const AgnosticParams& p) {
    return {{"decoy_L", p.decoy_L}, {"decoy_C", p.decoy_C}, {"kernel_size", p.kernel_size}, {"mask_area", p.mask_area}};
}

AgnosticParams params_from_json(const nlohmann::json& j) {
    try {
        return {j.at("decoy_L").get<double>(), j.at("decoy_C").get<double>(), j.at("kernel_size").get<int>(),
                j.at("mask_area").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        fail_validation(std::string("params: ") + e.what());
    }
}

void validate(const SearchGrid& g, int image_width, int image_height, Extent extent) {
    check_list(g.l_values, "l_values");
    check_list(g.c_values, "c_values");
    check_list(g.k_values, "k_values");
    check_list(g.m_values, "m_values");
    validate(AgnosticParams{g.l_values.front(), g.c_values.front(), g.k_values.front(), g.m_values.front()},
             image_width, image_height, extent);
    validate(AgnosticParams{g.l_values.back(), g.c_values.back(), g.k_values.back(), g.m_values.back()}, image_width,
             image_height, extent);
    for (int k : g.k_values)
        if (k % 2 == 0) fail_validation("k_values must be odd");
}

SearchGrid grid_preset(const std::string& name, int image_width, int image_height, Extent extent) {
    auto steps = [](double lo, double hi, double step) {
        std::vector<double> v;
        const int n = static_cast<int>(std::lround((hi - lo) / step));
        for (int i = 0; i <= n; ++i) v.push_back(std::round((lo + i * step) * 1e9) / 1e9);
        return v;
    };
    SearchGrid g;
    std::vector<int> ks, ms;
    if (name == "coarse") {
        g.l_values = g.c_values = steps(0, 100, 10);
        ks = {1, 5, 9, 13, 17, 21};
        ms = {2, 4, 6, 8, 12, 16};
        g.stage_plan = StagePlan::coarse_then_refine;
    } else if (name == "fine") {
        g.l_values = g.c_values = steps(0, 100, 5);
        ks = {1, 3, 5, 7, 9, 11, 13, 15, 17, 19, 21};
        ms = {1, 2, 3, 4, 6, 8, 10, 12, 16};
    } else if (name == "paper-literal-subset") {
        g.l_values = g.c_values = steps(49, 51, 0.1);
        ks = {1, 3, 5, 7};
        ms = {1, 2, 3, 4};
    } else {
        fail_validation("unknown grid preset: " + name);
    }
    for (int k : ks)
        if (k <= std::min(image_width, image_height)) g.k_values.push_back(k);
    for (int m : ms)
        if (m <= std::min(extent.width, extent.height)) g.m_values.push_back(m);
    if (g.m_values.empty()) g.m_values = {1};
    return g;
}

nlohmann::json to_json(const SearchGrid& g) {
    return {{"l_values", g.l_values},
            {"c_values", g.c_values},
            {"k_values", g.k_values},
            {"m_values", g.m_values},
            {"stage_plan", to_string(g.stage_plan)}};
}

SearchGrid grid_from_json(const nlohmann::json& j) {
    SearchGrid g;
    try {
        g.l_values = j.at("l_values").get<std::vector<double>>();
        g.c_values = j.at("c_values").get<std::vector<double>>();
        g.k_values = j.at("k_values").get<std::vector<int>>();
        g.m_values = j.at("m_values").get<std::vector<int>>();
        const auto plan = j.value("stage_plan", std::string("single-pass"));
        if (plan == "single-pass") {
            g.stage_plan = StagePlan::single_pass;
        } else if (plan == "coarse-then-refine") {
            g.stage_plan = StagePlan::coarse_then_refine;
        } else {
            fail_validation("unknown stage_plan: " + plan);
        }
    } catch (const nlohmann::json::exception& e) {
        fail_validation(std::string("grid: ") + e.what());
    }
    return g;
}

bool better_candidate(double score_a, const AgnosticParams& a, double score_b, const AgnosticParams& b) {
    const bool nan_a = std::isnan(score_a), nan_b = std::isnan(score_b);
    if (nan_a != nan_b) return nan_b;
    if (!nan_a && score_a != score_b) return score_a > score_b;
    if (a.kernel_size != b.kernel_size) return a.kernel_size < b.kernel_size;
    if (a.mask_area != b.mask_area) return a.mask_area > b.mask_area;
    const double la = std::abs(a.decoy_L - 50.0), lb = std::abs(b.decoy_L - 50.0);
    if (la != lb) return la < lb;
    const double ca = std::abs(a.decoy_C - 50.0), cb = std::abs(b.decoy_C - 50.0);
    if (ca != cb) return ca < cb;
    if (a.decoy_L != b.decoy_L) return a.decoy_L < b.decoy_L;
    return a.decoy_C < b.decoy_C;
}

SearchGrid refine_grid(const SearchGrid& g, const AgnosticParams& winner) {
    auto around = [](const auto& list, auto value, auto midpoint) {
        using T = std::decay_t<decltype(value)>;
        std::vector<T> out;
        const auto it = std::find(list.begin(), list.end(), value);
        if (it == list.end()) fail_validation("refinement center is not a grid point");
        if (it != list.begin())
            if (auto mid = midpoint(*(it - 1), value)) out.push_back(*mid);
        out.push_back(value);
        if (it + 1 != list.end())
            if (auto mid = midpoint(value, *(it + 1))) out.push_back(*mid);
        return out;
    };
    auto real_mid = [](double a, double b) -> std::optional<double> { return std::round((a + b) / 2 * 1e9) / 1e9; };
    auto int_mid = [](int a, int b) -> std::optional<int> {
        const int m = (a + b) / 2;
        return m > a && m < b ? std::optional<int>(m) : std::nullopt;
    };
    auto odd_mid = [](int a, int b) -> std::optional<int> {
        int m = (a + b) / 2;
        if (m % 2 == 0) --m;
        return m > a && m < b ? std::optional<int>(m) : std::nullopt;
    };
    SearchGrid r;
    r.l_values = around(g.l_values, winner.decoy_L, real_mid);
    r.c_values = around(g.c_values, winner.decoy_C, real_mid);
    r.k_values = around(g.k_values, winner.kernel_size, odd_mid);
    r.m_values = around(g.m_values, winner.mask_area, int_mid);
    r.stage_plan = StagePlan::single_pass;
    return r;
}

// ---------------------------------------------------------------------------
// Candidate construction

RasterImage masked_original_layer(const CandidateInputs& in, int mask_area) {
    const RasterImage& img = in.original;
    RasterImage layer = img;
    layer.set_has_alpha(true);
    auto bytes = layer.bytes();
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        if (bytes[i] == in.background.r && bytes[i + 1] == in.background.g && bytes[i + 2] == in.background.b)
            bytes[i] = bytes[i + 1] = bytes[i + 2] = bytes[i + 3] = 0;
    }
    const MaskPattern pattern{mask_area, MaskPhase::keep_first, MaskOrientation::checkerboard};
    for (const auto& mark : in.original_geometry.elements) {
        const auto fp = rasterize(mark, img.width(), img.height());
        if (fp.mask.empty()) continue;
        apply_mask_inplace(layer, fp.rect, fp.mask, pattern);
    }
    return layer;
}

RasterImage decoy_mark_layer(const CandidateInputs& in, double L, double C) {
    if (in.hues.hues.size() != in.decoy_geometry.marks.size()) fail_validation("hue plan does not cover the decoy");
    RasterImage layer = RasterImage::transparent(in.original.width(), in.original.height());
    for (std::size_t i = 0; i < in.decoy_geometry.marks.size(); ++i) {
        Mark m = in.decoy_geometry.marks[i];
        m.color = lch_to_srgb({L, C, in.hues.hues[i]}).color;
        draw_mark(layer, m);
    }
    return layer;
}

CandidateImages build_candidate(const CandidateInputs& in, const AgnosticParams& params) {
    check_basic(params, in.original.width(), in.original.height());
    CandidateImages out;
    out.decoy_layer = gaussian_blur(decoy_mark_layer(in, params.decoy_L, params.decoy_C), params.kernel_size);
    out.decoy_flat = flatten(in.background, out.decoy_layer);
    out.protected_image = composite(in.background, out.decoy_layer, masked_original_layer(in, params.mask_area));
    return out;
}

GapScores evaluate_candidate(const RasterImage& original, const RasterImage& decoy_flat,
                             const RasterImage& protected_image, const ViewingContext& ctx_close,
                             const ViewingContext& ctx_far, double alpha, double beta) {
    auto pair = [&](const RasterImage& img) {
        PerceivedPair p;
        p.close = simulate_perception(img, ctx_close);
        p.far = simulate_perception(img, ctx_far);
        return p;
    };
    return gap_scores(pair(original), pair(decoy_flat), pair(protected_image), alpha, beta);
}

// ---------------------------------------------------------------------------
// Search

namespace {

using Key = std::tuple<double, double, int, int>;
Key key_of(const AgnosticParams& p) { return {p.decoy_L, p.decoy_C, p.kernel_size, p.mask_area}; }

struct Best {
    bool found = false;
    AgnosticParams params;
    GapScores scores;
    RasterImage protected_image;
    std::size_t evaluated = 0;

    void offer(const AgnosticParams& p, const GapScores& s, const RasterImage& img) {
        ++evaluated;
        if (!found || better_candidate(s.score, p, scores.score, params)) {
            found = true;
            params = p;
            scores = s;
            protected_image = img;
        }
    }
    void merge(const Best& o) {
        evaluated += o.evaluated;
        if (o.found && (!found || better_candidate(o.scores.score, o.params, scores.score, params))) {
            found = true;
            params = o.params;
            scores = o.scores;
            protected_image = o.protected_image;
        }
    }
};

bool binary_alpha(const RasterImage& img) {
    const auto px = img.bytes();
    for (std::size_t i = 3; i < px.size(); i += 4)
        if (px[i] != 0 && px[i] != 255) return false;
    return true;
}

// composite(bg, layer, original) when original alpha is 0 or 255: opaque
// original pixels win outright, the rest equal flatten(bg, layer).
RasterImage select_opaque(const RasterImage& original_layer, const RasterImage& decoy_flat) {
    RasterImage out = decoy_flat;
    auto dst = out.bytes();
    const auto src = original_layer.bytes();
    for (std::size_t i = 0; i < src.size(); i += 4)
        if (src[i + 3] == 255) std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i), 4, dst.begin() + static_cast<std::ptrdiff_t>(i));
    out.set_has_alpha(false);
    return out;
}

class Search {
public:
    Search(const CandidateInputs& in, const SearchOptions& opt) : in_(in), opt_(opt) {
        original_pair_ = perceive(in.original, opt.viewing);
        const int w = in.original.width(), h = in.original.height();
        sizes_ = {resampled_size(w, h, original_pair_.gamma_close), resampled_size(w, h, original_pair_.gamma_far)};
        original_close_ = vsi_features(original_pair_.close);
        original_far_ = vsi_features(original_pair_.far);
    }

    const PerceivedPair& original_pair() const { return original_pair_; }

    Best run(const SearchGrid& g, const std::set<Key>& skip) {
        for (int m : g.m_values)
            if (!masked_.count(m)) {
                RasterImage layer = masked_original_layer(in_, m);
                const bool binary = binary_alpha(layer);
                std::vector<std::size_t> kept;
                const auto px = layer.bytes();
                for (std::size_t i = 0; i < px.size(); i += 4)
                    if (px[i + 3] == 255) kept.push_back(i / 4);
                ResamplePlan plan(layer.width(), layer.height(), sizes_, kept);
                masked_.emplace(m, Masked{std::move(layer), binary, std::move(plan)});
            }

        // Decoy alpha does not depend on colour: one alpha blur per k.
        for (int k : g.k_values)
            if (!blurred_alpha_.count(k))
                blurred_alpha_.emplace(k, blur_alpha(decoy_mark_layer(in_, g.l_values.front(), g.c_values.front()), k));

        std::vector<std::pair<double, double>> lc;
        for (double L : g.l_values)
            for (double C : g.c_values) lc.emplace_back(L, C);

        const int threads = std::max(1, std::min<int>(opt_.threads, static_cast<int>(lc.size())));
        std::vector<Best> partial(static_cast<std::size_t>(threads));
        auto worker = [&](int t) {
            for (std::size_t i = static_cast<std::size_t>(t); i < lc.size(); i += static_cast<std::size_t>(threads))
                evaluate_lc(lc[i].first, lc[i].second, g, skip, partial[static_cast<std::size_t>(t)]);
        };
        if (threads == 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
            for (auto& th : pool) th.join();
        }
        Best best;
        for (const auto& p : partial) best.merge(p);
        return best;
    }

private:
    void evaluate_lc(double L, double C, const SearchGrid& g, const std::set<Key>& skip, Best& best) const {
        std::optional<RasterImage> marks;
        for (int k : g.k_values) {
            bool any = false;
            for (int m : g.m_values) any = any || !skip.count({L, C, k, m});
            if (!any) continue;
            if (!marks) marks = decoy_mark_layer(in_, L, C);
            const BlurredAlpha& alpha = blurred_alpha_.at(k);
            const RasterImage layer = alpha.matches(*marks) ? gaussian_blur(*marks, k, alpha) : gaussian_blur(*marks, k);
            const RasterImage decoy_flat = flatten(in_.background, layer);
            const IncrementalResampler resampler(decoy_flat, sizes_);
            const MsSsimFeatures decoy_close = ms_ssim_features(resampler.base_outputs()[0]);
            const MsSsimFeatures decoy_far = ms_ssim_features(resampler.base_outputs()[1]);
            for (int m : g.m_values) {
                if (skip.count({L, C, k, m})) continue;
                const Masked& masked = masked_.at(m);
                PerceivedPair pp;
                RasterImage prot;
                if (masked.binary_alpha) {
                    prot = select_opaque(masked.layer, decoy_flat);
                    auto images = resampler.resample(prot, masked.kept_plan);
                    pp.close = std::move(images[0]);
                    pp.far = std::move(images[1]);
                } else {
                    prot = composite(in_.background, layer, masked.layer);
                    pp = perceive(prot, opt_.viewing);
                }
                const GapScores s = combine_gaps(vsi(original_close_, vsi_features(pp.close)),
                                                 vsi(original_far_, vsi_features(pp.far)),
                                                 ms_ssim(decoy_far, ms_ssim_features(pp.far)),
                                                 ms_ssim(decoy_close, ms_ssim_features(pp.close)),
                                                 opt_.alpha, opt_.beta);
                best.offer({L, C, k, m}, s, prot);
            }
        }
    }

    const CandidateInputs& in_;
    SearchOptions opt_;
    struct Masked {
        RasterImage layer;
        bool binary_alpha;
        // Resampling plan over the pixels where the layer is opaque: the only
        // pixels at which a protected image can differ from its decoy.
        ResamplePlan kept_plan;
    };

    PerceivedPair original_pair_;
    VsiFeatures original_close_, original_far_;
    std::vector<Size> sizes_;
    std::map<int, Masked> masked_;
    std::map<int, BlurredAlpha> blurred_alpha_;
};

std::set<Key> all_keys(const SearchGrid& g) {
    std::set<Key> keys;
    for (double L : g.l_values)
        for (double C : g.c_values)
            for (int k : g.k_values)
                for (int m : g.m_values) keys.insert({L, C, k, m});
    return keys;
}

}  // namespace

ProtectedBundle optimize(const CandidateInputs& in, const SearchGrid& grid, const SearchOptions& opt) {
    validate(grid, in.original.width(), in.original.height(), in.original_geometry.element_extent);
    Search search(in, opt);
    Best best = search.run(grid, {});
    if (grid.stage_plan == StagePlan::coarse_then_refine) {
        const SearchGrid second = refine_grid(grid, best.params);
        best.merge(search.run(second, all_keys(grid)));
    }

    ProtectedBundle b;
    b.original = in.original;
    b.best = {best.params, best.scores, best.protected_image};
    b.protected_image = best.protected_image;
    b.decoy = build_candidate(in, best.params).decoy_flat;
    b.original_preview = search.original_pair();
    b.decoy_preview = perceive(b.decoy, opt.viewing);
    b.protected_preview = perceive(b.protected_image, opt.viewing);
    b.evaluated = best.evaluated;
    return b;
}

std::vector<ScoredCandidate> oracle_enumerate(const CandidateInputs& in, const SearchGrid& grid,
                                              const SearchOptions& opt) {
    validate(grid, in.original.width(), in.original.height(), in.original_geometry.element_extent);
    if (grid.size() > 1000) fail_validation("oracle grid exceeds 1000 points");
    const int w = in.original.width(), h = in.original.height();
    const auto close = opt.viewing.context(opt.viewing.close_cm, w, h);
    const auto far = opt.viewing.context(opt.viewing.far_cm, w, h);

    std::vector<ScoredCandidate> all;
    std::set<Key> seen;
    auto add_all = [&](const SearchGrid& g) {
        for (double L : g.l_values)
            for (double C : g.c_values)
                for (int k : g.k_values)
                    for (int m : g.m_values) {
                        const AgnosticParams p{L, C, k, m};
                        if (!seen.insert(key_of(p)).second) continue;
                        auto imgs = build_candidate(in, p);
                        auto s = evaluate_candidate(in.original, imgs.decoy_flat, imgs.protected_image, close, far,
                                                    opt.alpha, opt.beta);
                        all.push_back({p, s, std::move(imgs.protected_image)});
                    }
    };
    auto order = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        return better_candidate(a.scores.score, a.params, b.scores.score, b.params);
    };
    add_all(grid);
    std::sort(all.begin(), all.end(), order);
    if (grid.stage_plan == StagePlan::coarse_then_refine) {
        add_all(refine_grid(grid, all.front().params));
        std::sort(all.begin(), all.end(), order);
    }
    return all;
}

}  // namespace decoyvis
