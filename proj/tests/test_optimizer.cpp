#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "decoyvis/chart.hpp"
#include "decoyvis/color.hpp"
#include "decoyvis/decoy.hpp"
#include "decoyvis/error.hpp"
#include "decoyvis/imageops.hpp"
#include "decoyvis/optimizer.hpp"

using namespace decoyvis;

namespace {

// Small canvases with a lower display density keep both perceived sizes above
// the VSI minimum dimension.
SearchOptions small_options(int threads = 1) {
    SearchOptions opt;
    opt.viewing.density_px_per_cm = 9.0;
    opt.threads = threads;
    return opt;
}

ChartSpec small_spec(ChartType type) {
    ChartSpec s;
    s.chart_type = type;
    s.canvas_width = 240;
    s.canvas_height = 180;
    s.margins = {30, 10, 10, 30};
    switch (type) {
        case ChartType::bar: s.bar_heights = {3, 5, 2, 6}; break;
        case ChartType::line: s.line_series = {{{0, 1}, {1, 3}, {2, 2}, {3, 4}}}; break;
        case ChartType::scatter:
            for (int i = 0; i < 6; ++i) s.scatter_points.push_back({double(i), double((i * 5) % 7), 6});
            break;
        case ChartType::pie: s.pie_fractions = {3, 2, 1}; break;
    }
    return s;
}

CandidateInputs inputs_for(ChartType type, std::uint64_t seed = 1, bool with_decoy = true) {
    const auto r = render_chart(small_spec(type));
    CandidateInputs in;
    in.original = r.image;
    in.original_geometry = r.geometry;
    in.decoy_geometry.chart_type = type;
    if (with_decoy) {
        DecoyConstraints c;
        c.seed = seed;
        in.decoy_geometry = gen_decoy(r.geometry, c);
    }
    in.hues = plan_decoy_colors(r.geometry, in.decoy_geometry);
    return in;
}

bool same_bytes(const RasterImage& a, const RasterImage& b) {
    return a.width() == b.width() && a.height() == b.height() && a.has_alpha() == b.has_alpha() &&
           std::equal(a.bytes().begin(), a.bytes().end(), b.bytes().begin());
}

bool same_scores(const GapScores& a, const GapScores& b) {
    return a.vsi_close == b.vsi_close && a.vsi_far == b.vsi_far && a.ssim_close == b.ssim_close &&
           a.ssim_far == b.ssim_far && a.gap1 == b.gap1 && a.gap2 == b.gap2 && a.score == b.score;
}

template <typename T>
std::vector<T> pick_sorted(std::vector<T> pool, std::size_t n, std::mt19937_64& rng) {
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(std::min(n, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

SearchGrid random_grid(std::mt19937_64& rng, Extent extent, std::size_t max_points) {
    std::vector<double> lc;
    for (int v = 0; v <= 100; v += 5) lc.push_back(v);
    std::vector<int> ks{1, 3, 5, 7, 9, 11};
    std::vector<int> ms;
    for (int m = 1; m <= std::min(extent.width, extent.height); ++m) ms.push_back(m);
    SearchGrid g;
    do {
        g.l_values = pick_sorted(lc, 1 + rng() % 3, rng);
        g.c_values = pick_sorted(lc, 1 + rng() % 3, rng);
        g.k_values = pick_sorted(ks, 1 + rng() % 3, rng);
        g.m_values = pick_sorted(ms, 1 + rng() % 3, rng);
    } while (g.size() > max_points);
    g.stage_plan = rng() % 2 ? StagePlan::coarse_then_refine : StagePlan::single_pass;
    return g;
}

}  // namespace

TEST_CASE("parameter validation") {
    const Extent e{10, 20};
    CHECK_NOTHROW(validate(AgnosticParams{50, 50, 5, 10}, 100, 80, e));
    CHECK_THROWS_AS(validate(AgnosticParams{-1, 50, 5, 4}, 100, 80, e), Error);
    CHECK_THROWS_AS(validate(AgnosticParams{50, 100.5, 5, 4}, 100, 80, e), Error);
    CHECK_THROWS_AS(validate(AgnosticParams{50, 50, 4, 4}, 100, 80, e), Error);
    CHECK_THROWS_AS(validate(AgnosticParams{50, 50, 81, 4}, 100, 80, e), Error);
    CHECK_THROWS_AS(validate(AgnosticParams{50, 50, 5, 0}, 100, 80, e), Error);
    CHECK_THROWS_AS(validate(AgnosticParams{50, 50, 5, 11}, 100, 80, e), Error);
}

TEST_CASE("grid validation rejects empty, unsorted and out-of-range lists") {
    const Extent e{10, 10};
    SearchGrid g{{0, 50}, {0}, {1, 3}, {2}};
    CHECK_NOTHROW(validate(g, 100, 100, e));
    SearchGrid empty = g;
    empty.c_values.clear();
    CHECK_THROWS_AS(validate(empty, 100, 100, e), Error);
    SearchGrid unsorted = g;
    unsorted.l_values = {50, 0};
    CHECK_THROWS_AS(validate(unsorted, 100, 100, e), Error);
    SearchGrid dup = g;
    dup.k_values = {3, 3};
    CHECK_THROWS_AS(validate(dup, 100, 100, e), Error);
    SearchGrid even = g;
    even.k_values = {1, 4};
    CHECK_THROWS_AS(validate(even, 100, 100, e), Error);
    SearchGrid wide = g;
    wide.m_values = {2, 11};
    CHECK_THROWS_AS(validate(wide, 100, 100, e), Error);
}

TEST_CASE("coarse preset lists and range filtering") {
    const SearchGrid g = grid_preset("coarse", 800, 600, {40, 40});
    CHECK(g.l_values.size() == 11);
    CHECK(g.c_values.size() == 11);
    CHECK(g.l_values.front() == 0.0);
    CHECK(g.l_values.back() == 100.0);
    CHECK(g.k_values == std::vector<int>{1, 5, 9, 13, 17, 21});
    CHECK(g.m_values == std::vector<int>{2, 4, 6, 8, 12, 16});
    CHECK(g.stage_plan == StagePlan::coarse_then_refine);

    const SearchGrid narrow = grid_preset("coarse", 800, 600, {7, 30});
    CHECK(narrow.m_values == std::vector<int>{2, 4, 6});
    const SearchGrid tiny = grid_preset("coarse", 800, 600, {1, 1});
    CHECK(tiny.m_values == std::vector<int>{1});
    const SearchGrid small = grid_preset("coarse", 12, 10, {5, 5});
    CHECK(small.k_values == std::vector<int>{1, 5, 9});

    const SearchGrid fine = grid_preset("fine", 800, 600, {40, 40});
    CHECK(fine.l_values.size() == 21);
    CHECK(fine.stage_plan == StagePlan::single_pass);
    const SearchGrid literal = grid_preset("paper-literal-subset", 800, 600, {40, 40});
    CHECK(literal.l_values.size() == 21);
    CHECK(literal.l_values[1] == 49.1);
    CHECK_THROWS_AS(grid_preset("dense", 800, 600, {40, 40}), Error);
}

TEST_CASE("params and grid survive a JSON round trip") {
    const AgnosticParams p{12.5, 80, 7, 3};
    CHECK(params_from_json(to_json(p)) == p);
    CHECK_THROWS_AS(params_from_json(nlohmann::json{{"decoy_L", 1}}), Error);

    const SearchGrid g = grid_preset("coarse", 800, 600, {40, 40});
    const SearchGrid back = grid_from_json(to_json(g));
    CHECK(back.l_values == g.l_values);
    CHECK(back.c_values == g.c_values);
    CHECK(back.k_values == g.k_values);
    CHECK(back.m_values == g.m_values);
    CHECK(back.stage_plan == g.stage_plan);
    CHECK(to_json(g)["stage_plan"] == "coarse-then-refine");
}

TEST_CASE("tie-break order") {
    const AgnosticParams base{50, 50, 5, 4};
    auto with = [&](auto f) {
        AgnosticParams p = base;
        f(p);
        return p;
    };
    CHECK(better_candidate(0.2, base, 0.1, base));
    CHECK_FALSE(better_candidate(0.1, base, 0.2, base));
    CHECK_FALSE(better_candidate(0.1, base, 0.1, base));
    CHECK(better_candidate(0.1, with([](auto& p) { p.kernel_size = 3; }), 0.1, base));
    CHECK(better_candidate(0.1, with([](auto& p) { p.kernel_size = 3; p.mask_area = 1; }), 0.1, base));
    CHECK(better_candidate(0.1, with([](auto& p) { p.mask_area = 6; }), 0.1, base));
    CHECK(better_candidate(0.1, with([](auto& p) { p.mask_area = 6; p.decoy_L = 0; }), 0.1, base));
    CHECK(better_candidate(0.1, base, 0.1, with([](auto& p) { p.decoy_L = 60; })));
    CHECK(better_candidate(0.1, with([](auto& p) { p.decoy_L = 40; }), 0.1, with([](auto& p) { p.decoy_L = 60; })));
    CHECK(better_candidate(0.1, with([](auto& p) { p.decoy_L = 60; }), 0.1,
                           with([](auto& p) { p.decoy_L = 40; p.decoy_C = 0; })));
    CHECK(better_candidate(0.1, with([](auto& p) { p.decoy_C = 45; }), 0.1, with([](auto& p) { p.decoy_C = 60; })));
    CHECK(better_candidate(0.1, with([](auto& p) { p.decoy_C = 40; }), 0.1, with([](auto& p) { p.decoy_C = 60; })));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK(better_candidate(-5.0, base, nan, base));
    CHECK_FALSE(better_candidate(nan, base, -5.0, base));
}

TEST_CASE("refine grid holds the winner and midpoints toward its neighbors") {
    SearchGrid g{{0, 10, 20}, {0, 10}, {1, 5, 9}, {2, 4, 6}, StagePlan::coarse_then_refine};
    const SearchGrid r = refine_grid(g, {10, 0, 5, 4});
    CHECK(r.l_values == std::vector<double>{5, 10, 15});
    CHECK(r.c_values == std::vector<double>{0, 5});
    CHECK(r.k_values == std::vector<int>{3, 5, 7});
    CHECK(r.m_values == std::vector<int>{3, 4, 5});
    CHECK(r.stage_plan == StagePlan::single_pass);

    // Adjacent odd kernels and adjacent mask cells have no interior points.
    SearchGrid tight{{50}, {50}, {1, 3}, {2, 3}};
    const SearchGrid t = refine_grid(tight, {50, 50, 1, 3});
    CHECK(t.l_values == std::vector<double>{50});
    CHECK(t.k_values == std::vector<int>{1});
    CHECK(t.m_values == std::vector<int>{3});
}

TEST_CASE("zero chroma paints every decoy mark gray") {
    const CandidateInputs in = inputs_for(ChartType::pie);
    const RasterImage layer = decoy_mark_layer(in, 60, 0);
    std::size_t painted = 0;
    for (int y = 0; y < layer.height(); ++y)
        for (int x = 0; x < layer.width(); ++x) {
            const Rgba p = layer.at(x, y);
            if (p.a == 0) continue;
            ++painted;
            CHECK(p.r == p.g);
            CHECK(p.g == p.b);
            CHECK(p.r == lch_to_srgb({60, 0, 0}).color.r);
        }
    CHECK(painted > 0);
}

TEST_CASE("decoy layer needs one hue per mark") {
    CandidateInputs in = inputs_for(ChartType::bar);
    in.hues.hues.pop_back();
    CHECK_THROWS_AS(build_candidate(in, {50, 50, 1, 2}), Error);
}

TEST_CASE("unit kernel and a mask cell covering every mark give the plain overlay") {
    for (ChartType type : {ChartType::bar, ChartType::line, ChartType::scatter, ChartType::pie}) {
        const CandidateInputs in = inputs_for(type);
        const CandidateImages c = build_candidate(in, {30, 70, 1, 1000});
        RasterImage original_layer = in.original;
        original_layer.set_has_alpha(true);
        for (int y = 0; y < original_layer.height(); ++y)
            for (int x = 0; x < original_layer.width(); ++x) {
                const Rgba p = original_layer.at(x, y);
                if (p.r == in.background.r && p.g == in.background.g && p.b == in.background.b)
                    original_layer.set(x, y, {0, 0, 0, 0});
            }
        const RasterImage decoy = decoy_mark_layer(in, 30, 70);
        CHECK(same_bytes(c.protected_image, composite(in.background, decoy, original_layer)));
        CHECK(same_bytes(c.decoy_flat, flatten(in.background, decoy)));
    }
}

TEST_CASE("candidate construction is deterministic") {
    const CandidateInputs in = inputs_for(ChartType::scatter);
    const auto a = build_candidate(in, {40, 60, 5, 3});
    const auto b = build_candidate(in, {40, 60, 5, 3});
    CHECK(same_bytes(a.protected_image, b.protected_image));
    CHECK(same_bytes(a.decoy_flat, b.decoy_flat));
}

TEST_CASE("evaluation of an unchanged image and weight swapping") {
    const CandidateInputs in = inputs_for(ChartType::bar);
    const auto opt = small_options();
    const auto ctx = opt.viewing.context(opt.viewing.close_cm, in.original.width(), in.original.height());
    const auto c = build_candidate(in, {50, 50, 5, 4});
    const GapScores same = evaluate_candidate(in.original, c.decoy_flat, in.original, ctx, ctx, 0.5, 0.5);
    CHECK(same.gap1 == 0.0);

    const auto far = opt.viewing.context(opt.viewing.far_cm, in.original.width(), in.original.height());
    const GapScores a = evaluate_candidate(in.original, c.decoy_flat, c.protected_image, ctx, far, 0.8, 0.2);
    const GapScores b = evaluate_candidate(in.original, c.decoy_flat, c.protected_image, ctx, far, 0.2, 0.8);
    REQUIRE(a.gap1 != a.gap2);
    CHECK(a.score == doctest::Approx(0.8 * a.gap1 + 0.2 * a.gap2).epsilon(1e-12));
    CHECK(b.score == doctest::Approx(0.2 * a.gap1 + 0.8 * a.gap2).epsilon(1e-12));
    const GapScores again = evaluate_candidate(in.original, c.decoy_flat, c.protected_image, ctx, far, 0.8, 0.2);
    CHECK(same_scores(a, again));
}

TEST_CASE("singleton grid returns its point") {
    const CandidateInputs in = inputs_for(ChartType::line);
    const SearchGrid g{{20}, {40}, {3}, {2}};
    const ProtectedBundle b = optimize(in, g, small_options());
    CHECK(b.best.params == AgnosticParams{20, 40, 3, 2});
    CHECK(b.evaluated == 1);
    const auto list = oracle_enumerate(in, g, small_options());
    REQUIRE(list.size() == 1);
    CHECK(same_scores(list.front().scores, b.best.scores));
}

TEST_CASE("bundle re-derives bit for bit from the winning parameters") {
    for (ChartType type : {ChartType::bar, ChartType::pie}) {
        const CandidateInputs in = inputs_for(type, 3);
        const SearchGrid g{{0, 50}, {0, 60}, {1, 5}, {2, 4}, StagePlan::coarse_then_refine};
        const auto opt = small_options();
        const ProtectedBundle b = optimize(in, g, opt);
        const CandidateImages c = build_candidate(in, b.best.params);
        CHECK(same_bytes(b.protected_image, c.protected_image));
        CHECK(same_bytes(b.best.protected_image, c.protected_image));
        CHECK(same_bytes(b.decoy, c.decoy_flat));
        CHECK(same_bytes(b.original, in.original));
        const int w = in.original.width(), h = in.original.height();
        const GapScores s = evaluate_candidate(in.original, c.decoy_flat, c.protected_image,
                                               opt.viewing.context(opt.viewing.close_cm, w, h),
                                               opt.viewing.context(opt.viewing.far_cm, w, h), opt.alpha, opt.beta);
        CHECK(same_scores(s, b.best.scores));
        CHECK(same_bytes(b.protected_preview.close, perceive(c.protected_image, opt.viewing).close));
        CHECK(same_bytes(b.decoy_preview.far, perceive(c.decoy_flat, opt.viewing).far));
    }
}

TEST_CASE("optimizer winner equals the oracle head on random grids") {
    std::mt19937_64 rng(20240611);
    const ChartType types[] = {ChartType::bar, ChartType::line, ChartType::scatter, ChartType::pie};
    for (int trial = 0; trial < 4; ++trial) {
        const CandidateInputs in = inputs_for(types[trial], 10 + trial);
        const SearchGrid g = random_grid(rng, in.original_geometry.element_extent, 16);
        CAPTURE(to_json(g).dump());
        const auto opt = small_options();
        const ProtectedBundle b = optimize(in, g, opt);
        const auto list = oracle_enumerate(in, g, opt);
        REQUIRE_FALSE(list.empty());
        CHECK(b.best.params == list.front().params);
        CHECK(same_scores(b.best.scores, list.front().scores));
        CHECK(same_bytes(b.best.protected_image, list.front().protected_image));
        if (g.stage_plan == StagePlan::single_pass) CHECK(b.evaluated == g.size());
        for (std::size_t i = 1; i < list.size(); ++i)
            CHECK(better_candidate(list[i - 1].scores.score, list[i - 1].params, list[i].scores.score,
                                   list[i].params));
    }
}

TEST_CASE("without a decoy, colour and blur tie and the tie-break decides") {
    const CandidateInputs in = inputs_for(ChartType::bar, 1, false);
    const SearchGrid g{{0, 40, 70}, {0, 55, 100}, {1, 3, 5}, {2, 3}};
    const auto opt = small_options();
    const auto list = oracle_enumerate(in, g, opt);
    const ProtectedBundle b = optimize(in, g, opt);
    CHECK(b.best.params == list.front().params);
    CHECK(b.best.params.kernel_size == 1);
    CHECK(b.best.params.decoy_L == 40);
    CHECK(b.best.params.decoy_C == 55);
}

TEST_CASE("without a decoy and with a degenerate mask the far view never favours the decoy") {
    const auto opt = small_options();
    for (ChartType type : {ChartType::bar, ChartType::line, ChartType::scatter, ChartType::pie}) {
        const CandidateInputs in = inputs_for(type, 1, false);
        const int w = in.original.width(), h = in.original.height();
        for (int k : {1, 5, 9}) {
            const CandidateImages c = build_candidate(in, {50, 50, k, 1000});
            CHECK(same_bytes(c.protected_image, in.original));
            const GapScores s = evaluate_candidate(in.original, c.decoy_flat, c.protected_image,
                                                   opt.viewing.context(opt.viewing.close_cm, w, h),
                                                   opt.viewing.context(opt.viewing.far_cm, w, h), 0.5, 0.5);
            CHECK(s.gap1 == 0.0);
            CHECK(s.gap2 <= 0.0);
        }
    }
}

TEST_CASE("winner is independent of thread count") {
    const CandidateInputs in = inputs_for(ChartType::scatter, 5);
    const SearchGrid g{{0, 50, 100}, {0, 50}, {1, 5}, {2, 3}, StagePlan::coarse_then_refine};
    const ProtectedBundle one = optimize(in, g, small_options(1));
    const ProtectedBundle three = optimize(in, g, small_options(3));
    CHECK(one.best.params == three.best.params);
    CHECK(same_scores(one.best.scores, three.best.scores));
    CHECK(same_bytes(one.protected_image, three.protected_image));
    CHECK(one.evaluated == three.evaluated);
}

TEST_CASE("grid errors") {
    const CandidateInputs in = inputs_for(ChartType::bar);
    SearchGrid empty{{}, {50}, {1}, {1}};
    CHECK_THROWS_AS(optimize(in, empty, small_options()), Error);
    SearchGrid big;
    for (int v = 0; v <= 100; v += 10) big.l_values.push_back(v);
    big.c_values = big.l_values;
    big.k_values = {1, 3, 5, 7, 9};
    big.m_values = {1, 2};
    REQUIRE(big.size() > 1000);
    CHECK_THROWS_AS(oracle_enumerate(in, big, small_options()), Error);
}
