#include "decoyvis/percept.hpp"

#include <Eigen/SparseCore>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <tuple>

#include "decoyvis/error.hpp"

namespace decoyvis {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

}  // namespace

// ---------------------------------------------------------------------------
// Viewing geometry

void validate(const ViewingContext& ctx) {
    if (!(ctx.distance_cm > 0.0)) fail_validation("viewing distance must be positive");
    if (!(ctx.theta_h_deg > 0.0 && ctx.theta_h_deg < 180.0) || !(ctx.theta_w_deg > 0.0 && ctx.theta_w_deg < 180.0))
        fail_validation("visual angles must lie in (0, 180) degrees");
    if (!(ctx.density_px_per_cm > 0.0)) fail_validation("display density must be positive");
    if (ctx.image_width_px < 1 || ctx.image_height_px < 1) fail_validation("image dimensions must be >= 1");
}

double gamma(const ViewingContext& ctx) {
    validate(ctx);
    const double hv = 2.0 * std::tan(ctx.theta_h_deg * kDeg / 2.0) * ctx.distance_cm * ctx.density_px_per_cm;
    const double wv = 2.0 * std::tan(ctx.theta_w_deg * kDeg / 2.0) * ctx.distance_cm * ctx.density_px_per_cm;
    const double g = std::sqrt(static_cast<double>(ctx.image_height_px) * ctx.image_width_px / (hv * wv));
    return std::min(1.0, g);
}

RasterImage simulate_perception(const RasterImage& img, const ViewingContext& ctx) {
    ViewingContext sized = ctx;
    sized.image_width_px = img.width();
    sized.image_height_px = img.height();
    return resample(img, gamma(sized));
}

ViewingContext ViewingSetup::context(double distance_cm, int width, int height) const {
    return {distance_cm, theta_h_deg, theta_w_deg, density_px_per_cm, width, height};
}

void validate(const ViewingSetup& setup) {
    if (!(setup.close_cm > 0.0)) fail_validation("close distance must be positive");
    if (!(setup.far_cm >= setup.close_cm)) fail_validation("far distance must not be below close distance");
    validate(setup.context(setup.close_cm, 1, 1));
}

PerceivedPair perceive(const RasterImage& img, const ViewingSetup& setup) {
    validate(setup);
    PerceivedPair p;
    p.gamma_close = gamma(setup.context(setup.close_cm, img.width(), img.height()));
    p.gamma_far = gamma(setup.context(setup.far_cm, img.width(), img.height()));
    const Size sizes[] = {resampled_size(img.width(), img.height(), p.gamma_close),
                          resampled_size(img.width(), img.height(), p.gamma_far)};
    auto images = resample_to_sizes(img, sizes);
    p.close = std::move(images[0]);
    p.far = std::move(images[1]);
    return p;
}

// ---------------------------------------------------------------------------
// Manifest

const MetricManifest& default_metric_manifest() {
    static const MetricManifest m{};
    return m;
}

nlohmann::json to_json(const MetricManifest& m) {
    return {{"version", m.version},
            {"ms_ssim",
             {{"window", m.ssim_window},
              {"sigma", m.ssim_sigma},
              {"k1", m.ssim_k1},
              {"k2", m.ssim_k2},
              {"scale_weights", m.ms_ssim_weights},
              {"channel", "luma 0.299 R + 0.587 G + 0.114 B"}}},
            {"vsi",
             {{"c1", m.vsi_c1},
              {"c2", m.vsi_c2},
              {"c3", m.vsi_c3},
              {"alpha", m.vsi_alpha},
              {"beta", m.vsi_beta},
              {"min_dimension", m.vsi_min_dimension},
              {"downsample_target", m.vsi_downsample_target},
              {"gradient", "scharr/16"}}},
            {"saliency",
             {{"method", "spectral_residual"},
              {"size", m.saliency_size},
              {"average", m.saliency_average},
              {"sigma", m.saliency_sigma}}}};
}

MetricManifest metric_manifest_from_json(const nlohmann::json& j) {
    MetricManifest m;
    try {
        m.version = j.at("version").get<std::string>();
        const auto& s = j.at("ms_ssim");
        m.ssim_window = s.at("window").get<int>();
        m.ssim_sigma = s.at("sigma").get<double>();
        m.ssim_k1 = s.at("k1").get<double>();
        m.ssim_k2 = s.at("k2").get<double>();
        m.ms_ssim_weights = s.at("scale_weights").get<std::array<double, 5>>();
        const auto& v = j.at("vsi");
        m.vsi_c1 = v.at("c1").get<double>();
        m.vsi_c2 = v.at("c2").get<double>();
        m.vsi_c3 = v.at("c3").get<double>();
        m.vsi_alpha = v.at("alpha").get<double>();
        m.vsi_beta = v.at("beta").get<double>();
        m.vsi_min_dimension = v.at("min_dimension").get<int>();
        m.vsi_downsample_target = v.at("downsample_target").get<int>();
        const auto& sal = j.at("saliency");
        m.saliency_size = sal.at("size").get<int>();
        m.saliency_average = sal.at("average").get<int>();
        m.saliency_sigma = sal.at("sigma").get<double>();
    } catch (const nlohmann::json::exception& e) {
        fail_validation(std::string("metric manifest: ") + e.what());
    }
    if (m.ssim_window < 3 || m.ssim_window % 2 == 0) fail_validation("ssim window must be odd and >= 3");
    if (m.saliency_size < 8) fail_validation("saliency size must be >= 8");
    return m;
}

// ---------------------------------------------------------------------------
// MS-SSIM

namespace {

Plane luma(const RasterImage& img) {
    Plane p(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto c = img.at(x, y);
            p(y, x) = 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
        }
    return p;
}

std::vector<double> window_taps(int size, double sigma) {
    std::vector<double> t(static_cast<std::size_t>(size));
    const int r = size / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += t[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2 * sigma * sigma));
    for (auto& v : t) v /= sum;
    return t;
}

// Separable convolution keeping only fully covered positions.
Plane valid_filter(const Plane& p, const std::vector<double>& taps) {
    const Eigen::Index k = static_cast<Eigen::Index>(taps.size());
    const Eigen::Index rows = p.rows(), cols = p.cols() - k + 1;
    Plane tmp = Plane::Zero(rows, cols);
    for (Eigen::Index i = 0; i < k; ++i) tmp += taps[static_cast<std::size_t>(i)] * p.middleCols(i, cols);
    Plane out = Plane::Zero(rows - k + 1, cols);
    for (Eigen::Index i = 0; i < k; ++i) out += taps[static_cast<std::size_t>(i)] * tmp.middleRows(i, rows - k + 1);
    return out;
}

Plane half(const Plane& p) {
    const Eigen::Index rows = p.rows() / 2, cols = p.cols() / 2;
    Plane out(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x)
            out(y, x) = (p(2 * y, 2 * x) + p(2 * y, 2 * x + 1) + p(2 * y + 1, 2 * x) + p(2 * y + 1, 2 * x + 1)) / 4.0;
    return out;
}

}  // namespace

MsSsimFeatures ms_ssim_features(const RasterImage& img, const MetricManifest& m) {
    const int min_dim = std::min(img.width(), img.height());
    if (min_dim < m.ssim_window) fail_validation("ms_ssim: image smaller than the window");
    const int scales = std::min(5, static_cast<int>(std::floor(std::log2(double(min_dim) / m.ssim_window))) + 1);
    const auto taps = window_taps(m.ssim_window, m.ssim_sigma);
    MsSsimFeatures f;
    f.width = img.width();
    f.height = img.height();
    Plane x = luma(img);
    for (int s = 0; s < scales; ++s) {
        MsSsimFeatures::Scale sc;
        sc.mean = valid_filter(x, taps);
        sc.variance = valid_filter(x * x, taps) - sc.mean * sc.mean;
        if (s + 1 < scales) {
            Plane next = half(x);
            sc.luma = std::move(x);
            x = std::move(next);
        } else {
            sc.luma = std::move(x);
        }
        f.scales.push_back(std::move(sc));
    }
    return f;
}

double ms_ssim(const MsSsimFeatures& a, const MsSsimFeatures& b, const MetricManifest& m) {
    if (a.width != b.width || a.height != b.height) fail_validation("ms_ssim: dimension mismatch");
    const std::size_t scales = a.scales.size();
    double weight_sum = 0.0;
    for (std::size_t s = 0; s < scales; ++s) weight_sum += m.ms_ssim_weights[s];
    const auto taps = window_taps(m.ssim_window, m.ssim_sigma);
    const double c1 = std::pow(m.ssim_k1 * 255.0, 2), c2 = std::pow(m.ssim_k2 * 255.0, 2);

    double result = 1.0;
    for (std::size_t s = 0; s < scales; ++s) {
        const auto& x = a.scales[s];
        const auto& y = b.scales[s];
        const double w = m.ms_ssim_weights[s] / weight_sum;
        const Plane mxy = x.mean * y.mean;
        const Plane sxy = valid_filter(x.luma * y.luma, taps) - mxy;
        const Plane cs = (2.0 * sxy + c2) / (x.variance + y.variance + c2);
        if (s + 1 == scales) {
            const Plane l = (2.0 * mxy + c1) / (x.mean * x.mean + y.mean * y.mean + c1);
            result *= std::pow(std::max(0.0, (l * cs).mean()), w);
        } else {
            result *= std::pow(std::max(0.0, cs.mean()), w);
        }
    }
    return result;
}

double ms_ssim(const RasterImage& a, const RasterImage& b, const MetricManifest& m) {
    if (a.width() != b.width() || a.height() != b.height()) fail_validation("ms_ssim: dimension mismatch");
    return ms_ssim(ms_ssim_features(a, m), ms_ssim_features(b, m), m);
}

// ---------------------------------------------------------------------------
// Saliency

namespace {

// Row-stochastic matrix mapping n_in samples onto n_out by exact interval overlap.
Matrix area_weights(Eigen::Index n_in, Eigen::Index n_out) {
    Matrix w = Matrix::Zero(n_out, n_in);
    const double scale = double(n_in) / double(n_out);
    for (Eigen::Index o = 0; o < n_out; ++o) {
        const double lo = o * scale, hi = (o + 1) * scale;
        for (auto i = static_cast<Eigen::Index>(std::floor(lo)); i < n_in && i < hi; ++i) {
            const double overlap = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
            if (overlap > 0) w(o, i) = overlap / scale;
        }
    }
    return w;
}

// Bilinear interpolation with wrap-around, pixel centers aligned.
Matrix periodic_bilinear_weights(Eigen::Index n_in, Eigen::Index n_out) {
    Matrix w = Matrix::Zero(n_out, n_in);
    const double scale = double(n_in) / double(n_out);
    for (Eigen::Index o = 0; o < n_out; ++o) {
        const double u = (o + 0.5) * scale - 0.5;
        const double f = std::floor(u);
        const double frac = u - f;
        const auto i0 = static_cast<Eigen::Index>(f);
        w(o, ((i0 % n_in) + n_in) % n_in) += 1.0 - frac;
        w(o, (((i0 + 1) % n_in) + n_in) % n_in) += frac;
    }
    return w;
}

void fft2(Matrix& re, Matrix& im, bool inverse) {
    thread_local Eigen::FFT<double> fft;
    thread_local std::vector<std::complex<double>> in, out;
    const Eigen::Index rows = re.rows(), cols = re.cols();
    for (Eigen::Index y = 0; y < rows; ++y) {
        in.resize(static_cast<std::size_t>(cols));
        for (Eigen::Index x = 0; x < cols; ++x) in[static_cast<std::size_t>(x)] = {re(y, x), im(y, x)};
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (Eigen::Index x = 0; x < cols; ++x) {
            re(y, x) = out[static_cast<std::size_t>(x)].real();
            im(y, x) = out[static_cast<std::size_t>(x)].imag();
        }
    }
    for (Eigen::Index x = 0; x < cols; ++x) {
        in.resize(static_cast<std::size_t>(rows));
        for (Eigen::Index y = 0; y < rows; ++y) in[static_cast<std::size_t>(y)] = {re(y, x), im(y, x)};
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (Eigen::Index y = 0; y < rows; ++y) {
            re(y, x) = out[static_cast<std::size_t>(y)].real();
            im(y, x) = out[static_cast<std::size_t>(y)].imag();
        }
    }
}

// Box average with replicated borders.
Matrix box_filter(const Matrix& p, int size) {
    const int r = size / 2;
    const Eigen::Index rows = p.rows(), cols = p.cols();
    Matrix out(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    acc += p(std::clamp<Eigen::Index>(y + dy, 0, rows - 1), std::clamp<Eigen::Index>(x + dx, 0, cols - 1));
            out(y, x) = acc / (size * size);
        }
    return out;
}

Matrix periodic_gaussian(const Matrix& p, double sigma) {
    const int r = std::max(1, static_cast<int>(std::lround(2.0 * sigma)));
    std::vector<double> t(static_cast<std::size_t>(2 * r + 1));
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += t[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2 * sigma * sigma));
    for (auto& v : t) v /= sum;
    const Eigen::Index rows = p.rows(), cols = p.cols();
    // wrapped[n][j + r] = (j mod n) for j in [-r, n + r).
    auto wrapped = [r](Eigen::Index n) {
        std::vector<Eigen::Index> w(static_cast<std::size_t>(n + 2 * r));
        for (Eigen::Index j = -r; j < n + r; ++j) w[static_cast<std::size_t>(j + r)] = ((j % n) + n) % n;
        return w;
    };
    const auto wx = wrapped(cols), wy = wrapped(rows);
    Matrix tmp = Matrix::Zero(rows, cols), out = Matrix::Zero(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x)
            for (int i = -r; i <= r; ++i)
                tmp(y, x) += t[static_cast<std::size_t>(i + r)] * p(y, wx[static_cast<std::size_t>(x + i + r)]);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x)
            for (int i = -r; i <= r; ++i)
                out(y, x) += t[static_cast<std::size_t>(i + r)] * tmp(wy[static_cast<std::size_t>(y + i + r)], x);
    return out;
}

// Resampling matrices depend only on their sizes; built once per thread.
const Sparse& cached_weights(Matrix (*build)(Eigen::Index, Eigen::Index), Eigen::Index n_in, Eigen::Index n_out) {
    thread_local std::map<std::tuple<Matrix (*)(Eigen::Index, Eigen::Index), Eigen::Index, Eigen::Index>, Sparse> cache;
    const auto key = std::make_tuple(build, n_in, n_out);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, build(n_in, n_out).sparseView()).first;
    return it->second;
}

}  // namespace

Plane spectral_residual_saliency(const Plane& luminance, const MetricManifest& m) {
    const Eigen::Index rows = luminance.rows(), cols = luminance.cols();
    const Eigen::Index n = m.saliency_size;
    const Sparse& down_y = cached_weights(area_weights, rows, n);
    const Sparse& down_x = cached_weights(area_weights, cols, n);
    Matrix re = down_y * (luminance.matrix() * down_x.transpose());
    Matrix im = Matrix::Zero(n, n);
    fft2(re, im, false);

    Matrix amp(n, n), log_amp(n, n);
    for (Eigen::Index y = 0; y < n; ++y)
        for (Eigen::Index x = 0; x < n; ++x) {
            amp(y, x) = std::hypot(re(y, x), im(y, x));
            log_amp(y, x) = std::log(amp(y, x) + 1e-9);
        }
    const Matrix residual = log_amp - box_filter(log_amp, m.saliency_average);
    // exp(residual) along the original phase; a zero coefficient has phase 0.
    for (Eigen::Index y = 0; y < n; ++y)
        for (Eigen::Index x = 0; x < n; ++x) {
            const double mag = std::exp(residual(y, x));
            if (amp(y, x) > 0.0) {
                re(y, x) *= mag / amp(y, x);
                im(y, x) *= mag / amp(y, x);
            } else {
                re(y, x) = mag;
                im(y, x) = 0.0;
            }
        }
    fft2(re, im, true);
    Matrix power = re.array().square() + im.array().square();
    power = periodic_gaussian(power, m.saliency_sigma);

    const Sparse& up_y = cached_weights(periodic_bilinear_weights, n, rows);
    const Sparse& up_x = cached_weights(periodic_bilinear_weights, n, cols);
    Plane sal = (up_y * (power * up_x.transpose())).array();
    const double lo = sal.minCoeff(), hi = sal.maxCoeff();
    if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) return Plane::Ones(rows, cols);
    return (sal - lo) / (hi - lo);
}

// ---------------------------------------------------------------------------
// VSI

namespace {

struct Opponent {
    Plane l, m, n;
};

Plane block_average(const Plane& p, int f) {
    if (f == 1) return p;
    const Eigen::Index rows = p.rows() / f, cols = p.cols() / f;
    Plane out(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x) out(y, x) = p.block(y * f, x * f, f, f).mean();
    return out;
}

Opponent opponent(const RasterImage& img, int f) {
    Plane l(img.height(), img.width()), m(img.height(), img.width()), n(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const auto c = img.at(x, y);
            l(y, x) = 0.06 * c.r + 0.63 * c.g + 0.27 * c.b;
            m(y, x) = 0.30 * c.r + 0.04 * c.g - 0.35 * c.b;
            n(y, x) = 0.34 * c.r - 0.60 * c.g + 0.17 * c.b;
        }
    return {block_average(l, f), block_average(m, f), block_average(n, f)};
}

Plane scharr_magnitude(const Plane& p) {
    const Eigen::Index rows = p.rows(), cols = p.cols();
    auto at = [&](Eigen::Index y, Eigen::Index x) {
        return p(std::clamp<Eigen::Index>(y, 0, rows - 1), std::clamp<Eigen::Index>(x, 0, cols - 1));
    };
    Plane g(rows, cols);
    for (Eigen::Index y = 0; y < rows; ++y)
        for (Eigen::Index x = 0; x < cols; ++x) {
            const double gx = (3 * (at(y - 1, x - 1) - at(y - 1, x + 1)) + 10 * (at(y, x - 1) - at(y, x + 1)) +
                               3 * (at(y + 1, x - 1) - at(y + 1, x + 1))) /
                              16.0;
            const double gy = (3 * (at(y - 1, x - 1) - at(y + 1, x - 1)) + 10 * (at(y - 1, x) - at(y + 1, x)) +
                               3 * (at(y - 1, x + 1) - at(y + 1, x + 1))) /
                              16.0;
            g(y, x) = std::sqrt(gx * gx + gy * gy);
        }
    return g;
}

Plane ratio_similarity(const Plane& a, const Plane& b, double c) { return (2.0 * (a * b) + c) / (a * a + b * b + c); }

}  // namespace

Plane vsi_luminance(const RasterImage& img) { return opponent(img, 1).l; }

VsiFeatures vsi_features(const RasterImage& img, const MetricManifest& m) {
    const int min_dim = std::min(img.width(), img.height());
    if (min_dim < m.vsi_min_dimension) fail_validation("vsi: image smaller than the minimum dimension");
    const int f = std::max(1, static_cast<int>(std::lround(double(min_dim) / m.vsi_downsample_target)));
    Opponent o = opponent(img, f);
    VsiFeatures out;
    out.width = img.width();
    out.height = img.height();
    out.saliency = spectral_residual_saliency(o.l, m);
    out.gradient = scharr_magnitude(o.l);
    out.m = std::move(o.m);
    out.n = std::move(o.n);
    return out;
}

double vsi(const VsiFeatures& a, const VsiFeatures& b, const MetricManifest& m) {
    if (a.width != b.width || a.height != b.height) fail_validation("vsi: dimension mismatch");
    const Plane s_vs = ratio_similarity(a.saliency, b.saliency, m.vsi_c1);
    const Plane s_g = ratio_similarity(a.gradient, b.gradient, m.vsi_c2);
    const Plane s_c = ratio_similarity(a.m, b.m, m.vsi_c3) * ratio_similarity(a.n, b.n, m.vsi_c3);

    // Real part of a possibly negative base raised to beta.
    const double neg = std::cos(m.vsi_beta * std::numbers::pi);
    const Plane chroma = s_c.unaryExpr([&](double v) {
        return v >= 0.0 ? std::pow(v, m.vsi_beta) : std::pow(-v, m.vsi_beta) * neg;
    });
    const Plane weight = a.saliency.max(b.saliency);
    const Plane sim = s_vs * s_g.pow(m.vsi_alpha) * chroma;
    return (sim * weight).sum() / weight.sum();
}

double vsi(const RasterImage& a, const RasterImage& b, const MetricManifest& m) {
    if (a.width() != b.width() || a.height() != b.height()) fail_validation("vsi: dimension mismatch");
    return vsi(vsi_features(a, m), vsi_features(b, m), m);
}

// ---------------------------------------------------------------------------
// Gaps

GapScores combine_gaps(double vsi_close, double vsi_far, double ssim_far, double ssim_close, double alpha,
                       double beta) {
    GapScores g;
    g.vsi_close = vsi_close;
    g.vsi_far = vsi_far;
    g.ssim_far = ssim_far;
    g.ssim_close = ssim_close;
    g.alpha = alpha;
    g.beta = beta;
    g.gap1 = vsi_close - vsi_far;
    g.gap2 = ssim_far - ssim_close;
    g.score = alpha * g.gap1 + beta * g.gap2;
    return g;
}

GapScores gap_scores(const PerceivedPair& original, const PerceivedPair& decoy, const PerceivedPair& protected_,
                     double alpha, double beta, const MetricManifest& m) {
    auto same = [](const RasterImage& x, const RasterImage& y) {
        return x.width() == y.width() && x.height() == y.height();
    };
    if (!same(original.close, protected_.close) || !same(decoy.close, protected_.close) ||
        !same(original.far, protected_.far) || !same(decoy.far, protected_.far))
        fail_validation("gap_scores: dimension mismatch within a distance condition");
    return combine_gaps(vsi(original.close, protected_.close, m), vsi(original.far, protected_.far, m),
                        ms_ssim(decoy.far, protected_.far, m), ms_ssim(decoy.close, protected_.close, m), alpha, beta);
}

nlohmann::json to_json(const GapScores& g) {
    return {{"gap1", g.gap1},           {"gap2", g.gap2},         {"score", g.score},
            {"alpha", g.alpha},         {"beta", g.beta},         {"vsi_close", g.vsi_close},
            {"vsi_far", g.vsi_far},     {"ms_ssim_close", g.ssim_close}, {"ms_ssim_far", g.ssim_far}};
}

}  // namespace decoyvis
