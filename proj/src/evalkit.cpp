#include "sahm/evalkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sahm/ops.hpp"

namespace sahm::evalkit {

namespace {

void require_images(const Tensor& a, const Tensor& b, const char* what)
{
    require_same_shape(a, b, what);
    if (a.rank() != 3) throw std::invalid_argument(std::string(what) + ": expected C x H x W, got " + shape_str(a.shape()));
}

double psnr_from_mse(double mse, double peak)
{
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix sqrt_psd(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

double psnr(const Tensor& a, const Tensor& b, double peak)
{
    require_images(a, b, "psnr");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = (a[i] - b[i]) * peak;
        s += d * d;
    }
    return psnr_from_mse(s / static_cast<double>(a.size()), peak);
}

double psnr_masked(const Tensor& a, const Tensor& b, const Tensor& mask, double peak)
{
    require_images(a, b, "psnr_masked");
    if (mask.shape() != Shape{1, a.dim(1), a.dim(2)})
        throw std::invalid_argument("psnr_masked: mask " + shape_str(mask.shape()) + " for image " + shape_str(a.shape()));
    double s = 0.0;
    std::size_t n = 0;
    for (int c = 0; c < a.dim(0); ++c)
        for (int y = 0; y < a.dim(1); ++y)
            for (int x = 0; x < a.dim(2); ++x) {
                if (mask(0, y, x) < 0.5) continue;
                const double d = (a(c, y, x) - b(c, y, x)) * peak;
                s += d * d;
                ++n;
            }
    return n == 0 ? kPsnrCap : psnr_from_mse(s / static_cast<double>(n), peak);
}

double ssim(const Tensor& a, const Tensor& b)
{
    require_images(a, b, "ssim");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const int h = a.dim(1), w = a.dim(2);
    if (h < kWin || w < kWin) throw std::invalid_argument("ssim: images must be at least 11 x 11, got " + shape_str(a.shape()));
    std::array<double, kWin> g{};
    double gs = 0.0;
    for (int i = 0; i < kWin; ++i) gs += g[static_cast<std::size_t>(i)] = std::exp(-((i - 5) * (i - 5)) / (2 * kSigma * kSigma));
    for (double& v : g) v /= gs;
    double total = 0.0;
    const int oh = h - kWin + 1, ow = w - kWin + 1;
    for (int c = 0; c < a.dim(0); ++c) {
        double acc = 0.0;
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
                double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
                for (int dy = 0; dy < kWin; ++dy)
                    for (int dx = 0; dx < kWin; ++dx) {
                        const double wt = g[static_cast<std::size_t>(dy)] * g[static_cast<std::size_t>(dx)];
                        const double va = a(c, y + dy, x + dx), vb = b(c, y + dy, x + dx);
                        ma += wt * va;
                        mb += wt * vb;
                        saa += wt * va * va;
                        sbb += wt * vb * vb;
                        sab += wt * va * vb;
                    }
                const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
                acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            }
        total += acc / (static_cast<double>(oh) * ow);
    }
    return total / a.dim(0);
}

double iou(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = a[i] >= 0.5, pb = b[i] >= 0.5;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double pr_at_k(const std::vector<double>& ious, double k)
{
    if (ious.empty()) return 0.0;
    return static_cast<double>(std::count_if(ious.begin(), ious.end(), [k](double v) { return v >= k; })) /
           static_cast<double>(ious.size());
}

Gaussian fit_gaussian(const std::vector<std::vector<double>>& samples)
{
    if (samples.empty()) throw std::invalid_argument("fit_gaussian: no samples");
    const std::size_t d = samples[0].size(), n = samples.size();
    Gaussian g;
    g.dim = static_cast<int>(d);
    g.mean.assign(d, 0.0);
    g.cov.assign(d * d, 0.0);
    for (const auto& s : samples) {
        if (s.size() != d) throw std::invalid_argument("fit_gaussian: ragged samples");
        for (std::size_t i = 0; i < d; ++i) g.mean[i] += s[i] / static_cast<double>(n);
    }
    if (n < 2) return g;
    for (const auto& s : samples)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) g.cov[i * d + j] += (s[i] - g.mean[i]) * (s[j] - g.mean[j]);
    for (double& v : g.cov) v /= static_cast<double>(n - 1);
    return g;
}

double frechet_distance(const Gaussian& a, const Gaussian& b)
{
    if (a.dim != b.dim) throw std::invalid_argument("frechet_distance: dimension mismatch");
    const int d = a.dim;
    Eigen::Map<const Matrix> ca(a.cov.data(), d, d), cb(b.cov.data(), d, d);
    double mean_term = 0.0;
    for (int i = 0; i < d; ++i) mean_term += (a.mean[static_cast<std::size_t>(i)] - b.mean[static_cast<std::size_t>(i)]) *
                                             (a.mean[static_cast<std::size_t>(i)] - b.mean[static_cast<std::size_t>(i)]);
    const Matrix ra = sqrt_psd(ca);
    const Matrix cross = sqrt_psd(ra * cb * ra);
    return std::max(0.0, mean_term + ca.trace() + cb.trace() - 2.0 * cross.trace());
}

double fid_proxy(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b)
{
    return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

OverheadReport overhead_report(const std::function<void()>& forward, std::size_t params, int runs, int warmups)
{
    if (runs < 1) throw std::invalid_argument("overhead_report: runs must be >= 1");
    OverheadReport r;
    r.params = params;
    {
        ops::FlopScope scope;
        forward();
        r.flops = scope.flops();
    }
    for (int i = 0; i < warmups; ++i) forward();
    std::vector<double> times;
    for (int i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        forward();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    r.seconds_median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    r.fps = r.seconds_median > 0.0 ? 1.0 / r.seconds_median : 0.0;
    return r;
}

} // namespace sahm::evalkit
