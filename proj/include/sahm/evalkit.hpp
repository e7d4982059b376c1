#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "sahm/tensor.hpp"

namespace sahm::evalkit {

inline constexpr double kPsnrCap = 99.0;

/// Images are C x H x W in [0, 1]; the error is measured after scaling to
/// [0, peak]. Zero error returns kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

/// PSNR restricted to pixels where mask (1 x H x W) is set. An empty mask
/// returns kPsnrCap.
double psnr_masked(const Tensor& a, const Tensor& b, const Tensor& mask, double peak = 255.0);

/// Mean SSIM over the valid region of an 11 x 11 Gaussian window
/// (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1), averaged over channels.
double ssim(const Tensor& a, const Tensor& b);

/// Masks are 1 x H x W; values >= 0.5 count as set. Two empty masks give 1.
double iou(const Tensor& a, const Tensor& b);

/// Fraction of IoUs >= k.
double pr_at_k(const std::vector<double>& ious, double k);

struct Gaussian {
    std::vector<double> mean;
    std::vector<double> cov; // d x d row-major
    int dim = 0;
};

/// Mean and unbiased covariance of the rows (one sample per row).
Gaussian fit_gaussian(const std::vector<std::vector<double>>& samples);

/// ||mu_a - mu_b||^2 + tr(A + B - 2 (A^1/2 B A^1/2)^1/2).
double frechet_distance(const Gaussian& a, const Gaussian& b);

/// Frechet distance between Gaussian fits of two feature sets. This is the
/// artifact's own feature space, not an Inception-based score.
double fid_proxy(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

struct OverheadReport {
    std::size_t params = 0;
    std::uint64_t flops = 0;
    double seconds_median = 0.0;
    double fps = 0.0;
};

/// FLOPs from one counted pass of `forward`, then the median wall time of
/// `runs` passes after `warmups` untimed ones.
OverheadReport overhead_report(const std::function<void()>& forward, std::size_t params, int runs = 20,
                               int warmups = 3);

} // namespace sahm::evalkit
