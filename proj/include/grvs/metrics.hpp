#pragma once

#include <cstdint>
#include <vector>

#include "grvs/tensor.hpp"

namespace grvs {

constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over C x H x W images in [0, 1]. With a mask (H x W,
/// nonzero = selected) only selected pixels count. Identical inputs give
/// kPsnrCap.
double psnr(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask = nullptr);
double psnr(const Tensor64& a, const Tensor64& b, const std::vector<uint8_t>* mask = nullptr);

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, L = 1, over valid window positions only. Scores are averaged
/// per channel, then over channels. With a mask, only windows whose centre
/// pixel is selected are averaged.
double ssim(const Tensor& a, const Tensor& b, const std::vector<uint8_t>* mask = nullptr);
double ssim(const Tensor64& a, const Tensor64& b, const std::vector<uint8_t>* mask = nullptr);

}  // namespace grvs
