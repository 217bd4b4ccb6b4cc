#pragma once

// Toy-scale self-supervised frame encoder: paired augmentations, a small
// strided conv backbone with global average pooling, a projection head and
// the NT-Xent contrastive loss with its analytic gradient.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "skillfuse/common.hpp"
#include "skillfuse/nnet.hpp"
#include "skillfuse/random.hpp"

namespace skillfuse {

// H x W x 3 image, row-major with interleaved channels. Input frames hold
// values in [0, 1]; augmented views are normalized per channel and do not.
struct Frame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  Frame() = default;
  Frame(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w * 3, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) noexcept { return pixels[(y * width + x) * 3 + c]; }
  [[nodiscard]] double at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return pixels[(y * width + x) * 3 + c];
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline constexpr std::size_t kMinFrameSide = 8;

inline void validate_frame(const Frame& f) {
  if (f.height < kMinFrameSide || f.width < kMinFrameSide) throw std::invalid_argument("Frame: sides must be >= 8");
  if (f.pixels.size() != f.height * f.width * 3) throw std::invalid_argument("Frame: pixel count does not match H x W x 3");
  for (double v : f.pixels)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("Frame: pixel values must lie in [0, 1]");
}

struct AugmentConfig {
  std::size_t crop_size = 16;
  double scale_min = 0.2;  // crop area as a fraction of the frame
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;
  double ratio_max = 4.0 / 3.0;
  double brightness = 0.4;  // factor drawn from [1 - b, 1 + b]
  double contrast = 0.4;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  double flip_p = 0.5;
  double gray_p = 0.2;

  void validate() const {
    if (crop_size < kMinFrameSide) throw std::invalid_argument("AugmentConfig: crop_size must be >= 8");
    if (!(scale_min > 0 && scale_min <= scale_max && scale_max <= 1))
      throw std::invalid_argument("AugmentConfig: need 0 < scale_min <= scale_max <= 1");
    if (!(ratio_min > 0 && ratio_min <= ratio_max)) throw std::invalid_argument("AugmentConfig: bad aspect ratio range");
    if (!(brightness >= 0 && brightness < 1 && contrast >= 0 && contrast < 1))
      throw std::invalid_argument("AugmentConfig: jitter strengths must be in [0, 1)");
    if (!(blur_sigma_min > 0 && blur_sigma_min <= blur_sigma_max))
      throw std::invalid_argument("AugmentConfig: bad blur sigma range");
    if (!(flip_p >= 0 && flip_p <= 1 && gray_p >= 0 && gray_p <= 1))
      throw std::invalid_argument("AugmentConfig: probabilities must be in [0, 1]");
  }
};

namespace detail {

// Bilinear sample of the box [y0, y0 + h) x [x0, x0 + w) onto an n x n grid.
inline Frame resample_box(const Frame& f, double y0, double x0, double h, double w, std::size_t n) {
  Frame out(n, n);
  const auto clampi = [](double v, std::size_t hi) {
    return std::clamp(v, 0.0, static_cast<double>(hi - 1));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double sy = clampi(y0 + (static_cast<double>(i) + 0.5) * h / static_cast<double>(n) - 0.5, f.height);
    const auto ya = static_cast<std::size_t>(sy);
    const std::size_t yb = std::min(ya + 1, f.height - 1);
    const double fy = sy - static_cast<double>(ya);
    for (std::size_t j = 0; j < n; ++j) {
      const double sx = clampi(x0 + (static_cast<double>(j) + 0.5) * w / static_cast<double>(n) - 0.5, f.width);
      const auto xa = static_cast<std::size_t>(sx);
      const std::size_t xb = std::min(xa + 1, f.width - 1);
      const double fx = sx - static_cast<double>(xa);
      for (std::size_t c = 0; c < 3; ++c)
        out.at(i, j, c) = (1 - fy) * ((1 - fx) * f.at(ya, xa, c) + fx * f.at(ya, xb, c)) +
                          fy * ((1 - fx) * f.at(yb, xa, c) + fx * f.at(yb, xb, c));
    }
  }
  return out;
}

inline Frame random_resized_crop(const Frame& f, const AugmentConfig& a, Rng& rng) {
  const double area = static_cast<double>(f.height * f.width);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(a.scale_min, a.scale_max);
    const double ratio = std::exp(rng.uniform(std::log(a.ratio_min), std::log(a.ratio_max)));
    const double w = std::round(std::sqrt(target * ratio));
    const double h = std::round(std::sqrt(target / ratio));
    if (w < 1 || h < 1 || w > static_cast<double>(f.width) || h > static_cast<double>(f.height)) continue;
    const double y0 = std::floor(rng.uniform() * (static_cast<double>(f.height) - h + 1));
    const double x0 = std::floor(rng.uniform() * (static_cast<double>(f.width) - w + 1));
    return resample_box(f, y0, x0, h, w, a.crop_size);
  }
  return resample_box(f, 0, 0, static_cast<double>(f.height), static_cast<double>(f.width), a.crop_size);
}

inline void gaussian_blur(Frame& f, double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  const auto H = static_cast<std::ptrdiff_t>(f.height), W = static_cast<std::ptrdiff_t>(f.width);
  const auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t n) { return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, n - 1)); };
  Frame tmp = f;
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * f.at(static_cast<std::size_t>(y), clampi(x + i, W), c);
        tmp.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = s;
      }
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0;
        for (std::ptrdiff_t i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * tmp.at(clampi(y + i, H), static_cast<std::size_t>(x), c);
        f.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = s;
      }
}

}  // namespace detail

// Zero mean and unit spread per channel; a constant channel becomes zeros.
inline void normalize_channels(Frame& f) {
  const std::size_t n = f.height * f.width;
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, s = 0;
    for (std::size_t i = 0; i < n; ++i) m += f.pixels[i * 3 + c];
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) s += (f.pixels[i * 3 + c] - m) * (f.pixels[i * 3 + c] - m);
    s = std::sqrt(s / static_cast<double>(n));
    const double inv = s > 1e-12 ? 1.0 / s : 1.0;
    for (std::size_t i = 0; i < n; ++i) f.pixels[i * 3 + c] = (f.pixels[i * 3 + c] - m) * inv;
  }
}

// One view: resized crop, flip, brightness/contrast jitter, grayscale, blur,
// per-channel normalization.
inline Frame augment_view(const Frame& frame, const AugmentConfig& a, Rng& rng) {
  Frame v = detail::random_resized_crop(frame, a, rng);
  const std::size_t n = a.crop_size;
  if (rng.bernoulli(a.flip_p))
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n / 2; ++x)
        for (std::size_t c = 0; c < 3; ++c) std::swap(v.at(y, x, c), v.at(y, n - 1 - x, c));

  const double bright = rng.uniform(1 - a.brightness, 1 + a.brightness);
  const double contrast = rng.uniform(1 - a.contrast, 1 + a.contrast);
  double gray_mean = 0;
  for (std::size_t i = 0; i < n * n; ++i)
    gray_mean += 0.299 * v.pixels[i * 3] + 0.587 * v.pixels[i * 3 + 1] + 0.114 * v.pixels[i * 3 + 2];
  gray_mean *= bright / static_cast<double>(n * n);
  for (double& p : v.pixels) p = std::clamp(gray_mean + contrast * (bright * p - gray_mean), 0.0, 1.0);

  if (rng.bernoulli(a.gray_p))
    for (std::size_t i = 0; i < n * n; ++i) {
      const double g = 0.299 * v.pixels[i * 3] + 0.587 * v.pixels[i * 3 + 1] + 0.114 * v.pixels[i * 3 + 2];
      v.pixels[i * 3] = v.pixels[i * 3 + 1] = v.pixels[i * 3 + 2] = g;
    }

  detail::gaussian_blur(v, rng.uniform(a.blur_sigma_min, a.blur_sigma_max));
  normalize_channels(v);
  return v;
}

inline std::pair<Frame, Frame> augment_pair(const Frame& frame, const AugmentConfig& a, Rng& rng) {
  a.validate();
  validate_frame(frame);
  if (frame.height < a.crop_size || frame.width < a.crop_size)
    throw std::invalid_argument("augment_pair: frame smaller than the crop size");
  Frame first = augment_view(frame, a, rng);
  Frame second = augment_view(frame, a, rng);
  return {std::move(first), std::move(second)};
}

struct NtXentResult {
  double loss = 0.0;
  Matrix gradient;  // d loss / d embeddings, same shape as the input
};

// Rows (2i, 2i+1) are positive pairs. Rows are L2-normalized internally;
// the loss is the mean over all 2N anchors.
inline NtXentResult nt_xent_loss(const Matrix& embeddings, double temperature) {
  const std::size_t M = embeddings.rows(), K = embeddings.cols();
  if (M < 2 || M % 2 != 0) throw std::invalid_argument("nt_xent_loss: need an even number (>= 2) of rows");
  if (K < 1) throw std::invalid_argument("nt_xent_loss: empty embeddings");
  if (!(temperature > 0)) throw std::invalid_argument("nt_xent_loss: temperature must be positive");

  Matrix z(M, K);
  std::vector<double> norm(M);
  for (std::size_t a = 0; a < M; ++a) {
    double s = 0;
    for (double v : embeddings.row(a)) s += v * v;
    norm[a] = std::sqrt(s);
    if (!(norm[a] > 0) || !std::isfinite(norm[a])) throw numeric_error("nt_xent_loss: zero-norm or non-finite row");
    for (std::size_t k = 0; k < K; ++k) z(a, k) = embeddings(a, k) / norm[a];
  }
  Matrix sim(M, M);
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a; b < M; ++b) {
      double s = 0;
      for (std::size_t k = 0; k < K; ++k) s += z(a, k) * z(b, k);
      sim(a, b) = sim(b, a) = s;
    }

  // G(a, b) = d loss / d sim(a, b) through anchor a's term.
  Matrix G(M, M);
  double loss = 0;
  const double scale = 1.0 / static_cast<double>(M);
  for (std::size_t a = 0; a < M; ++a) {
    const std::size_t pos = a ^ 1U;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < M; ++b)
      if (b != a) mx = std::max(mx, sim(a, b) / temperature);
    double denom = 0;
    for (std::size_t b = 0; b < M; ++b)
      if (b != a) denom += std::exp(sim(a, b) / temperature - mx);
    loss += -(sim(a, pos) / temperature) + mx + std::log(denom);
    for (std::size_t b = 0; b < M; ++b) {
      if (b == a) continue;
      const double p = std::exp(sim(a, b) / temperature - mx) / denom;
      G(a, b) = scale * (p - (b == pos ? 1.0 : 0.0)) / temperature;
    }
  }

  NtXentResult out{loss * scale, Matrix(M, K)};
  for (std::size_t a = 0; a < M; ++a) {
    std::vector<double> dz(K, 0.0);
    for (std::size_t b = 0; b < M; ++b) {
      const double g = G(a, b) + G(b, a);
      if (g == 0) continue;
      for (std::size_t k = 0; k < K; ++k) dz[k] += g * z(b, k);
    }
    double proj = 0;
    for (std::size_t k = 0; k < K; ++k) proj += z(a, k) * dz[k];
    for (std::size_t k = 0; k < K; ++k) out.gradient(a, k) = (dz[k] - z(a, k) * proj) / norm[a];
  }
  return out;
}

struct BackboneConfig {
  std::size_t feature_dim = 32;      // D
  std::size_t projection_dim = 128;  // K
  double temperature = 0.5;
  std::size_t batch_size = 16;
  std::size_t epochs = 200;
  std::size_t patience = 10;
  double min_delta = 0.0;
  double learning_rate = 1e-3;
  std::size_t conv1_channels = 8;
  std::size_t conv2_channels = 16;
  double validation_fraction = 0.1;
  AugmentConfig augment;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (feature_dim < 1) throw std::invalid_argument("BackboneConfig: feature_dim must be >= 1");
    if (projection_dim < 2) throw std::invalid_argument("BackboneConfig: projection_dim must be >= 2");
    if (!(temperature > 0)) throw std::invalid_argument("BackboneConfig: temperature must be positive");
    if (batch_size < 2) throw std::invalid_argument("BackboneConfig: batch_size must be >= 2");
    if (patience < 1) throw std::invalid_argument("BackboneConfig: patience must be >= 1");
    if (!(learning_rate > 0)) throw std::invalid_argument("BackboneConfig: learning_rate must be positive");
    if (conv1_channels < 1 || conv2_channels < 1) throw std::invalid_argument("BackboneConfig: channel counts must be >= 1");
    if (!(validation_fraction > 0 && validation_fraction < 1))
      throw std::invalid_argument("BackboneConfig: validation_fraction must be in (0, 1)");
    augment.validate();
  }
};

// Three 3x3 conv layers (stride 2, 2, 1; padding 1; ReLU) and global average
// pooling give f_b in R^D; the projection head is D -> D -> K with a ReLU.
inline ParameterLayout backbone_layout(const BackboneConfig& c) {
  ParameterLayout l;
  l.add("conv1.w", {c.conv1_channels, 3, 3, 3});
  l.add("conv1.b", {c.conv1_channels});
  l.add("conv2.w", {c.conv2_channels, 3, 3, c.conv1_channels});
  l.add("conv2.b", {c.conv2_channels});
  l.add("conv3.w", {c.feature_dim, 3, 3, c.conv2_channels});
  l.add("conv3.b", {c.feature_dim});
  return l;
}

inline ParameterLayout contrastive_layout(const BackboneConfig& c) {
  ParameterLayout l = backbone_layout(c);
  l.add("proj1.w", {c.feature_dim, c.feature_dim});
  l.add("proj1.b", {c.feature_dim});
  l.add("proj2.w", {c.projection_dim, c.feature_dim});
  l.add("proj2.b", {c.projection_dim});
  return l;
}

namespace detail {

// Activation volume, H x W x C row-major.
struct Volume {
  std::size_t h = 0, w = 0, c = 0;
  std::vector<double> v;
  Volume() = default;
  Volume(std::size_t H, std::size_t W, std::size_t C) : h(H), w(W), c(C), v(H * W * C, 0.0) {}
  double& at(std::size_t y, std::size_t x, std::size_t k) noexcept { return v[(y * w + x) * c + k]; }
  [[nodiscard]] double at(std::size_t y, std::size_t x, std::size_t k) const noexcept { return v[(y * w + x) * c + k]; }
};

inline Volume to_volume(const Frame& f) {
  Volume out(f.height, f.width, 3);
  out.v = f.pixels;
  return out;
}

// 3x3 conv with padding 1; weights [out][ky][kx][in].
inline Volume conv3x3(const Volume& in, std::span<const double> w, std::span<const double> b, std::size_t out_c,
                      std::size_t stride) {
  Volume out((in.h - 1) / stride + 1, (in.w - 1) / stride + 1, out_c);
  for (std::size_t y = 0; y < out.h; ++y)
    for (std::size_t x = 0; x < out.w; ++x)
      for (std::size_t o = 0; o < out_c; ++o) {
        double s = b[o];
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(y * stride + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(x * stride + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) continue;
            const double* wp = &w[((o * 3 + ky) * 3 + kx) * in.c];
            const double* ip = &in.v[(static_cast<std::size_t>(iy) * in.w + static_cast<std::size_t>(ix)) * in.c];
            for (std::size_t i = 0; i < in.c; ++i) s += wp[i] * ip[i];
          }
        }
        out.at(y, x, o) = s;
      }
  return out;
}

// Accumulates weight/bias gradients and returns the input gradient.
inline Volume conv3x3_backward(const Volume& in, const Volume& dout, std::span<const double> w, std::span<double> dw,
                               std::span<double> db, std::size_t stride) {
  Volume din(in.h, in.w, in.c);
  for (std::size_t y = 0; y < dout.h; ++y)
    for (std::size_t x = 0; x < dout.w; ++x)
      for (std::size_t o = 0; o < dout.c; ++o) {
        const double g = dout.at(y, x, o);
        if (g == 0) continue;
        db[o] += g;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          const auto iy = static_cast<std::ptrdiff_t>(y * stride + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) continue;
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const auto ix = static_cast<std::ptrdiff_t>(x * stride + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) continue;
            const std::size_t wo = ((o * 3 + ky) * 3 + kx) * in.c;
            const std::size_t io = (static_cast<std::size_t>(iy) * in.w + static_cast<std::size_t>(ix)) * in.c;
            for (std::size_t i = 0; i < in.c; ++i) {
              dw[wo + i] += g * in.v[io + i];
              din.v[io + i] += g * w[wo + i];
            }
          }
        }
      }
  return din;
}

inline void relu_inplace(Volume& v) {
  for (double& x : v.v) x = std::max(0.0, x);
}

struct EncoderCache {
  Volume x0, a1, a2, a3;  // input and post-ReLU activations
  std::vector<double> feature, hidden, projection;
};

inline constexpr std::size_t kStride[3] = {2, 2, 1};

}  // namespace detail

class ContrastiveNet {
 public:
  explicit ContrastiveNet(const BackboneConfig& c) : cfg_(c), layout_(contrastive_layout(c)) { c.validate(); }

  [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }

  // Backbone features; `params` may hold only the backbone blocks.
  [[nodiscard]] std::vector<double> features(std::span<const double> params, const Frame& f,
                                             detail::EncoderCache* cache = nullptr) const {
    using detail::kStride;
    auto x0 = detail::to_volume(f);
    auto a1 = detail::conv3x3(x0, view(params, "conv1.w"), view(params, "conv1.b"), cfg_.conv1_channels, kStride[0]);
    detail::relu_inplace(a1);
    auto a2 = detail::conv3x3(a1, view(params, "conv2.w"), view(params, "conv2.b"), cfg_.conv2_channels, kStride[1]);
    detail::relu_inplace(a2);
    auto a3 = detail::conv3x3(a2, view(params, "conv3.w"), view(params, "conv3.b"), cfg_.feature_dim, kStride[2]);
    detail::relu_inplace(a3);
    std::vector<double> feat(cfg_.feature_dim, 0.0);
    const double inv = 1.0 / static_cast<double>(a3.h * a3.w);
    for (std::size_t p = 0; p < a3.h * a3.w; ++p)
      for (std::size_t k = 0; k < a3.c; ++k) feat[k] += a3.v[p * a3.c + k] * inv;
    if (cache) {
      cache->x0 = std::move(x0);
      cache->a1 = std::move(a1);
      cache->a2 = std::move(a2);
      cache->a3 = std::move(a3);
      cache->feature = feat;
    }
    return feat;
  }

  [[nodiscard]] std::vector<double> project(std::span<const double> params, const Frame& f,
                                            detail::EncoderCache* cache = nullptr) const {
    const auto feat = features(params, f, cache);
    const auto w1 = view(params, "proj1.w"), b1 = view(params, "proj1.b");
    const auto w2 = view(params, "proj2.w"), b2 = view(params, "proj2.b");
    const std::size_t D = cfg_.feature_dim, K = cfg_.projection_dim;
    std::vector<double> h(D), z(K);
    for (std::size_t i = 0; i < D; ++i) {
      double s = b1[i];
      for (std::size_t j = 0; j < D; ++j) s += w1[i * D + j] * feat[j];
      h[i] = std::max(0.0, s);
    }
    for (std::size_t i = 0; i < K; ++i) {
      double s = b2[i];
      for (std::size_t j = 0; j < D; ++j) s += w2[i * D + j] * h[j];
      z[i] = s;
    }
    if (cache) {
      cache->hidden = h;
      cache->projection = z;
    }
    return z;
  }

  // Adds d loss / d params for one view given d loss / d projection.
  void backward(std::span<const double> params, const detail::EncoderCache& c, std::span<const double> dz,
                std::span<double> grad) const {
    using detail::kStride;
    const std::size_t D = cfg_.feature_dim, K = cfg_.projection_dim;
    const auto w1 = view(params, "proj1.w"), w2 = view(params, "proj2.w");
    auto gw1 = view(grad, "proj1.w"), gb1 = view(grad, "proj1.b");
    auto gw2 = view(grad, "proj2.w"), gb2 = view(grad, "proj2.b");
    std::vector<double> dh(D, 0.0), df(D, 0.0);
    for (std::size_t i = 0; i < K; ++i) {
      gb2[i] += dz[i];
      for (std::size_t j = 0; j < D; ++j) {
        gw2[i * D + j] += dz[i] * c.hidden[j];
        dh[j] += dz[i] * w2[i * D + j];
      }
    }
    for (std::size_t i = 0; i < D; ++i) {
      if (c.hidden[i] <= 0) continue;
      gb1[i] += dh[i];
      for (std::size_t j = 0; j < D; ++j) {
        gw1[i * D + j] += dh[i] * c.feature[j];
        df[j] += dh[i] * w1[i * D + j];
      }
    }
    detail::Volume d3(c.a3.h, c.a3.w, c.a3.c);
    const double inv = 1.0 / static_cast<double>(c.a3.h * c.a3.w);
    for (std::size_t p = 0; p < c.a3.h * c.a3.w; ++p)
      for (std::size_t k = 0; k < c.a3.c; ++k)
        d3.v[p * c.a3.c + k] = c.a3.v[p * c.a3.c + k] > 0 ? df[k] * inv : 0.0;
    auto d2 = detail::conv3x3_backward(c.a2, d3, view(params, "conv3.w"), view(grad, "conv3.w"), view(grad, "conv3.b"), kStride[2]);
    for (std::size_t i = 0; i < d2.v.size(); ++i)
      if (c.a2.v[i] <= 0) d2.v[i] = 0;
    auto d1 = detail::conv3x3_backward(c.a1, d2, view(params, "conv2.w"), view(grad, "conv2.w"), view(grad, "conv2.b"), kStride[1]);
    for (std::size_t i = 0; i < d1.v.size(); ++i)
      if (c.a1.v[i] <= 0) d1.v[i] = 0;
    detail::conv3x3_backward(c.x0, d1, view(params, "conv1.w"), view(grad, "conv1.w"), view(grad, "conv1.b"), kStride[0]);
  }

  // NT-Xent over the given views (pairs at 2i, 2i+1); adds the gradient.
  double batch_loss(std::span<const double> params, const std::vector<Frame>& views, std::span<double> grad) const {
    std::vector<detail::EncoderCache> caches(views.size());
    Matrix z(views.size(), cfg_.projection_dim);
    for (std::size_t i = 0; i < views.size(); ++i) {
      const auto p = project(params, views[i], &caches[i]);
      std::copy(p.begin(), p.end(), z.row(i).begin());
    }
    const auto res = nt_xent_loss(z, cfg_.temperature);
    if (!grad.empty())
      for (std::size_t i = 0; i < views.size(); ++i) backward(params, caches[i], res.gradient.row(i), grad);
    return res.loss;
  }

 private:
  template <typename T>
  std::span<T> view(std::span<T> p, std::string_view name) const {
    return layout_.view(p, name);
  }

  BackboneConfig cfg_;
  ParameterLayout layout_;
};

inline std::vector<double> init_contrastive_parameters(const BackboneConfig& c, Rng& rng) {
  const auto layout = contrastive_layout(c);
  std::vector<double> p(layout.total(), 0.0);
  for (const auto& b : layout.blocks()) {
    if (b.shape.size() < 2) continue;  // biases start at zero
    const std::size_t fan_in = b.size() / b.shape[0];
    const double lim = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < b.size(); ++i) p[b.offset + i] = rng.uniform(-lim, lim);
  }
  return p;
}

struct Backbone {
  BackboneConfig config;
  std::vector<double> parameters;     // backbone blocks only; the projection head is dropped
  std::vector<double> train_history;  // mean training loss per epoch
  std::vector<double> val_history;    // held-out loss per epoch
  double initial_val_loss = 0.0;
  std::size_t best_epoch = 0;
};

namespace detail {

inline std::vector<Frame> make_views(std::span<const Frame> frames, const std::vector<std::size_t>& idx,
                                     const AugmentConfig& a, Rng& rng) {
  std::vector<Frame> views;
  views.reserve(2 * idx.size());
  for (std::size_t i : idx) {
    auto [v1, v2] = augment_pair(frames[i], a, rng);
    views.push_back(std::move(v1));
    views.push_back(std::move(v2));
  }
  return views;
}

}  // namespace detail

// Frames are split 90/10 (shuffled); the held-out views are drawn once with a
// fixed seed so epochs are compared on the same validation batch.
inline Backbone train_contrastive(std::span<const Frame> frames, const BackboneConfig& cfg) {
  cfg.validate();
  if (frames.size() < std::max<std::size_t>(cfg.batch_size, 4))
    throw std::invalid_argument("train_contrastive: need at least batch_size (and 4) frames");
  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  const auto n_val = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(frames.size()))));
  if (frames.size() - n_val < 2) throw std::invalid_argument("train_contrastive: too few training frames");
  const std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  Rng val_rng(derive_seed(cfg.rng_seed, 0x7A1));
  const auto val_views = detail::make_views(frames, val, cfg.augment, val_rng);

  const ContrastiveNet net(cfg);
  auto params = init_contrastive_parameters(cfg, rng);
  auto best = params;
  Backbone out;
  out.config = cfg;
  out.initial_val_loss = net.batch_loss(params, val_views, {});
  std::vector<double> grad(params.size());
  Adam adam(params.size(), cfg.learning_rate);
  EarlyStopping stopper(cfg.patience, cfg.min_delta);
  const std::size_t B = std::min(cfg.batch_size, train.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train.begin(), train.end());
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start + 2 <= train.size(); start += B) {
      const std::vector<std::size_t> idx(train.begin() + static_cast<std::ptrdiff_t>(start),
                                         train.begin() + static_cast<std::ptrdiff_t>(std::min(train.size(), start + B)));
      const auto views = detail::make_views(frames, idx, cfg.augment, rng);
      std::fill(grad.begin(), grad.end(), 0.0);
      total += net.batch_loss(params, views, grad);
      ++batches;
      adam.step(params, grad);
    }
    out.train_history.push_back(total / static_cast<double>(batches));
    const double v = net.batch_loss(params, val_views, {});
    out.val_history.push_back(v);
    if (!std::isfinite(v)) break;
    if (stopper.update(v, epoch)) best = params;
    if (stopper.should_stop()) break;
  }
  out.best_epoch = stopper.best_epoch();
  best.resize(backbone_layout(cfg).total());
  out.parameters = std::move(best);
  return out;
}

// Row j is f_b(frame j) after per-channel normalization; no augmentation.
inline Matrix extract_features(const Backbone& bb, std::span<const Frame> frames) {
  if (bb.parameters.size() != backbone_layout(bb.config).total())
    throw std::invalid_argument("extract_features: parameter count does not match the backbone");
  const ContrastiveNet net(bb.config);
  Matrix out(frames.size(), bb.config.feature_dim);
  for (std::size_t j = 0; j < frames.size(); ++j) {
    validate_frame(frames[j]);
    Frame f = frames[j];
    normalize_channels(f);
    const auto feat = net.features(bb.parameters, f);
    std::copy(feat.begin(), feat.end(), out.row(j).begin());
  }
  return out;
}

}  // namespace skillfuse
