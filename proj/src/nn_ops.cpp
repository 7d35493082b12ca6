#include "aquagan/nn_ops.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace aquagan::ops {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

// Column buffer layout: row = (c, ky, kx), column = output pixel (oy, ox).
template <typename T>
void im2col(const T* img, int channels, int height, int width, const ConvGeometry& g,
            int out_h, int out_w, T* col) {
  const int k = g.kernel;
  const std::size_t cols = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    const T* plane = img + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + static_cast<std::size_t>(oy) * out_w;
          if (iy < 0 || iy >= height) {
            std::fill(dst, dst + out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into the (zeroed) image.
template <typename T>
void col2im(const T* col, int channels, int height, int width, const ConvGeometry& g,
            int out_h, int out_w, T* img) {
  const int k = g.kernel;
  const std::size_t cols = static_cast<std::size_t>(out_h) * out_w;
  std::fill(img, img + static_cast<std::size_t>(channels) * height * width, T(0));
  for (int c = 0; c < channels; ++c) {
    T* plane = img + static_cast<std::size_t>(c) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* row = col + (static_cast<std::size_t>(c) * k * k + ky * k + kx) * cols;
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= height) continue;
          const T* src = row + static_cast<std::size_t>(oy) * out_w;
          T* dst = plane + static_cast<std::size_t>(iy) * width;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void check_weight(const BasicTensor<T>& weight, int in_channels, bool transposed,
                  const ConvGeometry& g) {
  const Shape& w = weight.shape();
  const int wc_in = transposed ? w.n : w.c;
  if (wc_in != in_channels || w.h != g.kernel || w.w != g.kernel) {
    throw DimensionError("convolution weight " + to_string(w) + " does not fit " +
                         std::to_string(in_channels) + " input channels");
  }
}

template <typename T>
void add_bias(BasicTensor<T>& y, const BasicTensor<T>* bias) {
  if (!bias) return;
  const Shape& s = y.shape();
  if (static_cast<int>(bias->numel()) != s.c) throw DimensionError("bias size mismatch");
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      T* p = y.sample(n) + c * s.plane();
      const T b = (*bias)[c];
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += b;
    }
}

template <typename T>
void accumulate_bias_grad(const BasicTensor<T>& grad_out, BasicTensor<T>* grad_bias) {
  if (!grad_bias) return;
  const Shape& s = grad_out.shape();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* p = grad_out.sample(n) + c * s.plane();
      T acc = 0;
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
      (*grad_bias)[c] += acc;
    }
}

}  // namespace

int conv_output_size(int in, const ConvGeometry& g) {
  return (in + 2 * g.pad - g.kernel) / g.stride + 1;
}

int conv_transpose_output_size(int in, const ConvGeometry& g) {
  return (in - 1) * g.stride - 2 * g.pad + g.kernel;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>* bias, const ConvGeometry& g) {
  const Shape& s = x.shape();
  check_weight(weight, s.c, false, g);
  const int cout = weight.shape().n;
  const int oh = conv_output_size(s.h, g);
  const int ow = conv_output_size(s.w, g);
  if (oh < 1 || ow < 1) throw DimensionError("convolution input too small: " + to_string(s));
  const int kdim = s.c * g.kernel * g.kernel;
  const int pix = oh * ow;

  BasicTensor<T> y({s.n, cout, oh, ow});
  std::vector<T> col(static_cast<std::size_t>(kdim) * pix);
  CMapR<T> w(weight.data(), cout, kdim);
  for (int n = 0; n < s.n; ++n) {
    im2col(x.sample(n), s.c, s.h, s.w, g, oh, ow, col.data());
    MapR<T> out(y.sample(n), cout, pix);
    out.noalias() = w * CMapR<T>(col.data(), kdim, pix);
  }
  add_bias(y, bias);
  return y;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_out, const ConvGeometry& g,
                     BasicTensor<T>* grad_x, BasicTensor<T>& grad_weight,
                     BasicTensor<T>* grad_bias) {
  const Shape& s = x.shape();
  const int cout = weight.shape().n;
  const int oh = grad_out.shape().h;
  const int ow = grad_out.shape().w;
  const int kdim = s.c * g.kernel * g.kernel;
  const int pix = oh * ow;

  std::vector<T> col(static_cast<std::size_t>(kdim) * pix);
  CMapR<T> w(weight.data(), cout, kdim);
  MapR<T> gw(grad_weight.data(), cout, kdim);
  if (grad_x) *grad_x = BasicTensor<T>(s);
  for (int n = 0; n < s.n; ++n) {
    CMapR<T> gy(grad_out.sample(n), cout, pix);
    im2col(x.sample(n), s.c, s.h, s.w, g, oh, ow, col.data());
    gw.noalias() += gy * CMapR<T>(col.data(), kdim, pix).transpose();
    if (grad_x) {
      MapR<T>(col.data(), kdim, pix).noalias() = w.transpose() * gy;
      col2im(col.data(), s.c, s.h, s.w, g, oh, ow, grad_x->sample(n));
    }
  }
  accumulate_bias_grad(grad_out, grad_bias);
}

template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                const BasicTensor<T>* bias, const ConvGeometry& g) {
  const Shape& s = x.shape();
  check_weight(weight, s.c, true, g);
  const int cout = weight.shape().c;
  const int oh = conv_transpose_output_size(s.h, g);
  const int ow = conv_transpose_output_size(s.w, g);
  const int kdim = cout * g.kernel * g.kernel;
  const int pix = s.h * s.w;

  BasicTensor<T> y({s.n, cout, oh, ow});
  std::vector<T> col(static_cast<std::size_t>(kdim) * pix);
  CMapR<T> w(weight.data(), s.c, kdim);
  for (int n = 0; n < s.n; ++n) {
    MapR<T>(col.data(), kdim, pix).noalias() = w.transpose() * CMapR<T>(x.sample(n), s.c, pix);
    col2im(col.data(), cout, oh, ow, g, s.h, s.w, y.sample(n));
  }
  add_bias(y, bias);
  return y;
}

template <typename T>
void conv_transpose2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out, const ConvGeometry& g,
                               BasicTensor<T>* grad_x, BasicTensor<T>& grad_weight,
                               BasicTensor<T>* grad_bias) {
  const Shape& s = x.shape();
  const Shape& so = grad_out.shape();
  const int cout = weight.shape().c;
  const int kdim = cout * g.kernel * g.kernel;
  const int pix = s.h * s.w;

  std::vector<T> col(static_cast<std::size_t>(kdim) * pix);
  CMapR<T> w(weight.data(), s.c, kdim);
  MapR<T> gw(grad_weight.data(), s.c, kdim);
  if (grad_x) *grad_x = BasicTensor<T>(s);
  for (int n = 0; n < s.n; ++n) {
    im2col(grad_out.sample(n), cout, so.h, so.w, g, s.h, s.w, col.data());
    CMapR<T> gcol(col.data(), kdim, pix);
    gw.noalias() += CMapR<T>(x.sample(n), s.c, pix) * gcol.transpose();
    if (grad_x) MapR<T>(grad_x->sample(n), s.c, pix).noalias() = w * gcol;
  }
  accumulate_bias_grad(grad_out, grad_bias);
}

template <typename T>
BasicTensor<T> batch_norm_train(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                const BasicTensor<T>& beta, BasicTensor<T>* running_mean,
                                BasicTensor<T>* running_var, BatchNormCache<T>& cache) {
  const Shape& s = x.shape();
  const std::size_t m = static_cast<std::size_t>(s.n) * s.plane();
  BasicTensor<T> y(s);
  cache.normalized = BasicTensor<T>(s);
  cache.inv_std.assign(s.c, T(0));
  for (int c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(m);
    double sq = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    const double var = sq / static_cast<double>(m);
    const double inv_std = 1.0 / std::sqrt(var + kBatchNormEps);
    cache.inv_std[c] = static_cast<T>(inv_std);
    const T gm = gamma[c];
    const T bt = beta[c];
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * s.plane();
      T* xh = cache.normalized.sample(n) + c * s.plane();
      T* q = y.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) {
        xh[i] = static_cast<T>((p[i] - mean) * inv_std);
        q[i] = gm * xh[i] + bt;
      }
    }
    if (running_mean && running_var) {
      const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
      (*running_mean)[c] = static_cast<T>((1.0 - kBatchNormMomentum) * (*running_mean)[c] +
                                          kBatchNormMomentum * mean);
      (*running_var)[c] = static_cast<T>((1.0 - kBatchNormMomentum) * (*running_var)[c] +
                                         kBatchNormMomentum * unbiased);
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> batch_norm_eval(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                               const BasicTensor<T>& beta, const BasicTensor<T>& running_mean,
                               const BasicTensor<T>& running_var, BatchNormCache<T>* cache) {
  const Shape& s = x.shape();
  BasicTensor<T> y(s);
  if (cache) {
    cache->normalized = BasicTensor<T>(s);
    cache->inv_std.assign(s.c, T(0));
  }
  for (int c = 0; c < s.c; ++c) {
    const T mean = running_mean[c];
    const T inv_std = static_cast<T>(1.0 / std::sqrt(running_var[c] + kBatchNormEps));
    if (cache) cache->inv_std[c] = inv_std;
    for (int n = 0; n < s.n; ++n) {
      const T* p = x.sample(n) + c * s.plane();
      T* q = y.sample(n) + c * s.plane();
      T* xh = cache ? cache->normalized.sample(n) + c * s.plane() : nullptr;
      for (std::size_t i = 0; i < s.plane(); ++i) {
        const T v = (p[i] - mean) * inv_std;
        if (xh) xh[i] = v;
        q[i] = gamma[c] * v + beta[c];
      }
    }
  }
  return y;
}

template <typename T>
void batch_norm_train_backward(const BasicTensor<T>& gamma, const BatchNormCache<T>& cache,
                               const BasicTensor<T>& grad_out, BasicTensor<T>& grad_x,
                               BasicTensor<T>* grad_gamma, BasicTensor<T>* grad_beta) {
  const Shape& s = grad_out.shape();
  const double m = static_cast<double>(s.n) * static_cast<double>(s.plane());
  grad_x = BasicTensor<T>(s);
  for (int c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* g = grad_out.sample(n) + c * s.plane();
      const T* xh = cache.normalized.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) {
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
    }
    if (grad_gamma) (*grad_gamma)[c] += static_cast<T>(sum_gx);
    if (grad_beta) (*grad_beta)[c] += static_cast<T>(sum_g);
    const double scale = static_cast<double>(gamma[c]) * cache.inv_std[c];
    const double mean_g = sum_g / m;
    const double mean_gx = sum_gx / m;
    for (int n = 0; n < s.n; ++n) {
      const T* g = grad_out.sample(n) + c * s.plane();
      const T* xh = cache.normalized.sample(n) + c * s.plane();
      T* gx = grad_x.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gx[i] = static_cast<T>(scale * (g[i] - mean_g - xh[i] * mean_gx));
      }
    }
  }
}

template <typename T>
void batch_norm_eval_backward(const BasicTensor<T>& gamma, const BatchNormCache<T>& cache,
                              const BasicTensor<T>& grad_out, BasicTensor<T>& grad_x,
                              BasicTensor<T>* grad_gamma, BasicTensor<T>* grad_beta) {
  const Shape& s = grad_out.shape();
  grad_x = BasicTensor<T>(s);
  for (int c = 0; c < s.c; ++c) {
    const T scale = gamma[c] * cache.inv_std[c];
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const T* g = grad_out.sample(n) + c * s.plane();
      const T* xh = cache.normalized.sample(n) + c * s.plane();
      T* gx = grad_x.sample(n) + c * s.plane();
      for (std::size_t i = 0; i < s.plane(); ++i) {
        gx[i] = g[i] * scale;
        sum_g += g[i];
        sum_gx += static_cast<double>(g[i]) * xh[i];
      }
    }
    if (grad_gamma) (*grad_gamma)[c] += static_cast<T>(sum_gx);
    if (grad_beta) (*grad_beta)[c] += static_cast<T>(sum_g);
  }
}

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, T slope) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return y;
}

template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out,
                                   T slope) {
  BasicTensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) g[i] = y[i] > T(0) ? grad_out[i] : slope * grad_out[i];
  return g;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const T v = x[i];
    // Split on sign so exp never overflows.
    if (v >= T(0)) {
      y[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y[i] = e / (T(1) + e);
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out) {
  BasicTensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.numel(); ++i) g[i] = grad_out[i] * y[i] * (T(1) - y[i]);
  return g;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw DimensionError("concat: " + to_string(sa) + " vs " + to_string(sb));
  }
  BasicTensor<T> y({sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    std::copy(a.sample(n), a.sample(n) + sa.sample(), y.sample(n));
    std::copy(b.sample(n), b.sample(n) + sb.sample(), y.sample(n) + sa.sample());
  }
  return y;
}

template <typename T>
void split_channels(const BasicTensor<T>& grad, int channels_a, BasicTensor<T>& grad_a,
                    BasicTensor<T>& grad_b) {
  const Shape& s = grad.shape();
  const Shape sa{s.n, channels_a, s.h, s.w};
  const Shape sb{s.n, s.c - channels_a, s.h, s.w};
  grad_a = BasicTensor<T>(sa);
  grad_b = BasicTensor<T>(sb);
  for (int n = 0; n < s.n; ++n) {
    const T* src = grad.sample(n);
    std::copy(src, src + sa.sample(), grad_a.sample(n));
    std::copy(src + sa.sample(), src + s.sample(), grad_b.sample(n));
  }
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x) {
  const Shape& s = x.shape();
  BasicTensor<T> y({s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* p = x.sample(n) + c * s.plane();
      double acc = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
      y(n, c, 0, 0) = static_cast<T>(acc / static_cast<double>(s.plane()));
    }
  return y;
}

template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out) {
  BasicTensor<T> g(input_shape);
  const T inv = static_cast<T>(1.0 / static_cast<double>(input_shape.plane()));
  for (int n = 0; n < input_shape.n; ++n)
    for (int c = 0; c < input_shape.c; ++c) {
      T* p = g.sample(n) + c * input_shape.plane();
      std::fill(p, p + input_shape.plane(), grad_out(n, c, 0, 0) * inv);
    }
  return g;
}

template <typename T>
void add_inplace(BasicTensor<T>& dst, const BasicTensor<T>& src) {
  require_same_shape(dst, src, "add_inplace");
  for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

#define AQUAGAN_INSTANTIATE_OPS(T)                                                              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                  \
                                 const BasicTensor<T>*, const ConvGeometry&);                   \
  template void conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,                   \
                                const BasicTensor<T>&, const ConvGeometry&, BasicTensor<T>*,    \
                                BasicTensor<T>&, BasicTensor<T>*);                              \
  template BasicTensor<T> conv_transpose2d(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                           const BasicTensor<T>*, const ConvGeometry&);         \
  template void conv_transpose2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                          const BasicTensor<T>&, const ConvGeometry&,           \
                                          BasicTensor<T>*, BasicTensor<T>&, BasicTensor<T>*);   \
  template BasicTensor<T> batch_norm_train(const BasicTensor<T>&, const BasicTensor<T>&,        \
                                           const BasicTensor<T>&, BasicTensor<T>*,              \
                                           BasicTensor<T>*, BatchNormCache<T>&);                \
  template BasicTensor<T> batch_norm_eval(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                          const BasicTensor<T>&, const BasicTensor<T>&,         \
                                          const BasicTensor<T>&, BatchNormCache<T>*);           \
  template void batch_norm_train_backward(const BasicTensor<T>&, const BatchNormCache<T>&,      \
                                          const BasicTensor<T>&, BasicTensor<T>&,               \
                                          BasicTensor<T>*, BasicTensor<T>*);                    \
  template void batch_norm_eval_backward(const BasicTensor<T>&, const BatchNormCache<T>&,       \
                                         const BasicTensor<T>&, BasicTensor<T>&,                \
                                         BasicTensor<T>*, BasicTensor<T>*);                     \
  template BasicTensor<T> leaky_relu(const BasicTensor<T>&, T);                                 \
  template BasicTensor<T> leaky_relu_backward(const BasicTensor<T>&, const BasicTensor<T>&, T); \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                       \
  template BasicTensor<T> sigmoid_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);        \
  template void split_channels(const BasicTensor<T>&, int, BasicTensor<T>&, BasicTensor<T>&);   \
  template BasicTensor<T> global_avg_pool(const BasicTensor<T>&);                               \
  template BasicTensor<T> global_avg_pool_backward(const Shape&, const BasicTensor<T>&);        \
  template void add_inplace(BasicTensor<T>&, const BasicTensor<T>&);

AQUAGAN_INSTANTIATE_OPS(float)
AQUAGAN_INSTANTIATE_OPS(double)

#undef AQUAGAN_INSTANTIATE_OPS

}  // namespace aquagan::ops
