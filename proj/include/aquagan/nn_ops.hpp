#pragma once

#include <vector>

#include "aquagan/tensor.hpp"

// Differentiable building blocks. Forward functions are pure; backward
// functions overwrite input gradients and accumulate parameter gradients.
// Instantiated for float (training) and double (gradient checks).
namespace aquagan::ops {

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;
};

int conv_output_size(int in, const ConvGeometry& g);
int conv_transpose_output_size(int in, const ConvGeometry& g);

// weight: Cout x Cin x k x k; bias: 1 x Cout x 1 x 1 or null.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>* bias, const ConvGeometry& g);

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                     const BasicTensor<T>& grad_out, const ConvGeometry& g,
                     BasicTensor<T>* grad_x, BasicTensor<T>& grad_weight,
                     BasicTensor<T>* grad_bias);

// weight: Cin x Cout x k x k (adjoint of conv2d with the same geometry).
template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                                const BasicTensor<T>* bias, const ConvGeometry& g);

template <typename T>
void conv_transpose2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out, const ConvGeometry& g,
                               BasicTensor<T>* grad_x, BasicTensor<T>& grad_weight,
                               BasicTensor<T>* grad_bias);

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormCache {
  BasicTensor<T> normalized;  // x-hat
  std::vector<T> inv_std;
};

// Training mode: batch statistics; running statistics are updated in place
// (unbiased variance, momentum 0.1).
template <typename T>
BasicTensor<T> batch_norm_train(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                                const BasicTensor<T>& beta, BasicTensor<T>* running_mean,
                                BasicTensor<T>* running_var, BatchNormCache<T>& cache);

template <typename T>
BasicTensor<T> batch_norm_eval(const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                               const BasicTensor<T>& beta, const BasicTensor<T>& running_mean,
                               const BasicTensor<T>& running_var, BatchNormCache<T>* cache);

template <typename T>
void batch_norm_train_backward(const BasicTensor<T>& gamma, const BatchNormCache<T>& cache,
                               const BasicTensor<T>& grad_out, BasicTensor<T>& grad_x,
                               BasicTensor<T>* grad_gamma, BasicTensor<T>* grad_beta);

template <typename T>
void batch_norm_eval_backward(const BasicTensor<T>& gamma, const BatchNormCache<T>& cache,
                              const BasicTensor<T>& grad_out, BasicTensor<T>& grad_x,
                              BasicTensor<T>* grad_gamma, BasicTensor<T>* grad_beta);

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, T slope);
// Uses the forward output; sign(y) == sign(x) for positive slopes.
template <typename T>
BasicTensor<T> leaky_relu_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out,
                                   T slope);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> sigmoid_backward(const BasicTensor<T>& y, const BasicTensor<T>& grad_out);

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T>
void split_channels(const BasicTensor<T>& grad, int channels_a, BasicTensor<T>& grad_a,
                    BasicTensor<T>& grad_b);

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_avg_pool_backward(const Shape& input_shape, const BasicTensor<T>& grad_out);

template <typename T>
void add_inplace(BasicTensor<T>& dst, const BasicTensor<T>& src);

}  // namespace aquagan::ops
