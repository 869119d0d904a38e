#pragma once

#include "hcnet/tensor.hpp"

namespace hcnet {

// c[i,j] = sum_k a[i,k] * b[k,j], float64 accumulation, row-major order.
Tensor matmul(const Tensor& a, const Tensor& b);

// a: M x K, b: K x P. d_a = d_c * b^T, d_b = a^T * d_c.
void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_c,
                     Tensor* d_a, Tensor* d_b);

Tensor transpose2d(const Tensor& a);

// exp(x - max) / sum along `axis`; each slice sums to 1.
Tensor softmax_axis(const Tensor& x, size_t axis);

// dx = y * (dy - sum(dy * y, axis)), y = softmax_axis(x, axis).
Tensor softmax_axis_backward(const Tensor& y, const Tensor& dy, size_t axis);

// x: Cin x H x W, kernel: Cout x Cin x k x k, odd k, "same" zero padding of
// dilation*(k-1)/2 per side. Cross-correlation with row-major tap order.
Tensor conv2d_dilated(const Tensor& x, const Tensor& kernel, int dilation);

void conv2d_dilated_backward(const Tensor& x, const Tensor& kernel,
                             int dilation, const Tensor& d_y, Tensor* d_x,
                             Tensor* d_kernel);

// Keeps rows/cols with even index. x: C x H x W -> C x ceil(H/2) x ceil(W/2).
Tensor subsample2x(const Tensor& x);
// Adjoint of subsample2x back onto a C x H x W grid.
Tensor subsample2x_backward(const Tensor& d_y, size_t h, size_t w);

// Bilinear resize with half-pixel centers (align-corners = false).
Tensor bilinear_resize(const Tensor& x, size_t out_h, size_t out_w);
Tensor bilinear_resize_backward(const Tensor& d_y, size_t in_h, size_t in_w);

}  // namespace hcnet
