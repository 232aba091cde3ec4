#pragma once

// Dense compute kernels. The main entry points are OpenMP-parallel over
// independent output elements, which keeps results bit-identical for any
// thread count (each output is accumulated by exactly one thread in a
// fixed order). The `reference` namespace holds deliberately naive serial
// implementations used as test oracles and as the baseline in the kernel
// benchmark.

#include <cmath>

#include "sissa/nn/tensor.hpp"

namespace sissa::nn::kernels {

// C(m,n) = A(m,k) * B(k,n)
template <typename R>
void matmul_nn(const R* a, const R* b, R* c, int64_t m, int64_t k,
               int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
        R* ci = c + i * n;
        for (int64_t j = 0; j < n; ++j) ci[j] = R(0);
        const R* ai = a + i * k;
        for (int64_t p = 0; p < k; ++p) {
            const R av = ai[p];
            const R* bp = b + p * n;
#pragma omp simd
            for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C(m,n) = A(m,k) * B(n,k)^T
template <typename R>
void matmul_nt(const R* a, const R* b, R* c, int64_t m, int64_t k,
               int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
        const R* ai = a + i * k;
        for (int64_t j = 0; j < n; ++j) {
            const R* bj = b + j * k;
            R acc = R(0);
#pragma omp simd reduction(+ : acc)
            for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            c[i * n + j] = acc;
        }
    }
}

// C(m,n) = A(k,m)^T * B(k,n)
template <typename R>
void matmul_tn(const R* a, const R* b, R* c, int64_t m, int64_t k,
               int64_t n) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < m; ++i) {
        R* ci = c + i * n;
        for (int64_t j = 0; j < n; ++j) ci[j] = R(0);
        for (int64_t p = 0; p < k; ++p) {
            const R av = a[p * m + i];
            const R* bp = b + p * n;
#pragma omp simd
            for (int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// y(B,OC,OH,OW) = conv2d(x(B,C,H,W), w(OC,C,KH,KW)) + bias, cross
// correlation semantics.
template <typename R>
void conv2d_forward(const R* x, const R* w, const R* bias, R* y, int64_t B,
                    int64_t C, int64_t H, int64_t W, int64_t OC, int64_t KH,
                    int64_t KW, int64_t stride, int64_t pad, int64_t OH,
                    int64_t OW) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t oc = 0; oc < OC; ++oc) {
            for (int64_t oh = 0; oh < OH; ++oh) {
                for (int64_t ow = 0; ow < OW; ++ow) {
                    R acc = bias ? bias[oc] : R(0);
                    for (int64_t c = 0; c < C; ++c) {
                        const R* xc = x + ((b * C + c) * H) * W;
                        const R* wc = w + ((oc * C + c) * KH) * KW;
                        for (int64_t i = 0; i < KH; ++i) {
                            const int64_t h = oh * stride - pad + i;
                            if (h < 0 || h >= H) continue;
                            for (int64_t j = 0; j < KW; ++j) {
                                const int64_t ww = ow * stride - pad + j;
                                if (ww < 0 || ww >= W) continue;
                                acc += xc[h * W + ww] * wc[i * KW + j];
                            }
                        }
                    }
                    y[((b * OC + oc) * OH + oh) * OW + ow] = acc;
                }
            }
        }
    }
}

template <typename R>
void conv2d_backward(const R* x, const R* w, const R* dy, R* dx, R* dw,
                     R* db, int64_t B, int64_t C, int64_t H, int64_t W,
                     int64_t OC, int64_t KH, int64_t KW, int64_t stride,
                     int64_t pad, int64_t OH, int64_t OW) {
    if (db) {
#pragma omp parallel for schedule(static)
        for (int64_t oc = 0; oc < OC; ++oc) {
            R acc = R(0);
            for (int64_t b = 0; b < B; ++b) {
                const R* dyp = dy + (b * OC + oc) * OH * OW;
                for (int64_t i = 0; i < OH * OW; ++i) acc += dyp[i];
            }
            db[oc] += acc;
        }
    }
    if (dw) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t oc = 0; oc < OC; ++oc) {
            for (int64_t c = 0; c < C; ++c) {
                for (int64_t i = 0; i < KH; ++i) {
                    for (int64_t j = 0; j < KW; ++j) {
                        R acc = R(0);
                        for (int64_t b = 0; b < B; ++b) {
                            const R* xc = x + (b * C + c) * H * W;
                            const R* dyp = dy + (b * OC + oc) * OH * OW;
                            for (int64_t oh = 0; oh < OH; ++oh) {
                                const int64_t h = oh * stride - pad + i;
                                if (h < 0 || h >= H) continue;
                                for (int64_t ow = 0; ow < OW; ++ow) {
                                    const int64_t ww = ow * stride - pad + j;
                                    if (ww < 0 || ww >= W) continue;
                                    acc += xc[h * W + ww] *
                                           dyp[oh * OW + ow];
                                }
                            }
                        }
                        dw[((oc * C + c) * KH + i) * KW + j] += acc;
                    }
                }
            }
        }
    }
    if (dx) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
                R* dxc = dx + (b * C + c) * H * W;
                for (int64_t h = 0; h < H; ++h) {
                    for (int64_t ww = 0; ww < W; ++ww) {
                        R acc = R(0);
                        for (int64_t oc = 0; oc < OC; ++oc) {
                            const R* wc = w + (oc * C + c) * KH * KW;
                            const R* dyp = dy + (b * OC + oc) * OH * OW;
                            for (int64_t i = 0; i < KH; ++i) {
                                const int64_t oh_num = h + pad - i;
                                if (oh_num % stride != 0) continue;
                                const int64_t oh = oh_num / stride;
                                if (oh < 0 || oh >= OH) continue;
                                for (int64_t j = 0; j < KW; ++j) {
                                    const int64_t ow_num = ww + pad - j;
                                    if (ow_num % stride != 0) continue;
                                    const int64_t ow = ow_num / stride;
                                    if (ow < 0 || ow >= OW) continue;
                                    acc += wc[i * KW + j] *
                                           dyp[oh * OW + ow];
                                }
                            }
                        }
                        dxc[h * W + ww] += acc;
                    }
                }
            }
        }
    }
}

// Non-overlapping max pooling (kernel == stride). argmax stores the flat
// spatial index of the winner so the backward pass is a plain scatter.
template <typename R>
void maxpool2d_forward(const R* x, R* y, int32_t* argmax, int64_t B,
                       int64_t C, int64_t H, int64_t W, int64_t k,
                       int64_t OH, int64_t OW) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t c = 0; c < C; ++c) {
            const R* xc = x + (b * C + c) * H * W;
            R* yc = y + (b * C + c) * OH * OW;
            int32_t* am = argmax + (b * C + c) * OH * OW;
            for (int64_t oh = 0; oh < OH; ++oh) {
                for (int64_t ow = 0; ow < OW; ++ow) {
                    int64_t best = (oh * k) * W + ow * k;
                    R bv = xc[best];
                    for (int64_t i = 0; i < k; ++i) {
                        for (int64_t j = 0; j < k; ++j) {
                            const int64_t idx = (oh * k + i) * W + ow * k + j;
                            if (xc[idx] > bv) {
                                bv = xc[idx];
                                best = idx;
                            }
                        }
                    }
                    yc[oh * OW + ow] = bv;
                    am[oh * OW + ow] = static_cast<int32_t>(best);
                }
            }
        }
    }
}

template <typename R>
void maxpool2d_backward(const R* dy, const int32_t* argmax, R* dx, int64_t B,
                        int64_t C, int64_t H, int64_t W, int64_t OH,
                        int64_t OW) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int64_t b = 0; b < B; ++b) {
        for (int64_t c = 0; c < C; ++c) {
            const R* dyc = dy + (b * C + c) * OH * OW;
            const int32_t* am = argmax + (b * C + c) * OH * OW;
            R* dxc = dx + (b * C + c) * H * W;
            for (int64_t i = 0; i < OH * OW; ++i) dxc[am[i]] += dyc[i];
        }
    }
}

// Width-axis bilinear resample with align-corners mapping, so that
// out_w == in_w is the identity.
template <typename R>
void resize_width_forward(const R* x, R* y, int64_t rows, int64_t in_w,
                          int64_t out_w) {
    const double scale =
        out_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const R* xr = x + r * in_w;
        R* yr = y + r * out_w;
        for (int64_t j = 0; j < out_w; ++j) {
            const double pos = scale * j;
            const int64_t j0 = static_cast<int64_t>(pos);
            const int64_t j1 = j0 + 1 < in_w ? j0 + 1 : j0;
            const R f = static_cast<R>(pos - j0);
            yr[j] = (R(1) - f) * xr[j0] + f * xr[j1];
        }
    }
}

template <typename R>
void resize_width_backward(const R* dy, R* dx, int64_t rows, int64_t in_w,
                           int64_t out_w) {
    const double scale =
        out_w > 1 ? static_cast<double>(in_w - 1) / (out_w - 1) : 0.0;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const R* dyr = dy + r * out_w;
        R* dxr = dx + r * in_w;
        for (int64_t j = 0; j < out_w; ++j) {
            const double pos = scale * j;
            const int64_t j0 = static_cast<int64_t>(pos);
            const int64_t j1 = j0 + 1 < in_w ? j0 + 1 : j0;
            const R f = static_cast<R>(pos - j0);
            dxr[j0] += (R(1) - f) * dyr[j];
            dxr[j1] += f * dyr[j];
        }
    }
}

// Row-wise softmax with max subtraction.
template <typename R>
void softmax_rows(const R* x, R* y, int64_t rows, int64_t cols) {
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
        const R* xr = x + r * cols;
        R* yr = y + r * cols;
        R m = xr[0];
        for (int64_t j = 1; j < cols; ++j)
            if (xr[j] > m) m = xr[j];
        R sum = R(0);
        for (int64_t j = 0; j < cols; ++j) {
            yr[j] = std::exp(xr[j] - m);
            sum += yr[j];
        }
        const R inv = R(1) / sum;
        for (int64_t j = 0; j < cols; ++j) yr[j] *= inv;
    }
}

// Brute-force oracles. No OpenMP, textbook loop nests, independent of the
// kernels above.
namespace reference {

template <typename R>
void matmul_nn(const R* a, const R* b, R* c, int64_t m, int64_t k,
               int64_t n) {
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
            R acc = R(0);
            for (int64_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    }
}

// Direct six-nested-loop convolution.
template <typename R>
void conv2d_forward(const R* x, const R* w, const R* bias, R* y, int64_t B,
                    int64_t C, int64_t H, int64_t W, int64_t OC, int64_t KH,
                    int64_t KW, int64_t stride, int64_t pad, int64_t OH,
                    int64_t OW) {
    for (int64_t b = 0; b < B; ++b)
        for (int64_t oc = 0; oc < OC; ++oc)
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    R acc = bias ? bias[oc] : R(0);
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < KH; ++i)
                            for (int64_t j = 0; j < KW; ++j) {
                                const int64_t h = oh * stride - pad + i;
                                const int64_t ww2 = ow * stride - pad + j;
                                if (h < 0 || h >= H || ww2 < 0 || ww2 >= W)
                                    continue;
                                acc += x[((b * C + c) * H + h) * W + ww2] *
                                       w[((oc * C + c) * KH + i) * KW + j];
                            }
                    y[((b * OC + oc) * OH + oh) * OW + ow] = acc;
                }
}

}  // namespace reference

}  // namespace sissa::nn::kernels
