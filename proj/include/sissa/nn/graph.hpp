#pragma once

// Reverse-mode automatic differentiation over a recorded op list. Every op
// appends one node holding the forward value and a closure that scatters
// the node's gradient into its parents. backward() replays the closures in
// exact reverse creation order.

#include <functional>
#include <vector>

#include "sissa/nn/kernels.hpp"
#include "sissa/nn/tensor.hpp"

namespace sissa::nn {

// Running statistics of one batch-norm layer. Stored as float in the
// model; the graph converts as needed.
struct BnStats {
    std::vector<float> mean;
    std::vector<float> var;
    float momentum = 0.1f;
    float eps = 1e-5f;
};

template <typename R>
class GraphT {
public:
    using Tensor = TensorT<R>;

    struct Var {
        int32_t id = -1;
        bool valid() const { return id >= 0; }
    };

    Var input(Tensor value, bool requires_grad = false) {
        return push(std::move(value), requires_grad, {});
    }

    const Tensor& val(Var v) const { return nodes_[v.id].value; }

    // Gradient of the last backward() root w.r.t. v. Zero tensor when the
    // node was not reached.
    const Tensor& grad(Var v) {
        ensure_grad(v.id);
        return nodes_[v.id].grad;
    }

    size_t size() const { return nodes_.size(); }

    // ---- arithmetic ----

    Var add(Var a, Var b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        require_shape(av.shape == bv.shape,
                      "add: shape mismatch " + shape_str(av.shape) + " vs " +
                          shape_str(bv.shape));
        Tensor out = av;
        for (int64_t i = 0; i < out.numel(); ++i) out.data[i] += bv.data[i];
        return push(std::move(out), needs(a) || needs(b),
                    [a, b](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        g.accum(a, dy.ptr(), dy.numel());
                        g.accum(b, dy.ptr(), dy.numel());
                    });
    }

    Var mul(Var a, Var b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        require_shape(av.shape == bv.shape, "mul: shape mismatch");
        Tensor out = av;
        for (int64_t i = 0; i < out.numel(); ++i) out.data[i] *= bv.data[i];
        return push(std::move(out), needs(a) || needs(b),
                    [a, b](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        if (g.needs(a)) {
                            g.ensure_grad(a.id);
                            const Tensor& bv2 = g.val(b);
                            Tensor& ga = g.nodes_[a.id].grad;
                            for (int64_t i = 0; i < dy.numel(); ++i)
                                ga.data[i] += dy.data[i] * bv2.data[i];
                        }
                        if (g.needs(b)) {
                            g.ensure_grad(b.id);
                            const Tensor& av2 = g.val(a);
                            Tensor& gb = g.nodes_[b.id].grad;
                            for (int64_t i = 0; i < dy.numel(); ++i)
                                gb.data[i] += dy.data[i] * av2.data[i];
                        }
                    });
    }

    Var scale(Var x, R c) {
        Tensor out = val(x);
        for (auto& v : out.data) v *= c;
        return push(std::move(out), needs(x),
                    [x, c](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t i = 0; i < dy.numel(); ++i)
                            gx.data[i] += c * dy.data[i];
                    });
    }

    // ---- activations ----

    Var tanh_(Var x) {
        Tensor out = val(x);
        for (auto& v : out.data) v = std::tanh(v);
        return push(std::move(out), needs(x),
                    [x](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& y = g.nodes_[self].value;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t i = 0; i < dy.numel(); ++i)
                            gx.data[i] +=
                                dy.data[i] * (R(1) - y.data[i] * y.data[i]);
                    });
    }

    Var sigmoid_(Var x) {
        Tensor out = val(x);
        for (auto& v : out.data) v = R(1) / (R(1) + std::exp(-v));
        return push(std::move(out), needs(x),
                    [x](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& y = g.nodes_[self].value;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t i = 0; i < dy.numel(); ++i)
                            gx.data[i] += dy.data[i] * y.data[i] *
                                          (R(1) - y.data[i]);
                    });
    }

    Var relu_(Var x) {
        Tensor out = val(x);
        for (auto& v : out.data)
            if (v < R(0)) v = R(0);
        return push(std::move(out), needs(x),
                    [x](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& y = g.nodes_[self].value;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t i = 0; i < dy.numel(); ++i)
                            if (y.data[i] > R(0)) gx.data[i] += dy.data[i];
                    });
    }

    // ---- linear algebra ----

    // y = x W + b with x (..., in), W (in, out), b (out) broadcast over all
    // leading extents.
    Var affine(Var x, Var w, Var b) {
        const Tensor& xv = val(x);
        const Tensor& wv = val(w);
        const Tensor& bv = val(b);
        require_shape(xv.rank() >= 1 && wv.rank() == 2 && bv.rank() == 1,
                      "affine: bad ranks");
        const int64_t in = wv.dim(0), out = wv.dim(1);
        require_shape(xv.shape.back() == in && bv.dim(0) == out,
                      "affine: shape mismatch " + shape_str(xv.shape) + " x " +
                          shape_str(wv.shape));
        const int64_t rows = xv.numel() / in;
        std::vector<int64_t> yshape = xv.shape;
        yshape.back() = out;
        Tensor y(yshape);
        kernels::matmul_nn(xv.ptr(), wv.ptr(), y.ptr(), rows, in, out);
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) {
            R* yr = y.ptr() + r * out;
            for (int64_t j = 0; j < out; ++j) yr[j] += bv.data[j];
        }
        return push(std::move(y), needs(x) || needs(w) || needs(b),
                    [x, w, b, rows, in, out](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        if (g.needs(x)) {
                            g.ensure_grad(x.id);
                            Tensor tmp({rows, in});
                            kernels::matmul_nt(dy.ptr(), g.val(w).ptr(),
                                               tmp.ptr(), rows, out, in);
                            g.accum(x, tmp.ptr(), tmp.numel());
                        }
                        if (g.needs(w)) {
                            g.ensure_grad(w.id);
                            Tensor tmp({in, out});
                            kernels::matmul_tn(g.val(x).ptr(), dy.ptr(),
                                               tmp.ptr(), in, rows, out);
                            g.accum(w, tmp.ptr(), tmp.numel());
                        }
                        if (g.needs(b)) {
                            g.ensure_grad(b.id);
                            Tensor& gb = g.nodes_[b.id].grad;
                            for (int64_t r = 0; r < rows; ++r)
                                for (int64_t j = 0; j < out; ++j)
                                    gb.data[j] += dy.data[r * out + j];
                        }
                    });
    }

    // C(m,n) = A(m,k) B(k,n)
    Var matmul(Var a, Var b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        require_shape(av.rank() == 2 && bv.rank() == 2 &&
                          av.dim(1) == bv.dim(0),
                      "matmul: shape mismatch " + shape_str(av.shape) +
                          " x " + shape_str(bv.shape));
        const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
        Tensor y({m, n});
        kernels::matmul_nn(av.ptr(), bv.ptr(), y.ptr(), m, k, n);
        return push(std::move(y), needs(a) || needs(b),
                    [a, b, m, k, n](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        if (g.needs(a)) {
                            g.ensure_grad(a.id);
                            Tensor tmp({m, k});
                            kernels::matmul_nt(dy.ptr(), g.val(b).ptr(),
                                               tmp.ptr(), m, n, k);
                            g.accum(a, tmp.ptr(), tmp.numel());
                        }
                        if (g.needs(b)) {
                            g.ensure_grad(b.id);
                            Tensor tmp({k, n});
                            kernels::matmul_tn(g.val(a).ptr(), dy.ptr(),
                                               tmp.ptr(), k, m, n);
                            g.accum(b, tmp.ptr(), tmp.numel());
                        }
                    });
    }

    // Batched matmul: (B, m, k) x (B, k, n) -> (B, m, n).
    Var bmm(Var a, Var b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        require_shape(av.rank() == 3 && bv.rank() == 3 &&
                          av.dim(0) == bv.dim(0) && av.dim(2) == bv.dim(1),
                      "bmm: shape mismatch " + shape_str(av.shape) + " x " +
                          shape_str(bv.shape));
        const int64_t B = av.dim(0), m = av.dim(1), k = av.dim(2),
                      n = bv.dim(2);
        Tensor y({B, m, n});
        for (int64_t i = 0; i < B; ++i)
            kernels::matmul_nn(av.ptr() + i * m * k, bv.ptr() + i * k * n,
                               y.ptr() + i * m * n, m, k, n);
        return push(std::move(y), needs(a) || needs(b),
                    [a, b, B, m, k, n](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        if (g.needs(a)) {
                            g.ensure_grad(a.id);
                            Tensor tmp({m, k});
                            Tensor& ga = g.nodes_[a.id].grad;
                            for (int64_t i = 0; i < B; ++i) {
                                kernels::matmul_nt(
                                    dy.ptr() + i * m * n,
                                    g.val(b).ptr() + i * k * n, tmp.ptr(), m,
                                    n, k);
                                R* dst = ga.ptr() + i * m * k;
                                for (int64_t q = 0; q < m * k; ++q)
                                    dst[q] += tmp.data[q];
                            }
                        }
                        if (g.needs(b)) {
                            g.ensure_grad(b.id);
                            Tensor tmp({k, n});
                            Tensor& gb = g.nodes_[b.id].grad;
                            for (int64_t i = 0; i < B; ++i) {
                                kernels::matmul_tn(
                                    g.val(a).ptr() + i * m * k,
                                    dy.ptr() + i * m * n, tmp.ptr(), k, m, n);
                                R* dst = gb.ptr() + i * k * n;
                                for (int64_t q = 0; q < k * n; ++q)
                                    dst[q] += tmp.data[q];
                            }
                        }
                    });
    }

    Var transpose_last2(Var x) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() >= 2, "transpose: rank < 2");
        const int64_t m = xv.shape[xv.rank() - 2];
        const int64_t n = xv.shape[xv.rank() - 1];
        const int64_t outer = xv.numel() / (m * n);
        std::vector<int64_t> yshape = xv.shape;
        std::swap(yshape[yshape.size() - 2], yshape[yshape.size() - 1]);
        Tensor y(yshape);
        for (int64_t o = 0; o < outer; ++o) {
            const R* src = xv.ptr() + o * m * n;
            R* dst = y.ptr() + o * m * n;
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
        }
        return push(std::move(y), needs(x),
                    [x, m, n, outer](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t o = 0; o < outer; ++o) {
                            const R* src = dy.ptr() + o * m * n;
                            R* dst = gx.ptr() + o * m * n;
                            for (int64_t j = 0; j < n; ++j)
                                for (int64_t i = 0; i < m; ++i)
                                    dst[i * n + j] += src[j * m + i];
                        }
                    });
    }

    // ---- shape plumbing ----

    Var reshape(Var x, std::vector<int64_t> shape) {
        const Tensor& xv = val(x);
        require_shape(Tensor::numel_of(shape) == xv.numel(),
                      "reshape: numel mismatch");
        Tensor y(shape, xv.data);
        return push(std::move(y), needs(x),
                    [x](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.accum(x, dy.ptr(), dy.numel());
                    });
    }

    // Concatenate along the last axis.
    Var concat_last(Var a, Var b) {
        const Tensor& av = val(a);
        const Tensor& bv = val(b);
        require_shape(av.rank() == bv.rank(), "concat: rank mismatch");
        for (size_t i = 0; i + 1 < av.rank(); ++i)
            require_shape(av.shape[i] == bv.shape[i],
                          "concat: leading extent mismatch");
        const int64_t da = av.shape.back(), db = bv.shape.back();
        const int64_t rows = av.numel() / da;
        std::vector<int64_t> yshape = av.shape;
        yshape.back() = da + db;
        Tensor y(yshape);
        for (int64_t r = 0; r < rows; ++r) {
            R* dst = y.ptr() + r * (da + db);
            const R* pa = av.ptr() + r * da;
            const R* pb = bv.ptr() + r * db;
            for (int64_t i = 0; i < da; ++i) dst[i] = pa[i];
            for (int64_t i = 0; i < db; ++i) dst[da + i] = pb[i];
        }
        return push(std::move(y), needs(a) || needs(b),
                    [a, b, da, db, rows](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        if (g.needs(a)) {
                            g.ensure_grad(a.id);
                            Tensor& ga = g.nodes_[a.id].grad;
                            for (int64_t r = 0; r < rows; ++r)
                                for (int64_t i = 0; i < da; ++i)
                                    ga.data[r * da + i] +=
                                        dy.data[r * (da + db) + i];
                        }
                        if (g.needs(b)) {
                            g.ensure_grad(b.id);
                            Tensor& gb = g.nodes_[b.id].grad;
                            for (int64_t r = 0; r < rows; ++r)
                                for (int64_t i = 0; i < db; ++i)
                                    gb.data[r * db + i] +=
                                        dy.data[r * (da + db) + da + i];
                        }
                    });
    }

    // Slice [off, off+len) of the last axis.
    Var slice_last(Var x, int64_t off, int64_t len) {
        const Tensor& xv = val(x);
        const int64_t d = xv.shape.back();
        require_shape(off >= 0 && off + len <= d, "slice: out of range");
        const int64_t rows = xv.numel() / d;
        std::vector<int64_t> yshape = xv.shape;
        yshape.back() = len;
        Tensor y(yshape);
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t i = 0; i < len; ++i)
                y.data[r * len + i] = xv.data[r * d + off + i];
        return push(std::move(y), needs(x),
                    [x, off, len, d, rows](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t r = 0; r < rows; ++r)
                            for (int64_t i = 0; i < len; ++i)
                                gx.data[r * d + off + i] +=
                                    dy.data[r * len + i];
                    });
    }

    // (B, n, d) -> (B, d), row t of the time axis.
    Var slice_time(Var x, int64_t t) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 3, "slice_time: expect (B,n,d)");
        const int64_t B = xv.dim(0), n = xv.dim(1), d = xv.dim(2);
        require_shape(t >= 0 && t < n, "slice_time: t out of range");
        Tensor y({B, d});
        for (int64_t b = 0; b < B; ++b)
            for (int64_t i = 0; i < d; ++i)
                y.data[b * d + i] = xv.data[(b * n + t) * d + i];
        return push(std::move(y), needs(x),
                    [x, t, B, n, d](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t b = 0; b < B; ++b)
                            for (int64_t i = 0; i < d; ++i)
                                gx.data[(b * n + t) * d + i] +=
                                    dy.data[b * d + i];
                    });
    }

    // n tensors of shape (B, d) -> (B, n, d).
    Var stack_time(const std::vector<Var>& steps) {
        require_shape(!steps.empty(), "stack_time: empty");
        const Tensor& first = val(steps[0]);
        require_shape(first.rank() == 2, "stack_time: expect (B,d) steps");
        const int64_t B = first.dim(0), d = first.dim(1);
        const int64_t n = static_cast<int64_t>(steps.size());
        Tensor y({B, n, d});
        bool any = false;
        for (int64_t t = 0; t < n; ++t) {
            const Tensor& sv = val(steps[t]);
            require_shape(sv.dim(0) == B && sv.dim(1) == d,
                          "stack_time: step shape mismatch");
            any = any || needs(steps[t]);
            for (int64_t b = 0; b < B; ++b)
                for (int64_t i = 0; i < d; ++i)
                    y.data[(b * n + t) * d + i] = sv.data[b * d + i];
        }
        std::vector<Var> parents = steps;
        return push(std::move(y), any,
                    [parents, B, n, d](GraphT& g, int32_t self) {
                        const Tensor& dy = g.nodes_[self].grad;
                        for (int64_t t = 0; t < n; ++t) {
                            if (!g.needs(parents[t])) continue;
                            g.ensure_grad(parents[t].id);
                            Tensor& gs = g.nodes_[parents[t].id].grad;
                            for (int64_t b = 0; b < B; ++b)
                                for (int64_t i = 0; i < d; ++i)
                                    gs.data[b * d + i] +=
                                        dy.data[(b * n + t) * d + i];
                        }
                    });
    }

    // (B, n, d) -> (B, d), mean over the time axis.
    Var mean_time(Var x) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 3, "mean_time: expect (B,n,d)");
        const int64_t B = xv.dim(0), n = xv.dim(1), d = xv.dim(2);
        Tensor y({B, d});
        for (int64_t b = 0; b < B; ++b)
            for (int64_t t = 0; t < n; ++t)
                for (int64_t i = 0; i < d; ++i)
                    y.data[b * d + i] += xv.data[(b * n + t) * d + i];
        const R inv = R(1) / static_cast<R>(n);
        for (auto& v : y.data) v *= inv;
        return push(std::move(y), needs(x),
                    [x, B, n, d, inv](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t b = 0; b < B; ++b)
                            for (int64_t t = 0; t < n; ++t)
                                for (int64_t i = 0; i < d; ++i)
                                    gx.data[(b * n + t) * d + i] +=
                                        inv * dy.data[b * d + i];
                    });
    }

    // (B, C, H, W) -> (B, C), global average pool.
    Var mean_spatial(Var x) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 4, "mean_spatial: expect (B,C,H,W)");
        const int64_t B = xv.dim(0), C = xv.dim(1),
                      HW = xv.dim(2) * xv.dim(3);
        Tensor y({B, C});
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c) {
                R acc = R(0);
                const R* p = xv.ptr() + (b * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) acc += p[i];
                y.data[b * C + c] = acc / static_cast<R>(HW);
            }
        return push(std::move(y), needs(x),
                    [x, B, C, HW](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        const R inv = R(1) / static_cast<R>(HW);
                        for (int64_t b = 0; b < B; ++b)
                            for (int64_t c = 0; c < C; ++c) {
                                const R gv = dy.data[b * C + c] * inv;
                                R* p = gx.ptr() + (b * C + c) * HW;
                                for (int64_t i = 0; i < HW; ++i) p[i] += gv;
                            }
                    });
    }

    // ---- structured layers ----

    Var conv2d(Var x, Var w, Var b, int64_t stride, int64_t pad) {
        const Tensor& xv = val(x);
        const Tensor& wv = val(w);
        require_shape(xv.rank() == 4 && wv.rank() == 4 &&
                          xv.dim(1) == wv.dim(1),
                      "conv2d: shape mismatch " + shape_str(xv.shape) +
                          " vs kernel " + shape_str(wv.shape));
        const int64_t B = xv.dim(0), C = xv.dim(1), H = xv.dim(2),
                      W = xv.dim(3);
        const int64_t OC = wv.dim(0), KH = wv.dim(2), KW = wv.dim(3);
        const int64_t OH = (H + 2 * pad - KH) / stride + 1;
        const int64_t OW = (W + 2 * pad - KW) / stride + 1;
        require_shape(OH > 0 && OW > 0, "conv2d: output collapses");
        Tensor y({B, OC, OH, OW});
        const R* bias = b.valid() ? val(b).ptr() : nullptr;
        kernels::conv2d_forward(xv.ptr(), wv.ptr(), bias, y.ptr(), B, C, H, W,
                                OC, KH, KW, stride, pad, OH, OW);
        return push(
            std::move(y), needs(x) || needs(w) || (b.valid() && needs(b)),
            [x, w, b, B, C, H, W, OC, KH, KW, stride, pad, OH,
             OW](GraphT& g, int32_t self) {
                const Tensor& dy = g.nodes_[self].grad;
                R* dx = nullptr;
                R* dw = nullptr;
                R* db = nullptr;
                if (g.needs(x)) {
                    g.ensure_grad(x.id);
                    dx = g.nodes_[x.id].grad.ptr();
                }
                if (g.needs(w)) {
                    g.ensure_grad(w.id);
                    dw = g.nodes_[w.id].grad.ptr();
                }
                if (b.valid() && g.needs(b)) {
                    g.ensure_grad(b.id);
                    db = g.nodes_[b.id].grad.ptr();
                }
                kernels::conv2d_backward(g.val(x).ptr(), g.val(w).ptr(),
                                         dy.ptr(), dx, dw, db, B, C, H, W, OC,
                                         KH, KW, stride, pad, OH, OW);
            });
    }

    // Non-overlapping max pooling, kernel == stride == k.
    Var maxpool2d(Var x, int64_t k) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 4, "maxpool2d: expect (B,C,H,W)");
        const int64_t B = xv.dim(0), C = xv.dim(1), H = xv.dim(2),
                      W = xv.dim(3);
        require_shape(H % k == 0 && W % k == 0,
                      "maxpool2d: extent not divisible by k");
        const int64_t OH = H / k, OW = W / k;
        Tensor y({B, C, OH, OW});
        auto argmax = std::make_shared<std::vector<int32_t>>(
            static_cast<size_t>(B * C * OH * OW));
        kernels::maxpool2d_forward(xv.ptr(), y.ptr(), argmax->data(), B, C, H,
                                   W, k, OH, OW);
        return push(std::move(y), needs(x),
                    [x, argmax, B, C, H, W, OH, OW](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        kernels::maxpool2d_backward(
                            dy.ptr(), argmax->data(),
                            g.nodes_[x.id].grad.ptr(), B, C, H, W, OH, OW);
                    });
    }

    // Batch normalization over (B, H, W) per channel. Training mode uses
    // batch statistics and updates `stats`; inference mode is a fixed
    // affine map from the running statistics.
    Var batchnorm2d(Var x, Var gamma, Var beta, BnStats& stats,
                    bool training) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 4, "batchnorm2d: expect (B,C,H,W)");
        const int64_t B = xv.dim(0), C = xv.dim(1), HW = xv.dim(2) * xv.dim(3);
        const int64_t N = B * HW;
        require_shape(static_cast<int64_t>(stats.mean.size()) == C,
                      "batchnorm2d: stats size mismatch");
        const Tensor& gv = val(gamma);
        const Tensor& bv = val(beta);

        std::vector<R> mean(C), inv_std(C);
        if (training) {
            for (int64_t c = 0; c < C; ++c) {
                R sum = R(0);
                for (int64_t b = 0; b < B; ++b) {
                    const R* p = xv.ptr() + (b * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) sum += p[i];
                }
                const R mu = sum / static_cast<R>(N);
                R var = R(0);
                for (int64_t b = 0; b < B; ++b) {
                    const R* p = xv.ptr() + (b * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) {
                        const R dx = p[i] - mu;
                        var += dx * dx;
                    }
                }
                var /= static_cast<R>(N);
                mean[c] = mu;
                inv_std[c] = R(1) / std::sqrt(var + static_cast<R>(stats.eps));
                stats.mean[c] = (1.f - stats.momentum) * stats.mean[c] +
                                stats.momentum * static_cast<float>(mu);
                stats.var[c] = (1.f - stats.momentum) * stats.var[c] +
                               stats.momentum * static_cast<float>(var);
            }
        } else {
            for (int64_t c = 0; c < C; ++c) {
                mean[c] = static_cast<R>(stats.mean[c]);
                inv_std[c] =
                    R(1) / std::sqrt(static_cast<R>(stats.var[c]) +
                                     static_cast<R>(stats.eps));
            }
        }

        Tensor y(xv.shape);
        auto xhat = std::make_shared<Tensor>(xv.shape);
        for (int64_t b = 0; b < B; ++b)
            for (int64_t c = 0; c < C; ++c) {
                const R* p = xv.ptr() + (b * C + c) * HW;
                R* ph = xhat->ptr() + (b * C + c) * HW;
                R* py = y.ptr() + (b * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) {
                    ph[i] = (p[i] - mean[c]) * inv_std[c];
                    py[i] = gv.data[c] * ph[i] + bv.data[c];
                }
            }
        auto inv_std_keep = std::make_shared<std::vector<R>>(inv_std);
        return push(
            std::move(y), needs(x) || needs(gamma) || needs(beta),
            [x, gamma, beta, xhat, inv_std_keep, training, B, C,
             HW](GraphT& g, int32_t self) {
                const Tensor& dy = g.nodes_[self].grad;
                const Tensor& gv2 = g.val(gamma);
                const int64_t N = B * HW;
                // dgamma / dbeta
                std::vector<R> dg(C, R(0)), db(C, R(0));
                for (int64_t b = 0; b < B; ++b)
                    for (int64_t c = 0; c < C; ++c) {
                        const R* pdy = dy.ptr() + (b * C + c) * HW;
                        const R* ph = xhat->ptr() + (b * C + c) * HW;
                        for (int64_t i = 0; i < HW; ++i) {
                            dg[c] += pdy[i] * ph[i];
                            db[c] += pdy[i];
                        }
                    }
                if (g.needs(gamma)) {
                    g.ensure_grad(gamma.id);
                    for (int64_t c = 0; c < C; ++c)
                        g.nodes_[gamma.id].grad.data[c] += dg[c];
                }
                if (g.needs(beta)) {
                    g.ensure_grad(beta.id);
                    for (int64_t c = 0; c < C; ++c)
                        g.nodes_[beta.id].grad.data[c] += db[c];
                }
                if (!g.needs(x)) return;
                g.ensure_grad(x.id);
                Tensor& gx = g.nodes_[x.id].grad;
                if (training) {
                    for (int64_t b = 0; b < B; ++b)
                        for (int64_t c = 0; c < C; ++c) {
                            const R* pdy = dy.ptr() + (b * C + c) * HW;
                            const R* ph = xhat->ptr() + (b * C + c) * HW;
                            R* pgx = gx.ptr() + (b * C + c) * HW;
                            const R k =
                                gv2.data[c] * (*inv_std_keep)[c] /
                                static_cast<R>(N);
                            for (int64_t i = 0; i < HW; ++i)
                                pgx[i] += k * (static_cast<R>(N) * pdy[i] -
                                               db[c] - ph[i] * dg[c]);
                        }
                } else {
                    for (int64_t b = 0; b < B; ++b)
                        for (int64_t c = 0; c < C; ++c) {
                            const R* pdy = dy.ptr() + (b * C + c) * HW;
                            R* pgx = gx.ptr() + (b * C + c) * HW;
                            const R k = gv2.data[c] * (*inv_std_keep)[c];
                            for (int64_t i = 0; i < HW; ++i)
                                pgx[i] += k * pdy[i];
                        }
                }
            });
    }

    // Fixed bilinear resample of the last axis of (B, C, H, W).
    Var resize_width(Var x, int64_t out_w) {
        const Tensor& xv = val(x);
        require_shape(xv.rank() == 4, "resize_width: expect (B,C,H,W)");
        const int64_t rows = xv.numel() / xv.shape.back();
        const int64_t in_w = xv.shape.back();
        std::vector<int64_t> yshape = xv.shape;
        yshape.back() = out_w;
        Tensor y(yshape);
        kernels::resize_width_forward(xv.ptr(), y.ptr(), rows, in_w, out_w);
        return push(std::move(y), needs(x),
                    [x, rows, in_w, out_w](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        kernels::resize_width_backward(
                            dy.ptr(), g.nodes_[x.id].grad.ptr(), rows, in_w,
                            out_w);
                    });
    }

    // Row-wise softmax over the last axis.
    Var softmax_last(Var x) {
        const Tensor& xv = val(x);
        const int64_t cols = xv.shape.back();
        const int64_t rows = xv.numel() / cols;
        Tensor y(xv.shape);
        kernels::softmax_rows(xv.ptr(), y.ptr(), rows, cols);
        return push(std::move(y), needs(x),
                    [x, rows, cols](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const Tensor& y2 = g.nodes_[self].value;
                        const Tensor& dy = g.nodes_[self].grad;
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t r = 0; r < rows; ++r) {
                            const R* yr = y2.ptr() + r * cols;
                            const R* dr = dy.ptr() + r * cols;
                            R dot = R(0);
                            for (int64_t j = 0; j < cols; ++j)
                                dot += yr[j] * dr[j];
                            R* gr = gx.ptr() + r * cols;
                            for (int64_t j = 0; j < cols; ++j)
                                gr[j] += yr[j] * (dr[j] - dot);
                        }
                    });
    }

    // Mean negative log-softmax of the true class. Scalar output.
    Var cross_entropy(Var logits, const std::vector<int>& labels) {
        const Tensor& zv = val(logits);
        require_shape(zv.rank() == 2, "cross_entropy: expect (B,K)");
        const int64_t B = zv.dim(0), K = zv.dim(1);
        require_shape(static_cast<int64_t>(labels.size()) == B,
                      "cross_entropy: label count mismatch");
        for (int y : labels)
            if (y < 0 || y >= K)
                throw RuntimeError("cross_entropy: label out of range");
        auto probs = std::make_shared<Tensor>(zv.shape);
        kernels::softmax_rows(zv.ptr(), probs->ptr(), B, K);
        double loss = 0.0;
        for (int64_t b = 0; b < B; ++b) {
            const R* zr = zv.ptr() + b * K;
            R m = zr[0];
            for (int64_t j = 1; j < K; ++j)
                if (zr[j] > m) m = zr[j];
            R sum = R(0);
            for (int64_t j = 0; j < K; ++j) sum += std::exp(zr[j] - m);
            loss += static_cast<double>(m) + std::log(static_cast<double>(sum)) -
                    static_cast<double>(zr[labels[b]]);
        }
        Tensor y({1});
        y.data[0] = static_cast<R>(loss / static_cast<double>(B));
        auto labels_keep = std::make_shared<std::vector<int>>(labels);
        return push(std::move(y), needs(logits),
                    [logits, probs, labels_keep, B, K](GraphT& g,
                                                       int32_t self) {
                        if (!g.needs(logits)) return;
                        const R d = g.nodes_[self].grad.data[0] /
                                    static_cast<R>(B);
                        g.ensure_grad(logits.id);
                        Tensor& gz = g.nodes_[logits.id].grad;
                        for (int64_t b = 0; b < B; ++b) {
                            R* gr = gz.ptr() + b * K;
                            const R* pr = probs->ptr() + b * K;
                            for (int64_t j = 0; j < K; ++j)
                                gr[j] += d * pr[j];
                            gr[(*labels_keep)[b]] -= d;
                        }
                    });
    }

    // Scalar inner product with a constant cotangent; the gradcheck loss.
    Var inner(Var x, const Tensor& weights) {
        const Tensor& xv = val(x);
        require_shape(weights.numel() == xv.numel(), "inner: numel mismatch");
        double acc = 0.0;
        for (int64_t i = 0; i < xv.numel(); ++i)
            acc += static_cast<double>(xv.data[i]) *
                   static_cast<double>(weights.data[i]);
        Tensor y({1});
        y.data[0] = static_cast<R>(acc);
        auto w_keep = std::make_shared<Tensor>(weights);
        return push(std::move(y), needs(x),
                    [x, w_keep](GraphT& g, int32_t self) {
                        if (!g.needs(x)) return;
                        const R d = g.nodes_[self].grad.data[0];
                        g.ensure_grad(x.id);
                        Tensor& gx = g.nodes_[x.id].grad;
                        for (int64_t i = 0; i < gx.numel(); ++i)
                            gx.data[i] += d * w_keep->data[i];
                    });
    }

    // ---- driver ----

    void backward(Var root) {
        require_shape(val(root).numel() == 1, "backward: root must be scalar");
        ensure_grad(root.id);
        nodes_[root.id].grad.data[0] = R(1);
        for (int32_t id = root.id; id >= 0; --id) {
            Node& node = nodes_[id];
            if (!node.requires_grad || !node.back) continue;
            if (node.grad.data.empty()) continue;  // not on any path to root
            node.back(*this, id);
        }
    }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        std::function<void(GraphT&, int32_t)> back;
    };

    bool needs(Var v) const { return nodes_[v.id].requires_grad; }

    void ensure_grad(int32_t id) {
        Node& n = nodes_[id];
        if (n.grad.data.empty()) n.grad = Tensor(n.value.shape);
    }

    void accum(Var v, const R* delta, int64_t count) {
        if (!needs(v)) return;
        ensure_grad(v.id);
        Tensor& g = nodes_[v.id].grad;
        for (int64_t i = 0; i < count; ++i) g.data[i] += delta[i];
    }

    Var push(Tensor value, bool requires_grad,
             std::function<void(GraphT&, int32_t)> back) {
        Node n;
        n.value = std::move(value);
        n.requires_grad = requires_grad;
        n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{static_cast<int32_t>(nodes_.size() - 1)};
    }

    std::vector<Node> nodes_;
};

using Graph = GraphT<float>;

}  // namespace sissa::nn
