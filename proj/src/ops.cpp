#include "sahm/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace sahm::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

thread_local FlopScope* t_flops = nullptr;

MapMat as_mat(Tensor& t, int rows, int cols) { return MapMat(t.data(), rows, cols); }
ConstMapMat as_mat(const Tensor& t, int rows, int cols) { return ConstMapMat(t.data(), rows, cols); }

void require_rank(const Var& v, int rank, const char* what)
{
    if (v.value().rank() != rank)
        throw std::invalid_argument(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                                    shape_str(v.shape()));
}

void require_same(const Var& a, const Var& b, const char* what)
{
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
}

template <class F>
Var unary(Var a, F&& forward, Graph::Backward backward)
{
    Tensor out(a.shape());
    const Tensor& x = a.value();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
    return a.graph().record(std::move(out), {a}, std::move(backward));
}

} // namespace

FlopScope::FlopScope() : previous_(t_flops) { t_flops = this; }
FlopScope::~FlopScope() { t_flops = previous_; }

void count_flops(std::uint64_t n)
{
    if (t_flops) t_flops->flops_ += n;
}

// ---------------------------------------------------------------- elementwise

Var add(Var a, Var b)
{
    require_same(a, b, "add");
    Tensor out = a.value();
    out += b.value();
    int ia = a.id(), ib = b.id();
    return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        if (g.needs_grad(ia)) g.grad(ia) += gy;
        if (g.needs_grad(ib)) g.grad(ib) += gy;
    });
}

Var sub(Var a, Var b)
{
    require_same(a, b, "sub");
    Tensor out = a.value();
    const Tensor& y = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    int ia = a.id(), ib = b.id();
    return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        if (g.needs_grad(ia)) g.grad(ia) += gy;
        if (g.needs_grad(ib)) {
            Tensor& gb = g.grad(ib);
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
        }
    });
}

Var mul(Var a, Var b)
{
    require_same(a, b, "mul");
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
    int ia = a.id(), ib = b.id();
    return a.graph().record(std::move(out), {a, b}, [ia, ib](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        const Tensor& y = g.value(ib);
        if (g.needs_grad(ia)) {
            Tensor& gx = g.grad(ia);
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i];
        }
        if (g.needs_grad(ib)) {
            Tensor& gb = g.grad(ib);
            for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * x[i];
        }
    });
}

Var scale(Var a, double s)
{
    int ia = a.id();
    return unary(a, [s](double v) { return v * s; }, [ia, s](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * s;
    });
}

Var add_scalar(Var a, double s)
{
    int ia = a.id();
    return unary(a, [s](double v) { return v + s; }, [ia](Graph& g, int self) { g.grad(ia) += g.grad(self); });
}

Var one_minus(Var a)
{
    int ia = a.id();
    return unary(a, [](double v) { return 1.0 - v; }, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] -= gy[i];
    });
}

Var reciprocal(Var a)
{
    int ia = a.id();
    return unary(a, [](double v) { return 1.0 / v; }, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& y = g.value(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] -= gy[i] * y[i] * y[i];
    });
}

Var leaky_relu(Var a, double slope)
{
    int ia = a.id();
    return unary(a, [slope](double v) { return v > 0.0 ? v : slope * v; }, [ia, slope](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += x[i] > 0.0 ? gy[i] : slope * gy[i];
    });
}

Var scale_by(Var a, Var s)
{
    if (s.value().size() != 1)
        throw std::invalid_argument("scale_by: scale must hold one element, got " + shape_str(s.shape()));
    const double k = s.value()[0];
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * k;
    int ia = a.id(), is = s.id();
    return a.graph().record(std::move(out), {a, s}, [ia, is](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        const double k = g.value(is)[0];
        if (g.needs_grad(ia)) {
            Tensor& gx = g.grad(ia);
            for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * k;
        }
        if (g.needs_grad(is)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < gy.size(); ++i) acc += gy[i] * x[i];
            g.grad(is)[0] += acc;
        }
    });
}

Var relu(Var a)
{
    int ia = a.id();
    return unary(a, [](double v) { return v > 0.0 ? v : 0.0; }, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i)
            if (x[i] > 0.0) gx[i] += gy[i];
    });
}

Var sigmoid(Var a)
{
    int ia = a.id();
    return unary(a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& y = g.value(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * y[i] * (1.0 - y[i]);
    });
}

Var tanh(Var a)
{
    int ia = a.id();
    return unary(a, [](double v) { return std::tanh(v); }, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& y = g.value(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * (1.0 - y[i] * y[i]);
    });
}

Var log(Var a, double eps)
{
    int ia = a.id();
    return unary(a, [eps](double v) { return std::log(v + eps); }, [ia, eps](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] / (x[i] + eps);
    });
}

// --------------------------------------------------------------- broadcasting

Var add_channel_bias(Var x, Var bias)
{
    const Tensor& xv = x.value();
    const int c = xv.dim(0);
    if (bias.value().size() != static_cast<std::size_t>(c))
        throw std::invalid_argument("add_channel_bias: bias " + shape_str(bias.shape()) + " for input " +
                                    shape_str(xv.shape()));
    const std::size_t inner = xv.size() / static_cast<std::size_t>(c);
    Tensor out = xv;
    const Tensor& b = bias.value();
    for (int ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < inner; ++i) out[ch * inner + i] += b[static_cast<std::size_t>(ch)];
    int ix = x.id(), ib = bias.id();
    return x.graph().record(std::move(out), {x, bias}, [ix, ib, c, inner](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        if (g.needs_grad(ix)) g.grad(ix) += gy;
        if (g.needs_grad(ib)) {
            Tensor& gb = g.grad(ib);
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::size_t i = 0; i < inner; ++i) acc += gy[ch * inner + i];
                gb[static_cast<std::size_t>(ch)] += acc;
            }
        }
    });
}

Var broadcast_spatial(Var v, int h, int w)
{
    const Tensor& vv = v.value();
    const int c = static_cast<int>(vv.size());
    if (vv.rank() > 2 || (vv.rank() == 2 && vv.dim(1) != 1))
        throw std::invalid_argument("broadcast_spatial: expected a vector, got " + shape_str(vv.shape()));
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        std::fill_n(out.data() + ch * hw, hw, vv[static_cast<std::size_t>(ch)]);
    int iv = v.id();
    return v.graph().record(std::move(out), {v}, [iv, c, hw](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gv = g.grad(iv);
        for (int ch = 0; ch < c; ++ch) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i) acc += gy[ch * hw + i];
            gv[static_cast<std::size_t>(ch)] += acc;
        }
    });
}

// ------------------------------------------------------------- linear algebra

Var matmul(Var a, Var b)
{
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k)
        throw std::invalid_argument("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    Tensor out({m, n});
    as_mat(out, m, n).noalias() = as_mat(a.value(), m, k) * as_mat(b.value(), k, n);
    count_flops(2ull * m * k * n);
    int ia = a.id(), ib = b.id();
    return a.graph().record(std::move(out), {a, b}, [ia, ib, m, k, n](Graph& g, int self) {
        auto gy = as_mat(std::as_const(g.grad(self)), m, n);
        if (g.needs_grad(ia)) as_mat(g.grad(ia), m, k).noalias() += gy * as_mat(g.value(ib), k, n).transpose();
        if (g.needs_grad(ib)) as_mat(g.grad(ib), k, n).noalias() += as_mat(g.value(ia), m, k).transpose() * gy;
    });
}

Var transpose(Var a)
{
    require_rank(a, 2, "transpose");
    const int m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    as_mat(out, n, m) = as_mat(a.value(), m, n).transpose();
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, m, n](Graph& g, int self) {
        as_mat(g.grad(ia), m, n) += as_mat(std::as_const(g.grad(self)), n, m).transpose();
    });
}

// ---------------------------------------------------------------------- shape

Var reshape(Var a, Shape shape)
{
    Tensor out = a.value().reshaped(std::move(shape));
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
}

Var concat(const std::vector<Var>& xs)
{
    if (xs.empty()) throw std::invalid_argument("concat: no inputs");
    Shape tail(xs[0].shape().begin() + 1, xs[0].shape().end());
    int rows = 0;
    for (const Var& x : xs) {
        Shape t(x.shape().begin() + 1, x.shape().end());
        if (t != tail)
            throw std::invalid_argument("concat: trailing shapes differ " + shape_str(xs[0].shape()) + " vs " +
                                        shape_str(x.shape()));
        rows += x.dim(0);
    }
    Shape shape = xs[0].shape();
    shape[0] = rows;
    Tensor out(shape);
    std::vector<int> ids;
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const Var& x : xs) {
        std::copy(x.value().data(), x.value().data() + x.value().size(), out.data() + off);
        ids.push_back(x.id());
        offsets.push_back(off);
        off += x.value().size();
    }
    return xs[0].graph().record(std::move(out), xs, [ids, offsets](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        for (std::size_t j = 0; j < ids.size(); ++j) {
            if (!g.needs_grad(ids[j])) continue;
            Tensor& gx = g.grad(ids[j]);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[offsets[j] + i];
        }
    });
}

Var slice_rows(Var a, int begin, int end)
{
    const int rows = a.dim(0);
    if (begin < 0 || end > rows || begin > end)
        throw std::invalid_argument("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                    ") outside " + shape_str(a.shape()));
    Shape shape = a.shape();
    shape[0] = end - begin;
    const std::size_t inner = a.value().size() / static_cast<std::size_t>(rows);
    Tensor out(shape);
    std::copy_n(a.value().data() + begin * inner, out.size(), out.data());
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, begin, inner](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[begin * inner + i] += gy[i];
    });
}

Var gather_columns(Var a, const std::vector<int>& columns)
{
    require_rank(a, 2, "gather_columns");
    const int r = a.dim(0), c = a.dim(1);
    const int n = static_cast<int>(columns.size());
    for (int col : columns)
        if (col < 0 || col >= c)
            throw std::invalid_argument("gather_columns: column " + std::to_string(col) + " outside " +
                                        shape_str(a.shape()));
    Tensor out({r, n});
    const Tensor& x = a.value();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = x(i, columns[static_cast<std::size_t>(j)]);
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, columns, r, n](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < n; ++j) gx(i, columns[static_cast<std::size_t>(j)]) += gy(i, j);
    });
}

namespace {
void require_patch_tiling(int h, int w, int p, const char* what, const Shape& shape)
{
    if (p < 1 || h % p != 0 || w % p != 0)
        throw std::invalid_argument(std::string(what) + ": patch " + std::to_string(p) + " does not tile " +
                                    shape_str(shape));
}

// Row of patch element (c, dy, dx) and column of patch (py, px), both row-major.
template <class F>
void for_each_patch_element(int c, int h, int w, int p, F&& f)
{
    const int gw = w / p;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int row = (ch * p + y % p) * p + x % p;
                const int col = (y / p) * gw + x / p;
                f(ch, y, x, row, col);
            }
}
} // namespace

Var patches_to_columns(Var x, int p)
{
    require_rank(x, 3, "patches_to_columns");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    require_patch_tiling(h, w, p, "patches_to_columns", x.shape());
    const int cols = (h / p) * (w / p);
    Tensor out({c * p * p, cols});
    const Tensor& v = x.value();
    for_each_patch_element(c, h, w, p, [&](int ch, int y, int xx, int row, int col) { out(row, col) = v(ch, y, xx); });
    int ix = x.id();
    return x.graph().record(std::move(out), {x}, [ix, c, h, w, p](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ix);
        for_each_patch_element(c, h, w, p, [&](int ch, int y, int xx, int row, int col) { gx(ch, y, xx) += gy(row, col); });
    });
}

Var columns_to_patches(Var m, int c, int h, int w, int p)
{
    require_rank(m, 2, "columns_to_patches");
    require_patch_tiling(h, w, p, "columns_to_patches", {c, h, w});
    if (m.dim(0) != c * p * p || m.dim(1) != (h / p) * (w / p))
        throw std::invalid_argument("columns_to_patches: matrix " + shape_str(m.shape()) + " does not match map " +
                                    shape_str({c, h, w}) + " with patch " + std::to_string(p));
    Tensor out({c, h, w});
    const Tensor& v = m.value();
    for_each_patch_element(c, h, w, p, [&](int ch, int y, int xx, int row, int col) { out(ch, y, xx) = v(row, col); });
    int im = m.id();
    return m.graph().record(std::move(out), {m}, [im, c, h, w, p](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gm = g.grad(im);
        for_each_patch_element(c, h, w, p, [&](int ch, int y, int xx, int row, int col) { gm(row, col) += gy(ch, y, xx); });
    });
}

Var scatter_columns(Var a, const std::vector<int>& columns, int total)
{
    require_rank(a, 2, "scatter_columns");
    const int r = a.dim(0), n = a.dim(1);
    if (static_cast<int>(columns.size()) != n)
        throw std::invalid_argument("scatter_columns: " + std::to_string(columns.size()) + " targets for " +
                                    shape_str(a.shape()));
    Tensor out({r, total});
    const Tensor& x = a.value();
    for (int j = 0; j < n; ++j) {
        const int col = columns[static_cast<std::size_t>(j)];
        if (col < 0 || col >= total)
            throw std::invalid_argument("scatter_columns: column " + std::to_string(col) + " outside width " +
                                        std::to_string(total));
        for (int i = 0; i < r; ++i) out(i, col) += x(i, j);
    }
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, columns, r, n](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ia);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < n; ++j) gx(i, j) += gy(i, columns[static_cast<std::size_t>(j)]);
    });
}

// ----------------------------------------------------------------- reductions

Var sum(Var a)
{
    double s = 0.0;
    for (double v : a.value().values()) s += v;
    int ia = a.id();
    return a.graph().record(Tensor({1}, {s}), {a}, [ia](Graph& g, int self) {
        const double gy = g.grad(self)[0];
        for (double& v : g.grad(ia).values()) v += gy;
    });
}

Var mean(Var a)
{
    const double n = static_cast<double>(a.value().size());
    return scale(sum(a), 1.0 / n);
}

// ------------------------------------------------------------------- row-wise

Var softmax_rows(Var a)
{
    require_rank(a, 2, "softmax_rows");
    const int r = a.dim(0), c = a.dim(1);
    Tensor out({r, c});
    const Tensor& x = a.value();
    for (int i = 0; i < r; ++i) {
        double mx = -INFINITY;
        for (int j = 0; j < c; ++j) mx = std::max(mx, x(i, j));
        double z = 0.0;
        for (int j = 0; j < c; ++j) z += (out(i, j) = std::exp(x(i, j) - mx));
        for (int j = 0; j < c; ++j) out(i, j) /= z;
    }
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, r, c](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& y = g.value(self);
        Tensor& gx = g.grad(ia);
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += gy(i, j) * y(i, j);
            for (int j = 0; j < c; ++j) gx(i, j) += y(i, j) * (gy(i, j) - dot);
        }
    });
}

Var normalize_rows(Var a, double eps)
{
    require_rank(a, 2, "normalize_rows");
    const int r = a.dim(0), c = a.dim(1);
    const Tensor& x = a.value();
    Tensor out({r, c});
    std::vector<double> norms(static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) s += x(i, j) * x(i, j);
        norms[static_cast<std::size_t>(i)] = std::sqrt(s);
        const double d = norms[static_cast<std::size_t>(i)] + eps;
        for (int j = 0; j < c; ++j) out(i, j) = x(i, j) / d;
    }
    int ia = a.id();
    return a.graph().record(std::move(out), {a}, [ia, r, c, eps, norms](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& x = g.value(ia);
        Tensor& gx = g.grad(ia);
        for (int i = 0; i < r; ++i) {
            const double n = norms[static_cast<std::size_t>(i)];
            const double d = n + eps;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += gy(i, j) * x(i, j);
            const double k = n > 0.0 ? dot / (d * d * n) : 0.0;
            for (int j = 0; j < c; ++j) gx(i, j) += gy(i, j) / d - k * x(i, j);
        }
    });
}

// -------------------------------------------------------------------- spatial

namespace {

struct ConvGeom {
    int c, h, w, o, kh, kw, oh, ow;
    ConvSpec spec;
};

// cols: (c*kh*kw) x (oh*ow)
void im2col(const Tensor& x, const ConvGeom& gm, Tensor& cols)
{
    const auto& s = gm.spec;
    double* dst = cols.data();
    for (int ch = 0; ch < gm.c; ++ch)
        for (int ky = 0; ky < gm.kh; ++ky)
            for (int kx = 0; kx < gm.kw; ++kx) {
                for (int oy = 0; oy < gm.oh; ++oy) {
                    const int iy = oy * s.stride - s.pad_h + ky * s.dilation;
                    for (int ox = 0; ox < gm.ow; ++ox) {
                        const int ix = ox * s.stride - s.pad_w + kx * s.dilation;
                        *dst++ = (iy >= 0 && iy < gm.h && ix >= 0 && ix < gm.w) ? x(ch, iy, ix) : 0.0;
                    }
                }
            }
}

void col2im(const Tensor& cols, const ConvGeom& gm, Tensor& gx)
{
    const auto& s = gm.spec;
    const double* src = cols.data();
    for (int ch = 0; ch < gm.c; ++ch)
        for (int ky = 0; ky < gm.kh; ++ky)
            for (int kx = 0; kx < gm.kw; ++kx) {
                for (int oy = 0; oy < gm.oh; ++oy) {
                    const int iy = oy * s.stride - s.pad_h + ky * s.dilation;
                    for (int ox = 0; ox < gm.ow; ++ox) {
                        const int ix = ox * s.stride - s.pad_w + kx * s.dilation;
                        const double v = *src++;
                        if (iy >= 0 && iy < gm.h && ix >= 0 && ix < gm.w) gx(ch, iy, ix) += v;
                    }
                }
            }
}

} // namespace

Var conv2d(Var x, Var weight, Var bias, ConvSpec spec)
{
    require_rank(x, 3, "conv2d input");
    require_rank(weight, 4, "conv2d weight");
    ConvGeom gm{x.dim(0), x.dim(1), x.dim(2), weight.dim(0), weight.dim(2), weight.dim(3), 0, 0, spec};
    if (weight.dim(1) != gm.c)
        throw std::invalid_argument("conv2d: weight " + shape_str(weight.shape()) + " does not match input " +
                                    shape_str(x.shape()));
    if (spec.stride < 1 || spec.dilation < 1) throw std::invalid_argument("conv2d: stride and dilation must be >= 1");
    gm.oh = (gm.h + 2 * spec.pad_h - spec.dilation * (gm.kh - 1) - 1) / spec.stride + 1;
    gm.ow = (gm.w + 2 * spec.pad_w - spec.dilation * (gm.kw - 1) - 1) / spec.stride + 1;
    if (gm.oh <= 0 || gm.ow <= 0) throw std::invalid_argument("conv2d: empty output for input " + shape_str(x.shape()));
    if (bias.valid() && bias.value().size() != static_cast<std::size_t>(gm.o))
        throw std::invalid_argument("conv2d: bias " + shape_str(bias.shape()) + " for " + std::to_string(gm.o) +
                                    " outputs");

    const int kdim = gm.c * gm.kh * gm.kw;
    const int npix = gm.oh * gm.ow;
    Tensor out({gm.o, gm.oh, gm.ow});
    const bool pointwise = gm.kh == 1 && gm.kw == 1 && spec.stride == 1 && spec.pad_h == 0 && spec.pad_w == 0;
    Tensor cols;
    if (pointwise) {
        as_mat(out, gm.o, npix).noalias() = as_mat(weight.value(), gm.o, kdim) * as_mat(x.value(), kdim, npix);
    } else {
        cols = Tensor({kdim, npix});
        im2col(x.value(), gm, cols);
        as_mat(out, gm.o, npix).noalias() = as_mat(weight.value(), gm.o, kdim) * as_mat(cols, kdim, npix);
    }
    if (bias.valid()) {
        const Tensor& b = bias.value();
        for (int oc = 0; oc < gm.o; ++oc)
            for (int p = 0; p < npix; ++p) out[static_cast<std::size_t>(oc) * npix + p] += b[static_cast<std::size_t>(oc)];
    }
    count_flops(2ull * gm.o * kdim * npix);

    int ix = x.id(), iw = weight.id(), ib = bias.valid() ? bias.id() : -1;
    std::vector<Var> inputs{x, weight};
    if (bias.valid()) inputs.push_back(bias);
    return x.graph().record(
        std::move(out), inputs, [ix, iw, ib, gm, kdim, npix, pointwise, cols = std::move(cols)](Graph& g, int self) {
            auto gy = as_mat(std::as_const(g.grad(self)), gm.o, npix);
            const Tensor& src = pointwise ? g.value(ix) : cols;
            if (g.needs_grad(iw)) as_mat(g.grad(iw), gm.o, kdim).noalias() += gy * as_mat(src, kdim, npix).transpose();
            if (ib >= 0 && g.needs_grad(ib)) {
                Tensor& gb = g.grad(ib);
                for (int oc = 0; oc < gm.o; ++oc) gb[static_cast<std::size_t>(oc)] += gy.row(oc).sum();
            }
            if (g.needs_grad(ix)) {
                auto w = as_mat(g.value(iw), gm.o, kdim);
                if (pointwise) {
                    as_mat(g.grad(ix), kdim, npix).noalias() += w.transpose() * gy;
                } else {
                    Tensor gcols({kdim, npix});
                    as_mat(gcols, kdim, npix).noalias() = w.transpose() * gy;
                    col2im(gcols, gm, g.grad(ix));
                }
            }
        });
}

namespace {

struct BilinearTap {
    int y0, x0;
    double ly, lx;
};

inline BilinearTap bilinear_tap(double py, double px)
{
    const double fy = std::floor(py), fx = std::floor(px);
    return {static_cast<int>(fy), static_cast<int>(fx), py - fy, px - fx};
}

inline double read_zero(const double* plane, int h, int w, int y, int x)
{
    return (y >= 0 && y < h && x >= 0 && x < w) ? plane[static_cast<std::size_t>(y) * w + x] : 0.0;
}

} // namespace

Var deform_conv2d(Var x, Var offsets, Var weight, Var bias)
{
    require_rank(x, 3, "deform_conv2d input");
    require_rank(offsets, 3, "deform_conv2d offsets");
    require_rank(weight, 4, "deform_conv2d weight");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int o = weight.dim(0);
    if (weight.dim(1) != c || weight.dim(2) != 3 || weight.dim(3) != 3)
        throw std::invalid_argument("deform_conv2d: weight " + shape_str(weight.shape()) + " for input " +
                                    shape_str(x.shape()) + " (kernel must be 3x3)");
    if (offsets.shape() != Shape{18, h, w})
        throw std::invalid_argument("deform_conv2d: offsets " + shape_str(offsets.shape()) + ", expected " +
                                    shape_str({18, h, w}));
    const int npix = h * w;
    const int kdim = c * 9;
    const Tensor& xv = x.value();
    const Tensor& off = offsets.value();

    Tensor cols({kdim, npix});
    for (int ch = 0; ch < c; ++ch) {
        const double* plane = xv.data() + static_cast<std::size_t>(ch) * npix;
        for (int k = 0; k < 9; ++k) {
            const int ky = k / 3, kx = k % 3;
            double* dst = cols.data() + static_cast<std::size_t>(ch * 9 + k) * npix;
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    const double px = xx + kx - 1 + off(2 * k, y, xx);
                    const double py = y + ky - 1 + off(2 * k + 1, y, xx);
                    const auto t = bilinear_tap(py, px);
                    const double v00 = read_zero(plane, h, w, t.y0, t.x0);
                    const double v01 = read_zero(plane, h, w, t.y0, t.x0 + 1);
                    const double v10 = read_zero(plane, h, w, t.y0 + 1, t.x0);
                    const double v11 = read_zero(plane, h, w, t.y0 + 1, t.x0 + 1);
                    dst[y * w + xx] = (1 - t.ly) * ((1 - t.lx) * v00 + t.lx * v01) + t.ly * ((1 - t.lx) * v10 + t.lx * v11);
                }
        }
    }
    Tensor out({o, h, w});
    as_mat(out, o, npix).noalias() = as_mat(weight.value(), o, kdim) * as_mat(cols, kdim, npix);
    if (bias.valid()) {
        if (bias.value().size() != static_cast<std::size_t>(o))
            throw std::invalid_argument("deform_conv2d: bias " + shape_str(bias.shape()));
        for (int oc = 0; oc < o; ++oc)
            for (int p = 0; p < npix; ++p) out[static_cast<std::size_t>(oc) * npix + p] += bias.value()[static_cast<std::size_t>(oc)];
    }
    count_flops(2ull * o * kdim * npix);

    int ix = x.id(), io = offsets.id(), iw = weight.id(), ib = bias.valid() ? bias.id() : -1;
    std::vector<Var> inputs{x, offsets, weight};
    if (bias.valid()) inputs.push_back(bias);
    return x.graph().record(std::move(out), inputs,
                            [ix, io, iw, ib, c, h, w, o, kdim, npix, cols = std::move(cols)](Graph& g, int self) {
        auto gy = as_mat(std::as_const(g.grad(self)), o, npix);
        if (g.needs_grad(iw)) as_mat(g.grad(iw), o, kdim).noalias() += gy * as_mat(cols, kdim, npix).transpose();
        if (ib >= 0 && g.needs_grad(ib)) {
            Tensor& gb = g.grad(ib);
            for (int oc = 0; oc < o; ++oc) gb[static_cast<std::size_t>(oc)] += gy.row(oc).sum();
        }
        const bool want_x = g.needs_grad(ix), want_off = g.needs_grad(io);
        if (!want_x && !want_off) return;
        Tensor gcols({kdim, npix});
        as_mat(gcols, kdim, npix).noalias() = as_mat(g.value(iw), o, kdim).transpose() * gy;
        const Tensor& xv = g.value(ix);
        const Tensor& off = g.value(io);
        Tensor* gx = want_x ? &g.grad(ix) : nullptr;
        Tensor* goff = want_off ? &g.grad(io) : nullptr;
        for (int ch = 0; ch < c; ++ch) {
            const double* plane = xv.data() + static_cast<std::size_t>(ch) * npix;
            double* gplane = gx ? gx->data() + static_cast<std::size_t>(ch) * npix : nullptr;
            for (int k = 0; k < 9; ++k) {
                const int ky = k / 3, kx = k % 3;
                const double* gsrc = gcols.data() + static_cast<std::size_t>(ch * 9 + k) * npix;
                for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx) {
                        const double gv = gsrc[y * w + xx];
                        if (gv == 0.0) continue;
                        const double px = xx + kx - 1 + off(2 * k, y, xx);
                        const double py = y + ky - 1 + off(2 * k + 1, y, xx);
                        const auto t = bilinear_tap(py, px);
                        if (gplane) {
                            const int ys[2] = {t.y0, t.y0 + 1};
                            const int xs[2] = {t.x0, t.x0 + 1};
                            const double wy[2] = {1 - t.ly, t.ly};
                            const double wx[2] = {1 - t.lx, t.lx};
                            for (int a = 0; a < 2; ++a)
                                for (int b = 0; b < 2; ++b)
                                    if (ys[a] >= 0 && ys[a] < h && xs[b] >= 0 && xs[b] < w)
                                        gplane[ys[a] * w + xs[b]] += gv * wy[a] * wx[b];
                        }
                        if (goff) {
                            const double v00 = read_zero(plane, h, w, t.y0, t.x0);
                            const double v01 = read_zero(plane, h, w, t.y0, t.x0 + 1);
                            const double v10 = read_zero(plane, h, w, t.y0 + 1, t.x0);
                            const double v11 = read_zero(plane, h, w, t.y0 + 1, t.x0 + 1);
                            (*goff)(2 * k, y, xx) += gv * ((1 - t.ly) * (v01 - v00) + t.ly * (v11 - v10));
                            (*goff)(2 * k + 1, y, xx) += gv * ((1 - t.lx) * (v10 - v00) + t.lx * (v11 - v01));
                        }
                    }
            }
        }
    });
}

namespace {

struct AxisTaps {
    std::vector<int> i0, i1;
    std::vector<double> l;
};

AxisTaps axis_taps(int in, int out)
{
    AxisTaps t;
    t.i0.resize(static_cast<std::size_t>(out));
    t.i1.resize(static_cast<std::size_t>(out));
    t.l.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
        double s = std::max((d + 0.5) * scale - 0.5, 0.0);
        int a = std::min(static_cast<int>(std::floor(s)), in - 1);
        t.i0[static_cast<std::size_t>(d)] = a;
        t.i1[static_cast<std::size_t>(d)] = std::min(a + 1, in - 1);
        t.l[static_cast<std::size_t>(d)] = std::min(s - a, 1.0);
    }
    return t;
}

} // namespace

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w)
{
    if (x.rank() != 3) throw std::invalid_argument("resize_bilinear: expected C x H x W, got " + shape_str(x.shape()));
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const AxisTaps ty = axis_taps(h, out_h), tx = axis_taps(w, out_w);
    Tensor out({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < out_h; ++y) {
            const auto yi = static_cast<std::size_t>(y);
            for (int xx = 0; xx < out_w; ++xx) {
                const auto xi = static_cast<std::size_t>(xx);
                const double top = (1 - tx.l[xi]) * x(ch, ty.i0[yi], tx.i0[xi]) + tx.l[xi] * x(ch, ty.i0[yi], tx.i1[xi]);
                const double bot = (1 - tx.l[xi]) * x(ch, ty.i1[yi], tx.i0[xi]) + tx.l[xi] * x(ch, ty.i1[yi], tx.i1[xi]);
                out(ch, y, xx) = (1 - ty.l[yi]) * top + ty.l[yi] * bot;
            }
        }
    return out;
}

Var resize_bilinear(Var x, int out_h, int out_w)
{
    require_rank(x, 3, "resize_bilinear");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    Tensor out = resize_bilinear(x.value(), out_h, out_w);
    int ix = x.id();
    return x.graph().record(std::move(out), {x}, [ix, c, h, w, out_h, out_w](Graph& g, int self) {
        const AxisTaps ty = axis_taps(h, out_h), tx = axis_taps(w, out_w);
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ix);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < out_h; ++y) {
                const auto yi = static_cast<std::size_t>(y);
                for (int xx = 0; xx < out_w; ++xx) {
                    const auto xi = static_cast<std::size_t>(xx);
                    const double v = gy(ch, y, xx);
                    gx(ch, ty.i0[yi], tx.i0[xi]) += v * (1 - ty.l[yi]) * (1 - tx.l[xi]);
                    gx(ch, ty.i0[yi], tx.i1[xi]) += v * (1 - ty.l[yi]) * tx.l[xi];
                    gx(ch, ty.i1[yi], tx.i0[xi]) += v * ty.l[yi] * (1 - tx.l[xi]);
                    gx(ch, ty.i1[yi], tx.i1[xi]) += v * ty.l[yi] * tx.l[xi];
                }
            }
    });
}

Tensor avg_pool(const Tensor& x, int k)
{
    if (x.rank() != 3 || k < 1 || x.dim(1) % k || x.dim(2) % k)
        throw std::invalid_argument("avg_pool: map " + shape_str(x.shape()) + " not divisible by " + std::to_string(k));
    const int c = x.dim(0), oh = x.dim(1) / k, ow = x.dim(2) / k;
    Tensor out({c, oh, ow});
    const double inv = 1.0 / (k * k);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx) {
                double s = 0.0;
                for (int dy = 0; dy < k; ++dy)
                    for (int dx = 0; dx < k; ++dx) s += x(ch, y * k + dy, xx * k + dx);
                out(ch, y, xx) = s * inv;
            }
    return out;
}

Var avg_pool(Var x, int k)
{
    Tensor out = avg_pool(x.value(), k);
    int ix = x.id();
    const int c = out.dim(0), oh = out.dim(1), ow = out.dim(2);
    return x.graph().record(std::move(out), {x}, [ix, k, c, oh, ow](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        Tensor& gx = g.grad(ix);
        const double inv = 1.0 / (k * k);
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx) {
                    const double v = gy(ch, y, xx) * inv;
                    for (int dy = 0; dy < k; ++dy)
                        for (int dx = 0; dx < k; ++dx) gx(ch, y * k + dy, xx * k + dx) += v;
                }
    });
}

Var layer_norm_channels(Var x, Var gain, Var bias, double eps)
{
    require_rank(x, 3, "layer_norm_channels");
    const int c = x.dim(0);
    const int npix = x.dim(1) * x.dim(2);
    if (gain.value().size() != static_cast<std::size_t>(c) || bias.value().size() != static_cast<std::size_t>(c))
        throw std::invalid_argument("layer_norm_channels: affine size does not match " + shape_str(x.shape()));
    const Tensor& xv = x.value();
    Tensor xhat(xv.shape());
    std::vector<double> inv_std(static_cast<std::size_t>(npix));
    for (int p = 0; p < npix; ++p) {
        double m = 0.0;
        for (int ch = 0; ch < c; ++ch) m += xv[static_cast<std::size_t>(ch) * npix + p];
        m /= c;
        double var = 0.0;
        for (int ch = 0; ch < c; ++ch) {
            const double d = xv[static_cast<std::size_t>(ch) * npix + p] - m;
            var += d * d;
        }
        var /= c;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(p)] = is;
        for (int ch = 0; ch < c; ++ch)
            xhat[static_cast<std::size_t>(ch) * npix + p] = (xv[static_cast<std::size_t>(ch) * npix + p] - m) * is;
    }
    Tensor out(xv.shape());
    const Tensor& gv = gain.value();
    const Tensor& bv = bias.value();
    for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < npix; ++p) {
            const auto i = static_cast<std::size_t>(ch) * npix + p;
            out[i] = xhat[i] * gv[static_cast<std::size_t>(ch)] + bv[static_cast<std::size_t>(ch)];
        }
    int ix = x.id(), ig = gain.id(), ib = bias.id();
    return x.graph().record(std::move(out), {x, gain, bias},
                            [ix, ig, ib, c, npix, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, int self) {
        const Tensor& gy = g.grad(self);
        const Tensor& gv = g.value(ig);
        if (g.needs_grad(ig) || g.needs_grad(ib)) {
            for (int ch = 0; ch < c; ++ch) {
                double sg = 0.0, sb = 0.0;
                for (int p = 0; p < npix; ++p) {
                    const auto i = static_cast<std::size_t>(ch) * npix + p;
                    sg += gy[i] * xhat[i];
                    sb += gy[i];
                }
                if (g.needs_grad(ig)) g.grad(ig)[static_cast<std::size_t>(ch)] += sg;
                if (g.needs_grad(ib)) g.grad(ib)[static_cast<std::size_t>(ch)] += sb;
            }
        }
        if (!g.needs_grad(ix)) return;
        Tensor& gx = g.grad(ix);
        for (int p = 0; p < npix; ++p) {
            double m1 = 0.0, m2 = 0.0;
            for (int ch = 0; ch < c; ++ch) {
                const auto i = static_cast<std::size_t>(ch) * npix + p;
                const double d = gy[i] * gv[static_cast<std::size_t>(ch)];
                m1 += d;
                m2 += d * xhat[i];
            }
            m1 /= c;
            m2 /= c;
            for (int ch = 0; ch < c; ++ch) {
                const auto i = static_cast<std::size_t>(ch) * npix + p;
                const double d = gy[i] * gv[static_cast<std::size_t>(ch)];
                gx[i] += inv_std[static_cast<std::size_t>(p)] * (d - m1 - xhat[i] * m2);
            }
        }
    });
}

Var local_attention(Var q, Var k, Var v, int window)
{
    require_rank(q, 3, "local_attention");
    require_same(q, k, "local_attention q/k");
    require_same(q, v, "local_attention q/v");
    const int c = q.dim(0), h = q.dim(1), w = q.dim(2);
    const int wh = std::min(window, h), ww = std::min(window, w);
    if (wh < 1 || h % wh || w % ww)
        throw std::invalid_argument("local_attention: window " + std::to_string(window) + " does not tile " +
                                    shape_str(q.shape()));
    const int n = wh * ww;
    const int npix = h * w;
    const double scale = 1.0 / std::sqrt(static_cast<double>(c));

    // token index -> pixel index, window-major
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(npix));
    for (int by = 0; by < h; by += wh)
        for (int bx = 0; bx < w; bx += ww)
            for (int dy = 0; dy < wh; ++dy)
                for (int dx = 0; dx < ww; ++dx) order.push_back((by + dy) * w + bx + dx);
    const int nwin = npix / n;

    auto gather = [&](const Tensor& t, int win) {
        RowMat m(n, c);
        for (int i = 0; i < n; ++i) {
            const int p = order[static_cast<std::size_t>(win * n + i)];
            for (int ch = 0; ch < c; ++ch) m(i, ch) = t[static_cast<std::size_t>(ch) * npix + p];
        }
        return m;
    };

    Tensor out({c, h, w});
    std::vector<RowMat> attn(static_cast<std::size_t>(nwin));
    for (int win = 0; win < nwin; ++win) {
        RowMat Q = gather(q.value(), win), K = gather(k.value(), win), V = gather(v.value(), win);
        RowMat S = (Q * K.transpose()) * scale;
        for (int i = 0; i < n; ++i) {
            S.row(i).array() -= S.row(i).maxCoeff();
            S.row(i) = S.row(i).array().exp().matrix();
            S.row(i) /= S.row(i).sum();
        }
        RowMat O = S * V;
        for (int i = 0; i < n; ++i) {
            const int p = order[static_cast<std::size_t>(win * n + i)];
            for (int ch = 0; ch < c; ++ch) out[static_cast<std::size_t>(ch) * npix + p] = O(i, ch);
        }
        attn[static_cast<std::size_t>(win)] = std::move(S);
    }
    count_flops(4ull * nwin * n * n * c);

    int iq = q.id(), ik = k.id(), iv = v.id();
    return q.graph().record(std::move(out), {q, k, v},
                            [iq, ik, iv, c, n, npix, nwin, scale, order = std::move(order), attn = std::move(attn)](Graph& g, int self) {
        auto gather = [&](const Tensor& t, int win) {
            RowMat m(n, c);
            for (int i = 0; i < n; ++i) {
                const int p = order[static_cast<std::size_t>(win * n + i)];
                for (int ch = 0; ch < c; ++ch) m(i, ch) = t[static_cast<std::size_t>(ch) * npix + p];
            }
            return m;
        };
        auto scatter = [&](Tensor& t, const RowMat& m, int win) {
            for (int i = 0; i < n; ++i) {
                const int p = order[static_cast<std::size_t>(win * n + i)];
                for (int ch = 0; ch < c; ++ch) t[static_cast<std::size_t>(ch) * npix + p] += m(i, ch);
            }
        };
        const Tensor& gy = g.grad(self);
        for (int win = 0; win < nwin; ++win) {
            const RowMat& A = attn[static_cast<std::size_t>(win)];
            RowMat dO = gather(gy, win);
            if (g.needs_grad(iv)) scatter(g.grad(iv), A.transpose() * dO, win);
            if (!g.needs_grad(iq) && !g.needs_grad(ik)) continue;
            RowMat V = gather(g.value(iv), win);
            RowMat dA = dO * V.transpose();
            RowMat dS(n, n);
            for (int i = 0; i < n; ++i) {
                const double dot = A.row(i).dot(dA.row(i));
                dS.row(i) = (A.row(i).array() * (dA.row(i).array() - dot)).matrix();
            }
            dS *= scale;
            if (g.needs_grad(iq)) scatter(g.grad(iq), dS * gather(g.value(ik), win), win);
            if (g.needs_grad(ik)) scatter(g.grad(ik), dS.transpose() * gather(g.value(iq), win), win);
        }
    });
}

// --------------------------------------------------------------------- losses

Var bce_with_logits_sum(Var logits, const Tensor& target)
{
    require_same_shape(logits.value(), target, "bce_with_logits_sum");
    const Tensor& z = logits.value();
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        s += std::max(z[i], 0.0) - z[i] * target[i] + std::log1p(std::exp(-std::abs(z[i])));
    int iz = logits.id();
    return logits.graph().record(Tensor({1}, {s}), {logits}, [iz, target](Graph& g, int self) {
        const double gy = g.grad(self)[0];
        const Tensor& z = g.value(iz);
        Tensor& gz = g.grad(iz);
        for (std::size_t i = 0; i < z.size(); ++i) gz[i] += gy * (1.0 / (1.0 + std::exp(-z[i])) - target[i]);
    });
}

Var l1_mean(Var a, const Tensor& target)
{
    require_same_shape(a.value(), target, "l1_mean");
    const Tensor& x = a.value();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - target[i]);
    const double n = static_cast<double>(x.size());
    int ia = a.id();
    return a.graph().record(Tensor({1}, {s / n}), {a}, [ia, target, n](Graph& g, int self) {
        const double gy = g.grad(self)[0] / n;
        const Tensor& x = g.value(ia);
        Tensor& gx = g.grad(ia);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - target[i];
            gx[i] += gy * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
        }
    });
}

Tensor sigmoid(const Tensor& t)
{
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-t[i]));
    return out;
}

} // namespace sahm::ops
