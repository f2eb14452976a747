// SPDX-License-Identifier: Apache-2.0
#include "pairedit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pairedit {

namespace {

std::size_t checked_count(const Shape& shape) {
    if (shape.empty()) {
        throw std::invalid_argument("tensor shape must be nonempty");
    }
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) {
            throw std::invalid_argument("tensor shape " + shape_to_string(shape) + " has a zero dimension");
        }
        n *= d;
    }
    return n;
}

void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) {
        throw std::invalid_argument(std::string(what) + ": expected a matrix, got shape " +
                                    shape_to_string(t.shape()));
    }
}

template <typename Op>
Tensor zip(const Tensor& a, const Tensor& b, const char* what, Op op) {
    require_same_shape(a, b, what);
    Tensor out(a.shape());
    auto o = out.data();
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        o[i] = op(x[i], y[i]);
    }
    ensure_finite(out, what);
    return out;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(checked_count(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_count(shape_) != data_.size()) {
        throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_to_string(shape_));
    }
    ensure_finite(*this, "tensor construction");
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    ensure_finite(t, "Tensor::full");
    return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " +
                                shape_to_string(shape_));
    }
    return shape_[axis];
}

std::size_t Tensor::rows() const {
    if (shape_.size() == 1) return 1;
    if (shape_.size() != 2) {
        throw std::invalid_argument("rows() on non-matrix shape " + shape_to_string(shape_));
    }
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() == 1) return shape_[0];
    if (shape_.size() != 2) {
        throw std::invalid_argument("cols() on non-matrix shape " + shape_to_string(shape_));
    }
    return shape_[1];
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return std::span<const double>(data_).subspan(r * c, c);
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return std::span<double>(data_).subspan(r * c, c);
}

Tensor Tensor::reshaped(Shape shape) const {
    if (checked_count(shape) != data_.size()) {
        throw std::invalid_argument("cannot reshape " + shape_to_string(shape_) + " to " +
                                    shape_to_string(shape));
    }
    Tensor out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
}

Tensor Tensor::row_copy(std::size_t r) const {
    auto src = row(r);
    return Tensor({src.size()}, std::vector<double>(src.begin(), src.end()));
}

void ensure_finite(const Tensor& t, const char* what) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw std::runtime_error(std::string(what) + ": non-finite value in result");
        }
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                                    " vs " + shape_to_string(b.shape()));
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", std::plus<>{});
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", std::minus<>{});
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", std::multiplies<>{});
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data()) v *= s;
    ensure_finite(out, "scale");
    return out;
}

Tensor axpy(const Tensor& a, double s, const Tensor& b) {
    return zip(a, b, "axpy", [s](double x, double y) { return x + s * y; });
}

void axpy_inplace(Tensor& a, double s, const Tensor& b) {
    require_same_shape(a, b, "axpy_inplace");
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
    ensure_finite(a, "axpy_inplace");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw std::invalid_argument("matmul: inner dimension mismatch " + shape_to_string(a.shape()) + " x " +
                                    shape_to_string(b.shape()));
    }
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a(i, p) * b(p, j);
            out(i, j) = acc;
        }
    }
    ensure_finite(out, "matmul");
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt");
    require_matrix(b, "matmul_nt");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
    if (b.dim(1) != k) {
        throw std::invalid_argument("matmul_nt: inner dimension mismatch " + shape_to_string(a.shape()) +
                                    " x " + shape_to_string(b.shape()) + "^T");
    }
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        auto ar = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            auto br = b.row(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            out(i, j) = acc;
        }
    }
    ensure_finite(out, "matmul_nt");
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn");
    require_matrix(b, "matmul_tn");
    const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw std::invalid_argument("matmul_tn: inner dimension mismatch " + shape_to_string(a.shape()) +
                                    "^T x " + shape_to_string(b.shape()));
    }
    Tensor out({m, n});
    // Accumulate over p in increasing order for every (i, j).
    for (std::size_t p = 0; p < k; ++p) {
        auto ar = a.row(p);
        auto br = b.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            auto orow = out.row(i);
            const double ai = ar[i];
            for (std::size_t j = 0; j < n; ++j) orow[j] += ai * br[j];
        }
    }
    ensure_finite(out, "matmul_tn");
    return out;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    Tensor out({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot: size mismatch " + shape_to_string(a.shape()) + " vs " +
                                    shape_to_string(b.shape()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    return acc;
}

double mean(const Tensor& a) {
    if (a.empty()) throw std::invalid_argument("mean of empty tensor");
    return sum(a) / static_cast<double>(a.size());
}

double squared_norm(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v * v;
    return acc;
}

double norm(const Tensor& a) {
    return std::sqrt(squared_norm(a));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    require_matrix(a, "concat_cols");
    require_matrix(b, "concat_cols");
    if (a.dim(0) != b.dim(0)) {
        throw std::invalid_argument("concat_cols: row count mismatch");
    }
    const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    Tensor out({n, ca + cb});
    for (std::size_t i = 0; i < n; ++i) {
        auto o = out.row(i);
        std::copy_n(a.row(i).begin(), ca, o.begin());
        std::copy_n(b.row(i).begin(), cb, o.begin() + static_cast<std::ptrdiff_t>(ca));
    }
    return out;
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
    require_matrix(a, "slice_cols");
    if (begin >= end || end > a.dim(1)) {
        throw std::invalid_argument("slice_cols: bad column range");
    }
    Tensor out({a.dim(0), end - begin});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        auto src = a.row(i).subspan(begin, end - begin);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Tensor stack_rows(std::span<const Tensor> rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
    const std::size_t d = rows.front().size();
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw std::invalid_argument("stack_rows: ragged rows");
        std::copy(rows[i].data().begin(), rows[i].data().end(), out.row(i).begin());
    }
    return out;
}

Tensor column_mean(const Tensor& a) {
    require_matrix(a, "column_mean");
    Tensor out({a.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out[j] += a(i, j);
    for (double& v : out.data()) v /= static_cast<double>(a.dim(0));
    return out;
}

Tensor column_variance(const Tensor& a) {
    const Tensor mu = column_mean(a);
    Tensor out({a.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) {
            const double d = a(i, j) - mu[j];
            out[j] += d * d;
        }
    for (double& v : out.data()) v /= static_cast<double>(a.dim(0));
    return out;
}

}  // namespace pairedit
