#pragma once
// Small dense row-major matrices. Model sizes stay desk-scale (N <= 2000,
// d <= 64), so everything is plain loops over doubles.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ig {

using Vec = std::vector<double>;

struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return a[r * cols + c]; }
    double* row(size_t r) { return a.data() + r * cols; }
    const double* row(size_t r) const { return a.data() + r * cols; }
    void fill(double v) { a.assign(a.size(), v); }

    bool operator==(const Mat&) const = default;
};

inline void check_shapes(size_t a, size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

// out += x * y
inline void matmul_acc(const Mat& x, const Mat& y, Mat& out) {
    check_shapes(x.cols, y.rows, "matmul");
    check_shapes(out.rows, x.rows, "matmul");
    check_shapes(out.cols, y.cols, "matmul");
    for (size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (size_t k = 0; k < x.cols; ++k) {
            double v = xi[k];
            if (v == 0.0) continue;
            const double* yk = y.row(k);
            for (size_t j = 0; j < y.cols; ++j) oi[j] += v * yk[j];
        }
    }
}

inline Mat matmul(const Mat& x, const Mat& y) {
    Mat out(x.rows, y.cols);
    matmul_acc(x, y, out);
    return out;
}

// out += xᵀ * y
inline void matmul_tn_acc(const Mat& x, const Mat& y, Mat& out) {
    check_shapes(x.rows, y.rows, "matmul_tn");
    check_shapes(out.rows, x.cols, "matmul_tn");
    check_shapes(out.cols, y.cols, "matmul_tn");
    for (size_t k = 0; k < x.rows; ++k) {
        const double* xk = x.row(k);
        const double* yk = y.row(k);
        for (size_t i = 0; i < x.cols; ++i) {
            double v = xk[i];
            if (v == 0.0) continue;
            double* oi = out.row(i);
            for (size_t j = 0; j < y.cols; ++j) oi[j] += v * yk[j];
        }
    }
}

// out += x * yᵀ
inline void matmul_nt_acc(const Mat& x, const Mat& y, Mat& out) {
    check_shapes(x.cols, y.cols, "matmul_nt");
    check_shapes(out.rows, x.rows, "matmul_nt");
    check_shapes(out.cols, y.rows, "matmul_nt");
    for (size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (size_t j = 0; j < y.rows; ++j) {
            const double* yj = y.row(j);
            double s = 0.0;
            for (size_t k = 0; k < x.cols; ++k) s += xi[k] * yj[k];
            oi[j] += s;
        }
    }
}

inline Mat matmul_nt(const Mat& x, const Mat& y) {
    Mat out(x.rows, y.rows);
    matmul_nt_acc(x, y, out);
    return out;
}

inline double dot(const Vec& a, const Vec& b) {
    check_shapes(a.size(), b.size(), "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Zero vectors compare as dissimilar to everything, keeping rankings total.
inline double cosine(const Vec& a, const Vec& b) {
    double na = norm(a);
    double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline bool all_finite(const Mat& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace ig
