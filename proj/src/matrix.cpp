#include "ddcrnn/matrix.hpp"

#include <cmath>
#include <cstring>

namespace ddcrnn {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ValidationError(std::string(op) + ": shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ValidationError("matmul: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix c(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    // i-k-j order keeps the inner loop contiguous on both b and c.
    for (int i = 0; i < n; ++i) {
        const double* arow = a.data() + static_cast<size_t>(i) * k;
        double* crow = c.data() + static_cast<size_t>(i) * m;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b.data() + static_cast<size_t>(kk) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ValidationError("matmul_nt: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix c(a.rows(), b.rows());
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i) {
        const double* arow = a.data() + static_cast<size_t>(i) * k;
        double* crow = c.data() + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* brow = b.data() + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = acc;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ValidationError("matmul_tn: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
    Matrix c(a.cols(), b.cols());
    const int n = a.cols(), k = a.rows(), m = b.cols();
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a.data() + static_cast<size_t>(kk) * n;
        const double* brow = b.data() + static_cast<size_t>(kk) * m;
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.data() + static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void add_inplace(Matrix& dst, const Matrix& src) {
    require_same_shape(dst, src, "add_inplace");
    double* d = dst.data();
    const double* s = src.data();
    for (size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void axpy_inplace(Matrix& dst, double alpha, const Matrix& src) {
    require_same_shape(dst, src, "axpy_inplace");
    double* d = dst.data();
    const double* s = src.data();
    for (size_t i = 0; i < dst.size(); ++i) d[i] += alpha * s[i];
}

void scale_inplace(Matrix& m, double alpha) {
    double* d = m.data();
    for (size_t i = 0; i < m.size(); ++i) d[i] *= alpha;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = std::fabs(a.data()[i] - b.data()[i]);
        if (d > worst) worst = d;
    }
    return worst;
}

bool all_finite(const Matrix& m) {
    for (size_t i = 0; i < m.size(); ++i)
        if (!std::isfinite(m.data()[i])) return false;
    return true;
}

}  // namespace ddcrnn
