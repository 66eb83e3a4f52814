#include "fgsf/matrix.hpp"

#include "fgsf/error.hpp"
#include "fgsf/kernels.hpp"

#include <cmath>
#include <string>

namespace fgsf::ndmath {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

} // namespace

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw Error(ErrorKind::DimMismatch,
                    "matmul: " + shape_str(a) + " * " + shape_str(b));
    Matrix c = Matrix::uninit(a.rows, b.cols);
    kernels::ops().matmul_nn(a.data.data(), b.data.data(), c.data.data(),
                             a.rows, a.cols, b.cols, a.cols, b.cols, c.cols);
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw Error(ErrorKind::DimMismatch,
                    "matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
    Matrix c = Matrix::uninit(a.rows, b.rows);
    kernels::ops().matmul_nt(a.data.data(), b.data.data(), c.data.data(),
                             a.rows, a.cols, b.rows, a.cols, b.cols, c.cols);
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw Error(ErrorKind::DimMismatch,
                    "matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
    Matrix c(a.cols, b.cols);
    kernels::ops().matmul_tn_acc(a.data.data(), b.data.data(), c.data.data(),
                                 a.rows, a.cols, b.cols, a.cols, b.cols, c.cols);
    return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw Error(ErrorKind::DimMismatch,
                    "max_abs_diff: " + shape_str(a) + " vs " + shape_str(b));
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

} // namespace fgsf::ndmath
