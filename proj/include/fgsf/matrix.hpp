#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace fgsf::ndmath {

// Allocator that leaves doubles default-initialized on resize, so buffers
// that get fully overwritten skip the zero-fill pass.
template <typename T>
struct DefaultInitAlloc : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = DefaultInitAlloc<U>;
    };
    template <typename U>
    void construct(U* p) noexcept(std::is_nothrow_default_constructible_v<U>) {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

using DoubleBuffer = std::vector<double, DefaultInitAlloc<double>>;

// Dense row-major matrix of 64-bit reals.
struct Matrix {
    int rows = 0;
    int cols = 0;
    DoubleBuffer data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    // Contents unspecified; every element must be written before use.
    static Matrix uninit(int r, int c) {
        Matrix m;
        m.rows = r;
        m.cols = c;
        m.data.resize(static_cast<size_t>(r) * c);
        return m;
    }

    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return data.size(); }
    bool all_finite() const;
};

Matrix identity(int n);

// c = a * b; throws on a.cols != b.rows with both shapes in the message.
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// c = a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace fgsf::ndmath
