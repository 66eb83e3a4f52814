#pragma once

#include "fgsf/matrix.hpp"

#include <vector>

namespace fgsf::ndmath {

struct EigDecomposition {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j is the eigenvector for values[j]
};

// Cyclic Jacobi eigensolver for symmetric matrices. Deterministic sweep
// order; eigenvalues sorted descending; each eigenvector's largest-magnitude
// component is made positive. Throws on non-symmetric input (tolerance
// 1e-9 * max|entry|).
EigDecomposition sym_eig(const Matrix& m);

} // namespace fgsf::ndmath
