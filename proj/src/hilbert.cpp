#include "dispcascade/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace dispcascade {

// --------------------------- HilbertSpace ------------------------------------

HilbertSpace::HilbertSpace(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw DimensionError("HilbertSpace: dims must be non-empty");
    long long total = 1;
    for (int d : dims_) {
        if (d < 1) throw DimensionError("HilbertSpace: every dimension must be >= 1");
        total *= d;
        if (total > (1 << 20)) throw DimensionError("HilbertSpace: total dimension too large");
    }
    total_dim_ = static_cast<int>(total);
}

int HilbertSpace::flat_index(const std::vector<int>& local_indices) const {
    if (static_cast<int>(local_indices.size()) != num_subsystems())
        throw DimensionError("flat_index: one local index per subsystem required");
    int idx = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        const int n = local_indices[k];
        if (n < 0 || n >= dims_[k])
            throw DimensionError("flat_index: local index out of range");
        idx = idx * dims_[k] + n;
    }
    return idx;
}

// --------------------------- Operator ----------------------------------------

Operator::Operator(HilbertSpace space, Matrix m)
    : space_(std::move(space)), matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols())
        throw DimensionError("Operator: matrix must be square");
    if (matrix_.rows() != space_.total_dim())
        throw SpaceMismatchError("Operator: matrix dimension does not match space");
}

Operator Operator::zero(const HilbertSpace& space) {
    return Operator(space, Matrix::Zero(space.total_dim(), space.total_dim()));
}

Operator Operator::identity(const HilbertSpace& space) {
    return Operator(space, Matrix::Identity(space.total_dim(), space.total_dim()));
}

bool Operator::is_hermitian(double tol) const {
    return (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

namespace {
void require_same_space(const Operator& a, const Operator& b, const char* what) {
    if (a.space() != b.space())
        throw SpaceMismatchError(std::string(what) + ": operators on different spaces");
}
} // namespace

Operator operator+(const Operator& a, const Operator& b) {
    require_same_space(a, b, "add");
    return Operator(a.space_, a.matrix_ + b.matrix_);
}

Operator operator-(const Operator& a, const Operator& b) {
    require_same_space(a, b, "subtract");
    return Operator(a.space_, a.matrix_ - b.matrix_);
}

Operator operator*(const Operator& a, const Operator& b) {
    require_same_space(a, b, "multiply");
    return Operator(a.space_, a.matrix_ * b.matrix_);
}

Operator operator*(Complex z, const Operator& a) { return Operator(a.space_, z * a.matrix_); }
Operator operator*(double z, const Operator& a) { return Operator(a.space_, z * a.matrix_); }

Operator adjoint(const Operator& a) { return a.adjoint(); }
Operator add(const Operator& a, const Operator& b) { return a + b; }
Operator scale(Complex z, const Operator& a) { return z * a; }
Operator multiply(const Operator& a, const Operator& b) { return a * b; }

Operator commutator(const Operator& a, const Operator& b) {
    require_same_space(a, b, "commutator");
    return Operator(a.space(), a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

Complex trace(const Operator& a) { return a.trace(); }

// --------------------------- Local building blocks ---------------------------

Matrix lowering_matrix(int dim) {
    if (dim < 2) throw DimensionError("lowering_matrix: dim must be >= 2");
    Matrix m = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) m(n - 1, n) = std::sqrt(static_cast<double>(n));
    return m;
}

Matrix number_matrix(int dim) {
    if (dim < 1) throw DimensionError("number_matrix: dim must be >= 1");
    Matrix m = Matrix::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) m(n, n) = static_cast<double>(n);
    return m;
}

Operator lowering_op(int dim) {
    return Operator(HilbertSpace({dim}), lowering_matrix(dim));
}

Operator embed(const Matrix& local_op, const HilbertSpace& space, int position) {
    const auto& dims = space.dims();
    if (position < 0 || position >= space.num_subsystems())
        throw SpaceMismatchError("embed: position out of range");
    if (local_op.rows() != local_op.cols() || local_op.rows() != dims[position])
        throw SpaceMismatchError("embed: local operator does not fit its slot");

    int left = 1, right = 1;
    for (int k = 0; k < position; ++k) left *= dims[k];
    for (int k = position + 1; k < space.num_subsystems(); ++k) right *= dims[k];
    const int d = dims[position];

    Matrix out = Matrix::Zero(space.total_dim(), space.total_dim());
    for (int l = 0; l < left; ++l) {
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const Complex v = local_op(i, j);
                if (v == Complex(0.0, 0.0)) continue;
                const int row0 = (l * d + i) * right;
                const int col0 = (l * d + j) * right;
                for (int r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
            }
        }
    }
    return Operator(space, std::move(out));
}

Matrix partial_trace(const Matrix& m, const std::vector<int>& dims,
                     const std::vector<int>& keep) {
    int total = 1;
    for (int d : dims) total *= d;
    if (m.rows() != total || m.cols() != total)
        throw SpaceMismatchError("partial_trace: matrix does not match dims");
    for (std::size_t k = 0; k + 1 < keep.size(); ++k)
        if (keep[k] >= keep[k + 1])
            throw SpaceMismatchError("partial_trace: keep indices must be strictly increasing");
    for (int k : keep)
        if (k < 0 || k >= static_cast<int>(dims.size()))
            throw SpaceMismatchError("partial_trace: keep index out of range");

    std::vector<int> traced;
    for (int k = 0; k < static_cast<int>(dims.size()); ++k)
        if (std::find(keep.begin(), keep.end(), k) == keep.end()) traced.push_back(k);

    int keep_dim = 1, traced_dim = 1;
    for (int k : keep) keep_dim *= dims[k];
    for (int k : traced) traced_dim *= dims[k];

    // Strides of each subsystem in the flat index.
    std::vector<int> stride(dims.size());
    int s = 1;
    for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
        stride[k] = s;
        s *= dims[k];
    }

    // Flat offsets for every kept and traced multi-index.
    auto offsets = [&](const std::vector<int>& subs) {
        int n = 1;
        for (int k : subs) n *= dims[k];
        std::vector<int> off(n, 0);
        int rep = 1;
        for (int k : subs) {
            const int d = dims[k];
            const int block = n / (rep * d);
            for (int i = 0; i < n; ++i) {
                const int digit = (i / block) % d;
                off[i] += digit * stride[k];
            }
            rep *= d;
        }
        return off;
    };
    const std::vector<int> keep_off = offsets(keep);
    const std::vector<int> traced_off = offsets(traced);

    Matrix out = Matrix::Zero(keep_dim, keep_dim);
    for (int i = 0; i < keep_dim; ++i)
        for (int j = 0; j < keep_dim; ++j) {
            Complex sum(0.0, 0.0);
            for (int t = 0; t < traced_dim; ++t)
                sum += m(keep_off[i] + traced_off[t], keep_off[j] + traced_off[t]);
            out(i, j) = sum;
        }
    return out;
}

Operator partial_trace(const Operator& a, const std::vector<int>& keep) {
    std::vector<int> kept_dims;
    for (int k : keep) kept_dims.push_back(a.space().dims().at(k));
    return Operator(HilbertSpace(kept_dims),
                    partial_trace(a.matrix(), a.space().dims(), keep));
}

// --------------------------- DensityMatrix -----------------------------------

DensityMatrix::DensityMatrix(Operator op, const Tolerances& tol, bool check_positivity)
    : op_(std::move(op)) {
    const Matrix& m = op_.matrix();
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.herm)
        throw std::invalid_argument("DensityMatrix: not Hermitian within tolerance");
    const double tr_err = std::abs(m.trace() - Complex(1.0, 0.0));
    if (tr_err > tol.trace)
        throw std::invalid_argument("DensityMatrix: trace not 1 within tolerance");
    if (check_positivity) {
        if (min_eigenvalue() < -tol.positivity)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond tolerance");
    }
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, int basis_index) {
    if (basis_index < 0 || basis_index >= space.total_dim())
        throw DimensionError("DensityMatrix::pure: basis index out of range");
    Matrix m = Matrix::Zero(space.total_dim(), space.total_dim());
    m(basis_index, basis_index) = 1.0;
    return DensityMatrix(Operator(space, std::move(m)), unchecked_tag{});
}

DensityMatrix DensityMatrix::pure(const HilbertSpace& space, const Vector& ket) {
    if (ket.size() != space.total_dim())
        throw SpaceMismatchError("DensityMatrix::pure: ket does not match space");
    const double n2 = ket.squaredNorm();
    if (n2 <= 0.0) throw std::invalid_argument("DensityMatrix::pure: zero vector");
    Matrix m = (ket * ket.adjoint()) / n2;
    return DensityMatrix(Operator(space, std::move(m)), unchecked_tag{});
}

DensityMatrix DensityMatrix::unchecked(Operator op) {
    return DensityMatrix(std::move(op), unchecked_tag{});
}

double DensityMatrix::min_eigenvalue() const {
    const Matrix& m = op_.matrix();
    Matrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

Complex expectation(const Operator& a, const DensityMatrix& rho) {
    if (a.space() != rho.space())
        throw SpaceMismatchError("expectation: operator and state on different spaces");
    return (a.matrix() * rho.matrix()).trace();
}

} // namespace dispcascade
