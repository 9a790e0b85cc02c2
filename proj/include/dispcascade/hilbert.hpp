#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dispcascade/errors.hpp"

namespace dispcascade {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// --------------------------- Composite space --------------------------------

// Ordered list of subsystem dimensions. The order is fixed at construction
// and must be identical across all operators used together. For the transfer
// model the convention is (source atom, source cavity, fictitious cavity or
// cavities, target atom, target cavity).
class HilbertSpace {
public:
    explicit HilbertSpace(std::vector<int> dims);

    const std::vector<int>& dims() const noexcept { return dims_; }
    int total_dim() const noexcept { return total_dim_; }
    int num_subsystems() const noexcept { return static_cast<int>(dims_.size()); }

    // Flat index of a product basis state given one local index per
    // subsystem (first subsystem is the slowest index, matching the
    // Kronecker-product ordering used by embed()).
    int flat_index(const std::vector<int>& local_indices) const;

    bool operator==(const HilbertSpace& other) const { return dims_ == other.dims_; }
    bool operator!=(const HilbertSpace& other) const { return !(*this == other); }

private:
    std::vector<int> dims_;
    int total_dim_;
};

// --------------------------- Operator ---------------------------------------

// Dense complex operator on a composite space.
class Operator {
public:
    Operator(HilbertSpace space, Matrix m);

    static Operator zero(const HilbertSpace& space);
    static Operator identity(const HilbertSpace& space);

    const HilbertSpace& space() const noexcept { return space_; }
    const Matrix& matrix() const noexcept { return matrix_; }
    int dim() const noexcept { return static_cast<int>(matrix_.rows()); }

    Operator adjoint() const { return Operator(space_, matrix_.adjoint()); }
    Complex trace() const { return matrix_.trace(); }
    bool is_hermitian(double tol = 1e-10) const;

    friend Operator operator+(const Operator& a, const Operator& b);
    friend Operator operator-(const Operator& a, const Operator& b);
    friend Operator operator*(const Operator& a, const Operator& b);
    friend Operator operator*(Complex z, const Operator& a);
    friend Operator operator*(double z, const Operator& a);

private:
    HilbertSpace space_;
    Matrix matrix_;
};

// Named aliases for the arithmetic, all space-checked.
Operator adjoint(const Operator& a);
Operator add(const Operator& a, const Operator& b);
Operator scale(Complex z, const Operator& a);
Operator multiply(const Operator& a, const Operator& b);
Operator commutator(const Operator& a, const Operator& b);
Complex trace(const Operator& a);

// --------------------------- Local building blocks --------------------------

// Truncated annihilation operator: a |n> = sqrt(n) |n-1>, entries sqrt(n) at
// (n-1, n). Requires dim >= 2.
Matrix lowering_matrix(int dim);

// Number operator adag * a (diagonal 0..dim-1).
Matrix number_matrix(int dim);

// lowering_matrix wrapped as an Operator on the single-slot space [dim].
Operator lowering_op(int dim);

// identity (x) ... (x) local_op (x) ... (x) identity, local_op in the given
// slot. local_op must match dims[position].
Operator embed(const Matrix& local_op, const HilbertSpace& space, int position);

// Trace out every subsystem not listed in `keep` (indices into dims, strictly
// increasing). Returns the reduced matrix on the kept slots, in order.
Matrix partial_trace(const Matrix& m, const std::vector<int>& dims,
                     const std::vector<int>& keep);
Operator partial_trace(const Operator& a, const std::vector<int>& keep);

// --------------------------- Density matrix ---------------------------------

struct Tolerances {
    double herm = 1e-10;       // entrywise |rho - rho^dag|
    double trace = 1e-9;       // |tr rho - 1|
    double positivity = 1e-9;  // min eigenvalue >= -positivity
};

// Density matrix with Hermiticity/trace/positivity checked at construction.
// The positivity check costs an eigenvalue solve and can be skipped; the
// unchecked() constructor is for integrator snapshots whose physicality is
// tracked separately (trace/Hermiticity drift on the trajectory).
class DensityMatrix {
public:
    explicit DensityMatrix(Operator op, const Tolerances& tol = {},
                           bool check_positivity = true);

    static DensityMatrix pure(const HilbertSpace& space, int basis_index);
    static DensityMatrix pure(const HilbertSpace& space, const Vector& ket);
    static DensityMatrix unchecked(Operator op);

    const Operator& op() const noexcept { return op_; }
    const Matrix& matrix() const noexcept { return op_.matrix(); }
    const HilbertSpace& space() const noexcept { return op_.space(); }

    // Diagnostic: smallest eigenvalue (exact Hermitian solve on (rho+rho^dag)/2).
    double min_eigenvalue() const;

private:
    struct unchecked_tag {};
    DensityMatrix(Operator op, unchecked_tag) : op_(std::move(op)) {}

    Operator op_;
};

Complex expectation(const Operator& a, const DensityMatrix& rho);

} // namespace dispcascade
