#pragma once

#include <functional>
#include <vector>

#include "dispcascade/hilbert.hpp"

namespace dispcascade {

// Real-valued time envelope; an empty function means a constant factor 1.
using Envelope = std::function<double(double)>;

// Hermitian Hamiltonian contribution, optionally modulated in time.
struct HamiltonianTerm {
    Operator op;
    Envelope envelope;  // empty => static
};

// Jump operator, rate factors (the sqrt(gamma)'s) already included.
struct CollapseTerm {
    Operator op;
};

// D[a]rho = a rho a^dag - (a^dag a rho + rho a^dag a)/2
Matrix dissipator(const Matrix& a, const Matrix& rho);

// ----------------------------- Master equation -------------------------------

// drho/dt = -i [H(t), rho] + sum_k D[L_k] rho. All terms must share one space;
// Hamiltonian terms must be Hermitian (checked to 1e-10 entrywise, static
// part assembled once).
class MasterEquation {
public:
    MasterEquation(HilbertSpace space, std::vector<HamiltonianTerm> h_terms,
                   std::vector<CollapseTerm> c_terms);

    const HilbertSpace& space() const noexcept { return space_; }
    int dim() const noexcept { return space_.total_dim(); }
    const std::vector<HamiltonianTerm>& h_terms() const noexcept { return h_terms_; }
    const std::vector<CollapseTerm>& c_terms() const noexcept { return c_terms_; }

    Matrix hamiltonian(double t) const;
    Matrix rhs(double t, const Matrix& rho) const;

    // Allocation-free path used by the integrator.
    struct Workspace {
        Matrix h, a, b;
    };
    void apply_rhs(double t, const Matrix& rho, Matrix& out, Workspace& ws) const;

    // Largest collapse rate ||L||_2^2 over the collapse terms (0 if none).
    double max_collapse_rate() const noexcept { return max_collapse_rate_; }

private:
    HilbertSpace space_;
    std::vector<HamiltonianTerm> h_terms_;
    std::vector<CollapseTerm> c_terms_;

    Matrix h_static_;                       // sum of terms without envelope
    std::vector<std::size_t> h_dynamic_;    // indices of enveloped terms
    std::vector<Matrix> ldag_l_;            // cached L^dag L per collapse term
    double max_collapse_rate_ = 0.0;
};

// ----------------------------- Integration -----------------------------------

struct StepControl {
    double abs_tol = 1e-10;   // absolute error target per unit time
    double initial_step = 0;  // 0 => min(1/(50 max rate), 1/(50 |H|), span/1000)
    double min_step = 0;      // 0 => 1e-12 * span
    double max_step = 0;      // 0 => span
    double fixed_step = 0;    // > 0 => plain fixed-step RK4, no adaptivity
    int samples = 200;        // recorded sample times, endpoints included
    bool store_states = true; // false records drift diagnostics only
    bool store_every_step = false;  // full-resolution storage (adaptive mode)
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;  // empty when store_states = false
    double trace_drift = 0.0;           // max |tr rho - 1| over accepted steps
    double herm_drift = 0.0;            // max entrywise |rho - rho^dag| at samples
    long long steps_taken = 0;

    const DensityMatrix& final_state() const { return states.back(); }
    // Diagnostic: min eigenvalue over `count` samples spread across the
    // recorded states (count <= 0 means all of them).
    double min_eigenvalue(int count = 0) const;
};

// Classical RK4 with step-doubling error control (no renormalization; trace
// drift is the accuracy signal). Throws IntegrationError when the required
// step falls below the floor.
Trajectory integrate(const MasterEquation& me, const DensityMatrix& rho0,
                     double t0, double t1, const StepControl& control = {});

} // namespace dispcascade
