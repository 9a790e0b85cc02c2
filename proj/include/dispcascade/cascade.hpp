#pragma once

#include <string>
#include <vector>

#include "dispcascade/lindblad.hpp"

namespace dispcascade {

// Local Hamiltonian contribution of one subsystem, in its own space.
struct LocalTerm {
    Matrix op;          // dim x dim, Hermitian
    Envelope envelope;  // empty => static
};

// One link of the cascade. `lowering` is the operator through which the
// subsystem couples to the one-way field (the sqrt(gamma) factor is applied
// by the builders). For a composite subsystem such as atom+cavity it is the
// cavity lowering operator embedded in the local space.
struct SubsystemSpec {
    std::string label;  // "s", "f", "t", ...
    int dim = 2;
    double gamma = 0.0;
    Matrix lowering;
    std::vector<LocalTerm> hamiltonian;
};

// Upstream-first ordering s, (f x M), t. The filter spec is replicated for
// every fictitious cavity when M > 1.
struct CascadeSpec {
    SubsystemSpec source;
    SubsystemSpec filter;
    SubsystemSpec target;
    int M = 1;
};

// How the fermionic builder distributes rates over the M beam-splitter ports.
//   port_split:      D[sqrt(gs/M) cs + sqrt(gf) ck + sqrt(gt/M) ct] per port;
//                    each cavity keeps its full linewidth, single-excitation
//                    dynamics are independent of M, and M = 1 reduces to the
//                    triple cascade.
//   uniform_average: (1/M) sum_k D[sqrt(gs) cs + sqrt(gf) ck + sqrt(gt) ct];
//                    equivalent to port_split with the filter linewidth
//                    replaced by gamma_f/M, so results depend on M.
enum class MSplitConvention { port_split, uniform_average };

// rho' = -i[H_s + H_f + H_t + H_tilde, rho] + D[sqrt(gs) cs + sqrt(gf) cf + sqrt(gt) ct] rho
// with H_tilde = (i/2)(sqrt(gs gf) cs^dag cf + sqrt(gf gt) cf^dag ct
//                      + sqrt(gt gs) cs^dag ct - H.c.)
MasterEquation build_triple_cascade(const CascadeSpec& spec);

// Two-system cascade: all filter terms deleted.
MasterEquation build_pair_cascade(const SubsystemSpec& s, const SubsystemSpec& t);

// M-port beam-splitter cascade with M two-level fictitious cavities. M > 10
// is refused unless allow_large_M is set (state-space guard).
MasterEquation build_fermionic_cascade(const CascadeSpec& spec,
                                       MSplitConvention convention = MSplitConvention::port_split,
                                       bool allow_large_M = false);

} // namespace dispcascade
