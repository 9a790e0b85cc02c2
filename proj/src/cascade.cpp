#include "dispcascade/cascade.hpp"

#include <cmath>
#include <utility>

namespace dispcascade {

namespace {

void check_subsystem(const SubsystemSpec& sub) {
    if (sub.dim < 1) throw DimensionError("cascade: subsystem dimension must be >= 1");
    if (sub.gamma < 0) throw std::invalid_argument("cascade: gamma must be >= 0");
    if (sub.lowering.rows() != sub.dim || sub.lowering.cols() != sub.dim)
        throw SpaceMismatchError("cascade: lowering operator does not match subsystem dim");
    for (const auto& term : sub.hamiltonian)
        if (term.op.rows() != sub.dim || term.op.cols() != sub.dim)
            throw SpaceMismatchError("cascade: local Hamiltonian does not match subsystem dim");
}

void append_local_terms(std::vector<HamiltonianTerm>& h_terms, const SubsystemSpec& sub,
                        const HilbertSpace& space, int slot) {
    for (const auto& term : sub.hamiltonian)
        h_terms.push_back({embed(term.op, space, slot), term.envelope});
}

// (i/2) (X - X^dag), Hermitian by construction.
Operator cascade_coupling(const Operator& x) {
    return Complex(0.0, 0.5) * (x - x.adjoint());
}

} // namespace

MasterEquation build_triple_cascade(const CascadeSpec& spec) {
    if (spec.M != 1)
        throw std::invalid_argument("build_triple_cascade: requires M = 1");
    check_subsystem(spec.source);
    check_subsystem(spec.filter);
    check_subsystem(spec.target);

    const HilbertSpace space({spec.source.dim, spec.filter.dim, spec.target.dim});
    const Operator cs = embed(spec.source.lowering, space, 0);
    const Operator cf = embed(spec.filter.lowering, space, 1);
    const Operator ct = embed(spec.target.lowering, space, 2);
    const double gs = spec.source.gamma, gf = spec.filter.gamma, gt = spec.target.gamma;

    std::vector<HamiltonianTerm> h_terms;
    append_local_terms(h_terms, spec.source, space, 0);
    append_local_terms(h_terms, spec.filter, space, 1);
    append_local_terms(h_terms, spec.target, space, 2);

    const Operator x = std::sqrt(gs * gf) * (cs.adjoint() * cf) +
                       std::sqrt(gf * gt) * (cf.adjoint() * ct) +
                       std::sqrt(gt * gs) * (cs.adjoint() * ct);
    h_terms.push_back({cascade_coupling(x), Envelope{}});

    const Operator jump = std::sqrt(gs) * cs + std::sqrt(gf) * cf + std::sqrt(gt) * ct;
    return MasterEquation(space, std::move(h_terms), {CollapseTerm{jump}});
}

MasterEquation build_pair_cascade(const SubsystemSpec& s, const SubsystemSpec& t) {
    check_subsystem(s);
    check_subsystem(t);

    const HilbertSpace space({s.dim, t.dim});
    const Operator cs = embed(s.lowering, space, 0);
    const Operator ct = embed(t.lowering, space, 1);
    const double gs = s.gamma, gt = t.gamma;

    std::vector<HamiltonianTerm> h_terms;
    append_local_terms(h_terms, s, space, 0);
    append_local_terms(h_terms, t, space, 1);
    h_terms.push_back({cascade_coupling(std::sqrt(gt * gs) * (cs.adjoint() * ct)), Envelope{}});

    const Operator jump = std::sqrt(gs) * cs + std::sqrt(gt) * ct;
    return MasterEquation(space, std::move(h_terms), {CollapseTerm{jump}});
}

MasterEquation build_fermionic_cascade(const CascadeSpec& spec,
                                       MSplitConvention convention,
                                       bool allow_large_M) {
    if (spec.M < 1) throw std::invalid_argument("build_fermionic_cascade: M must be >= 1");
    if (spec.M > 10 && !allow_large_M)
        throw std::invalid_argument(
            "build_fermionic_cascade: M > 10 refused (state-space guard; override available)");
    check_subsystem(spec.source);
    check_subsystem(spec.filter);
    check_subsystem(spec.target);
    if (spec.filter.dim != 2)
        throw DimensionError("build_fermionic_cascade: fictitious cavities must have dim 2");

    const int M = spec.M;
    std::vector<int> dims;
    dims.push_back(spec.source.dim);
    for (int k = 0; k < M; ++k) dims.push_back(spec.filter.dim);
    dims.push_back(spec.target.dim);
    const HilbertSpace space(dims);

    const Operator cs = embed(spec.source.lowering, space, 0);
    const Operator ct = embed(spec.target.lowering, space, M + 1);
    std::vector<Operator> ck;
    ck.reserve(M);
    for (int k = 0; k < M; ++k) ck.push_back(embed(spec.filter.lowering, space, 1 + k));

    const double gs = spec.source.gamma, gf = spec.filter.gamma, gt = spec.target.gamma;
    // Per-port rates: the source/target couplings are split across the M
    // ports; with port_split each cavity keeps its full linewidth.
    const double gs_port = gs / M;
    const double gt_port = gt / M;
    const double gf_port = convention == MSplitConvention::port_split ? gf : gf / M;

    std::vector<HamiltonianTerm> h_terms;
    append_local_terms(h_terms, spec.source, space, 0);
    for (int k = 0; k < M; ++k) append_local_terms(h_terms, spec.filter, space, 1 + k);
    append_local_terms(h_terms, spec.target, space, M + 1);

    Operator x = Operator::zero(space);
    std::vector<CollapseTerm> c_terms;
    c_terms.reserve(M);
    for (int k = 0; k < M; ++k) {
        x = x + std::sqrt(gs_port * gf_port) * (cs.adjoint() * ck[k]) +
            std::sqrt(gf_port * gt_port) * (ck[k].adjoint() * ct) +
            std::sqrt(gt_port * gs_port) * (cs.adjoint() * ct);
        const Operator jump = std::sqrt(gs_port) * cs + std::sqrt(gf_port) * ck[k] +
                              std::sqrt(gt_port) * ct;
        c_terms.push_back(CollapseTerm{jump});
    }
    h_terms.push_back({cascade_coupling(x), Envelope{}});

    return MasterEquation(space, std::move(h_terms), std::move(c_terms));
}

} // namespace dispcascade
