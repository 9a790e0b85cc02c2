#include "dispcascade/lindblad.hpp"

#include <algorithm>
#include <cmath>

namespace dispcascade {

Matrix dissipator(const Matrix& a, const Matrix& rho) {
    if (a.rows() != a.cols() || rho.rows() != rho.cols() || a.rows() != rho.rows())
        throw SpaceMismatchError("dissipator: shape mismatch");
    const Matrix adag = a.adjoint();
    const Matrix adag_a = adag * a;
    return a * rho * adag - 0.5 * (adag_a * rho + rho * adag_a);
}

// ----------------------------- MasterEquation --------------------------------

MasterEquation::MasterEquation(HilbertSpace space, std::vector<HamiltonianTerm> h_terms,
                               std::vector<CollapseTerm> c_terms)
    : space_(std::move(space)), h_terms_(std::move(h_terms)), c_terms_(std::move(c_terms)) {
    const int d = space_.total_dim();
    h_static_ = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < h_terms_.size(); ++i) {
        const auto& term = h_terms_[i];
        if (term.op.space() != space_)
            throw SpaceMismatchError("MasterEquation: Hamiltonian term on wrong space");
        if (!term.op.is_hermitian(1e-10))
            throw std::invalid_argument("MasterEquation: Hamiltonian term not Hermitian");
        if (term.envelope)
            h_dynamic_.push_back(i);
        else
            h_static_ += term.op.matrix();
    }
    for (const auto& term : c_terms_) {
        if (term.op.space() != space_)
            throw SpaceMismatchError("MasterEquation: collapse term on wrong space");
        const Matrix& l = term.op.matrix();
        ldag_l_.push_back(l.adjoint() * l);
        Eigen::SelfAdjointEigenSolver<Matrix> es(ldag_l_.back(), Eigen::EigenvaluesOnly);
        max_collapse_rate_ = std::max(max_collapse_rate_, es.eigenvalues().maxCoeff());
    }
}

Matrix MasterEquation::hamiltonian(double t) const {
    Matrix h = h_static_;
    for (std::size_t i : h_dynamic_) {
        const auto& term = h_terms_[i];
        h += term.envelope(t) * term.op.matrix();
    }
    return h;
}

Matrix MasterEquation::rhs(double t, const Matrix& rho) const {
    if (rho.rows() != dim() || rho.cols() != dim())
        throw SpaceMismatchError("rhs: state has wrong dimension");
    const Matrix h = hamiltonian(t);
    Matrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
    for (const auto& term : c_terms_) out += dissipator(term.op.matrix(), rho);
    return out;
}

// Fast path for Hermitian rho: H rho - rho H = A - A^dag with A = H rho, and
// likewise for the anticommutator, which also keeps the output exactly
// Hermitian. Not valid for general matrices; rhs() is.
void MasterEquation::apply_rhs(double t, const Matrix& rho, Matrix& out,
                               Workspace& ws) const {
    ws.h = h_static_;
    for (std::size_t i : h_dynamic_) {
        const auto& term = h_terms_[i];
        ws.h += term.envelope(t) * term.op.matrix();
    }
    ws.a.noalias() = ws.h * rho;
    out = Complex(0.0, -1.0) * (ws.a - ws.a.adjoint());
    for (std::size_t k = 0; k < c_terms_.size(); ++k) {
        const Matrix& l = c_terms_[k].op.matrix();
        ws.a.noalias() = l * rho;
        ws.b.noalias() = ws.a * l.adjoint();
        out += ws.b;
        ws.a.noalias() = ldag_l_[k] * rho;
        out -= 0.5 * (ws.a + ws.a.adjoint());
    }
}

// ----------------------------- Integrator ------------------------------------

namespace {

struct Rk4Buffers {
    Matrix k1, k2, k3, k4, ytmp;
    MasterEquation::Workspace ws;

    explicit Rk4Buffers(int d)
        : k1(d, d), k2(d, d), k3(d, d), k4(d, d), ytmp(d, d) {}
};

void rk4_step(const MasterEquation& me, double t, const Matrix& y, double h,
              Matrix& out, Rk4Buffers& buf) {
    me.apply_rhs(t, y, buf.k1, buf.ws);
    buf.ytmp = y + (0.5 * h) * buf.k1;
    me.apply_rhs(t + 0.5 * h, buf.ytmp, buf.k2, buf.ws);
    buf.ytmp = y + (0.5 * h) * buf.k2;
    me.apply_rhs(t + 0.5 * h, buf.ytmp, buf.k3, buf.ws);
    buf.ytmp = y + h * buf.k3;
    me.apply_rhs(t + h, buf.ytmp, buf.k4, buf.ws);
    out = y + (h / 6.0) * (buf.k1 + 2.0 * buf.k2 + 2.0 * buf.k3 + buf.k4);
}

double hamiltonian_scale(const MasterEquation& me, double t0, double t1) {
    double scale = 0.0;
    for (double t : {t0, 0.5 * (t0 + t1), t1})
        scale = std::max(scale, me.hamiltonian(t).norm());
    return scale;
}

} // namespace

double Trajectory::min_eigenvalue(int count) const {
    if (states.empty()) return 0.0;
    const int n = static_cast<int>(states.size());
    if (count <= 0 || count >= n) count = n;
    double min_eig = 0.0;
    for (int i = 0; i < count; ++i) {
        const int idx = (count == 1) ? 0 : static_cast<int>(
            std::llround(static_cast<double>(i) * (n - 1) / (count - 1)));
        min_eig = std::min(min_eig, states[idx].min_eigenvalue());
    }
    return min_eig;
}

Trajectory integrate(const MasterEquation& me, const DensityMatrix& rho0,
                     double t0, double t1, const StepControl& control) {
    if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must exceed t0");
    if (rho0.space() != me.space())
        throw SpaceMismatchError("integrate: state and generator on different spaces");

    const int d = me.dim();
    const double span = t1 - t0;
    const int n_samples = std::max(2, control.samples);
    std::vector<double> sample_times(n_samples);
    for (int i = 0; i < n_samples; ++i)
        sample_times[i] = t0 + span * static_cast<double>(i) / (n_samples - 1);
    sample_times.back() = t1;

    const double min_step = control.min_step > 0 ? control.min_step : 1e-12 * span;
    const double max_step = control.max_step > 0 ? control.max_step : span;

    Trajectory traj;

    Matrix rho = rho0.matrix();
    Rk4Buffers buf(d);
    Matrix y_big(d, d), y_mid(d, d), y_half(d, d);

    auto record = [&](double t, const Matrix& m) {
        traj.times.push_back(t);
        traj.trace_drift = std::max(traj.trace_drift, std::abs(m.trace() - Complex(1.0, 0.0)));
        traj.herm_drift = std::max(traj.herm_drift,
                                   (m - m.adjoint()).cwiseAbs().maxCoeff());
        if (control.store_states)
            traj.states.push_back(DensityMatrix::unchecked(Operator(me.space(), m)));
    };
    record(t0, rho);

    if (control.fixed_step > 0) {
        // Plain RK4 between consecutive samples, step as close to the
        // requested one as an integer split allows.
        for (int i = 1; i < n_samples; ++i) {
            const double seg = sample_times[i] - sample_times[i - 1];
            const long long n = std::max(1LL, std::llround(std::ceil(seg / control.fixed_step)));
            const double h = seg / static_cast<double>(n);
            double t = sample_times[i - 1];
            for (long long s = 0; s < n; ++s) {
                rk4_step(me, t, rho, h, y_big, buf);
                rho.swap(y_big);
                t += h;
                ++traj.steps_taken;
                if (control.store_every_step && s + 1 < n) record(t, rho);
            }
            record(sample_times[i], rho);
        }
        return traj;
    }

    double h = control.initial_step;
    if (h <= 0) {
        h = span / 1000.0;
        const double rate = me.max_collapse_rate();
        if (rate > 0) h = std::min(h, 1.0 / (50.0 * rate));
        const double hnorm = hamiltonian_scale(me, t0, t1);
        if (hnorm > 0) h = std::min(h, 1.0 / (50.0 * hnorm));
    }
    h = std::clamp(h, min_step, max_step);

    double t = t0;
    int next_sample = 1;
    while (next_sample < n_samples) {
        const double target = sample_times[next_sample];
        bool hit_target = false;
        double h_used = h;
        if (t + h_used >= target - 1e-14 * span) {
            h_used = target - t;
            hit_target = true;
        }

        rk4_step(me, t, rho, h_used, y_big, buf);
        rk4_step(me, t, rho, 0.5 * h_used, y_mid, buf);
        rk4_step(me, t + 0.5 * h_used, y_mid, 0.5 * h_used, y_half, buf);

        const double err = (y_big - y_half).cwiseAbs().maxCoeff();
        const double budget = control.abs_tol * h_used;
        traj.steps_taken += 3;

        if (err <= budget) {
            rho.swap(y_half);
            traj.trace_drift = std::max(traj.trace_drift,
                                        std::abs(rho.trace() - Complex(1.0, 0.0)));
            if (hit_target) {
                t = target;
                record(t, rho);
                ++next_sample;
            } else {
                t += h_used;
                if (control.store_every_step) record(t, rho);
            }
            const double grow = (err > 0) ? 0.9 * std::pow(budget / err, 0.25) : 5.0;
            h = std::min(h * std::clamp(grow, 1.0, 5.0), max_step);
        } else {
            const double shrink = std::max(0.2, 0.9 * std::pow(budget / err, 0.25));
            h = h_used * shrink;
            if (h < min_step)
                throw IntegrationError("integrate: required step below floor", t);
        }
    }
    return traj;
}

} // namespace dispcascade
