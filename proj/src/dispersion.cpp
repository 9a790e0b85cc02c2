#include "dispcascade/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dispcascade {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt12 = 3.4641016151377544;
} // namespace

// --------------------------- Channel ------------------------------------------

void ChannelSpec::validate() const {
    if (!(L > 0)) throw ChannelError("channel: L must be positive");
    if (!(omega_bar > 0)) throw ChannelError("channel: omega_bar must be positive");
    if (delta_omega < 0) throw ChannelError("channel: delta_omega must be >= 0");
    if (alpha < 0) throw ChannelError("channel: alpha must be >= 0");
    if (v < 0) throw ChannelError("channel: v must be >= 0");
    if (v == 0 && alpha == 0) throw ChannelError("channel: v and alpha cannot both be zero");
    if (!(v * v + 4.0 * alpha * omega_bar > 0))
        throw ChannelError("channel: group velocity radicand must be positive");
}

double group_velocity(const ChannelSpec& ch) {
    ch.validate();
    return std::sqrt(ch.v * ch.v + 4.0 * ch.alpha * ch.omega_bar);
}

double wavenumber(const ChannelSpec& ch, double omega) {
    ch.validate();
    if (!(omega > 0)) throw ChannelError("wavenumber: omega must be positive");
    // 2 omega / (v + sqrt(v^2 + 4 alpha omega)) == (-v + sqrt(...)) / (2 alpha)
    return 2.0 * omega / (ch.v + std::sqrt(ch.v * ch.v + 4.0 * ch.alpha * omega));
}

double dispersive_phase(const ChannelSpec& ch, double omega) {
    return wavenumber(ch, omega) * ch.L;
}

double cavity_phase(const FilterCavity& cav, double omega, double omega_bar) {
    if (!(cav.gamma_f > 0)) throw ChannelError("cavity_phase: gamma_f must be positive");
    const double omega_f = omega_bar - cav.delta_f;
    return omega * cav.delay + cav.theta +
           2.0 * std::atan(2.0 * (omega - omega_f) / cav.gamma_f);
}

// --------------------------- Matching -----------------------------------------

namespace {

// Scale-free matching equations for G = gamma L/u, S = Delta L/u:
//   f2: alpha*     = 16 G S / D^2
//   f3: 6 alpha*^2 = 16 G (12 S^2 - G^2) / D^3,  D = G^2 + 4 S^2
// Residuals are normalized by the summed magnitudes of each equation's terms.
void star_residuals(double a, double G, double S, double& res2, double& res3) {
    const double D = G * G + 4.0 * S * S;
    const double rhs2 = 16.0 * G * S / (D * D);
    const double lhs3 = 6.0 * a * a;
    const double rhs3 = 16.0 * G * (12.0 * S * S - G * G) / (D * D * D);
    const double rhs3_mag = 16.0 * G * (12.0 * S * S + G * G) / (D * D * D);
    res2 = std::abs(a - rhs2) / (std::abs(a) + std::abs(rhs2));
    res3 = std::abs(lhs3 - rhs3) / (lhs3 + rhs3_mag);
}

} // namespace

StarMatch match_star_closed_form(double alpha_star) {
    if (!(alpha_star > 0))
        throw ChannelError("match: channel is dispersionless; no cavity needed");
    StarMatch m;
    m.delta_star = std::sqrt(kSqrt3 / (8.0 * alpha_star));
    m.gamma_star = kSqrt12 * m.delta_star;
    star_residuals(alpha_star, m.gamma_star, m.delta_star, m.residual_d2, m.residual_d3);
    return m;
}

StarMatch match_star_exact(double alpha_star, double ceiling, int max_iterations) {
    if (!(alpha_star > 0))
        throw ChannelError("match: channel is dispersionless; no cavity needed");
    if (alpha_star > ceiling)
        throw ConvergenceError("match: dispersion too strong (alpha/(L u) above ceiling)");

    const StarMatch seed = match_star_closed_form(alpha_star);
    const double a = alpha_star;
    double g = std::log(seed.gamma_star);
    double s = std::log(seed.delta_star);

    // Residuals scaled to O(1); converged when both drop to 1e-12.
    auto eval = [&](double lg, double ls, double& r1, double& r2) {
        const double G = std::exp(lg), S = std::exp(ls);
        const double D = G * G + 4.0 * S * S;
        r1 = 16.0 * G * S / (D * D) / a - 1.0;
        r2 = 16.0 * G * (12.0 * S * S - G * G) / (D * D * D) / (6.0 * a * a) - 1.0;
    };

    double r1, r2;
    eval(g, s, r1, r2);
    bool converged = false;
    for (int it = 0; it < max_iterations && !converged; ++it) {
        const double G = std::exp(g), S = std::exp(s);
        const double D = G * G + 4.0 * S * S;
        const double D3 = D * D * D;
        const double dF1dG = 16.0 * S * (4.0 * S * S - 3.0 * G * G) / D3;
        const double dF1dS = 16.0 * G * (G * G - 12.0 * S * S) / D3;
        const double dF2dG = 16.0 * (12.0 * S * S - 3.0 * G * G) / D3 -
                             96.0 * G * G * (12.0 * S * S - G * G) / (D3 * D);
        const double dF2dS = 768.0 * G * S * (G * G - 4.0 * S * S) / (D3 * D);
        // Jacobian of the scaled residuals in log variables.
        const double j11 = G * dF1dG / a;
        const double j12 = S * dF1dS / a;
        const double j21 = G * dF2dG / (6.0 * a * a);
        const double j22 = S * dF2dS / (6.0 * a * a);
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0)
            throw ConvergenceError("match: singular Jacobian in Newton refinement");
        const double dg = -(j22 * r1 - j12 * r2) / det;
        const double ds = -(-j21 * r1 + j11 * r2) / det;

        const double merit0 = r1 * r1 + r2 * r2;
        double lambda = 1.0;
        for (int back = 0; back < 60; ++back) {
            double t1, t2;
            eval(g + lambda * dg, s + lambda * ds, t1, t2);
            if (t1 * t1 + t2 * t2 < merit0) {
                g += lambda * dg;
                s += lambda * ds;
                r1 = t1;
                r2 = t2;
                break;
            }
            lambda *= 0.5;
        }
        converged = std::max(std::abs(r1), std::abs(r2)) <= 1e-12;
    }
    if (!converged)
        throw ConvergenceError("match: dispersion too strong (Newton did not converge)");

    StarMatch m;
    m.gamma_star = std::exp(g);
    m.delta_star = std::exp(s);
    star_residuals(a, m.gamma_star, m.delta_star, m.residual_d2, m.residual_d3);
    return m;
}

namespace {

MatchResult finish_match(const ChannelSpec& ch, const StarMatch& star, MatchMethod method) {
    const double u = group_velocity(ch);
    MatchResult r;
    r.method = method;
    r.residual_d2 = star.residual_d2;
    r.residual_d3 = star.residual_d3;
    r.cavity.gamma_f = star.gamma_star * u / ch.L;
    r.cavity.delta_f = star.delta_star * u / ch.L;
    // Constant and linear matching at the carrier: the cavity's group delay
    // is subtracted from the channel's, the rest goes into theta.
    const double gamma = r.cavity.gamma_f, delta = r.cavity.delta_f;
    const double cavity_slope = 4.0 * gamma / (gamma * gamma + 4.0 * delta * delta);
    r.cavity.delay = ch.L / u - cavity_slope;
    r.cavity.theta = dispersive_phase(ch, ch.omega_bar) - ch.omega_bar * r.cavity.delay -
                     2.0 * std::atan(2.0 * delta / gamma);
    r.negative_delay = r.cavity.delay < 0;
    return r;
}

} // namespace

MatchResult match_closed_form(const ChannelSpec& ch) {
    ch.validate();
    const double u = group_velocity(ch);
    return finish_match(ch, match_star_closed_form(ch.alpha / (ch.L * u)),
                        MatchMethod::closed_form);
}

MatchResult match_exact(const ChannelSpec& ch) {
    ch.validate();
    const double u = group_velocity(ch);
    return finish_match(ch, match_star_exact(ch.alpha / (ch.L * u)), MatchMethod::exact);
}

double phase_residual(const ChannelSpec& ch, const FilterCavity& cav,
                      double n_sigma, int points) {
    ch.validate();
    if (points < 1) throw std::invalid_argument("phase_residual: points must be >= 1");
    const double half = n_sigma * ch.delta_omega;
    double max_abs = 0.0;
    for (int i = 0; i < points; ++i) {
        const double frac = (points == 1) ? 0.5 : static_cast<double>(i) / (points - 1);
        const double omega = ch.omega_bar - half + 2.0 * half * frac;
        const double mism = dispersive_phase(ch, omega) -
                            cavity_phase(cav, omega, ch.omega_bar);
        max_abs = std::max(max_abs, std::abs(mism));
    }
    return max_abs;
}

// --------------------------- Validity report ----------------------------------

ValidityReport validity_report(const ChannelSpec& ch, const FilterCavity& cav,
                               double threshold_factor) {
    ch.validate();
    const double u = group_velocity(ch);
    ValidityReport rep;
    rep.threshold_factor = threshold_factor;

    rep.markov_ratio = std::max({cav.delta_f, cav.gamma_f, ch.delta_omega}) / ch.omega_bar;
    rep.markov_ok = rep.markov_ratio * threshold_factor <= 1.0;

    rep.kL_ratio = 1.0 / (wavenumber(ch, ch.omega_bar) * ch.L);
    rep.kL_ok = rep.kL_ratio * threshold_factor <= 1.0;

    rep.weak_dispersion_ratio = ch.alpha / (ch.L * u);
    rep.weak_dispersion_ok = rep.weak_dispersion_ratio * threshold_factor <= 1.0;

    rep.bandwidth_ratio = cav.gamma_f > 0 ? ch.delta_omega / cav.gamma_f : 0.0;
    rep.bandwidth_ok = ch.delta_omega <= cav.gamma_f;

    rep.tau_p = ch.L / u;
    rep.tau_d = ch.alpha > 0 ? ch.L * ch.L / ch.alpha
                             : std::numeric_limits<double>::infinity();
    return rep;
}

// --------------------------- Feedback diagnostic ------------------------------

FeedbackResult feedback_match(const ChannelSpec& ch) {
    ch.validate();
    FeedbackResult out;
    if (ch.alpha == 0.0) {
        FilterCavity cav;
        cav.delta_f = 0.0;
        cav.gamma_f = 4.0 * ch.v / ch.L;
        cav.delay = 0.0;  // feedback admits no free propagation delay
        cav.theta = dispersive_phase(ch, ch.omega_bar);
        out.cavity = cav;
        out.note = "dispersionless feedback solution";
        return out;
    }
    // Evaluate the feedback-forced relation at the dispersion-matched
    // parameters; the two sides disagree for any alpha > 0.
    const MatchResult matched = match_closed_form(ch);
    const double gamma = matched.cavity.gamma_f, delta = matched.cavity.delta_f;
    const double u2 = ch.v * ch.v + 4.0 * ch.alpha * ch.omega_bar;
    FeedbackResult::Inconsistency inc;
    inc.lhs = ch.alpha * (gamma * gamma + 4.0 * delta * delta);
    inc.rhs = 2.0 * delta * u2;
    inc.ratio = inc.lhs / inc.rhs;
    out.inconsistency = inc;
    out.note = "feedback inconsistent with dispersion matching for alpha > 0";
    return out;
}

// --------------------------- Fermion flux check -------------------------------

FluxReport fermion_flux_check(double n, const FilterCavity& cav,
                              double threshold_factor) {
    if (n < 0) throw std::invalid_argument("fermion_flux_check: flux must be >= 0");
    if (!(cav.gamma_f > 0))
        throw ChannelError("fermion_flux_check: gamma_f must be positive");
    FluxReport rep;
    rep.flux = n;
    rep.threshold_factor = threshold_factor;
    rep.occupation = n / cav.gamma_f;
    rep.ok = rep.occupation * threshold_factor <= 1.0;
    rep.recommended_M = std::max(1, static_cast<int>(
        std::ceil(10.0 * rep.occupation - 1e-9)));
    return rep;
}

} // namespace dispcascade
