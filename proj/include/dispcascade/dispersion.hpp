#pragma once

#include <optional>
#include <string>

#include "dispcascade/errors.hpp"

namespace dispcascade {

// --------------------------- Channel and cavity ------------------------------

// One-way channel with dispersion relation omega = v k + alpha k^2.
struct ChannelSpec {
    double v = 0.0;            // linear dispersion coefficient (velocity)
    double alpha = 0.0;        // quadratic dispersion coefficient (velocity*length)
    double L = 0.0;            // propagation length
    double omega_bar = 0.0;    // carrier frequency
    double delta_omega = 0.0;  // signal bandwidth / energy uncertainty

    void validate() const;
};

// Fictitious single-mode cavity operated in reflection. delta_f is the
// carrier detuning omega_bar - omega_f; delay is the effective propagation
// time l/c absorbed into control timing.
struct FilterCavity {
    double delta_f = 0.0;
    double gamma_f = 0.0;
    double theta = 0.0;
    double delay = 0.0;
};

enum class MatchMethod { closed_form, exact };

// Result of matching a cavity to a channel. The residuals are those of the
// second/third phase-derivative equations, normalized by the sum of the
// magnitudes of each equation's additive terms (so they are scale-free and,
// for the closed form, shrink like sqrt(alpha/(L u))).
struct MatchResult {
    FilterCavity cavity;
    MatchMethod method = MatchMethod::closed_form;
    double residual_d2 = 0.0;
    double residual_d3 = 0.0;
    bool negative_delay = false;  // harmless for feedforward timing, flagged
};

// --------------------------- Phase functions ---------------------------------

// u = sqrt(v^2 + 4 alpha omega_bar)
double group_velocity(const ChannelSpec& ch);

// k(omega) = (-v + sqrt(v^2 + 4 alpha omega)) / (2 alpha), evaluated in the
// rationalized form 2 omega / (v + sqrt(v^2 + 4 alpha omega)) which is exact
// for alpha = 0 and free of cancellation for small alpha.
double wavenumber(const ChannelSpec& ch, double omega);

// k(omega) * L
double dispersive_phase(const ChannelSpec& ch, double omega);

// omega*delay + theta + 2 arctan(2 (omega - omega_f) / gamma_f)
double cavity_phase(const FilterCavity& cav, double omega, double omega_bar);

// --------------------------- Parameter matching ------------------------------

// Matching in the scale-free variables gamma* = gamma L/u, delta* = Delta L/u,
// which depend on the channel only through alpha_star = alpha/(L u).
struct StarMatch {
    double delta_star = 0.0;
    double gamma_star = 0.0;
    double residual_d2 = 0.0;
    double residual_d3 = 0.0;
};

// delta*^2 = sqrt(3)/(8 alpha*), gamma*^2 = 12 delta*^2.
StarMatch match_star_closed_form(double alpha_star);

// Newton refinement (in log variables, closed-form seed) of
//   alpha*           = 16 G S / (G^2 + 4 S^2)^2
//   6 alpha*^2       = 16 G (12 S^2 - G^2) / (G^2 + 4 S^2)^3
// to residuals <= 1e-12. alpha_star must lie below `ceiling`.
StarMatch match_star_exact(double alpha_star, double ceiling = 0.1,
                           int max_iterations = 100);

MatchResult match_closed_form(const ChannelSpec& ch);
MatchResult match_exact(const ChannelSpec& ch);

// max |phi_disp - phi_cav| over omega_bar +- n_sigma * delta_omega.
double phase_residual(const ChannelSpec& ch, const FilterCavity& cav,
                      double n_sigma = 2.0, int points = 401);

// --------------------------- Validity report ---------------------------------

// Every "X << Y" condition is evaluated as X * threshold_factor <= Y; each
// flag is reproducible from its stored ratio and the threshold_factor.
struct ValidityReport {
    bool markov_ok = false;           // max(delta_f, gamma_f, delta_omega) << omega_bar
    bool kL_ok = false;               // k_bar L >> 1
    bool weak_dispersion_ok = false;  // alpha << L u
    bool bandwidth_ok = false;        // delta_omega <= gamma_f (no factor)
    double markov_ratio = 0.0;        // max(delta_f, gamma_f, delta_omega) / omega_bar
    double kL_ratio = 0.0;            // 1 / (k_bar L)
    double weak_dispersion_ratio = 0.0;  // alpha / (L u)
    double bandwidth_ratio = 0.0;     // delta_omega / gamma_f
    double threshold_factor = 10.0;
    double tau_p = 0.0;               // propagation time L/u
    double tau_d = 0.0;               // dispersal time L^2/alpha

    bool all_ok() const { return markov_ok && kL_ok && weak_dispersion_ok && bandwidth_ok; }
};

ValidityReport validity_report(const ChannelSpec& ch, const FilterCavity& cav,
                               double threshold_factor = 10.0);

// --------------------------- Feedback diagnostic -----------------------------

// Forcing the first derivative of the phase onto the cavity (no free delay,
// as a feedback loop requires) combined with second-derivative matching
// forces alpha (gamma^2 + 4 Delta^2) = 2 Delta (v^2 + 4 alpha omega_bar).
// For alpha > 0 the matched cavity violates this relation, so no cavity is
// returned; both sides are evaluated at the matched parameters.
struct FeedbackResult {
    std::optional<FilterCavity> cavity;  // set only for alpha = 0
    struct Inconsistency {
        double lhs = 0.0;   // alpha (gamma^2 + 4 Delta^2)
        double rhs = 0.0;   // 2 Delta (v^2 + 4 alpha omega_bar)
        double ratio = 0.0; // lhs / rhs
    };
    std::optional<Inconsistency> inconsistency;
    std::string note;
};

FeedbackResult feedback_match(const ChannelSpec& ch);

// --------------------------- Fermion flux check ------------------------------

// Occupation estimate N = n/gamma_f for fermion flux n; ok when
// N * threshold_factor <= 1. recommended_M is the smallest M with N/M <= 0.1.
struct FluxReport {
    double flux = 0.0;
    double occupation = 0.0;
    bool ok = false;
    double threshold_factor = 10.0;
    int recommended_M = 1;
};

FluxReport fermion_flux_check(double n, const FilterCavity& cav,
                              double threshold_factor = 10.0);

} // namespace dispcascade
