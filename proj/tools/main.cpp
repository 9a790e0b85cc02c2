// Command-line front end: cavity matching, validity reports, transfer runs,
// infidelity sweeps, and generic cascade evolution from a JSON config.
//
// Exit codes: 0 success, 1 invalid input/config, 2 validity failure under
// --strict, 3 numerical failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dispcascade/cascade.hpp"
#include "dispcascade/dispersion.hpp"
#include "dispcascade/transfer.hpp"

using json = nlohmann::json;
using namespace dispcascade;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitValidity = 2;
constexpr int kExitNumerical = 3;

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open output file: " + path);
    out << text;
}

int jobs_from_env_or_flag(int jobs_flag) {
    if (jobs_flag > 0) return jobs_flag;
    if (const char* env = std::getenv("DISPCASCADE_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) return j;
    }
    return 0;  // sweep() falls back to the hardware concurrency
}

// ----------------------------- match / validate ------------------------------

struct ChannelArgs {
    double v = 0.0, alpha = 0.0, L = 0.0, omega_bar = 0.0, delta_omega = 0.0;
    double threshold = 10.0;
    bool exact = false, strict = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--v", v, "linear dispersion coefficient")->required();
        cmd->add_option("--alpha", alpha, "quadratic dispersion coefficient")->required();
        cmd->add_option("--L", L, "propagation length")->required();
        cmd->add_option("--omega-bar", omega_bar, "carrier frequency")->required();
        cmd->add_option("--delta-omega", delta_omega, "signal bandwidth (default 0)");
        cmd->add_option("--threshold-factor", threshold, "factor for << conditions (default 10)");
        cmd->add_flag("--exact", exact, "Newton-refine the closed-form parameters");
        cmd->add_flag("--strict", strict, "exit 2 when any validity flag fails");
    }

    ChannelSpec channel() const { return ChannelSpec{v, alpha, L, omega_bar, delta_omega}; }
};

void print_cavity_block(const char* name, const MatchResult& m) {
    std::cout << name << ".delta_f = " << fmt12(m.cavity.delta_f) << "\n"
              << name << ".gamma_f = " << fmt12(m.cavity.gamma_f) << "\n"
              << name << ".theta = " << fmt12(m.cavity.theta) << "\n"
              << name << ".delay = " << fmt12(m.cavity.delay) << "\n"
              << name << ".residual_d2 = " << fmt12(m.residual_d2) << "\n"
              << name << ".residual_d3 = " << fmt12(m.residual_d3) << "\n";
    if (m.negative_delay)
        std::cout << "# warning: negative delay (absorbed into control timing)\n";
}

void print_validity_block(const ValidityReport& rep) {
    auto flag = [](bool ok) { return ok ? "true" : "false"; };
    std::cout << "validity.markov_ok = " << flag(rep.markov_ok)
              << " (ratio " << fmt12(rep.markov_ratio) << ")\n"
              << "validity.kL_ok = " << flag(rep.kL_ok)
              << " (ratio " << fmt12(rep.kL_ratio) << ")\n"
              << "validity.weak_dispersion_ok = " << flag(rep.weak_dispersion_ok)
              << " (ratio " << fmt12(rep.weak_dispersion_ratio) << ")\n"
              << "validity.bandwidth_ok = " << flag(rep.bandwidth_ok)
              << " (ratio " << fmt12(rep.bandwidth_ratio) << ")\n"
              << "validity.threshold_factor = " << fmt12(rep.threshold_factor) << "\n"
              << "validity.tau_p = " << fmt12(rep.tau_p) << "\n"
              << "validity.tau_d = " << fmt12(rep.tau_d) << "\n";
}

int cmd_match(const ChannelArgs& args) {
    const ChannelSpec ch = args.channel();
    const MatchResult closed = match_closed_form(ch);
    std::cout << "# channel: v=" << fmt12(ch.v) << " alpha=" << fmt12(ch.alpha)
              << " L=" << fmt12(ch.L) << " omega_bar=" << fmt12(ch.omega_bar)
              << " delta_omega=" << fmt12(ch.delta_omega)
              << " threshold_factor=" << fmt12(args.threshold)
              << " exact=" << (args.exact ? "true" : "false") << "\n";
    std::cout << "u = " << fmt12(group_velocity(ch)) << "\n";
    print_cavity_block("closed_form", closed);

    MatchResult chosen = closed;
    if (args.exact) {
        chosen = match_exact(ch);
        print_cavity_block("exact", chosen);
    }
    const ValidityReport rep = validity_report(ch, chosen.cavity, args.threshold);
    print_validity_block(rep);
    if (args.strict && !rep.all_ok()) return kExitValidity;
    return kExitOk;
}

// Flat hand-rolled JSON with every number at 12 significant digits.
int cmd_validate(const ChannelArgs& args, const std::string& out_path) {
    const ChannelSpec ch = args.channel();
    const MatchResult m = args.exact ? match_exact(ch) : match_closed_form(ch);
    const ValidityReport rep = validity_report(ch, m.cavity, args.threshold);

    std::ostringstream os;
    auto flag = [](bool ok) { return ok ? "true" : "false"; };
    os << "{\n"
       << "  \"config\": {\"v\": " << fmt12(ch.v) << ", \"alpha\": " << fmt12(ch.alpha)
       << ", \"L\": " << fmt12(ch.L) << ", \"omega_bar\": " << fmt12(ch.omega_bar)
       << ", \"delta_omega\": " << fmt12(ch.delta_omega)
       << ", \"threshold_factor\": " << fmt12(args.threshold)
       << ", \"method\": \"" << (args.exact ? "exact" : "closed_form") << "\"},\n"
       << "  \"cavity\": {\"delta_f\": " << fmt12(m.cavity.delta_f)
       << ", \"gamma_f\": " << fmt12(m.cavity.gamma_f)
       << ", \"theta\": " << fmt12(m.cavity.theta)
       << ", \"delay\": " << fmt12(m.cavity.delay)
       << ", \"residual_d2\": " << fmt12(m.residual_d2)
       << ", \"residual_d3\": " << fmt12(m.residual_d3) << "},\n"
       << "  \"validity\": {\n"
       << "    \"markov_ok\": " << flag(rep.markov_ok)
       << ", \"markov_ratio\": " << fmt12(rep.markov_ratio) << ",\n"
       << "    \"kL_ok\": " << flag(rep.kL_ok)
       << ", \"kL_ratio\": " << fmt12(rep.kL_ratio) << ",\n"
       << "    \"weak_dispersion_ok\": " << flag(rep.weak_dispersion_ok)
       << ", \"weak_dispersion_ratio\": " << fmt12(rep.weak_dispersion_ratio) << ",\n"
       << "    \"bandwidth_ok\": " << flag(rep.bandwidth_ok)
       << ", \"bandwidth_ratio\": " << fmt12(rep.bandwidth_ratio) << ",\n"
       << "    \"threshold_factor\": " << fmt12(rep.threshold_factor)
       << ", \"tau_p\": " << fmt12(rep.tau_p)
       << ", \"tau_d\": " << fmt12(rep.tau_d) << "\n"
       << "  }\n}\n";
    write_output(out_path, os.str());
    if (args.strict && !rep.all_ok()) return kExitValidity;
    return kExitOk;
}

// ----------------------------- transfer --------------------------------------

struct TransferArgs {
    TransferConfig cfg;
    bool ideal = false;
    std::string basis = "restricted";
    std::string out_path;

    void add_to(CLI::App* cmd, bool sweep_mode = false) {
        if (!sweep_mode)
            cmd->add_option("--x", cfg.x, "nondimensional dispersion parameter alpha* gbar*^2");
        cmd->add_option("--gamma-bar-star", cfg.gamma_bar_star, "gamma_bar L/u (default 1)");
        cmd->add_option("--M", cfg.M, "fictitious cavity count (default 1)");
        cmd->add_option("--window", cfg.window, "half window in units 1/gamma_bar (default 20)");
        cmd->add_option("--basis", basis, "restricted | full")
            ->check(CLI::IsMember({"restricted", "full"}));
        cmd->add_option("--abs-tol", cfg.control.abs_tol,
                        "integrator error target per unit time (default 1e-10)");
        cmd->add_option("--samples", cfg.control.samples, "recorded samples (default 200)");
        if (!sweep_mode) cmd->add_flag("--ideal", ideal, "dispersionless pair cascade");
        cmd->add_option("--out", out_path, "output file (default stdout)");
    }

    TransferConfig config() const {
        TransferConfig c = cfg;
        c.basis = basis == "full" ? BasisMode::full : BasisMode::restricted;
        return c;
    }
};

json transfer_config_echo(const TransferConfig& c, bool ideal) {
    json j;
    j["x"] = ideal ? 0.0 : c.x;
    j["gamma_bar_star"] = c.gamma_bar_star;
    j["M"] = c.M;
    j["window"] = c.window;
    j["basis"] = c.basis == BasisMode::full ? "full" : "restricted";
    j["ideal"] = ideal;
    j["abs_tol"] = c.control.abs_tol;
    j["samples"] = c.control.samples;
    return j;
}

json validity_to_json(const ValidityReport& rep) {
    json j;
    j["markov_ok"] = rep.markov_ok;
    j["markov_ratio"] = rep.markov_ratio;
    j["kL_ok"] = rep.kL_ok;
    j["kL_ratio"] = rep.kL_ratio;
    j["weak_dispersion_ok"] = rep.weak_dispersion_ok;
    j["weak_dispersion_ratio"] = rep.weak_dispersion_ratio;
    j["bandwidth_ok"] = rep.bandwidth_ok;
    j["bandwidth_ratio"] = rep.bandwidth_ratio;
    j["threshold_factor"] = rep.threshold_factor;
    j["tau_p"] = rep.tau_p;
    j["tau_d"] = rep.tau_d;
    return j;
}

int cmd_transfer(const TransferArgs& args) {
    const TransferConfig cfg = args.config();
    const TransferResult res = args.ideal ? run_ideal_transfer(cfg) : run_transfer(cfg);

    json j;
    j["config"] = transfer_config_echo(cfg, args.ideal);
    j["fidelity"] = res.fidelity;
    j["infidelity"] = res.infidelity;
    j["analytic_infidelity"] = res.analytic;
    j["cavity"] = {{"delta_star", res.delta_star},
                   {"gamma_star", res.gamma_star},
                   {"tau_offset", res.tau_offset}};
    j["validity"] = res.validity ? validity_to_json(*res.validity) : json(nullptr);
    j["beyond_validity"] = res.beyond_validity;
    j["trace_drift"] = res.trace_drift;
    write_output(args.out_path, j.dump(2) + "\n");
    return kExitOk;
}

// ----------------------------- sweep ------------------------------------------

int cmd_sweep(const TransferArgs& args, double x_min, double x_max, int points,
              int jobs_flag) {
    if (!(x_min > 0) || !(x_max > x_min))
        throw std::invalid_argument("sweep: need 0 < x-min < x-max");
    const TransferConfig cfg = args.config();
    const int jobs = jobs_from_env_or_flag(jobs_flag);
    const std::vector<double> xs = log_spaced(x_min, x_max, points);
    const std::vector<SweepRow> rows = sweep(xs, cfg, jobs);

    json echo = transfer_config_echo(cfg, false);
    echo.erase("ideal");
    echo.erase("x");
    echo["x_min"] = x_min;
    echo["x_max"] = x_max;
    echo["points"] = points;

    std::ostringstream os;
    os << "# dispcascade sweep\n# config " << echo.dump() << "\n";
    os << "x,infidelity_sim,infidelity_analytic,ratio\n";
    int failures = 0;
    for (const SweepRow& row : rows) {
        os << fmt12(row.x) << ',' << fmt12(row.infidelity_sim) << ','
           << fmt12(row.infidelity_analytic) << ',' << fmt12(row.ratio);
        if (row.failed) {
            ++failures;
            std::string note = row.note;
            for (char& c : note)
                if (c == ',' || c == '\n') c = ';';
            os << ',' << note;
        }
        os << '\n';
    }
    write_output(args.out_path, os.str());
    return failures == static_cast<int>(rows.size()) ? kExitNumerical : kExitOk;
}

// ----------------------------- evolve ----------------------------------------

[[noreturn]] void config_fail(const std::string& message, const std::string& path) {
    throw ConfigError(message, path);
}

void require_keys(const json& obj, const std::string& path,
                  const std::vector<std::string>& allowed) {
    if (!obj.is_object()) config_fail("expected an object", path);
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const auto& k : allowed)
            if (item.key() == k) known = true;
        if (!known) config_fail("unknown key", path + "." + item.key());
    }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        config_fail("missing key", path + "." + key);
    }
    if (!obj[key].is_number()) config_fail("expected a number", path + "." + key);
    return obj[key].get<double>();
}

Envelope parse_pulse(const json& p, const std::string& path) {
    require_keys(p, path, {"name", "gamma_bar", "center", "value"});
    if (!p.contains("name") || !p["name"].is_string())
        config_fail("missing pulse name", path + ".name");
    const std::string name = p["name"].get<std::string>();
    if (name == "sech") {
        const PulseSpec spec{get_number(p, path, "gamma_bar"),
                             get_number(p, path, "center", 0.0)};
        if (!(spec.gamma_bar > 0)) config_fail("gamma_bar must be positive", path + ".gamma_bar");
        return [spec](double t) { return pulse_omega(t, spec); };
    }
    if (name == "constant") {
        const double value = get_number(p, path, "value");
        return [value](double) { return value; };
    }
    config_fail("unknown pulse name '" + name + "'", path + ".name");
}

SubsystemSpec parse_subsystem(const json& s, const std::string& path) {
    require_keys(s, path, {"label", "type", "dim", "gamma", "detuning", "pulse"});
    SubsystemSpec sub;
    if (!s.contains("label") || !s["label"].is_string())
        config_fail("missing label", path + ".label");
    sub.label = s["label"].get<std::string>();
    if (!s.contains("type") || !s["type"].is_string())
        config_fail("missing type", path + ".type");
    const std::string type = s["type"].get<std::string>();
    sub.gamma = get_number(s, path, "gamma");
    if (sub.gamma < 0) config_fail("gamma must be >= 0", path + ".gamma");

    if (type == "mode") {
        if (s.contains("pulse")) config_fail("modes carry no pulse", path + ".pulse");
        const double dim = get_number(s, path, "dim", 2.0);
        sub.dim = static_cast<int>(dim);
        if (sub.dim < 2 || sub.dim != dim) config_fail("dim must be an integer >= 2", path + ".dim");
        sub.lowering = lowering_matrix(sub.dim);
        const double detuning = get_number(s, path, "detuning", 0.0);
        if (detuning != 0.0)
            sub.hamiltonian.push_back({-detuning * number_matrix(sub.dim), Envelope{}});
    } else if (type == "atom_cavity") {
        if (s.contains("dim")) config_fail("atom_cavity has fixed dim 4", path + ".dim");
        if (s.contains("detuning")) config_fail("atom_cavity carries no detuning", path + ".detuning");
        if (!s.contains("pulse")) config_fail("missing pulse", path + ".pulse");
        sub.dim = 4;
        const HilbertSpace pair({2, 2});
        const Matrix a_atom = embed(lowering_matrix(2), pair, 0).matrix();
        const Matrix c_cav = embed(lowering_matrix(2), pair, 1).matrix();
        sub.lowering = c_cav;
        const Matrix drive = c_cav.adjoint() * a_atom + a_atom.adjoint() * c_cav;
        sub.hamiltonian.push_back({drive, parse_pulse(s["pulse"], path + ".pulse")});
    } else {
        config_fail("unknown subsystem type '" + type + "'", path + ".type");
    }
    return sub;
}

struct ObservableSet {
    std::vector<std::string> names;
    std::vector<Matrix> ops;
};

ObservableSet parse_observables(const json& list, const HilbertSpace& space,
                                const std::vector<SubsystemSpec>& subs, int m_ports) {
    if (!list.is_array()) config_fail("expected an array", "observables");
    // slot ranges per subsystem label: s -> [0], f -> [1..M], t -> [last]
    auto slots_for = [&](const std::string& label, const std::string& path) {
        std::vector<int> slots;
        if (subs.size() == 2) {
            if (label == subs[0].label) slots = {0};
            if (label == subs[1].label) slots = {1};
        } else {
            if (label == subs[0].label) slots = {0};
            if (label == subs[1].label)
                for (int k = 0; k < m_ports; ++k) slots.push_back(1 + k);
            if (label == subs[2].label) slots = {1 + m_ports};
        }
        if (slots.empty()) config_fail("unknown subsystem label '" + label + "'", path);
        return slots;
    };
    auto local_number = [&](int slot, int which) {
        // which: 0 whole subsystem, 1 atom part, 2 cavity part
        const int dim = space.dims()[slot];
        if (dim == 4) {
            const HilbertSpace pair({2, 2});
            const Matrix n_atom = embed(number_matrix(2), pair, 0).matrix();
            const Matrix n_cav = embed(number_matrix(2), pair, 1).matrix();
            if (which == 1) return n_atom;
            if (which == 2) return n_cav;
            return Matrix(n_atom + n_cav);
        }
        return number_matrix(dim);
    };

    ObservableSet set;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "observables[" + std::to_string(i) + "]";
        if (!list[i].is_string()) config_fail("expected a string", path);
        const std::string name = list[i].get<std::string>();
        Matrix op;
        if (name == "trace") {
            op = Matrix::Identity(space.total_dim(), space.total_dim());
        } else if (name == "total_excitation") {
            op = Matrix::Zero(space.total_dim(), space.total_dim());
            for (int k = 0; k < space.num_subsystems(); ++k)
                op += embed(local_number(k, 0), space, k).matrix();
        } else if (name.rfind("population:", 0) == 0) {
            const int idx = std::atoi(name.c_str() + 11);
            if (idx < 0 || idx >= space.total_dim())
                config_fail("basis index out of range", path);
            op = Matrix::Zero(space.total_dim(), space.total_dim());
            op(idx, idx) = 1.0;
        } else if (name.rfind("number:", 0) == 0 || name.rfind("atom_number:", 0) == 0 ||
                   name.rfind("cavity_number:", 0) == 0) {
            const auto colon = name.find(':');
            const std::string kind = name.substr(0, colon);
            const std::string label = name.substr(colon + 1);
            const int which = kind == "number" ? 0 : (kind == "atom_number" ? 1 : 2);
            op = Matrix::Zero(space.total_dim(), space.total_dim());
            for (int slot : slots_for(label, path)) {
                if (which != 0 && space.dims()[slot] != 4)
                    config_fail("'" + kind + "' needs an atom_cavity subsystem", path);
                op += embed(local_number(slot, which), space, slot).matrix();
            }
        } else {
            config_fail("unknown observable '" + name + "'", path);
        }
        set.names.push_back(name);
        set.ops.push_back(std::move(op));
    }
    return set;
}

int cmd_evolve(const std::string& config_path, const std::string& out_path) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + config_path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }

    require_keys(cfg, "config",
                 {"M", "subsystems", "initial_state", "observables", "window", "step_control"});
    const int M = static_cast<int>(get_number(cfg, "config", "M", 1.0));
    if (!cfg.contains("subsystems") || !cfg["subsystems"].is_array())
        config_fail("missing subsystems array", "config.subsystems");
    const auto& subs_json = cfg["subsystems"];
    if (subs_json.size() != 2 && subs_json.size() != 3)
        config_fail("need 2 (pair) or 3 (cascade) subsystems", "config.subsystems");

    std::vector<SubsystemSpec> subs;
    for (std::size_t i = 0; i < subs_json.size(); ++i)
        subs.push_back(
            parse_subsystem(subs_json[i], "config.subsystems[" + std::to_string(i) + "]"));

    std::optional<MasterEquation> me;
    int m_ports = 0;
    if (subs.size() == 2) {
        if (M != 1) config_fail("a pair cascade has no fictitious cavities; M must be 1", "config.M");
        me = build_pair_cascade(subs[0], subs[1]);
    } else {
        CascadeSpec spec{subs[0], subs[1], subs[2], M};
        me = M == 1 ? build_triple_cascade(spec) : build_fermionic_cascade(spec);
        m_ports = M;
    }
    const HilbertSpace& space = me->space();

    // initial state: one local basis index per configured subsystem
    if (!cfg.contains("initial_state") || !cfg["initial_state"].is_array())
        config_fail("missing initial_state array", "config.initial_state");
    const auto& init = cfg["initial_state"];
    if (init.size() != subs.size())
        config_fail("initial_state needs one entry per subsystem", "config.initial_state");
    std::vector<int> occ(space.num_subsystems(), 0);
    for (std::size_t i = 0; i < init.size(); ++i) {
        const std::string path = "config.initial_state[" + std::to_string(i) + "]";
        if (!init[i].is_number_integer()) config_fail("expected an integer", path);
        const int idx = init[i].get<int>();
        if (idx < 0 || idx >= subs[i].dim) config_fail("local index out of range", path);
        if (subs.size() == 3 && i == 1 && m_ports > 1 && idx != 0)
            config_fail("fictitious cavities must start empty for M > 1", path);
        if (subs.size() == 3 && i == 2)
            occ[space.num_subsystems() - 1] = idx;
        else if (subs.size() == 3 && i == 1)
            occ[1] = idx;
        else if (subs.size() == 2 && i == 1)
            occ[1] = idx;
        else
            occ[0] = idx;
    }
    const DensityMatrix rho0 = DensityMatrix::pure(space, space.flat_index(occ));

    const ObservableSet obs =
        parse_observables(cfg.contains("observables") ? cfg["observables"] : json::array(),
                          space, subs, m_ports);

    if (!cfg.contains("window")) config_fail("missing window", "config.window");
    require_keys(cfg["window"], "config.window", {"t_start", "t_end"});
    const double t0 = get_number(cfg["window"], "config.window", "t_start");
    const double t1 = get_number(cfg["window"], "config.window", "t_end");
    if (!(t1 > t0)) config_fail("t_end must exceed t_start", "config.window");

    StepControl control;
    if (cfg.contains("step_control")) {
        const json& sc = cfg["step_control"];
        require_keys(sc, "config.step_control",
                     {"abs_tol", "initial_step", "min_step", "max_step", "fixed_step", "samples"});
        control.abs_tol = get_number(sc, "config.step_control", "abs_tol", control.abs_tol);
        control.initial_step =
            get_number(sc, "config.step_control", "initial_step", control.initial_step);
        control.min_step = get_number(sc, "config.step_control", "min_step", control.min_step);
        control.max_step = get_number(sc, "config.step_control", "max_step", control.max_step);
        control.fixed_step =
            get_number(sc, "config.step_control", "fixed_step", control.fixed_step);
        control.samples =
            static_cast<int>(get_number(sc, "config.step_control", "samples", control.samples));
    }

    const Trajectory traj = integrate(*me, rho0, t0, t1, control);

    std::ostringstream os;
    os << "# dispcascade evolve\n# config " << cfg.dump() << "\n";
    os << "time";
    for (const auto& name : obs.names) os << ',' << name;
    os << '\n';
    if (!obs.names.empty()) {
        for (std::size_t i = 0; i < traj.times.size(); ++i) {
            os << fmt12(traj.times[i]);
            for (const auto& op : obs.ops)
                os << ',' << fmt12((op * traj.states[i].matrix()).trace().real());
            os << '\n';
        }
    }
    write_output(out_path, os.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dispersive one-way channel simulation via a matched filter cavity"};
    app.require_subcommand(1);

    ChannelArgs match_args;
    CLI::App* match = app.add_subcommand("match", "fit filter-cavity parameters to a channel");
    match_args.add_to(match);

    ChannelArgs validate_args;
    std::string validate_out;
    CLI::App* validate = app.add_subcommand("validate", "validity report as JSON");
    validate_args.add_to(validate);
    validate->add_option("--out", validate_out, "output file (default stdout)");

    TransferArgs transfer_args;
    CLI::App* transfer = app.add_subcommand("transfer", "single state-transfer run");
    transfer_args.add_to(transfer);

    TransferArgs sweep_args;
    double x_min = 0.01, x_max = 3.0;
    int points = 20, jobs = 0;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "infidelity versus x as CSV");
    sweep_args.add_to(sweep_cmd, true);
    sweep_cmd->add_option("--x-min", x_min, "smallest x (default 0.01)");
    sweep_cmd->add_option("--x-max", x_max, "largest x (default 3)");
    sweep_cmd->add_option("--points", points, "log-spaced points (default 20)");
    sweep_cmd->add_option("--jobs", jobs, "parallel rows (default: DISPCASCADE_JOBS or cores)");

    std::string evolve_config, evolve_out;
    CLI::App* evolve = app.add_subcommand("evolve", "integrate a cascade from a JSON config");
    evolve->add_option("--config", evolve_config, "JSON config file")->required();
    evolve->add_option("--out", evolve_out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitInvalid;
    }

    try {
        if (match->parsed()) return cmd_match(match_args);
        if (validate->parsed()) return cmd_validate(validate_args, validate_out);
        if (transfer->parsed()) return cmd_transfer(transfer_args);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_args, x_min, x_max, points, jobs);
        if (evolve->parsed()) return cmd_evolve(evolve_config, evolve_out);
    } catch (const IntegrationError& e) {
        std::cerr << "numerical failure: " << e.what()
                  << " (t = " << e.time_of_failure() << ")\n";
        return kExitNumerical;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitOk;
}
