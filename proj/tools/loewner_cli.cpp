// Command-line front end: evaluate Bernstein functions and generators, run
// semigroup and evolution-family solves, classify generators, verify inputs,
// and emit value tables.  JSON in, CSV or JSON out, deterministic output
// with 17 significant digits.

#include <clocale>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loewner/loewner.hpp"

using namespace loewner;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitDomain = 2;

json read_object_arg(const std::string& arg) {
    std::string text;
    if (!arg.empty() && arg.front() == '{') {
        text = arg;
    } else {
        std::ifstream in(arg);
        if (!in) throw parse_error("cannot open input file: " + arg);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const std::exception& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what());
    }
}

Cplx parse_complex(const std::string& s) {
    std::size_t comma = s.find(',');
    try {
        if (comma == std::string::npos) return {std::stod(s), 0.0};
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw parse_error("expected a complex scalar as \"re,im\", got \"" + s + "\"");
    }
}

std::vector<double> parse_real_grid(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw parse_error("expected a comma-separated list of reals, got \"" + s + "\"");
        }
    }
    return out;
}

std::vector<Cplx> parse_complex_grid(const std::string& s) {
    std::vector<Cplx> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        out.push_back(parse_complex(item));
    }
    return out;
}

std::string fmt(double v) { return format_number(v); }

std::string fmt(Cplx z) { return format_number(z.real()) + "," + format_number(z.imag()); }

struct Output {
    std::string out_path;  // empty = stdout
    bool as_json = false;

    void write(const std::string& text) const {
        if (out_path.empty()) {
            std::cout << text;
            return;
        }
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw parse_error("cannot open output file: " + out_path);
        out << text;
    }

    void value(Cplx z) const {
        if (as_json) {
            std::ostringstream os;
            ordered_json j{{"re", z.real()}, {"im", z.imag()}};
            write_json(j, os);
            os << "\n";
            write(os.str());
        } else {
            write(fmt(z) + "\n");
        }
    }
};

OdeConfig ode_config_from_env(double rtol_flag) {
    OdeConfig cfg;
    if (const char* r = std::getenv("LOEWNER_DEFAULT_RTOL")) {
        try {
            cfg.rtol = std::stod(r);
        } catch (const std::exception&) {
            throw parse_error("LOEWNER_DEFAULT_RTOL is not a number");
        }
    }
    if (rtol_flag > 0) cfg.rtol = rtol_flag;  // the flag outranks the env var
    try {
        cfg.validate();
    } catch (const domain_error& e) {
        throw parse_error(e.what());  // configuration problem, not a domain one
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// check: the user-facing oracle.  Validates an input object category by
// category and reports the worst violation per category.
// ---------------------------------------------------------------------------

struct Finding {
    std::string category;
    double worst = 0;  // most negative margin; < 0 means violated
    std::string note;
};

class CheckReport {
public:
    void record(const std::string& category, double margin, const std::string& note = "") {
        for (Finding& f : findings_) {
            if (f.category == category) {
                if (margin < f.worst) {
                    f.worst = margin;
                    f.note = note;
                }
                return;
            }
        }
        findings_.push_back({category, margin, note});
    }

    bool ok() const {
        for (const Finding& f : findings_)
            if (f.worst < 0) return false;
        return true;
    }

    std::string render() const {
        std::ostringstream os;
        for (const Finding& f : findings_) {
            os << f.category << ": " << (f.worst < 0 ? "violation" : "ok")
               << " (worst = " << fmt(f.worst) << ")";
            if (!f.note.empty() && f.worst < 0) os << " " << f.note;
            os << "\n";
        }
        os << (ok() ? "check: pass" : "check: fail") << "\n";
        return os.str();
    }

private:
    std::vector<Finding> findings_;
};

void check_measure_structure(const JumpMeasure& m, CheckReport& rep) {
    double worst = 0.0;
    std::string note;
    auto flag = [&](double margin, const char* why) {
        if (margin < worst) {
            worst = margin;
            note = why;
        }
    };
    for (const Atom& a : m.atoms) {
        flag(a.w, "negative atom weight");
        if (!(a.x > 0)) flag(-1.0, "atom location must be > 0");
    }
    for (const DensityPanel& p : m.panels) {
        if (p.kind == PanelKind::tabulated)
            for (double v : p.values) flag(v, "negative tabulated density");
        else
            flag(p.c, "negative density scale");
        try {
            validate_panel(p);
        } catch (const domain_error& e) {
            rep.record("measure_structure", -1.0, e.what());
        }
    }
    rep.record("measure_structure", worst, note);
}

void check_generator_object(const GeneratorRepr& g, CheckReport& rep) {
    rep.record("nonnegativity", std::min(g.q, g.b),
               g.q < 0 ? "q must be >= 0" : (g.b < 0 ? "b must be >= 0" : ""));
    check_measure_structure(g.pi, rep);
    ClassCheck cc = check_class(g.pi, IntegrabilityClass::generator);
    rep.record("measure_class", cc.holds ? 0.0 : -1.0, cc.witness);
    if (!cc.holds) return;  // the numeric checks need convergent integrals

    GeneratorCheckReport num = check_generator_numeric(g, default_membership_grid());
    rep.record("real_on_axis", -num.worst_imag + 1e-6);
    // phi(0+) <= 0: margin is how far below the tolerance the limit sits
    double scale = std::abs(eval_gen(g, {1e-6, 0}).real()) + 1.0;
    rep.record("origin_limit", 1e-6 - num.origin_limit / scale);
    rep.record("complete_monotonicity", num.worst_violation + 1e-6);
}

void check_bernstein_object(const BernsteinRepr& f, CheckReport& rep) {
    rep.record("nonnegativity", std::min(f.alpha, f.beta));
    check_measure_structure(f.rho, rep);
    ClassCheck cc = check_class(f.rho, IntegrabilityClass::bernstein);
    rep.record("measure_class", cc.holds ? 0.0 : -1.0, cc.witness);
    rep.record("zero_function",
               (f.alpha == 0 && f.beta == 0 && f.rho.empty()) ? -1.0 : 0.0,
               "the zero function is excluded");
    if (!cc.holds) return;

    MembershipReport num = is_bernstein_numeric(
        [&](double x) { return eval(f, {x, 0}).real(); }, default_membership_grid());
    rep.record("complete_monotonicity", num.worst_violation + 1e-6);
}

void check_field_object(const HerglotzField& F, CheckReport& rep) {
    double mono = kInf;
    if (F.breakpoints.empty() || F.breakpoints.front() != 0.0)
        rep.record("breakpoints", -1.0, "t_0 must be 0");
    for (std::size_t i = 0; i + 1 < F.breakpoints.size(); ++i)
        mono = std::min(mono, F.breakpoints[i + 1] - F.breakpoints[i]);
    rep.record("breakpoints", F.slices.empty() ||
                                      F.breakpoints.size() != F.slices.size() + 1
                                  ? -1.0
                                  : (std::isinf(mono) ? 0.0 : mono));
    for (const GeneratorRepr& g : F.slices) check_generator_object(g, rep);
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

std::string emit_table(const HerglotzField& F, const std::vector<double>& s_grid,
                       const std::vector<double>& t_grid, const std::vector<Cplx>& zeta_grid,
                       const std::string& quantity, double x, const OdeConfig& cfg) {
    const bool needs_zeta = (quantity == "v" || quantity == "transition");
    std::ostringstream os;
    os << (needs_zeta ? "s,t,re_zeta,im_zeta,re_val,im_val" : "s,t,val") << "\n";
    for (double s : s_grid) {
        for (double t : t_grid) {
            if (t < s) continue;
            if (needs_zeta) {
                for (Cplx zeta : zeta_grid) {
                    Cplx v = (quantity == "v") ? laplace_exponent(F, s, t, zeta, cfg)
                                               : transition_laplace(F, s, t, x, zeta, cfg);
                    os << fmt(s) << "," << fmt(t) << "," << fmt(zeta) << "," << fmt(v) << "\n";
                }
            } else {
                double v;
                if (quantity == "mean")
                    v = conditional_mean(F, s, t, x);
                else if (quantity == "deriv0")
                    v = brfp0_derivative(F, s, t);
                else
                    v = brfp0_second_derivative(F, s, t);
                os << fmt(s) << "," << fmt(t) << "," << fmt(v) << "\n";
            }
        }
    }
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"Bernstein generators and the evolution families they drive "
                 "on the right half-plane"};
    app.require_subcommand(1);

    std::string arg_bf, arg_gen, arg_field, arg_spec, arg_z, arg_zeta, arg_s = "0", arg_t,
                arg_u, arg_out, arg_format = "csv", arg_quantity = "v";
    double arg_x = 1.0, arg_rtol = 0.0;
    bool allow_exit = false;

    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", arg_out, "output file (default: stdout)");
        cmd->add_option("--format", arg_format, "output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };
    auto add_rtol = [&](CLI::App* cmd) {
        cmd->add_option("--rtol", arg_rtol, "ODE solver relative tolerance");
    };

    CLI::App* c_eval = app.add_subcommand("eval", "evaluate a Bernstein function at z");
    c_eval->add_option("--bf", arg_bf, "Bernstein function JSON (inline or file)")->required();
    c_eval->add_option("--z", arg_z, "evaluation point \"re,im\"")->required();
    add_out(c_eval);

    CLI::App* c_flow = app.add_subcommand("flow", "run the semigroup flow of a generator");
    c_flow->add_option("--gen", arg_gen, "generator JSON (inline or file)")->required();
    c_flow->add_option("--t", arg_t, "flow time")->required();
    c_flow->add_option("--z", arg_z, "initial point \"re,im\"")->required();
    add_out(c_flow);
    add_rtol(c_flow);

    CLI::App* c_evolve = app.add_subcommand("evolve", "forward evolution w_{s,t}(z)");
    CLI::App* c_reverse = app.add_subcommand("reverse", "reverse evolution v_{s,t}(z)");
    CLI::App* c_inverse = app.add_subcommand("inverse", "inverse evolution w_{s,t}^{-1}(z)");
    for (CLI::App* cmd : {c_evolve, c_reverse, c_inverse}) {
        cmd->add_option("--field", arg_field, "Herglotz field JSON (inline or file)")->required();
        cmd->add_option("--s", arg_s, "start time (default 0)");
        cmd->add_option("--t", arg_t, "end time")->required();
        cmd->add_option("--z", arg_z, "point \"re,im\"")->required();
        add_out(cmd);
        add_rtol(cmd);
    }
    c_inverse->add_flag("--allow-exit", allow_exit,
                        "report a domain exit as output instead of an error");

    CLI::App* c_classify = app.add_subcommand("classify", "boundary classification of a generator");
    c_classify->add_option("--gen", arg_gen, "generator JSON (inline or file)")->required();
    add_out(c_classify);

    CLI::App* c_check = app.add_subcommand("check", "validate an object against its invariants");
    c_check->add_option("--gen", arg_gen, "generator JSON");
    c_check->add_option("--bf", arg_bf, "Bernstein function JSON");
    c_check->add_option("--field", arg_field, "Herglotz field JSON");
    add_out(c_check);

    CLI::App* c_table = app.add_subcommand("table", "tabulate process quantities as CSV");
    c_table->add_option("--field", arg_field, "Herglotz field JSON")->required();
    c_table->add_option("--quantity", arg_quantity,
                        "one of: v, transition, mean, deriv0, deriv0_2")
        ->check(CLI::IsMember({"v", "transition", "mean", "deriv0", "deriv0_2"}));
    c_table->add_option("--s", arg_s, "comma-separated s grid");
    c_table->add_option("--t", arg_t, "comma-separated t grid")->required();
    c_table->add_option("--zeta", arg_zeta, "semicolon-separated zeta grid \"re,im;re,im\"");
    c_table->add_option("--x", arg_x, "initial mass for transition/mean");
    c_table->add_option("--out", arg_out, "output file (default: stdout)");
    add_rtol(c_table);

    CLI::App* c_mech = app.add_subcommand("mech", "expand a named branching mechanism");
    c_mech->add_option("--spec", arg_spec, "mechanism JSON (inline or file)")->required();
    add_out(c_mech);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitParse;
    }

    try {
        OdeConfig cfg = ode_config_from_env(arg_rtol);
        Output out{arg_out, arg_format == "json"};

        if (c_eval->parsed()) {
            BernsteinRepr f = parse_bernstein(read_object_arg(arg_bf));
            f.rho = normalized(std::move(f.rho));
            validate(f);
            out.value(eval(f, parse_complex(arg_z)));
        } else if (c_flow->parsed()) {
            GeneratorRepr g = parse_generator(read_object_arg(arg_gen));
            g.pi = normalized(std::move(g.pi));
            validate(g);
            out.value(flow(g, std::stod(arg_t), parse_complex(arg_z), cfg).w);
        } else if (c_evolve->parsed() || c_reverse->parsed() || c_inverse->parsed()) {
            HerglotzField F = parse_field(read_object_arg(arg_field));
            for (GeneratorRepr& g : F.slices) g.pi = normalized(std::move(g.pi));
            validate(F);
            double s = std::stod(arg_s), t = std::stod(arg_t);
            Cplx z = parse_complex(arg_z);
            if (c_evolve->parsed()) {
                out.value(evolve(F, s, t, z, cfg));
            } else if (c_reverse->parsed()) {
                out.value(reverse_evolve(F, s, t, z, cfg));
            } else {
                InverseResult r = inverse_evolve(F, s, t, z, cfg);
                if (!r.exited()) {
                    out.value(r.w);
                } else if (allow_exit) {
                    if (out.as_json) {
                        std::ostringstream os;
                        write_json(ordered_json{{"domain_exit", r.t_exit}}, os);
                        os << "\n";
                        out.write(os.str());
                    } else {
                        out.write("exit," + fmt(r.t_exit) + "\n");
                    }
                } else {
                    std::cerr << "inverse: point left the half-plane at t = " << fmt(r.t_exit)
                              << " (pass --allow-exit to report it as output)\n";
                    return kExitDomain;
                }
            }
        } else if (c_classify->parsed()) {
            GeneratorRepr g = parse_generator(read_object_arg(arg_gen));
            g.pi = normalized(std::move(g.pi));
            validate(g);
            GeneratorClassification cl = classify(g);
            ordered_json j;
            j["phi0"] = cl.phi0;
            j["phi_prime0"] = cl.phi_prime0;
            j["phi_second0"] = cl.phi_second0;
            j["phi_prime_inf"] = cl.phi_prime_inf;
            j["phi_second_inf"] = cl.phi_second_inf;
            j["has_brfp_0"] = cl.has_brfp_0;
            j["has_brfp_inf"] = cl.has_brfp_inf;
            switch (cl.dw_point.kind) {
                case DwPoint::Kind::zero: j["dw_point"] = "zero"; break;
                case DwPoint::Kind::infinity: j["dw_point"] = "infinity"; break;
                case DwPoint::Kind::undetermined: j["dw_point"] = "undetermined"; break;
                case DwPoint::Kind::interior:
                    j["dw_point"] = "interior";
                    j["dw_location"] = cl.dw_point.location;
                    break;
            }
            std::ostringstream os;
            write_json(j, os);
            os << "\n";
            out.write(os.str());
        } else if (c_check->parsed()) {
            int given = !arg_gen.empty() + !arg_bf.empty() + !arg_field.empty();
            if (given != 1)
                throw parse_error("check: pass exactly one of --gen, --bf, --field");
            CheckReport rep;
            if (!arg_gen.empty()) {
                GeneratorRepr g = parse_generator(read_object_arg(arg_gen));
                check_generator_object(g, rep);
            } else if (!arg_bf.empty()) {
                BernsteinRepr f = parse_bernstein(read_object_arg(arg_bf));
                check_bernstein_object(f, rep);
            } else {
                HerglotzField F = parse_field(read_object_arg(arg_field));
                check_field_object(F, rep);
            }
            out.write(rep.render());
            if (!rep.ok()) return kExitDomain;
        } else if (c_table->parsed()) {
            HerglotzField F = parse_field(read_object_arg(arg_field));
            for (GeneratorRepr& g : F.slices) g.pi = normalized(std::move(g.pi));
            validate(F);
            std::vector<double> s_grid = parse_real_grid(arg_s);
            std::vector<double> t_grid = parse_real_grid(arg_t);
            std::vector<Cplx> zeta_grid = parse_complex_grid(arg_zeta);
            if (s_grid.empty()) s_grid = {0.0};
            bool needs_zeta = (arg_quantity == "v" || arg_quantity == "transition");
            if (needs_zeta && zeta_grid.empty())
                throw parse_error("table: quantity \"" + arg_quantity + "\" needs --zeta");
            out.write(emit_table(F, s_grid, t_grid, zeta_grid, arg_quantity, arg_x, cfg));
        } else if (c_mech->parsed()) {
            MechanismSpec spec = parse_mechanism(read_object_arg(arg_spec));
            std::ostringstream os;
            write_json(to_json(expand(spec)), os);
            os << "\n";
            out.write(os.str());
        }
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const convergence_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid numeric argument (" << e.what() << ")\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitOk;
}
