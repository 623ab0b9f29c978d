// Command line front end: expand named series, run the exact verification
// suites, evaluate series and completions numerically, probe modular
// transformation residuals, and compute plumbing block series and
// quadrant-family sums from input files.
//
// Exit codes: 0 success / all checks pass, 1 verification failure, 2 usage
// error, 3 numeric nonconvergence.  FT_EICHLER_EXTENDED=1 switches the
// numeric integral layer to extended precision.

#include <chrono>
#include <complex>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "falsetheta/eichler.hpp"
#include "falsetheta/invariants.hpp"
#include "falsetheta/jacobi_ct.hpp"
#include "falsetheta/lattice.hpp"
#include "falsetheta/qexpansion.hpp"
#include "falsetheta/serialize.hpp"
#include "falsetheta/special.hpp"

namespace {

using nlohmann::json;
using namespace ft;

struct RunConfig {
    std::string format = "human"; // or "structured"
    std::string out_path;         // empty means stdout
    long order = 0;
};

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out_path.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(cfg.out_path);
        if (!out) throw MalformedParams("cannot open output path: " + cfg.out_path);
        out << text << "\n";
    }
}

bool structured(const RunConfig& cfg) { return cfg.format == "structured"; }

// "re,im" with Im > 0 (all evaluation points live in the upper half-plane)
Complex parse_point(const std::string& s, const char* field) {
    auto comma = s.find(',');
    if (comma == std::string::npos)
        throw MalformedParams(std::string("field '") + field + "' must be \"re,im\"");
    try {
        double re = std::stod(s.substr(0, comma));
        double im = std::stod(s.substr(comma + 1));
        if (!(im > 0))
            throw MalformedParams(std::string("field '") + field +
                                  "' needs positive imaginary part");
        return {re, im};
    } catch (const MalformedParams&) {
        throw;
    } catch (const std::exception&) {
        throw MalformedParams(std::string("bad number in field '") + field + "'");
    }
}

json complex_record(Complex z) { return json::array({z.real(), z.imag()}); }

// "name" or "name(p1,p2,...)" with rational parameters
std::pair<std::string, std::vector<Rational>> parse_series_name(std::string s) {
    std::vector<Rational> params;
    auto open = s.find('(');
    if (open != std::string::npos) {
        if (s.back() != ')') throw MalformedParams("unbalanced parenthesis in series name");
        std::string args = s.substr(open + 1, s.size() - open - 2);
        s = s.substr(0, open);
        std::stringstream ss(args);
        std::string piece;
        while (std::getline(ss, piece, ',')) params.push_back(parse_rational(piece));
    }
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "theta_torsion") s = "torsion";
    return {s, params};
}

std::string human_series(const QExpansion& x) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [n, c] : x.raw_coeffs()) {
        Rational e = rat(n, x.denom());
        if (first) {
            if (c < 0) os << "-";
            first = false;
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        Rational ac = abs(c);
        if (e == 0) {
            os << to_string(ac);
        } else {
            if (ac != 1) os << to_string(ac) << " ";
            os << "q";
            if (e != 1) {
                if (is_integer(e))
                    os << "^" << to_string(e);
                else
                    os << "^(" << to_string(e) << ")";
            }
        }
    }
    if (first) os << "0";
    return os.str();
}

int cmd_expand(const RunConfig& cfg, const std::string& series) {
    auto [name, params] = parse_series_name(series);
    // -N is the last order of interest; the window is [lead, N+1)
    BuiltinSeries b = builtin_series(name, params, cfg.order + 1);
    if (structured(cfg)) {
        json rec = json::parse(qexpansion_to_json(b.series));
        if (b.phase != "1") rec["phase"] = b.phase;
        emit(cfg, rec.dump(1));
    } else {
        std::string text = human_series(b.series);
        if (b.phase != "1") text = b.phase + " * (" + text + ")";
        emit(cfg, text);
    }
    return 0;
}

// the half-integer triple product comparison at order N, as a pass/fail probe
std::optional<Rational> triple_product_mismatch(long N) {
    const Rational T{N + 1};
    std::vector<std::tuple<long, long, Rational, Rational>> tms;
    for (long m = -(N + 3); m <= N + 2; ++m) {
        Rational e = rat((2 * m + 1) * (2 * m + 1), 8);
        if (e < T) tms.emplace_back(2 * m + 1, 0, e, rat(m % 2 == 0 ? 1 : -1));
    }
    LaurentBlock lhs = make_poly(2, 1, 8, T, tms);
    LaurentBlock rhs = finite_pochhammer({2, 0}, Rational(0), N + 2, T, 2, 1, 8)
                           .mul(finite_pochhammer({-2, 0}, Rational(1), N + 1, T, 2, 1, 8));
    rhs = rhs.mul_scalar(pochhammer_qq(N + 1));
    rhs = rhs.mul_scalar(QExpansion::monomial(rat(1, 8), Rational(-1)));
    rhs = rhs.shifted_z(-1, 0);
    if (lhs.same_terms(rhs)) return std::nullopt;
    for (const auto& [idx, c] : lhs.terms()) {
        auto miss = first_mismatch(c, rhs.coeff(idx.first, idx.second));
        if (miss) return miss;
    }
    for (const auto& [idx, c] : rhs.terms()) {
        auto miss = first_mismatch(c, lhs.coeff(idx.first, idx.second));
        if (miss) return miss;
    }
    return Rational(0);
}

int cmd_verify(const RunConfig& cfg, const std::string& which) {
    auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::optional<Rational> mismatch;
    if (which == "A2" || which == "B2") {
        DecompositionReport rep =
            verify_decomposition(which == "A2" ? RootSystem::A2 : RootSystem::B2, cfg.order + 1);
        pass = rep.all_equal;
        mismatch = rep.first_mismatch;
    } else if (which == "JTP") {
        mismatch = triple_product_mismatch(cfg.order);
        pass = !mismatch.has_value();
    } else if (which == "eta3") {
        QExpansion lhs = eta3_theta_series(cfg.order + 1);
        QExpansion rhs = eta_power_series(3, cfg.order + 1);
        pass = agree(lhs, rhs);
        if (!pass) mismatch = first_mismatch(lhs, rhs);
    } else if (which == "k1theta") {
        TwoVariableIdentityReport rep = theta_combination_identity(cfg.order);
        pass = rep.match;
        if (rep.first_mismatch) mismatch = rep.first_mismatch->first;
    } else {
        throw MalformedParams("field 'which' must be one of A2, B2, JTP, eta3, k1theta");
    }
    auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (structured(cfg)) {
        json rec{{"which", which},
                 {"status", pass ? "pass" : "fail"},
                 {"elapsed_ms", elapsed.count()}};
        if (mismatch) rec["first_mismatch_exponent"] = to_string(*mismatch);
        emit(cfg, rec.dump(1));
    } else {
        std::ostringstream os;
        os << which << " order " << cfg.order << ": " << (pass ? "pass" : "FAIL");
        if (mismatch) os << " (first mismatch at q^" << to_string(*mismatch) << ")";
        os << " [" << elapsed.count() << " ms]";
        emit(cfg, os.str());
    }
    return pass ? 0 : 1;
}

CompletionKind parse_completion(const std::string& kind, long k, const std::string& spec_path) {
    if (kind == "psi") return CompletionKind::psi();
    if (kind == "phi") return CompletionKind::phi();
    if (kind == "fk") return CompletionKind::fk(k);
    if (kind == "fsqe") {
        if (spec_path.empty())
            throw MalformedParams("completion 'fsqe' needs --spec with an input file");
        return CompletionKind::fsqe_kind(load_fsqe_file(spec_path).spec);
    }
    throw MalformedParams("field 'completion' must be one of psi, phi, fk, fsqe");
}

int cmd_eval(const RunConfig& cfg, const std::string& series, const std::string& completion,
             long k, const std::string& spec_path, const std::string& tau_s,
             const std::string& w_s, const QuadratureConfig& quad) {
    Complex tau = parse_point(tau_s, "tau");
    if (series.empty() == completion.empty())
        throw MalformedParams("exactly one of --series and --completion is required");
    json rec;
    std::ostringstream human;
    if (!series.empty()) {
        auto [name, params] = parse_series_name(series);
        long N = cfg.order > 0 ? cfg.order
                               : static_cast<long>(std::ceil(6.0 / tau.imag())) + 8;
        BuiltinSeries b = builtin_series(name, params, N + 1);
        auto r = b.series.eval(tau);
        Complex value = r.value;
        if (b.phase == "-i") value *= Complex(0, -1);
        rec = json{{"value", complex_record(value)},
                   {"error_estimate", r.tail_bound},
                   {"order", N}};
        human << "value = " << value.real() << (value.imag() < 0 ? " - " : " + ")
              << std::abs(value.imag()) << "i  (series tail <= " << r.tail_bound << ")";
    } else {
        CompletionKind ck = parse_completion(completion, k, spec_path);
        std::optional<Complex> w;
        if (!w_s.empty()) w = parse_point(w_s, "w");
        CompletionResult r = completion_detailed(ck, tau, w, quad);
        rec = json{{"value", complex_record(r.value)},
                   {"error_estimate", r.tail_remainder},
                   {"chi", r.chi}};
        human << "value = " << r.value.real() << (r.value.imag() < 0 ? " - " : " + ")
              << std::abs(r.value.imag()) << "i  (tail <= " << r.tail_remainder
              << ", chi = " << r.chi << ")";
    }
    emit(cfg, structured(cfg) ? rec.dump(1) : human.str());
    return 0;
}

int cmd_transform(const RunConfig& cfg, const std::string& family_s,
                  const std::vector<long>& entries, const std::vector<std::string>& taus,
                  const std::vector<std::string>& ws, double max_residual,
                  const QuadratureConfig& quad) {
    CompletionFamily family;
    if (family_s == "psi")
        family = CompletionFamily::Psi;
    else if (family_s == "phi")
        family = CompletionFamily::Phi;
    else
        throw MalformedParams("field 'family' must be psi or phi");
    if (entries.size() != 4) throw MalformedParams("field 'matrix' must be a,b,c,d");
    ModularMatrix m{entries[0], entries[1], entries[2], entries[3]};
    if (m.det() != 1) throw MalformedParams("field 'matrix' must have determinant one");
    if (taus.size() != ws.size() || taus.empty())
        throw MalformedParams("need equally many --tau and --w sample points");
    json samples = json::array();
    std::ostringstream human;
    bool pass = true;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        Complex tau = parse_point(taus[i], "tau");
        Complex w = parse_point(ws[i], "w");
        double res = modular_residual(family, m, tau, w, quad);
        if (max_residual > 0 && res > max_residual) pass = false;
        samples.push_back(json{{"tau", complex_record(tau)},
                               {"w", complex_record(w)},
                               {"residual", res}});
        human << family_s << " [[" << m.a << "," << m.b << "],[" << m.c << "," << m.d
              << "]] at tau = " << taus[i] << ", w = " << ws[i] << ": residual " << res << "\n";
    }
    EtaMultiplierState mult = eta_multiplier(m);
    if (structured(cfg)) {
        json rec{{"family", family_s},
                 {"matrix", json::array({m.a, m.b, m.c, m.d})},
                 {"multiplier_word", mult.word},
                 {"multiplier_phase_twelfths", mult.phase_twelfths},
                 {"samples", std::move(samples)}};
        if (max_residual > 0) rec["status"] = pass ? "pass" : "fail";
        emit(cfg, rec.dump(1));
    } else {
        human << "multiplier " << mult.word << " (phase " << mult.phase_twelfths << "/12 pi)";
        if (max_residual > 0) human << (pass ? "  pass" : "  FAIL");
        emit(cfg, human.str());
    }
    return pass ? 0 : 1;
}

int cmd_zhat(const RunConfig& cfg, const std::string& graph_path,
             const std::vector<long>& class_vec) {
    PlumbingGraph g = load_graph_file(graph_path);
    Rational N(cfg.order + 1);
    QExpansion direct =
        class_vec.empty() ? zhat_series(g, N) : zhat_series(g, class_vec, N);
    QExpansion support =
        class_vec.empty() ? zhat_series_by_support(g, N) : zhat_series_by_support(g, class_vec, N);
    bool pass = agree(direct, support);
    auto miss = first_mismatch(direct, support);
    if (structured(cfg)) {
        json rec = json::parse(qexpansion_to_json(direct));
        rec["pipelines_agree"] = pass;
        if (miss) rec["first_mismatch_exponent"] = to_string(*miss);
        emit(cfg, rec.dump(1));
    } else {
        std::ostringstream os;
        os << human_series(direct) << "\n"
           << "pipelines " << (pass ? "agree" : "DISAGREE") << " through q^" << (cfg.order);
        if (miss) os << " (first mismatch at q^" << to_string(*miss) << ")";
        emit(cfg, os.str());
    }
    return pass ? 0 : 1;
}

int cmd_fsqe(const RunConfig& cfg, const std::string& spec_path) {
    FsqeFileInput in = load_fsqe_file(spec_path);
    Rational N(cfg.order + 1);
    long minimal = fsqe_minimal_scale(in.spec);
    if (minimal != in.spec.K)
        std::cerr << "warning: K = " << in.spec.K << " is not minimal; K = " << minimal
                  << " already makes K*S integral\n";
    QExpansion series;
    if (in.shift) {
        series = fsqe_difference_series(in.spec, *in.shift, *in.scale, N);
    } else {
        series = fsqe_series(in.spec, N); // symmetrized equality asserted inside
    }
    if (structured(cfg)) {
        json rec = json::parse(qexpansion_to_json(series));
        rec["symmetrized_equality"] = "exact";
        rec["minimal_scale"] = minimal;
        emit(cfg, rec.dump(1));
    } else {
        emit(cfg, human_series(series));
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact and numeric computations for rank one and rank two false theta series"};
    app.require_subcommand(1);
    app.footer("environment: FT_EICHLER_EXTENDED=1 switches numeric integrals to extended "
               "precision");

    RunConfig cfg;
    std::string series, which, completion, spec_path, graph_path, tau_s, w_s, family;
    std::vector<std::string> taus, ws;
    std::vector<long> matrix_entries, class_vec;
    long fk_k = 1;
    double max_residual = 0;
    QuadratureConfig quad;

    auto add_common = [&](CLI::App* sub, bool needs_order) {
        sub->add_option("--format", cfg.format, "human or structured")
            ->check(CLI::IsMember({"human", "structured"}));
        sub->add_option("-o,--output", cfg.out_path, "write the report to a file");
        auto* n = sub->add_option("-N,--order", cfg.order, "last q order of interest");
        if (needs_order) n->required();
    };
    auto add_quadrature = [&](CLI::App* sub) {
        sub->add_option("--nodes", quad.nodes, "Gauss-Legendre nodes per panel");
        sub->add_option("--panels", quad.panels, "panels per integration layer");
        sub->add_option("--tail", quad.tail, "vertical tail height (0 = automatic)");
        sub->add_option("--tol", quad.tolerance, "tail tolerance target");
    };

    CLI::App* expand = app.add_subcommand("expand", "print a named series to a given order");
    expand->add_option("--series", series, "registry name, e.g. eta, a2char, theta(2,1,1)")
        ->required();
    add_common(expand, true);

    CLI::App* verify = app.add_subcommand("verify", "run one of the exact identity suites");
    verify->add_option("--which", which, "A2, B2, JTP, eta3, or k1theta")->required();
    add_common(verify, true);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a series or completion numerically");
    eval->add_option("--series", series, "registry name to evaluate");
    eval->add_option("--completion", completion, "psi, phi, fk, or fsqe");
    eval->add_option("--k", fk_k, "rank parameter for --completion fk");
    eval->add_option("--spec", spec_path, "input file for --completion fsqe");
    eval->add_option("--tau", tau_s, "evaluation point \"re,im\", Im > 0")->required();
    eval->add_option("--w", w_s, "integral endpoint \"re,im\" (default: vertical limit)");
    add_common(eval, false);
    add_quadrature(eval);

    CLI::App* transform = app.add_subcommand("transform", "modular transformation residuals");
    transform->add_option("--family", family, "psi or phi")->required();
    transform->add_option("--matrix", matrix_entries, "entries a,b,c,d")->delimiter(',')->required();
    transform->add_option("--tau", taus, "sample points \"re,im\"")->required();
    transform->add_option("--w", ws, "endpoints \"re,im\", one per --tau")->required();
    transform->add_option("--max-residual", max_residual, "fail when a residual exceeds this");
    add_common(transform, false);
    add_quadrature(transform);

    CLI::App* zhat = app.add_subcommand("zhat", "plumbing block series from a graph file");
    zhat->add_option("--graph", graph_path, "plumbing graph file")->required();
    zhat->add_option("--class", class_vec, "class vector entries")->delimiter(',');
    add_common(zhat, true);

    CLI::App* fsqe = app.add_subcommand("fsqe", "quadrant-family series from a spec file");
    fsqe->add_option("--spec", spec_path, "quadrant-family input file")->required();
    add_common(fsqe, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cfg.order < 0 || ((expand->parsed() || verify->parsed() || zhat->parsed() ||
                               fsqe->parsed()) &&
                              cfg.order == 0))
            throw MalformedParams("field 'N' must be positive");
        if (expand->parsed()) return cmd_expand(cfg, series);
        if (verify->parsed()) return cmd_verify(cfg, which);
        if (eval->parsed())
            return cmd_eval(cfg, series, completion, fk_k, spec_path, tau_s, w_s, quad);
        if (transform->parsed())
            return cmd_transform(cfg, family, matrix_entries, taus, ws, max_residual, quad);
        if (zhat->parsed()) return cmd_zhat(cfg, graph_path, class_vec);
        if (fsqe->parsed()) return cmd_fsqe(cfg, spec_path);
        return 2;
    } catch (const NonconvergentEvaluation& e) {
        std::cerr << "numeric nonconvergence: " << e.what() << "\n";
        return 3;
    } catch (const BranchCrossing& e) {
        std::cerr << "numeric nonconvergence: " << e.what() << "\n";
        return 3;
    } catch (const PolePoint& e) {
        std::cerr << "numeric nonconvergence: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::logic_error& e) {
        // the internal symmetrized-equality assertion is a failed verification
        std::cerr << "verification failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
