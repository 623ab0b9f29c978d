#include "falsetheta/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ft {

namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw MalformedParams(std::string(what) + ": " + e.what());
    }
}

long require_long(const json& j, const char* field) {
    if (!j.is_number_integer()) throw MalformedParams(std::string("field '") + field + "' must be an integer");
    return j.get<long>();
}

Rational require_rational(const json& j, const char* field) {
    if (!j.is_string()) throw MalformedParams(std::string("field '") + field + "' must be a \"p/q\" string");
    return parse_rational(j.get<std::string>());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedParams("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

std::string qexpansion_to_json(const QExpansion& x, int indent) {
    json coeffs = json::array();
    for (const auto& [n, c] : x.raw_coeffs()) coeffs.push_back(json::array({n, to_string(c)}));
    json rec{{"denom", x.denom()}, {"trunc", x.trunc_index()}, {"coeffs", std::move(coeffs)}};
    return rec.dump(indent);
}

QExpansion qexpansion_from_json(const std::string& text) {
    json rec = parse_or_throw(text, "series record");
    if (!rec.is_object() || !rec.contains("denom") || !rec.contains("trunc") || !rec.contains("coeffs"))
        throw MalformedParams("series record needs fields denom, trunc, coeffs");
    long denom = require_long(rec["denom"], "denom");
    long trunc = require_long(rec["trunc"], "trunc");
    if (denom <= 0) throw MalformedParams("field 'denom' must be positive");
    QExpansion out(denom, trunc);
    if (!rec["coeffs"].is_array()) throw MalformedParams("field 'coeffs' must be an array");
    for (const auto& term : rec["coeffs"]) {
        if (!term.is_array() || term.size() != 2)
            throw MalformedParams("each coefficient entry must be [n, \"p/q\"]");
        long n = require_long(term[0], "coeffs[i][0]");
        Rational c = require_rational(term[1], "coeffs[i][1]");
        if (n >= trunc) throw MalformedParams("coefficient exponent at or beyond the truncation window");
        out.set_coeff_index(n, c);
    }
    return out;
}

std::string graph_to_json(const PlumbingGraph& g, int indent) {
    json vertices = json::array();
    for (std::size_t i = 0; i < g.size(); ++i)
        vertices.push_back(json{{"id", i}, {"weight", g.weights[i]}});
    json edges = json::array();
    for (const auto& [u, v] : g.edges) edges.push_back(json::array({u, v}));
    json rec{{"vertices", std::move(vertices)}, {"edges", std::move(edges)}};
    return rec.dump(indent);
}

PlumbingGraph graph_from_json(const std::string& text) {
    json rec = parse_or_throw(text, "plumbing graph");
    if (!rec.is_object() || !rec.contains("vertices") || !rec.contains("edges"))
        throw MalformedParams("plumbing graph needs fields vertices, edges");
    if (!rec["vertices"].is_array() || !rec["edges"].is_array())
        throw MalformedParams("vertices and edges must be arrays");
    const auto n = rec["vertices"].size();
    PlumbingGraph g;
    g.weights.assign(n, 0);
    std::vector<bool> seen(n, false);
    for (const auto& v : rec["vertices"]) {
        if (!v.is_object() || !v.contains("id") || !v.contains("weight"))
            throw MalformedParams("each vertex must be {\"id\": int, \"weight\": int}");
        long id = require_long(v["id"], "id");
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[id])
            throw MalformedParams("vertex ids must cover 0..n-1 exactly once");
        seen[id] = true;
        g.weights[id] = require_long(v["weight"], "weight");
    }
    for (const auto& e : rec["edges"]) {
        if (!e.is_array() || e.size() != 2) throw MalformedParams("each edge must be [id, id]");
        g.edges.emplace_back(static_cast<int>(require_long(e[0], "edge endpoint")),
                             static_cast<int>(require_long(e[1], "edge endpoint")));
    }
    return g;
}

PlumbingGraph load_graph_file(const std::string& path) { return graph_from_json(read_file(path)); }

std::string fsqe_to_json(const FsqeFileInput& in, int indent) {
    json shifts = json::array();
    for (const auto& [a1, a2] : in.spec.alphas)
        shifts.push_back(json::array({to_string(a1), to_string(a2)}));
    json rec{{"sigma", json::array({in.spec.sigma1, in.spec.sigma2, in.spec.sigma3})},
             {"K", in.spec.K},
             {"S", std::move(shifts)},
             {"eps", in.spec.eps}};
    if (in.shift) rec["shift"] = to_string(*in.shift);
    if (in.scale) rec["scale"] = to_string(*in.scale);
    return rec.dump(indent);
}

FsqeFileInput fsqe_from_json(const std::string& text) {
    json rec = parse_or_throw(text, "quadrant-family spec");
    if (!rec.is_object() || !rec.contains("sigma") || !rec.contains("K") || !rec.contains("S") ||
        !rec.contains("eps"))
        throw MalformedParams("quadrant-family spec needs fields sigma, K, S, eps");
    if (!rec["sigma"].is_array() || rec["sigma"].size() != 3)
        throw MalformedParams("field 'sigma' must be [s1, s2, s3]");
    FsqeFileInput out;
    out.spec.sigma1 = require_long(rec["sigma"][0], "sigma");
    out.spec.sigma2 = require_long(rec["sigma"][1], "sigma");
    out.spec.sigma3 = require_long(rec["sigma"][2], "sigma");
    out.spec.K = require_long(rec["K"], "K");
    if (!rec["S"].is_array()) throw MalformedParams("field 'S' must be an array of shift pairs");
    for (const auto& s : rec["S"]) {
        if (!s.is_array() || s.size() != 2)
            throw MalformedParams("each shift must be [\"p/q\", \"p/q\"]");
        out.spec.alphas.emplace_back(require_rational(s[0], "S"), require_rational(s[1], "S"));
    }
    if (!rec["eps"].is_array()) throw MalformedParams("field 'eps' must be an array of signs");
    for (const auto& e : rec["eps"]) out.spec.eps.push_back(static_cast<int>(require_long(e, "eps")));
    if (rec.contains("shift") != rec.contains("scale"))
        throw MalformedParams("difference form needs both 'shift' and 'scale'");
    if (rec.contains("shift")) {
        out.shift = require_rational(rec["shift"], "shift");
        out.scale = require_rational(rec["scale"], "scale");
    }
    return out;
}

FsqeFileInput load_fsqe_file(const std::string& path) { return fsqe_from_json(read_file(path)); }

} // namespace ft
