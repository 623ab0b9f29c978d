#pragma once

#include "falsetheta/invariants.hpp"
#include "falsetheta/qexpansion.hpp"

#include <optional>
#include <string>

namespace ft {

// Structured record for a truncated q-series:
//   { "denom": D, "trunc": N, "coeffs": [[n, "p/q"], ...] }
// where every exponent is n / D, the window of known coefficients is
// [lead, N) on the same lattice, rationals travel as strings, and the
// coefficient list is ascending in n.  Round trip is exact:
// qexpansion_from_json(qexpansion_to_json(x)) == x.
std::string qexpansion_to_json(const QExpansion& x, int indent = -1);
QExpansion qexpansion_from_json(const std::string& text);

// Plumbing-graph file:
//   { "vertices": [{"id": int, "weight": int}, ...], "edges": [[id, id], ...] }
// Vertex ids must form 0..n-1 in some order; edges refer to ids.
std::string graph_to_json(const PlumbingGraph& g, int indent = -1);
PlumbingGraph graph_from_json(const std::string& text);
PlumbingGraph load_graph_file(const std::string& path);

// Quadrant-family input file:
//   { "sigma": [s1, s2, s3], "K": int, "S": [["p/q", "p/q"], ...],
//     "eps": [1, -1, ...] }
// plus, for the difference form q^{shift} * scale * (F_Q - F_{Q'}), the
// optional string fields "shift" and "scale" (both present or both absent).
struct FsqeFileInput {
    FsqeSpec spec;
    std::optional<Rational> shift;
    std::optional<Rational> scale;
};
std::string fsqe_to_json(const FsqeFileInput& in, int indent = -1);
FsqeFileInput fsqe_from_json(const std::string& text);
FsqeFileInput load_fsqe_file(const std::string& path);

} // namespace ft
