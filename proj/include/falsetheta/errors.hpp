#pragma once

#include <stdexcept>
#include <string>

namespace ft {

// Exact-arithmetic failures.
struct ZeroLeadingCoefficient : std::domain_error {
    explicit ZeroLeadingCoefficient(const std::string& what) : std::domain_error(what) {}
};
struct IncompatibleLattices : std::domain_error {
    explicit IncompatibleLattices(const std::string& what) : std::domain_error(what) {}
};
struct NonpositiveOffset : std::domain_error {
    explicit NonpositiveOffset(const std::string& what) : std::domain_error(what) {}
};
struct InvalidTorsionPoint : std::domain_error {
    explicit InvalidTorsionPoint(const std::string& what) : std::domain_error(what) {}
};

// Registry / input failures.
struct UnknownSeries : std::invalid_argument {
    explicit UnknownSeries(const std::string& what) : std::invalid_argument(what) {}
};
struct MalformedParams : std::invalid_argument {
    explicit MalformedParams(const std::string& what) : std::invalid_argument(what) {}
};
struct ClosureViolation : std::invalid_argument {
    explicit ClosureViolation(const std::string& what) : std::invalid_argument(what) {}
};

// Plumbing-graph failures.
struct NotATree : std::invalid_argument {
    explicit NotATree(const std::string& what) : std::invalid_argument(what) {}
};
struct NotPositiveDefinite : std::invalid_argument {
    explicit NotPositiveDefinite(const std::string& what) : std::invalid_argument(what) {}
};
struct NotUnimodular : std::invalid_argument {
    explicit NotUnimodular(const std::string& what) : std::invalid_argument(what) {}
};
struct ClassVectorMismatch : std::invalid_argument {
    explicit ClassVectorMismatch(const std::string& what) : std::invalid_argument(what) {}
};

// Numerical failures.
struct NonconvergentEvaluation : std::runtime_error {
    explicit NonconvergentEvaluation(const std::string& what) : std::runtime_error(what) {}
};
struct BranchCrossing : std::runtime_error {
    explicit BranchCrossing(const std::string& what) : std::runtime_error(what) {}
};
struct PolePoint : std::runtime_error {
    explicit PolePoint(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ft
