#pragma once

#include <stdexcept>
#include <string>

namespace optk {

// Numeric error categories surfaced through the C API as exit/status codes.
enum class ErrorCode : int {
    ok = 0,
    invalid_argument = 1,
    zeno_guard = 2,
    problematic_boundary = 3,
    simultaneous_events = 4,
    bracketing_failure = 5,
    contraction_violated = 6,
    p_membership_violated = 7,
    internal = 8,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what)
        : Error(ErrorCode::invalid_argument, what) {}
};

// Tripped when the transition counter exceeds the configured per-unit-time
// budget; a finite switched-linear trajectory cannot do this, so it flags a
// numerical pathology rather than genuine dynamics.
struct ZenoGuardTripped : Error {
    explicit ZenoGuardTripped(const std::string& what)
        : Error(ErrorCode::zeno_guard, what) {}
};

// A boundary point where the crossing pair has (numerically) equal Laplacian
// rows, so the exit direction from the regime is ambiguous.
struct ProblematicBoundary : Error {
    explicit ProblematicBoundary(const std::string& what)
        : Error(ErrorCode::problematic_boundary, what) {}
};

struct SimultaneousEvents : Error {
    explicit SimultaneousEvents(const std::string& what)
        : Error(ErrorCode::simultaneous_events, what) {}
};

struct BracketingFailure : Error {
    explicit BracketingFailure(const std::string& what)
        : Error(ErrorCode::bracketing_failure, what) {}
};

struct ContractionViolated : Error {
    explicit ContractionViolated(const std::string& what)
        : Error(ErrorCode::contraction_violated, what) {}
};

struct PMembershipViolated : Error {
    explicit PMembershipViolated(const std::string& what)
        : Error(ErrorCode::p_membership_violated, what) {}
};

}  // namespace optk
