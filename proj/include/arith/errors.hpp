#pragma once

#include <stdexcept>
#include <string>

namespace arith {

// One exception type per contract failure so callers and tests can catch
// exactly the condition they care about.

struct UnsupportedWidth : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IllegalTree : std::logic_error {
    using std::logic_error::logic_error;
};

struct IllegalAction : std::logic_error {
    using std::logic_error::logic_error;
};

struct LevelTooSmall : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WidthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TerminalState : std::logic_error {
    using std::logic_error::logic_error;
};

struct NotTerminal : std::logic_error {
    using std::logic_error::logic_error;
};

struct NonFiniteInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EpisodeAborted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoEvaluations : std::logic_error {
    using std::logic_error::logic_error;
};

struct UnvisitedNode : std::logic_error {
    using std::logic_error::logic_error;
};

struct CommandFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Timeout : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConflictingValue : std::logic_error {
    using std::logic_error::logic_error;
};

struct UnboundInput : std::logic_error {
    using std::logic_error::logic_error;
};

struct InvalidModuleName : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace arith
