#pragma once

#include <iosfwd>
#include <span>

#include "hlt/arena/arena.hpp"

namespace hlt::arena {

/// JSON-lines step log: {"step", "state_hash", "actions", "reward", "outcome"}.
/// The hash is of the state after the step.
class ReplayWriter {
public:
    explicit ReplayWriter(std::ostream& out) : out_(out) {}

    void record(const Arena& arena, std::span<const int> actions, const StepResult& result);

private:
    std::ostream& out_;
};

}  // namespace hlt::arena
