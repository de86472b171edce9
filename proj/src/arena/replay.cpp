#include "hlt/arena/replay.hpp"

#include <ostream>

#include "json.hpp"

namespace hlt::arena {

void ReplayWriter::record(const Arena& arena, std::span<const int> actions, const StepResult& result) {
    nlohmann::json line{{"step", arena.state().step},
                        {"state_hash", arena.state_hash()},
                        {"actions", std::vector<int>(actions.begin(), actions.end())},
                        {"reward", result.reward},
                        {"outcome", std::string(to_string(result.outcome))}};
    out_ << line.dump() << '\n';
}

}  // namespace hlt::arena
