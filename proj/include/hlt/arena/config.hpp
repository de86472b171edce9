#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace hlt::arena {

/// Capabilities shared by every agent of one type.
struct AgentTypeSpec {
    std::string name;
    int count = 1;           ///< agents of this type per team
    int max_hp = 1;
    int move_speed = 1;      ///< cells per move action
    int attack_range = 1;    ///< Chebyshev cells; also the repair reach
    int attack_damage = 1;
    int repair_amount = 0;   ///< HP restored per repair action; 0 for non-support types
    bool can_target_air = true;
    bool is_air = false;

    friend bool operator==(const AgentTypeSpec&, const AgentTypeSpec&) = default;
};

/// Per-step reward terms, each normalized by the team's total max HP except `win`.
struct RewardWeights {
    double damage_dealt = 1.0;
    double damage_taken = 0.5;
    double repair = 0.3;
    double win = 1.0;

    friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct ArenaConfig {
    int width = 12;
    int height = 12;
    int max_steps = 40;
    double gamma = 0.99;
    int vision_radius = 6;
    int attack_slots = 4;
    int spawn_jitter = 1;  ///< max row offset applied at reset
    RewardWeights reward;
    std::vector<AgentTypeSpec> roster;

    /// Two support air units, four long-range missile units, four short-range
    /// kinetic units that cannot hit air targets.
    static ArenaConfig default_2u4m4k();

    /// Throws ConfigError describing the first violated constraint.
    void validate() const;

    int team_size() const;
    int num_types() const { return static_cast<int>(roster.size()); }

    friend bool operator==(const ArenaConfig&, const ArenaConfig&) = default;
};

/// Strict JSON mapping: unknown keys and wrong types raise ConfigError.
ArenaConfig arena_config_from_json(const nlohmann::json& j);
nlohmann::json arena_config_to_json(const ArenaConfig& config);

}  // namespace hlt::arena
