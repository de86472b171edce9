#include "hlt/arena/config.hpp"

#include <set>

#include "hlt/errors.hpp"
#include "hlt/util/json_fields.hpp"

namespace hlt::arena {

using nlohmann::json;

ArenaConfig ArenaConfig::default_2u4m4k() {
    ArenaConfig c;
    c.roster = {
        {"uav", 2, 6, 2, 2, 1, 2, true, true},
        {"missile", 4, 8, 1, 4, 2, 0, true, false},
        {"kinetic", 4, 12, 1, 1, 3, 0, false, false},
    };
    return c;
}

int ArenaConfig::team_size() const {
    int n = 0;
    for (const auto& t : roster) n += t.count;
    return n;
}

void ArenaConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("arena config: " + msg); };
    if (width < 4 || height < 1) fail("grid must be at least 4x1");
    if (max_steps < 1) fail("max_steps must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
    if (vision_radius < 0) fail("vision_radius must be non-negative");
    if (attack_slots < 1) fail("attack_slots must be positive");
    if (spawn_jitter < 0) fail("spawn_jitter must be non-negative");
    if (roster.empty()) fail("roster is empty");
    std::set<std::string> names;
    for (const auto& t : roster) {
        if (t.count < 1) fail("type '" + t.name + "' needs count >= 1");
        if (t.max_hp < 1) fail("type '" + t.name + "' needs max_hp >= 1");
        if (t.move_speed < 0 || t.attack_range < 0 || t.attack_damage < 0 || t.repair_amount < 0) {
            fail("type '" + t.name + "' has a negative ability value");
        }
        if (!names.insert(t.name).second) fail("duplicate type name '" + t.name + "'");
        if (t.count > height) fail("type '" + t.name + "' does not fit in one spawn column");
    }
    if (2 * num_types() > width) fail("roster too large for grid: each team needs one spawn column per type");
}

namespace {

AgentTypeSpec type_from_json(const json& j) {
    util::JsonReader r(j, "roster entry");
    AgentTypeSpec t;
    t.name = r.required<std::string>("name");
    t.count = r.required<int>("count");
    t.max_hp = r.required<int>("max_hp");
    t.move_speed = r.required<int>("move_speed");
    t.attack_range = r.required<int>("attack_range");
    t.attack_damage = r.required<int>("attack_damage");
    t.repair_amount = r.optional<int>("repair_amount", 0);
    t.can_target_air = r.optional<bool>("can_target_air", true);
    t.is_air = r.optional<bool>("is_air", false);
    r.finish();
    return t;
}

}  // namespace

ArenaConfig arena_config_from_json(const json& j) {
    const ArenaConfig defaults = ArenaConfig::default_2u4m4k();
    util::JsonReader r(j, "arena");
    ArenaConfig c;
    c.width = r.optional<int>("width", defaults.width);
    c.height = r.optional<int>("height", defaults.height);
    c.max_steps = r.optional<int>("max_steps", defaults.max_steps);
    c.gamma = r.optional<double>("gamma", defaults.gamma);
    c.vision_radius = r.optional<int>("vision_radius", defaults.vision_radius);
    c.attack_slots = r.optional<int>("attack_slots", defaults.attack_slots);
    c.spawn_jitter = r.optional<int>("spawn_jitter", defaults.spawn_jitter);
    if (const json* w = r.object("reward")) {
        util::JsonReader rw(*w, "arena.reward");
        c.reward.damage_dealt = rw.optional<double>("damage_dealt", defaults.reward.damage_dealt);
        c.reward.damage_taken = rw.optional<double>("damage_taken", defaults.reward.damage_taken);
        c.reward.repair = rw.optional<double>("repair", defaults.reward.repair);
        c.reward.win = rw.optional<double>("win", defaults.reward.win);
        rw.finish();
    }
    if (const json* roster = r.array("roster")) {
        for (const auto& entry : *roster) c.roster.push_back(type_from_json(entry));
    } else {
        c.roster = defaults.roster;
    }
    r.finish();
    c.validate();
    return c;
}

json arena_config_to_json(const ArenaConfig& c) {
    json roster = json::array();
    for (const auto& t : c.roster) {
        roster.push_back({{"name", t.name},
                          {"count", t.count},
                          {"max_hp", t.max_hp},
                          {"move_speed", t.move_speed},
                          {"attack_range", t.attack_range},
                          {"attack_damage", t.attack_damage},
                          {"repair_amount", t.repair_amount},
                          {"can_target_air", t.can_target_air},
                          {"is_air", t.is_air}});
    }
    return {{"width", c.width},
            {"height", c.height},
            {"max_steps", c.max_steps},
            {"gamma", c.gamma},
            {"vision_radius", c.vision_radius},
            {"attack_slots", c.attack_slots},
            {"spawn_jitter", c.spawn_jitter},
            {"reward",
             {{"damage_dealt", c.reward.damage_dealt},
              {"damage_taken", c.reward.damage_taken},
              {"repair", c.reward.repair},
              {"win", c.reward.win}}},
            {"roster", roster}};
}

}  // namespace hlt::arena
