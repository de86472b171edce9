#include "hlt/arena/arena.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hlt/errors.hpp"
#include "hlt/numkit/rng.hpp"
#include "hlt/util/hash.hpp"

namespace hlt::arena {

std::string_view to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::ongoing: return "ongoing";
        case Outcome::win: return "win";
        case Outcome::loss: return "loss";
        case Outcome::draw: return "draw";
    }
    return "ongoing";
}

Outcome swap_perspective(Outcome o) noexcept {
    if (o == Outcome::win) return Outcome::loss;
    if (o == Outcome::loss) return Outcome::win;
    return o;
}

Arena::Arena(ArenaConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t types = config_.roster.size();
    const std::size_t slot = 2 + types + 2;
    obs_dim_ = types + 3 + static_cast<std::size_t>(2 * config_.team_size() - 1) * slot;
}

std::vector<Observation> Arena::reset(std::uint64_t seed) {
    num::Rng rng = num::derive_rng({seed, 0x5eed});
    state_ = {};
    const int n = config_.team_size();
    state_.agents.resize(static_cast<std::size_t>(2 * n));
    int id = 0;
    for (int type = 0; type < config_.num_types(); ++type) {
        const auto& spec = config_.roster[static_cast<std::size_t>(type)];
        for (int k = 0; k < spec.count; ++k, ++id) {
            const double spacing = static_cast<double>(config_.height) / spec.count;
            int y = static_cast<int>(std::floor((k + 0.5) * spacing));
            const int span = 2 * config_.spawn_jitter + 1;
            y += static_cast<int>(rng() % static_cast<std::uint64_t>(span)) - config_.spawn_jitter;
            y = std::clamp(y, 0, config_.height - 1);
            // Front line holds the last roster type; support sits at the back.
            const int x = type;
            state_.agents[static_cast<std::size_t>(id)] = {id, type, Team::learner, x, y, spec.max_hp, true};
            state_.agents[static_cast<std::size_t>(id + n)] = {id + n, type, Team::opponent, config_.width - 1 - x, y,
                                                               spec.max_hp, true};
        }
    }
    return observe_all();
}

void Arena::set_state(ArenaState state) {
    const int n = config_.team_size();
    if (static_cast<int>(state.agents.size()) != 2 * n) throw ConfigError("state has the wrong number of agents");
    for (std::size_t i = 0; i < state.agents.size(); ++i) {
        const auto& a = state.agents[i];
        if (a.id != static_cast<int>(i)) throw ConfigError("agent ids must equal their index");
        if (a.type < 0 || a.type >= config_.num_types()) throw ConfigError("agent type out of range");
        if ((a.team == Team::learner) != (static_cast<int>(i) < n)) throw ConfigError("agent team does not match index");
        if (a.x < 0 || a.x >= config_.width || a.y < 0 || a.y >= config_.height) {
            throw ConfigError("agent position outside the grid");
        }
        const int max_hp = config_.roster[static_cast<std::size_t>(a.type)].max_hp;
        if (a.hp < 0 || a.hp > max_hp || a.alive != (a.hp > 0)) throw ConfigError("agent HP inconsistent");
    }
    state_ = std::move(state);
}

int Arena::chebyshev(const AgentState& a, const AgentState& b) const noexcept {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

bool Arena::visible(const AgentState& from, const AgentState& to) const noexcept {
    return to.alive && chebyshev(from, to) <= config_.vision_radius;
}

std::vector<int> Arena::enemy_slots(int agent_id) const {
    const auto& self = state_.agents.at(static_cast<std::size_t>(agent_id));
    std::vector<int> ids;
    for (const auto& other : state_.agents) {
        if (other.team != self.team && visible(self, other)) ids.push_back(other.id);
    }
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        const int da = chebyshev(self, state_.agents[static_cast<std::size_t>(a)]);
        const int db = chebyshev(self, state_.agents[static_cast<std::size_t>(b)]);
        return da != db ? da < db : a < b;
    });
    return ids;
}

int Arena::repair_target(int agent_id) const {
    const auto& self = state_.agents[static_cast<std::size_t>(agent_id)];
    const auto& spec = config_.roster[static_cast<std::size_t>(self.type)];
    if (spec.repair_amount <= 0) return -1;
    int best = -1;
    int best_missing = 0;
    for (const auto& other : state_.agents) {
        if (other.id == self.id || other.team != self.team || !other.alive) continue;
        if (chebyshev(self, other) > spec.attack_range) continue;
        const int missing = config_.roster[static_cast<std::size_t>(other.type)].max_hp - other.hp;
        if (missing > best_missing) {
            best = other.id;
            best_missing = missing;
        }
    }
    return best;
}

bool Arena::can_move(const AgentState& agent, int a) const noexcept {
    const int fdx = forward_dx(agent.team);
    switch (a) {
        case action::kForward: return agent.x + fdx >= 0 && agent.x + fdx < config_.width;
        case action::kBack: return agent.x - fdx >= 0 && agent.x - fdx < config_.width;
        case action::kUp: return agent.y + 1 < config_.height;
        case action::kDown: return agent.y - 1 >= 0;
        default: return false;
    }
}

num::ActionMask Arena::legal_actions(int agent_id) const {
    if (agent_id < 0 || agent_id >= num_agents()) {
        throw std::out_of_range("unknown agent id " + std::to_string(agent_id));
    }
    const auto& self = state_.agents[static_cast<std::size_t>(agent_id)];
    if (!self.alive) throw std::invalid_argument("agent " + std::to_string(agent_id) + " is dead");
    const auto& spec = config_.roster[static_cast<std::size_t>(self.type)];
    num::ActionMask mask(static_cast<std::size_t>(num_actions()), 0);
    mask[action::kNoop] = 1;
    if (spec.move_speed > 0) {
        for (int a = action::kForward; a <= action::kDown; ++a) mask[static_cast<std::size_t>(a)] = can_move(self, a);
    }
    if (spec.attack_damage > 0) {
        const auto slots = enemy_slots(agent_id);
        for (int k = 0; k < config_.attack_slots && k < static_cast<int>(slots.size()); ++k) {
            const auto& target = state_.agents[static_cast<std::size_t>(slots[static_cast<std::size_t>(k)])];
            const bool in_range = chebyshev(self, target) <= spec.attack_range;
            const bool targetable = !config_.roster[static_cast<std::size_t>(target.type)].is_air || spec.can_target_air;
            mask[static_cast<std::size_t>(action::kFirstAttack + k)] = in_range && targetable;
        }
    }
    mask[static_cast<std::size_t>(repair_action())] = repair_target(agent_id) >= 0;
    return mask;
}

StepResult Arena::step(std::span<const int> joint_actions) {
    if (state_.outcome != Outcome::ongoing) throw std::logic_error("step() called on a finished episode");
    if (static_cast<int>(joint_actions.size()) != num_agents()) {
        throw DimensionError("joint action vector must have one entry per agent");
    }
    const int n = team_size();
    const std::size_t count = state_.agents.size();

    // Decide targets on the pre-move state.
    std::vector<int> attack_target(count, -1);
    std::vector<int> heal_target(count, -1);
    for (const auto& agent : state_.agents) {
        if (!agent.alive) continue;
        const int a = joint_actions[static_cast<std::size_t>(agent.id)];
        if (a < 0 || a >= num_actions()) throw IllegalActionError(agent.id, "action index out of range");
        const auto mask = legal_actions(agent.id);
        if (!mask[static_cast<std::size_t>(a)]) {
            std::string reason = "action " + std::to_string(a) + " is not legal";
            if (a >= action::kFirstAttack && a < repair_action()) {
                reason = "attack slot " + std::to_string(a - action::kFirstAttack) +
                         " has no reachable target this unit can hit";
            } else if (a == repair_action()) {
                reason = "no damaged ally within repair reach (or unit cannot repair)";
            } else if (a != action::kNoop) {
                reason = "move leaves the grid";
            }
            throw IllegalActionError(agent.id, reason);
        }
        if (a >= action::kFirstAttack && a < repair_action()) {
            attack_target[static_cast<std::size_t>(agent.id)] =
                enemy_slots(agent.id)[static_cast<std::size_t>(a - action::kFirstAttack)];
        } else if (a == repair_action()) {
            heal_target[static_cast<std::size_t>(agent.id)] = repair_target(agent.id);
        }
    }

    for (auto& agent : state_.agents) {
        if (!agent.alive) continue;
        const int a = joint_actions[static_cast<std::size_t>(agent.id)];
        if (a < action::kForward || a > action::kDown) continue;
        const int speed = config_.roster[static_cast<std::size_t>(agent.type)].move_speed;
        const int fdx = forward_dx(agent.team);
        int dx = 0;
        int dy = 0;
        if (a == action::kForward) dx = fdx;
        if (a == action::kBack) dx = -fdx;
        if (a == action::kUp) dy = 1;
        if (a == action::kDown) dy = -1;
        agent.x = std::clamp(agent.x + dx * speed, 0, config_.width - 1);
        agent.y = std::clamp(agent.y + dy * speed, 0, config_.height - 1);
    }

    std::vector<int> incoming(count, 0);
    for (std::size_t i = 0; i < count; ++i) {
        if (attack_target[i] < 0) continue;
        incoming[static_cast<std::size_t>(attack_target[i])] +=
            config_.roster[static_cast<std::size_t>(state_.agents[i].type)].attack_damage;
    }
    int damage_dealt = 0;
    int damage_taken = 0;
    for (auto& agent : state_.agents) {
        const int d = std::min(agent.hp, incoming[static_cast<std::size_t>(agent.id)]);
        if (d == 0) continue;
        agent.hp -= d;
        (agent.team == Team::learner ? damage_taken : damage_dealt) += d;
    }
    for (auto& agent : state_.agents) {
        if (agent.alive && agent.hp == 0) agent.alive = false;
    }

    int repaired = 0;
    for (const auto& healer : state_.agents) {
        const int target = heal_target[static_cast<std::size_t>(healer.id)];
        if (target < 0 || !healer.alive) continue;
        auto& t = state_.agents[static_cast<std::size_t>(target)];
        if (!t.alive) continue;
        const int max_hp = config_.roster[static_cast<std::size_t>(t.type)].max_hp;
        const int gained = std::min(max_hp - t.hp, config_.roster[static_cast<std::size_t>(healer.type)].repair_amount);
        t.hp += gained;
        if (healer.team == Team::learner) repaired += gained;
    }

    state_.step += 1;
    int alive[2] = {0, 0};
    int total_hp[2] = {0, 0};
    for (const auto& agent : state_.agents) {
        const int t = agent.id < n ? 0 : 1;
        alive[t] += agent.alive ? 1 : 0;
        total_hp[t] += agent.hp;
    }
    Outcome outcome = Outcome::ongoing;
    if (alive[0] == 0 && alive[1] == 0) {
        outcome = Outcome::draw;
    } else if (alive[1] == 0) {
        outcome = Outcome::win;
    } else if (alive[0] == 0) {
        outcome = Outcome::loss;
    } else if (state_.step >= config_.max_steps) {
        outcome = total_hp[0] > total_hp[1] ? Outcome::win : (total_hp[0] < total_hp[1] ? Outcome::loss : Outcome::draw);
    }
    state_.outcome = outcome;

    const auto& w = config_.reward;
    double team_hp = 0.0;
    for (const auto& t : config_.roster) team_hp += static_cast<double>(t.count * t.max_hp);
    StepResult result;
    result.reward = (w.damage_dealt * damage_dealt - w.damage_taken * damage_taken + w.repair * repaired) / team_hp +
                    (outcome == Outcome::win ? w.win : 0.0);
    result.done = outcome != Outcome::ongoing;
    result.outcome = outcome;
    result.observations = observe_all();
    return result;
}

Observation Arena::observe(int agent_id) const {
    Observation obs(obs_dim_, 0.0);
    const auto& self = state_.agents.at(static_cast<std::size_t>(agent_id));
    if (!self.alive) return obs;
    const std::size_t types = config_.roster.size();
    const double fdx = forward_dx(self.team);
    const double own_x = self.team == Team::learner ? self.x : config_.width - 1 - self.x;
    obs[static_cast<std::size_t>(self.type)] = 1.0;
    obs[types] = own_x / std::max(1, config_.width - 1);
    obs[types + 1] = static_cast<double>(self.y) / std::max(1, config_.height - 1);
    obs[types + 2] = static_cast<double>(self.hp) / config_.roster[static_cast<std::size_t>(self.type)].max_hp;

    const std::size_t slot = 2 + types + 2;
    const double vision = std::max(1, config_.vision_radius);
    auto fill = [&](std::size_t offset, const AgentState& other) {
        obs[offset] = fdx * (other.x - self.x) / vision;
        obs[offset + 1] = (other.y - self.y) / vision;
        obs[offset + 2 + static_cast<std::size_t>(other.type)] = 1.0;
        obs[offset + 2 + types] = other.team == self.team ? 1.0 : -1.0;
        obs[offset + 3 + types] =
            static_cast<double>(other.hp) / config_.roster[static_cast<std::size_t>(other.type)].max_hp;
    };

    std::vector<int> allies;
    for (const auto& other : state_.agents) {
        if (other.team == self.team && other.id != self.id && visible(self, other)) allies.push_back(other.id);
    }
    std::sort(allies.begin(), allies.end(), [&](int a, int b) {
        const int da = chebyshev(self, state_.agents[static_cast<std::size_t>(a)]);
        const int db = chebyshev(self, state_.agents[static_cast<std::size_t>(b)]);
        return da != db ? da < db : a < b;
    });
    std::size_t offset = types + 3;
    for (int id : allies) {
        fill(offset, state_.agents[static_cast<std::size_t>(id)]);
        offset += slot;
    }
    // Enemy block always starts after team_size - 1 ally slots, in attack-slot order.
    offset = types + 3 + static_cast<std::size_t>(team_size() - 1) * slot;
    for (int id : enemy_slots(agent_id)) {
        fill(offset, state_.agents[static_cast<std::size_t>(id)]);
        offset += slot;
    }
    return obs;
}

std::vector<Observation> Arena::observe_all() const {
    std::vector<Observation> out;
    out.reserve(state_.agents.size());
    for (const auto& agent : state_.agents) out.push_back(observe(agent.id));
    return out;
}

int Arena::move_toward(const AgentState& agent, int tx, int ty, std::uint64_t seed) const {
    const int fdx = forward_dx(agent.team);
    const int dx = (tx - agent.x) * fdx;  // positive = target lies forward
    const int dy = ty - agent.y;
    if (dx == 0 && dy == 0) return action::kNoop;
    bool use_x = std::abs(dx) > std::abs(dy);
    if (std::abs(dx) == std::abs(dy)) use_x = ((seed ^ static_cast<std::uint64_t>(agent.id)) & 1ULL) == 0;
    int a = use_x ? (dx > 0 ? action::kForward : action::kBack) : (dy > 0 ? action::kUp : action::kDown);
    if (!can_move(agent, a)) return action::kNoop;
    return a;
}

std::vector<int> Arena::scripted_actions(Team team, std::uint64_t seed) const {
    std::vector<int> actions(state_.agents.size(), action::kNoop);
    for (const auto& agent : state_.agents) {
        if (agent.team != team || !agent.alive) continue;
        const auto& spec = config_.roster[static_cast<std::size_t>(agent.type)];
        const auto mask = legal_actions(agent.id);
        int& chosen = actions[static_cast<std::size_t>(agent.id)];
        if (mask[static_cast<std::size_t>(repair_action())]) {
            chosen = repair_action();
            continue;
        }
        const auto slots = enemy_slots(agent.id);
        int best_slot = -1;
        for (int k = 0; k < config_.attack_slots && k < static_cast<int>(slots.size()); ++k) {
            if (!mask[static_cast<std::size_t>(action::kFirstAttack + k)]) continue;
            const int hp = state_.agents[static_cast<std::size_t>(slots[static_cast<std::size_t>(k)])].hp;
            if (best_slot < 0 ||
                hp < state_.agents[static_cast<std::size_t>(slots[static_cast<std::size_t>(best_slot)])].hp) {
                best_slot = k;
            }
        }
        if (best_slot >= 0) {
            chosen = action::kFirstAttack + best_slot;
            continue;
        }
        if (spec.move_speed == 0) continue;
        if (spec.repair_amount > 0) {
            int sx = 0;
            int sy = 0;
            int ground = 0;
            for (const auto& ally : state_.agents) {
                if (ally.team != team || !ally.alive || config_.roster[static_cast<std::size_t>(ally.type)].is_air) continue;
                sx += ally.x;
                sy += ally.y;
                ++ground;
            }
            if (ground > 0) {
                chosen = move_toward(agent, static_cast<int>(std::lround(static_cast<double>(sx) / ground)),
                                     static_cast<int>(std::lround(static_cast<double>(sy) / ground)), seed);
                continue;
            }
        }
        if (!slots.empty()) {
            const auto& target = state_.agents[static_cast<std::size_t>(slots.front())];
            chosen = move_toward(agent, target.x, target.y, seed);
        } else if (can_move(agent, action::kForward)) {
            chosen = action::kForward;
        }
    }
    return actions;
}

std::uint64_t Arena::state_hash() const noexcept {
    std::vector<std::int64_t> fields;
    fields.reserve(state_.agents.size() * 7 + 2);
    for (const auto& a : state_.agents) {
        fields.insert(fields.end(), {a.id, a.type, static_cast<std::int64_t>(a.team), a.x, a.y, a.hp, a.alive ? 1 : 0});
    }
    fields.push_back(state_.step);
    fields.push_back(static_cast<std::int64_t>(state_.outcome));
    return util::fnv1a64_values(std::span<const std::int64_t>(fields));
}

ArenaState mirror_state(const ArenaState& state, const ArenaConfig& config) {
    const int n = config.team_size();
    ArenaState out;
    out.step = state.step;
    out.outcome = swap_perspective(state.outcome);
    out.agents.resize(state.agents.size());
    for (const auto& a : state.agents) {
        const bool was_learner = a.id < n;
        AgentState m = a;
        m.id = was_learner ? a.id + n : a.id - n;
        m.team = was_learner ? Team::opponent : Team::learner;
        m.x = config.width - 1 - a.x;
        out.agents[static_cast<std::size_t>(m.id)] = m;
    }
    return out;
}

RewardBounds reward_bounds(const ArenaConfig& config) {
    double team_hp = 0.0;
    double repair_cap = 0.0;
    for (const auto& t : config.roster) {
        team_hp += static_cast<double>(t.count * t.max_hp);
        repair_cap += static_cast<double>(t.count * t.repair_amount);
    }
    repair_cap *= config.max_steps;  // HP either team can restore in one episode
    const auto& w = config.reward;
    RewardBounds b;
    b.max = (w.damage_dealt * (team_hp + repair_cap) + w.repair * repair_cap) / team_hp + w.win;
    b.min = -w.damage_taken * (team_hp + repair_cap) / team_hp;
    return b;
}

double normalized_reward(double total_reward, const RewardBounds& bounds) {
    if (!(bounds.max > bounds.min)) throw ConfigError("normalized_reward: degenerate reward range");
    return std::clamp((total_reward - bounds.min) / (bounds.max - bounds.min), 0.0, 1.0);
}

double normalized_reward(double total_reward, const ArenaConfig& config) {
    return normalized_reward(total_reward, reward_bounds(config));
}

}  // namespace hlt::arena
