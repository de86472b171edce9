#include "hlt/policy/team_info.hpp"

#include <stdexcept>
#include <string>

namespace hlt::policy {

MixedAssignment MixedAssignment::all_frontier(int num_types) {
    if (num_types < 1) throw std::invalid_argument("assignment needs at least one type");
    MixedAssignment a;
    a.sources.assign(static_cast<std::size_t>(num_types), PolicySource::frontier);
    return a;
}

MixedAssignment MixedAssignment::with_past(int num_types, int type, std::size_t index, std::uint64_t version) {
    auto a = all_frontier(num_types);
    if (type < 0 || type >= num_types) throw std::out_of_range("selected type out of range");
    a.selected_type = type;
    a.past_index = index;
    a.past_version = version;
    a.sources[static_cast<std::size_t>(type)] = PolicySource::past;
    return a;
}

int MixedAssignment::past_type_count() const noexcept {
    int n = 0;
    for (auto s : sources) n += s == PolicySource::past ? 1 : 0;
    return n;
}

std::vector<double> TeamInfo::concat() const {
    std::vector<double> out(source_values);
    out.insert(out.end(), type_one_hot.begin(), type_one_hot.end());
    return out;
}

TeamInfo team_info_from_values(int type, std::span<const double> source_values) {
    const int n = static_cast<int>(source_values.size());
    if (type < 0 || type >= n) throw std::out_of_range("agent type " + std::to_string(type) + " out of range");
    for (double v : source_values) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("team-info source value outside [0, 1]");
    }
    TeamInfo info;
    info.source_values.assign(source_values.begin(), source_values.end());
    info.type_one_hot.assign(static_cast<std::size_t>(n), 0.0);
    info.type_one_hot[static_cast<std::size_t>(type)] = 1.0;
    return info;
}

TeamInfo build_team_info(int type, const MixedAssignment& assignment, std::optional<double> omega) {
    const auto n = static_cast<std::size_t>(assignment.num_types());
    std::vector<double> values(n, 1.0);
    if (assignment.selected_type) {
        if (!omega) throw std::invalid_argument("omega required when a past group is selected");
        if (!(*omega >= 0.0 && *omega <= 1.0)) throw std::domain_error("omega outside [0, 1]");
        values[static_cast<std::size_t>(*assignment.selected_type)] = *omega;
    } else if (omega) {
        throw std::invalid_argument("omega given for a frontier-only assignment");
    }
    return team_info_from_values(type, values);
}

TeamInfo build_frozen_team_info(int type, int num_types) {
    const std::vector<double> ones(static_cast<std::size_t>(num_types), 1.0);
    return team_info_from_values(type, ones);
}

TeamInfo team_info_for_agent(int type, const MixedAssignment& assignment, std::optional<double> omega) {
    if (type < 0 || type >= assignment.num_types()) throw std::out_of_range("agent type out of range");
    if (assignment.sources[static_cast<std::size_t>(type)] == PolicySource::past) {
        return build_frozen_team_info(type, assignment.num_types());
    }
    return build_team_info(type, assignment, omega);
}

}  // namespace hlt::policy
