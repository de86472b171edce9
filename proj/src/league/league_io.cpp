#include "hlt/league/league_io.hpp"

#include <fstream>

#include "hlt/errors.hpp"
#include "hlt/policy/group_io.hpp"

namespace hlt::league {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string member_dir(std::uint64_t version) { return "member_v" + std::to_string(version); }

AdmitStatus status_from_string(const std::string& s) {
    if (s == "accepted") return AdmitStatus::accepted;
    if (s == "accepted_with_eviction") return AdmitStatus::accepted_with_eviction;
    if (s == "rejected") return AdmitStatus::rejected;
    throw CorruptArtifactError("unknown admission status '" + s + "'");
}

}  // namespace

std::string_view to_string(AdmitStatus s) noexcept {
    switch (s) {
        case AdmitStatus::accepted: return "accepted";
        case AdmitStatus::accepted_with_eviction: return "accepted_with_eviction";
        case AdmitStatus::rejected: return "rejected";
    }
    return "accepted";
}

json league_manifest(const League& league) {
    json members = json::array();
    for (const auto& m : league.members()) {
        members.push_back({{"version", m.group.version()},
                           {"omega", m.omega},
                           {"admitted_at_step", m.admitted_at_step},
                           {"checkpoint", member_dir(m.group.version())}});
    }
    json history = json::array();
    for (const auto& h : league.history()) {
        json entry{{"step", h.step},
                   {"candidate_version", h.candidate_version},
                   {"omega", h.omega},
                   {"status", std::string(to_string(h.result.status))}};
        entry["evicted_version"] = h.result.evicted_version ? json(*h.result.evicted_version) : json(nullptr);
        history.push_back(std::move(entry));
    }
    return {{"format", "hlt-league"}, {"capacity", league.capacity()}, {"members", members}, {"history", history}};
}

void save_league(const fs::path& dir, const League& league, num::DType dtype) {
    fs::create_directories(dir);
    for (const auto& m : league.members()) policy::save_group(dir / member_dir(m.group.version()), m.group, dtype);
    std::ofstream out(dir / "league.json", std::ios::binary | std::ios::trunc);
    out << league_manifest(league).dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "league.json").string());
}

League load_league(const fs::path& dir) {
    std::ifstream in(dir / "league.json", std::ios::binary);
    if (!in) throw CorruptArtifactError("missing league manifest in " + dir.string());
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "hlt-league") throw CorruptArtifactError("not a league manifest");
        std::vector<LeagueMember> members;
        for (const auto& m : j.at("members")) {
            LeagueMember member{policy::load_group(dir / m.at("checkpoint").get<std::string>()),
                                m.at("omega").get<double>(), m.at("admitted_at_step").get<std::uint64_t>()};
            if (member.group.version() != m.at("version").get<std::uint64_t>()) {
                throw CorruptArtifactError("league member version disagrees with its checkpoint");
            }
            members.push_back(std::move(member));
        }
        std::vector<AdmissionRecord> history;
        for (const auto& h : j.at("history")) {
            AdmissionRecord r;
            r.step = h.at("step").get<std::uint64_t>();
            r.candidate_version = h.at("candidate_version").get<std::uint64_t>();
            r.omega = h.at("omega").get<double>();
            r.result.status = status_from_string(h.at("status").get<std::string>());
            if (!h.at("evicted_version").is_null()) r.result.evicted_version = h.at("evicted_version").get<std::uint64_t>();
            history.push_back(r);
        }
        return League::restore(j.at("capacity").get<std::size_t>(), std::move(members), std::move(history));
    } catch (const json::exception& e) {
        throw CorruptArtifactError("league manifest " + (dir / "league.json").string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw CorruptArtifactError(std::string("league manifest: ") + e.what());
    }
}

}  // namespace hlt::league
