#include "hlt/policy/group_io.hpp"

#include <fstream>

#include "hlt/errors.hpp"
#include "hlt/util/json_fields.hpp"

namespace hlt::policy {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json save_mlp(const fs::path& dir, const std::string& prefix, const num::Mlp& mlp, num::DType dtype) {
    json layers = json::array();
    for (std::size_t k = 0; k < mlp.layers().size(); ++k) {
        const auto& layer = mlp.layers()[k];
        const std::string w = prefix + "_l" + std::to_string(k) + "_weight.hltt";
        const std::string b = prefix + "_l" + std::to_string(k) + "_bias.hltt";
        num::save_tensor(dir / w, layer.weight, dtype);
        num::save_tensor(dir / b, layer.bias, dtype);
        layers.push_back({{"weight", w},
                          {"bias", b},
                          {"shape", layer.weight.shape()},
                          {"activation", std::string(num::to_string(layer.activation))}});
    }
    return layers;
}

num::Mlp load_mlp(const fs::path& dir, const json& layers) {
    std::vector<num::DenseLayer> out;
    for (const auto& entry : layers) {
        num::DenseLayer layer;
        layer.weight = num::load_tensor(dir / entry.at("weight").get<std::string>());
        layer.bias = num::load_tensor(dir / entry.at("bias").get<std::string>());
        layer.activation = num::activation_from_string(entry.at("activation").get<std::string>());
        if (layer.weight.shape() != entry.at("shape").get<std::vector<std::size_t>>()) {
            throw CorruptArtifactError("tensor " + entry.at("weight").get<std::string>() +
                                       " disagrees with the manifest shape");
        }
        out.push_back(std::move(layer));
    }
    return num::Mlp(std::move(out));
}

}  // namespace

json network_to_json(const NetworkConfig& n) {
    return {{"hidden", n.hidden},
            {"depth", n.depth},
            {"hyper_hidden", n.hyper_hidden},
            {"generated_layers", n.generated_layers},
            {"shared_trunk", n.shared_trunk},
            {"activation", std::string(num::to_string(n.activation))}};
}

NetworkConfig network_from_json(const json& j) {
    util::JsonReader r(j, "network");
    NetworkConfig n;
    n.hidden = r.optional<std::size_t>("hidden", n.hidden);
    n.depth = r.optional<std::size_t>("depth", n.depth);
    n.hyper_hidden = r.optional<std::size_t>("hyper_hidden", n.hyper_hidden);
    n.generated_layers = r.optional<std::size_t>("generated_layers", n.generated_layers);
    n.shared_trunk = r.optional<bool>("shared_trunk", n.shared_trunk);
    n.activation = num::activation_from_string(r.optional<std::string>("activation", "tanh"));
    r.finish();
    return n;
}

void save_group(const fs::path& dir, const PolicyGroup& group, num::DType dtype) {
    fs::create_directories(dir);
    json trunks = json::array();
    for (std::size_t t = 0; t < group.trunks().size(); ++t) {
        trunks.push_back(save_mlp(dir, "trunk" + std::to_string(t), group.trunks()[t], dtype));
    }
    json types = json::array();
    for (int j = 0; j < group.num_types(); ++j) {
        const auto& tp = group.type_policy(j);
        json hypers = json::array();
        for (std::size_t g = 0; g < tp.hypernets.size(); ++g) {
            hypers.push_back(
                save_mlp(dir, "type" + std::to_string(j) + "_hyper" + std::to_string(g), tp.hypernets[g], dtype));
        }
        types.push_back({{"name", group.shape().type_names[static_cast<std::size_t>(j)]},
                         {"trunk_index", tp.trunk_index},
                         {"hypernets", hypers}});
    }
    json manifest{{"format", "hlt-policy-group"},
                  {"format_version", kGroupFormatVersion},
                  {"version", group.version()},
                  {"frozen", group.frozen()},
                  {"omega", group.omega() ? json(*group.omega()) : json(nullptr)},
                  {"obs_dim", group.shape().obs_dim},
                  {"num_actions", group.shape().num_actions},
                  {"dtype", dtype == num::DType::f32 ? "f32" : "f64"},
                  {"network", network_to_json(group.network())},
                  {"trunks", trunks},
                  {"types", types}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
}

PolicyGroup load_group(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw CorruptArtifactError("no policy group manifest in " + dir.string());
    try {
        const json m = json::parse(in);
        if (m.at("format") != "hlt-policy-group") throw CorruptArtifactError("not a policy group manifest");
        if (m.at("format_version").get<int>() != kGroupFormatVersion) {
            throw CorruptArtifactError("unsupported policy group format version " + m.at("format_version").dump());
        }
        GroupShape shape;
        shape.obs_dim = m.at("obs_dim").get<std::size_t>();
        shape.num_actions = m.at("num_actions").get<std::size_t>();
        std::vector<num::Mlp> trunks;
        for (const auto& t : m.at("trunks")) trunks.push_back(load_mlp(dir, t));
        std::vector<TypePolicy> types;
        for (const auto& t : m.at("types")) {
            shape.type_names.push_back(t.at("name").get<std::string>());
            TypePolicy tp;
            tp.trunk_index = t.at("trunk_index").get<std::size_t>();
            for (const auto& h : t.at("hypernets")) tp.hypernets.push_back(load_mlp(dir, h));
            types.push_back(std::move(tp));
        }
        std::optional<double> omega;
        if (!m.at("omega").is_null()) omega = m.at("omega").get<double>();
        return PolicyGroup(std::move(shape), network_from_json(m.at("network")), std::move(trunks), std::move(types),
                           m.at("version").get<std::uint64_t>(), m.at("frozen").get<bool>(), omega);
    } catch (const json::exception& e) {
        throw CorruptArtifactError("malformed policy group manifest in " + dir.string() + ": " + e.what());
    } catch (const DimensionError& e) {
        throw CorruptArtifactError("inconsistent policy group in " + dir.string() + ": " + e.what());
    }
}

}  // namespace hlt::policy
