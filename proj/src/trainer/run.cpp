#include "hlt/trainer/run.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hlt/errors.hpp"

namespace hlt::trainer {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const fs::path& path, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw CorruptArtifactError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
}

void write_checkpoint(const Trainer& trainer, const fs::path& run_dir) {
    const auto final_dir = checkpoint_dir(run_dir, trainer.steps_done());
    auto tmp = final_dir;
    tmp += ".tmp";
    fs::remove_all(tmp);
    trainer.save_checkpoint(tmp);
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
}

void write_config(const fs::path& run_dir, const TrainConfig& config) {
    std::ofstream out(run_dir / "config.json", std::ios::binary | std::ios::trunc);
    out << train_config_to_json(config).dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + (run_dir / "config.json").string());
}

void train_loop(Trainer& trainer, const fs::path& run_dir, std::ofstream& metrics, const StepObserver& observer) {
    while (trainer.steps_done() < trainer.config().total_steps) {
        const auto stats = trainer.step();
        metrics << metrics_row(stats) << "\n";
        metrics.flush();
        if (!metrics) throw std::runtime_error("cannot append to " + (run_dir / "metrics.csv").string());
        const bool last = trainer.steps_done() == trainer.config().total_steps;
        if (stats.omega || last) write_checkpoint(trainer, run_dir);
        if (observer) observer(stats, trainer);
    }
}

}  // namespace

std::string metrics_header(const std::vector<std::string>& type_names) {
    std::string h = "step,episodes,omega";
    for (const auto& t : type_names) h += ",policy_loss_" + t;
    h += ",value_loss,entropy,league_size,wall_ms";
    return h;
}

std::string metrics_row(const StepStats& s) {
    std::string r = std::to_string(s.step) + "," + std::to_string(s.episodes) + ",";
    if (s.omega) r += format_double(*s.omega);
    for (double l : s.policy_loss) r += "," + format_double(l);
    r += "," + format_double(s.value_loss) + "," + format_double(s.entropy) + "," + std::to_string(s.league_size) +
         "," + format_double(s.wall_ms);
    return r;
}

std::vector<MetricsRow> read_metrics(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptArtifactError("missing " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw CorruptArtifactError(path.string() + ": empty metrics file");
    const auto header = split_csv(line);
    if (header.size() < 8 || header[0] != "step" || header[2] != "omega" || header.back() != "wall_ms") {
        throw CorruptArtifactError(path.string() + ": unexpected metrics header");
    }
    const std::size_t types = header.size() - 7;
    std::vector<MetricsRow> rows;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw CorruptArtifactError(path.string() + ":" + std::to_string(n) + ": expected " +
                                       std::to_string(header.size()) + " columns");
        }
        MetricsRow r;
        r.step = static_cast<int>(parse_double(cells[0], path, n));
        r.episodes = static_cast<long long>(parse_double(cells[1], path, n));
        if (!cells[2].empty()) r.omega = parse_double(cells[2], path, n);
        for (std::size_t j = 0; j < types; ++j) r.policy_loss.push_back(parse_double(cells[3 + j], path, n));
        r.value_loss = parse_double(cells[3 + types], path, n);
        r.entropy = parse_double(cells[4 + types], path, n);
        r.league_size = static_cast<std::size_t>(parse_double(cells[5 + types], path, n));
        r.wall_ms = parse_double(cells[6 + types], path, n);
        rows.push_back(std::move(r));
    }
    return rows;
}

fs::path checkpoint_dir(const fs::path& run_dir, int step) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%06d", step);
    return run_dir / "checkpoints" / name;
}

std::optional<fs::path> latest_checkpoint(const fs::path& run_dir) {
    const auto root = run_dir / "checkpoints";
    if (!fs::is_directory(root)) return std::nullopt;
    std::optional<fs::path> best;
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_directory() || name.rfind("step_", 0) != 0 || name.size() != 11) continue;
        if (!best || name > best->filename().string()) best = entry.path();
    }
    return best;
}

Trainer run_training(const TrainConfig& config, const fs::path& run_dir, const StepObserver& observer) {
    config.validate();
    fs::create_directories(run_dir);
    if (fs::exists(run_dir / "metrics.csv")) {
        throw std::runtime_error(run_dir.string() + " already holds a run; use resume");
    }
    Trainer trainer(config);
    write_config(run_dir, config);
    std::ofstream metrics(run_dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    metrics << metrics_header(trainer.frontier().shape().type_names) << "\n";
    if (config.total_steps == 0) write_checkpoint(trainer, run_dir);
    train_loop(trainer, run_dir, metrics, observer);
    return trainer;
}

Trainer resume_training(const fs::path& checkpoint, std::optional<int> total_steps, std::optional<int> workers,
                        const StepObserver& observer) {
    Trainer trainer = Trainer::load_checkpoint(checkpoint);
    const fs::path run_dir = fs::absolute(checkpoint).lexically_normal().parent_path().parent_path();
    if (total_steps) trainer.set_total_steps(*total_steps);
    if (workers) trainer.set_workers(*workers);
    trainer.config().validate();

    const auto metrics_path = run_dir / "metrics.csv";
    std::vector<std::string> kept;
    {
        std::ifstream in(metrics_path, std::ios::binary);
        if (!in) throw CorruptArtifactError("missing " + metrics_path.string());
        std::string line;
        if (!std::getline(in, line)) throw CorruptArtifactError(metrics_path.string() + ": empty metrics file");
        kept.push_back(line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto step = std::stoi(line.substr(0, line.find(',')));
            if (step <= trainer.steps_done()) kept.push_back(line);
        }
    }
    if (static_cast<int>(kept.size()) - 1 != trainer.steps_done()) {
        throw CorruptArtifactError(metrics_path.string() + " has fewer rows than the checkpoint step");
    }
    auto config = trainer.config();
    write_config(run_dir, config);
    std::ofstream metrics(metrics_path, std::ios::binary | std::ios::trunc);
    for (const auto& l : kept) metrics << l << "\n";
    train_loop(trainer, run_dir, metrics, observer);
    return trainer;
}

}  // namespace hlt::trainer
