#include "hlt/cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hlt/analysis/analysis.hpp"
#include "hlt/errors.hpp"
#include "hlt/league/league_io.hpp"
#include "hlt/numkit/rng.hpp"
#include "hlt/trainer/run.hpp"

namespace hlt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kEvalCommandStream = 0xe7a1;

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

trainer::TrainConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return trainer::train_config_from_json(j);
}

/// A checkpoint directory, or the latest checkpoint of a run directory.
fs::path resolve_checkpoint(const fs::path& path) {
    if (fs::exists(path / "state.json")) return path;
    if (auto latest = trainer::latest_checkpoint(path)) return *latest;
    throw CorruptArtifactError("no checkpoint found at " + path.string());
}

std::vector<std::string> run_artifacts(const fs::path& run_dir) {
    std::vector<std::string> out{"config.json", "metrics.csv"};
    std::vector<std::string> checkpoints;
    if (fs::is_directory(run_dir / "checkpoints")) {
        for (const auto& e : fs::directory_iterator(run_dir / "checkpoints")) {
            const auto name = e.path().filename().string();
            if (e.is_directory() && name.find(".tmp") == std::string::npos) checkpoints.push_back("checkpoints/" + name);
        }
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    out.insert(out.end(), checkpoints.begin(), checkpoints.end());
    return out;
}

trainer::StepObserver progress(std::ostream& out) {
    return [&out](const trainer::StepStats& s, const trainer::Trainer& t) {
        if (!s.omega) return;
        out << "step " << s.step << "  episodes " << s.episodes << "  omega " << fmt("%.4f", *s.omega) << "  league "
            << s.league_size;
        if (s.admission) out << " (" << league::to_string(s.admission->status) << ")";
        out << "  [" << s.step << "/" << t.config().total_steps << "]\n";
        out.flush();
    };
}

struct TrainArgs {
    std::string config;
    std::string out;
    std::string resume;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    int workers = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    if (!a.resume.empty()) {
        const auto started = utc_now();
        const auto ckpt = fs::path(a.resume);
        const auto trainer = trainer::resume_training(ckpt, a.steps, resolve_workers(a.workers), progress(out));
        const auto run_dir = fs::absolute(ckpt).lexically_normal().parent_path().parent_path();
        RunManifest m = fs::exists(run_dir / "manifest.json") ? read_manifest(run_dir) : RunManifest{};
        if (m.started_at.empty()) m.started_at = started;
        m.seed = trainer.config().seed;
        m.config = train_config_to_json(trainer.config());
        m.config_hash = git_blob_hash(slurp(run_dir / "config.json"));
        m.finished_at = utc_now();
        m.artifacts = run_artifacts(run_dir);
        write_manifest(run_dir, m);
        out << "resumed " << run_dir.string() << " to step " << trainer.steps_done() << "\n";
        return kOk;
    }

    auto config = a.config.empty() ? trainer::TrainConfig{} : load_config_file(a.config);
    if (a.seed) config.seed = *a.seed;
    if (a.steps) config.total_steps = *a.steps;
    config.workers = a.workers;
    config.validate();

    fs::path run_dir = a.out;
    if (run_dir.empty()) {
        const char* root = std::getenv("HLT_OUT_DIR");
        run_dir = fs::path(root != nullptr && *root != '\0' ? root : "runs") / ("seed" + std::to_string(config.seed));
    }
    if (fs::exists(run_dir / "metrics.csv") || fs::exists(run_dir / "manifest.json")) {
        throw std::runtime_error(run_dir.string() + " already holds a run; pick another --out or use --resume");
    }
    fs::create_directories(run_dir);
    RunManifest m;
    m.seed = config.seed;
    m.config = train_config_to_json(config);
    m.started_at = utc_now();
    m.config_hash = git_blob_hash(m.config.dump(2) + "\n");
    write_manifest(run_dir, m);

    const auto trainer = trainer::run_training(config, run_dir, progress(out));
    m.config_hash = git_blob_hash(slurp(run_dir / "config.json"));
    m.finished_at = utc_now();
    m.artifacts = run_artifacts(run_dir);
    write_manifest(run_dir, m);
    out << "trained " << trainer.steps_done() << " steps into " << run_dir.string() << "\n";
    return kOk;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed, int workers, std::ostream& out) {
    const auto t = trainer::Trainer::load_checkpoint(resolve_checkpoint(checkpoint));
    const auto r = trainer::evaluate_frontier(t.frontier(), t.config().arena, episodes,
                                              num::derive_seed({seed, kEvalCommandStream}), resolve_workers(workers));
    const auto ci = analysis::wilson_interval(r.wins, r.episodes);
    out << "omega " << fmt("%.4f", r.omega()) << "  wins " << r.wins << "/" << r.episodes << "  draws " << r.draws
        << "  95% CI [" << fmt("%.4f", ci.lo) << ", " << fmt("%.4f", ci.hi) << "]  step " << t.steps_done() << "\n";
    return kOk;
}

struct AnalysisArgs {
    std::string run;
    std::string out;
    std::string mode;
    int episodes = 160;
    std::uint64_t seed = 1;
    int workers = 0;
    double omega_below = 0.90;
};

analysis::AnalysisOptions options_of(const AnalysisArgs& a) {
    analysis::AnalysisOptions o;
    o.episodes = a.episodes;
    o.seed = a.seed;
    o.workers = resolve_workers(a.workers);
    o.omega_below = a.omega_below;
    return o;
}

fs::path analysis_dir(const AnalysisArgs& a) { return a.out.empty() ? default_analysis_dir(a.run) : fs::path(a.out); }

int cmd_compat(const AnalysisArgs& a, std::ostream& out) {
    const auto t = trainer::Trainer::load_checkpoint(resolve_checkpoint(a.run));
    const auto mode = analysis::compat_mode_from_string(a.mode);
    const auto report = analysis::compat(mode, t.frontier(), t.league(), t.config().arena, options_of(a));
    const auto files = analysis::export_report(report, analysis_dir(a));
    out << "frontier-" << a.mode << " mixing, " << a.episodes << " episodes per group\n";
    out << "version  omega   mixed   improvement  95% CI\n";
    for (const auto& r : report.rows) {
        const auto ci = r.interval();
        char line[160];
        std::snprintf(line, sizeof line, "%-7s  %.3f   %.3f   %+.3f       [%.3f, %.3f]%s\n",
                      std::to_string(r.version).c_str(), r.omega, r.win_rate(), r.improvement(), ci.lo, ci.hi,
                      r.self_mix ? "  frontier copy" : "");
        out << line;
    }
    for (const auto& f : files) out << "wrote " << f.string() << "\n";
    return kOk;
}

int cmd_roles(const AnalysisArgs& a, std::ostream& out) {
    const auto t = trainer::Trainer::load_checkpoint(resolve_checkpoint(a.run));
    const auto m = analysis::role_matrix(t.frontier(), t.league(), t.config().arena, options_of(a));
    const auto files = analysis::export_report(m, analysis_dir(a));
    out << "frontier omega " << fmt("%.3f", m.frontier_omega()) << "; cells show win rate (decline)\n";
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size() + 1, w), ' ');
        return s;
    };
    out << "version  omega  ";
    for (const auto& n : m.type_names) out << pad(n, 18);
    out << "\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        char head[64];
        std::snprintf(head, sizeof head, "%-7s  %.3f  ", std::to_string(m.rows[r].version).c_str(), m.rows[r].omega);
        out << head;
        for (std::size_t j = 0; j < m.type_names.size(); ++j) {
            char cell[64];
            std::snprintf(cell, sizeof cell, "%.3f (%+.3f)", m.rows[r].cells[j].win_rate(), m.decline(r, j));
            out << pad(cell, std::max<std::size_t>(18, m.type_names[j].size() + 1));
        }
        out << (m.rows[r].self_mix ? "frontier copy" : "") << "\n";
    }
    for (const auto& f : files) out << "wrote " << f.string() << "\n";
    return kOk;
}

int cmd_league(const std::string& run, std::ostream& out) {
    const auto league = league::load_league(resolve_checkpoint(run) / "league");
    if (league.empty()) {
        out << "league empty\n";
        return kOk;
    }
    out << "slot  version  omega   admitted_at\n";
    for (std::size_t i = 0; i < league.size(); ++i) {
        const auto& m = league.members()[i];
        char line[96];
        std::snprintf(line, sizeof line, "%-4zu  %-7s  %.4f  %llu\n", i, std::to_string(m.group.version()).c_str(),
                      m.omega, static_cast<unsigned long long>(m.admitted_at_step));
        out << line;
    }
    return kOk;
}

int cmd_plot(const std::string& run, const std::string& out_arg, std::ostream& out) {
    const fs::path dir = out_arg.empty() ? default_analysis_dir(run) : fs::path(out_arg);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    auto write = [&](const fs::path& p, const std::string& text) {
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        f << text;
        if (!f) throw std::runtime_error("cannot write " + p.string());
        written.push_back(p);
    };

    const auto rows = trainer::read_metrics(fs::path(run) / "metrics.csv");
    std::vector<std::pair<int, double>> history;
    for (const auto& r : rows) {
        if (r.omega) history.emplace_back(r.step, *r.omega);
    }
    int total = rows.empty() ? 1 : rows.back().step;
    if (fs::exists(fs::path(run) / "config.json")) {
        total = std::max(total, load_config_file((fs::path(run) / "config.json").string()).total_steps);
    }
    write(dir / "omega.svg", analysis::omega_curve_svg(history, total));
    for (const char* mode : {"exclusive", "inclusive"}) {
        const auto csv = dir / (std::string("compat_") + mode + ".csv");
        if (!fs::exists(csv)) continue;
        const auto report = analysis::read_compat_csv(csv);
        if (!report.rows.empty()) write(dir / (std::string("compat_") + mode + ".svg"), analysis::compat_svg(report));
    }
    if (fs::exists(dir / "roles.csv")) {
        const auto m = analysis::read_roles_csv(dir / "roles.csv");
        if (!m.rows.empty()) write(dir / "roles.svg", analysis::roles_svg(m));
    }
    for (const auto& f : written) out << "wrote " << f.string() << "\n";
    return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"League training for heterogeneous multi-agent teams", "hlt"};
    app.require_subcommand(1, 1);
    app.failure_message(CLI::FailureMessage::help);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train a frontier policy group");
    train->add_option("--config", train_args.config, "JSON config; unknown keys are rejected")->check(CLI::ExistingFile);
    train->add_option("--out", train_args.out, "run directory (default: $HLT_OUT_DIR/seed<N>, else runs/seed<N>)");
    auto* seed_opt = train->add_option("--seed", train_args.seed, "overrides the config seed");
    auto* resume_opt = train->add_option("--resume", train_args.resume, "checkpoint directory to continue from");
    train->add_option("--steps", train_args.steps, "total optimization steps")->check(CLI::NonNegativeNumber);
    train->add_option("--workers", train_args.workers, "rollout threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    resume_opt->excludes(seed_opt);
    resume_opt->excludes("--config");
    resume_opt->excludes("--out");

    std::string checkpoint;
    int eval_episodes = 160;
    std::uint64_t eval_seed = 1;
    int eval_workers = 0;
    auto* eval = app.add_subcommand("eval", "Win rate of a checkpoint's frontier against the scripted opponent");
    eval->add_option("--checkpoint", checkpoint, "checkpoint or run directory")->required();
    eval->add_option("--episodes", eval_episodes)->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed);
    eval->add_option("--workers", eval_workers)->check(CLI::NonNegativeNumber);

    AnalysisArgs analysis_args;
    auto add_analysis = [&](CLI::App* sub) {
        sub->add_option("--run", analysis_args.run, "run directory")->required();
        sub->add_option("--out", analysis_args.out, "output directory (default: <run>-analysis)");
        sub->add_option("--episodes", analysis_args.episodes, "episodes per group or cell")->check(CLI::PositiveNumber);
        sub->add_option("--seed", analysis_args.seed);
        sub->add_option("--workers", analysis_args.workers)->check(CLI::NonNegativeNumber);
        sub->add_option("--omega-below", analysis_args.omega_below, "skip league groups at or above this omega");
    };
    auto* compat = app.add_subcommand("compat", "Frontier/past compatibility test");
    add_analysis(compat);
    compat->add_option("--mode", analysis_args.mode)->required()->check(CLI::IsMember({"exclusive", "inclusive"}));
    auto* roles = app.add_subcommand("roles", "Per-type decline matrix over league groups");
    add_analysis(roles);

    std::string league_run;
    auto* league_cmd = app.add_subcommand("league", "List league members of a run's latest checkpoint");
    league_cmd->add_option("--run", league_run)->required();

    std::string plot_run;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "Regenerate SVG figures from a run's CSV files");
    plot->add_option("--run", plot_run)->required();
    plot->add_option("--out", plot_out, "analysis directory (default: <run>-analysis)");

    if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
        const auto subs = app.get_subcommands([&](CLI::App* s) { return s->get_name() == args[0]; });
        if (subs.empty()) {
            err << "unknown subcommand '" << args[0] << "'\n" << app.help();
            return kUsage;
        }
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (train->parsed()) return cmd_train(train_args, out);
        if (eval->parsed()) return cmd_eval(checkpoint, eval_episodes, eval_seed, eval_workers, out);
        if (compat->parsed()) return cmd_compat(analysis_args, out);
        if (roles->parsed()) return cmd_roles(analysis_args, out);
        if (league_cmd->parsed()) return cmd_league(league_run, out);
        if (plot->parsed()) return cmd_plot(plot_run, plot_out, out);
    } catch (const CorruptArtifactError& e) {
        err << "error: corrupt artifact: " << e.what() << "\n";
        return kCorrupt;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const analysis::EmptyLeagueError& e) {
        err << "error: " << e.what() << "; nothing to analyse before the first evaluation boundary\n";
        return kRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
    err << app.help();
    return kUsage;
}

}  // namespace hlt::cli
