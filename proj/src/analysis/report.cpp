#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hlt/analysis/analysis.hpp"
#include "hlt/errors.hpp"

namespace hlt::analysis {

namespace fs = std::filesystem;

namespace {

const char* const kCompatHeader = "mode,version,omega,self_mix,episodes,wins,win_rate,improvement,ci_low,ci_high";
const char* const kRolesHeader =
    "version,omega,self_mix,type,episodes,wins,win_rate,decline,ci_low,ci_high,frontier_episodes,frontier_wins";
const char* const kRawHeader = "row,version,special_type,episode,seed,win";

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Data lines after a checked header, each split into exactly `header`'s columns.
std::vector<std::vector<std::string>> read_table(const fs::path& path, const std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptArtifactError("missing " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != header) throw CorruptArtifactError(path.string() + ": unexpected header");
    const auto width = split(header).size();
    std::vector<std::vector<std::string>> rows;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != width) {
            throw CorruptArtifactError(path.string() + ":" + std::to_string(n) + ": expected " + std::to_string(width) +
                                       " columns");
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

template <typename T>
T parse(const std::string& s, const fs::path& path) {
    std::istringstream in(s);
    T v{};
    in >> v;
    if (!in || !in.eof()) throw CorruptArtifactError(path.string() + ": bad value '" + s + "'");
    return v;
}

double parse_double(const std::string& s, const fs::path& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw CorruptArtifactError(path.string() + ": bad number '" + s + "'");
}

std::string raw_csv(const std::vector<RawEpisode>& raw, const std::vector<std::uint64_t>& versions) {
    std::string out = std::string(kRawHeader) + "\n";
    for (const auto& e : raw) {
        const std::string version = e.row >= 0 ? std::to_string(versions[static_cast<std::size_t>(e.row)]) : "frontier";
        out += std::to_string(e.row) + "," + version + "," + std::to_string(e.special_type) + "," +
               std::to_string(e.episode) + "," + std::to_string(e.seed) + "," + (e.win ? "1" : "0") + "\n";
    }
    return out;
}

// Minimal SVG plotting: one panel, omega on x, a signed quantity on y.
struct Plot {
    double width = 640;
    double height = 420;
    double left = 70;
    double right = 170;
    double top = 40;
    double bottom = 50;
    double y_min = -1;
    double y_max = 1;
    double x_max = 1;
    std::string x_label = "past group ω";
    std::string body;

    double px(double x) const { return left + x / x_max * (width - left - right); }
    double py(double y) const { return top + (y_max - y) / (y_max - y_min) * (height - top - bottom); }

    void fit(const std::vector<double>& ys) {
        y_min = -0.2;
        y_max = 0.2;
        for (double y : ys) {
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
        y_min = std::floor(y_min * 5.0) / 5.0;
        y_max = std::ceil(y_max * 5.0) / 5.0;
    }

    void axes(const std::string& title, const std::string& y_label) {
        char buf[256];
        body += "<text x=\"" + exact(width / 2 - 60) + "\" y=\"22\" font-size=\"15\">" + title + "</text>\n";
        for (int k = 0; k <= 5; ++k) {
            const double x = px(x_max * k / 5.0);
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n"
                          "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\">%.*f</text>\n",
                          x, top, x, height - bottom, x, height - bottom + 16, x_max == 1.0 ? 1 : 0, x_max * k / 5.0);
            body += buf;
        }
        const int steps = static_cast<int>(std::lround((y_max - y_min) / 0.2));
        for (int k = 0; k <= steps; ++k) {
            const double v = y_min + 0.2 * k;
            const double y = py(v);
            std::snprintf(buf, sizeof buf,
                          "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\"/>\n"
                          "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.1f</text>\n",
                          left, y, width - right, y, std::abs(v) < 1e-9 ? "#888" : "#ddd", left - 6, y + 4, v);
            body += buf;
        }
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n"
                      "<text x=\"16\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                      "transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                      (left + width - right) / 2, height - 12, x_label.c_str(), (top + height - bottom) / 2,
                      (top + height - bottom) / 2, y_label.c_str());
        body += buf;
    }

    void marker(double omega, double y, double lo, double hi, const std::string& colour, bool hollow) {
        char buf[400];
        const double x = px(omega);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\"/>\n"
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" fill=\"%s\" stroke=\"%s\"/>\n",
                      x, py(lo), x, py(hi), colour.c_str(), x, py(y), hollow ? "white" : colour.c_str(),
                      colour.c_str());
        body += buf;
    }

    void legend(int index, const std::string& label, const std::string& colour, bool hollow) {
        char buf[400];
        const double x = width - right + 16;
        const double y = top + 12 + 18 * index;
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"4\" fill=\"%s\" stroke=\"%s\"/>\n"
                      "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\">%s</text>\n",
                      x, y, hollow ? "white" : colour.c_str(), colour.c_str(), x + 10, y + 4, label.c_str());
        body += buf;
    }

    std::string svg() const {
        char head[256];
        std::snprintf(head, sizeof head,
                      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                      "viewBox=\"0 0 %.0f %.0f\">\n",
                      width, height, width, height);
        return std::string(head) + "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body + "</svg>\n";
    }
};

const std::vector<std::string> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string compat_svg(const CompatReport& report) {
    Plot plot;
    std::vector<double> ys;
    for (const auto& r : report.rows) {
        ys.push_back(r.interval().lo - r.omega);
        ys.push_back(r.interval().hi - r.omega);
    }
    plot.fit(ys);
    plot.axes("Frontier-" + to_string(report.mode) + " mixing", "mixed win rate − ω");
    for (const auto& r : report.rows) {
        const auto ci = r.interval();
        plot.marker(r.omega, r.improvement(), ci.lo - r.omega, ci.hi - r.omega, r.self_mix ? kPalette[1] : kPalette[0],
                    r.self_mix);
    }
    plot.legend(0, "league group", kPalette[0], false);
    plot.legend(1, "frontier copy", kPalette[1], true);
    return plot.svg();
}

std::string roles_svg(const RoleMatrix& m) {
    Plot plot;
    std::vector<double> ys;
    for (const auto& r : m.rows) {
        for (const auto& c : r.cells) {
            ys.push_back(m.frontier_omega() - c.interval().lo);
            ys.push_back(m.frontier_omega() - c.interval().hi);
        }
    }
    plot.fit(ys);
    plot.axes("Decline when one type runs a past group", "frontier Ω − cell win rate");
    for (std::size_t j = 0; j < m.type_names.size(); ++j) {
        const auto& colour = kPalette[j % kPalette.size()];
        std::vector<std::pair<double, double>> line;
        for (std::size_t r = 0; r < m.rows.size(); ++r) {
            const auto& row = m.rows[r];
            const auto ci = row.cells[j].interval();
            plot.marker(row.omega, m.decline(r, j), m.frontier_omega() - ci.hi, m.frontier_omega() - ci.lo, colour,
                        row.self_mix);
            if (!row.self_mix) line.emplace_back(row.omega, m.decline(r, j));
        }
        std::sort(line.begin(), line.end());
        if (line.size() > 1) {
            std::string points;
            char buf[64];
            for (const auto& [x, y] : line) {
                std::snprintf(buf, sizeof buf, "%.1f,%.1f ", plot.px(x), plot.py(y));
                points += buf;
            }
            plot.body += "<polyline fill=\"none\" stroke=\"" + colour + "\" points=\"" + points + "\"/>\n";
        }
        plot.legend(static_cast<int>(j), xml_escape(m.type_names[j]), colour, false);
    }
    plot.legend(static_cast<int>(m.type_names.size()), "hollow: frontier copy", "#444", true);
    return plot.svg();
}

std::string omega_curve_svg(const std::vector<std::pair<int, double>>& history, int total_steps) {
    Plot plot;
    plot.x_max = std::max(1, total_steps);
    plot.x_label = "optimization step";
    plot.y_min = 0.0;
    plot.y_max = 1.0;
    plot.axes("Frontier win rate at evaluation boundaries", "Ω");
    std::string points;
    char buf[64];
    for (const auto& [step, omega] : history) {
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", plot.px(step), plot.py(omega));
        points += buf;
    }
    if (!history.empty()) {
        plot.body += "<polyline fill=\"none\" stroke=\"" + kPalette[0] + "\" points=\"" + points + "\"/>\n";
    }
    for (const auto& [step, omega] : history) plot.marker(step, omega, omega, omega, kPalette[0], false);
    return plot.svg();
}

std::vector<fs::path> export_report(const CompatReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    const std::string stem = "compat_" + to_string(report.mode);
    std::string agg = std::string(kCompatHeader) + "\n";
    std::vector<std::uint64_t> versions;
    for (const auto& r : report.rows) {
        const auto ci = r.interval();
        agg += to_string(report.mode) + "," + std::to_string(r.version) + "," + exact(r.omega) + "," +
               (r.self_mix ? "1" : "0") + "," + std::to_string(r.episodes) + "," + std::to_string(r.wins) + "," +
               exact(r.win_rate()) + "," + exact(r.improvement()) + "," + exact(ci.lo) + "," + exact(ci.hi) + "\n";
        versions.push_back(r.version);
    }
    std::vector<fs::path> written{out_dir / (stem + "_raw.csv"), out_dir / (stem + ".csv")};
    write_file(written[0], raw_csv(report.raw, versions));
    write_file(written[1], agg);
    if (!report.rows.empty()) {
        written.push_back(out_dir / (stem + ".svg"));
        write_file(written.back(), compat_svg(report));
    }
    return written;
}

std::vector<fs::path> export_report(const RoleMatrix& m, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::string agg = std::string(kRolesHeader) + "\n";
    std::vector<std::uint64_t> versions;
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        const auto& row = m.rows[r];
        versions.push_back(row.version);
        for (std::size_t j = 0; j < row.cells.size(); ++j) {
            const auto& c = row.cells[j];
            const auto ci = c.interval();
            agg += std::to_string(row.version) + "," + exact(row.omega) + "," + (row.self_mix ? "1" : "0") + "," +
                   m.type_names[j] + "," + std::to_string(c.episodes) + "," + std::to_string(c.wins) + "," +
                   exact(c.win_rate()) + "," + exact(m.decline(r, j)) + "," + exact(ci.lo) + "," + exact(ci.hi) + "," +
                   std::to_string(m.frontier_episodes) + "," + std::to_string(m.frontier_wins) + "\n";
        }
    }
    std::vector<fs::path> written{out_dir / "roles_raw.csv", out_dir / "roles.csv"};
    write_file(written[0], raw_csv(m.raw, versions));
    write_file(written[1], agg);
    if (!m.rows.empty()) {
        written.push_back(out_dir / "roles.svg");
        write_file(written.back(), roles_svg(m));
    }
    return written;
}

CompatReport read_compat_csv(const fs::path& path) {
    CompatReport report;
    const auto stem = path.stem().string();
    if (stem == "compat_inclusive") report.mode = CompatMode::inclusive;
    for (const auto& cells : read_table(path, kCompatHeader)) {
        try {
            report.mode = compat_mode_from_string(cells[0]);
        } catch (const std::invalid_argument& e) {
            throw CorruptArtifactError(path.string() + ": " + e.what());
        }
        CompatRow r;
        r.version = parse<std::uint64_t>(cells[1], path);
        r.omega = parse_double(cells[2], path);
        r.self_mix = parse<int>(cells[3], path) != 0;
        r.episodes = parse<int>(cells[4], path);
        r.wins = parse<int>(cells[5], path);
        if (r.episodes < 0 || r.wins < 0 || r.wins > r.episodes) {
            throw CorruptArtifactError(path.string() + ": inconsistent win count");
        }
        report.rows.push_back(r);
    }
    return report;
}

RoleMatrix read_roles_csv(const fs::path& path) {
    RoleMatrix m;
    for (const auto& cells : read_table(path, kRolesHeader)) {
        const auto version = parse<std::uint64_t>(cells[0], path);
        const bool self_mix = parse<int>(cells[2], path) != 0;
        const auto& type = cells[3];
        auto t = std::find(m.type_names.begin(), m.type_names.end(), type);
        if (t == m.type_names.end()) t = m.type_names.insert(m.type_names.end(), type);
        const auto j = static_cast<std::size_t>(t - m.type_names.begin());
        const double omega = parse_double(cells[1], path);
        // Rows are written as consecutive runs of cells in type order.
        if (j == 0) m.rows.push_back({version, omega, self_mix, {}});
        if (m.rows.empty()) throw CorruptArtifactError(path.string() + ": cells out of type order");
        auto& row = m.rows.back();
        if (row.version != version || row.omega != omega || row.self_mix != self_mix) {
            throw CorruptArtifactError(path.string() + ": cells out of type order");
        }
        if (row.cells.size() != j) throw CorruptArtifactError(path.string() + ": cells out of type order");
        RoleCell c{parse<int>(cells[4], path), parse<int>(cells[5], path)};
        if (c.episodes < 0 || c.wins < 0 || c.wins > c.episodes) {
            throw CorruptArtifactError(path.string() + ": inconsistent win count");
        }
        row.cells.push_back(c);
        m.frontier_episodes = parse<int>(cells[10], path);
        m.frontier_wins = parse<int>(cells[11], path);
    }
    for (const auto& r : m.rows) {
        if (r.cells.size() != m.type_names.size()) throw CorruptArtifactError(path.string() + ": ragged role matrix");
    }
    return m;
}

std::vector<RawEpisode> read_raw_csv(const fs::path& path) {
    std::vector<RawEpisode> out;
    for (const auto& cells : read_table(path, kRawHeader)) {
        RawEpisode e;
        e.row = parse<int>(cells[0], path);
        e.special_type = parse<int>(cells[2], path);
        e.episode = parse<int>(cells[3], path);
        e.seed = parse<std::uint64_t>(cells[4], path);
        e.win = parse<int>(cells[5], path) != 0;
        out.push_back(e);
    }
    return out;
}

}  // namespace hlt::analysis
