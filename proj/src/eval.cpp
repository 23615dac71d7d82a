#include "corl/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace corl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string EvalReport::to_json() const {
    std::ostringstream os;
    os << "{\"run_id\":" << json(run_id).dump() << ",\"env_id\":\"" << env_id << "\",\"mode\":\"" << mode
       << "\",\"exec\":\"" << exec << "\",\"n_trials\":" << n_trials << ",\"successes\":" << successes
       << ",\"sr\":" << format_double(sr);
    if (ct) os << ",\"ct\":" << format_double(*ct);
    os << ",\"seed\":" << seed << ",\"trials\":[";
    for (std::size_t i = 0; i < trials.size(); ++i) {
        if (i) os << ',';
        os << "{\"seed\":" << trials[i].seed << ",\"success\":" << (trials[i].success ? "true" : "false")
           << ",\"steps\":" << trials[i].steps << '}';
    }
    os << "]}";
    return os.str();
}

EvalReport EvalReport::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(DataError::Kind::CorruptRecord, std::string("bad eval report: ") + e.what());
    }
    EvalReport r;
    r.run_id = j.value("run_id", "");
    r.env_id = j.at("env_id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.exec = j.value("exec", "open_loop_chunk");
    r.n_trials = j.at("n_trials").get<int>();
    r.successes = j.at("successes").get<int>();
    r.sr = j.at("sr").get<double>();
    if (j.contains("ct")) r.ct = j["ct"].get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const json& t : j.at("trials"))
        r.trials.push_back({t.at("seed").get<std::uint64_t>(), t.at("success").get<bool>(), t.at("steps").get<int>()});
    return r;
}

void EvalReport::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(DataError::Kind::Io, "cannot write eval report: " + path);
    os << to_json() << '\n';
}

EvalReport EvalReport::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(DataError::Kind::Io, "cannot read eval report: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return from_json(buf.str());
}

EvalReport evaluate(const ActorNetwork& actor, Env& env, int n_trials, ResetMode mode, std::uint64_t seed,
                    ExecMode exec) {
    if (n_trials < 1) throw DataError(DataError::Kind::BadArgument, "n_trials must be >= 1");
    EvalReport r;
    r.env_id = env.spec().env_id;
    r.mode = reset_mode_name(mode);
    r.exec = exec_mode_name(exec);
    r.n_trials = n_trials;
    r.seed = seed;
    long step_sum = 0;
    for (int t = 0; t < n_trials; ++t) {
        const std::uint64_t trial_seed = seed * 1000003ULL + static_cast<std::uint64_t>(t);
        RolloutResult roll = rollout(actor, env, trial_seed, mode, exec);
        r.trials.push_back({trial_seed, roll.success, roll.steps});
        if (roll.success) {
            ++r.successes;
            step_sum += roll.steps;
        }
    }
    r.sr = static_cast<double>(r.successes) / static_cast<double>(n_trials);
    if (r.successes > 0) r.ct = static_cast<double>(step_sum) / static_cast<double>(r.successes);
    return r;
}

std::string eval_csv_header() { return "run_id,env_id,mode,n_trials,sr,ct,seed"; }

std::string eval_csv_row(const EvalReport& r) {
    std::ostringstream os;
    os << r.run_id << ',' << r.env_id << ',' << r.mode << ',' << r.n_trials << ',' << format_double(r.sr) << ',';
    if (r.ct) os << format_double(*r.ct);
    os << ',' << r.seed;
    return os.str();
}

namespace {
std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}
}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, double y_max) {
    const int width = 80 + static_cast<int>(labels.size()) * 90;
    const int height = 260;
    const int base_y = 210;
    const int plot_h = 170;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">" << svg_escape(title)
       << "</text>\n";
    os << "<line x1=\"40\" y1=\"" << base_y << "\" x2=\"" << (width - 20) << "\" y2=\"" << base_y
       << "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = values[i];
        const int bar_h = y_max > 0 ? static_cast<int>(plot_h * std::min(1.0, v / y_max)) : 0;
        const int x = 60 + static_cast<int>(i) * 90;
        os << "<rect x=\"" << x << "\" y=\"" << (base_y - bar_h) << "\" width=\"60\" height=\"" << bar_h
           << "\" fill=\"#4878a8\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << (base_y - bar_h - 5)
           << "\" font-family=\"monospace\" font-size=\"11\">" << fmt2(v) << "</text>\n";
        os << "<text x=\"" << x << "\" y=\"" << (base_y + 16) << "\" font-family=\"monospace\" font-size=\"10\">"
           << svg_escape(labels[i]) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_line_chart(const std::string& title, const std::vector<TrainingCurve>& curves) {
    const int width = 640, height = 300;
    const int x0 = 50, y0 = 250, plot_w = 560, plot_h = 200;
    long max_step = 1;
    double max_v = 1e-12;
    for (const auto& c : curves) {
        for (long s : c.steps) max_step = std::max(max_step, s);
        for (double v : c.values) max_v = std::max(max_v, v);
    }
    static const char* colors[] = {"#4878a8", "#a84848", "#48a860", "#a88c48", "#8048a8", "#48a0a8"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">" << svg_escape(title)
       << "</text>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << (x0 + plot_w) << "\" y2=\"" << y0
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << (y0 - plot_h)
       << "\" stroke=\"black\"/>\n";
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
        const TrainingCurve& c = curves[ci];
        os << "<polyline fill=\"none\" stroke=\"" << colors[ci % 6] << "\" points=\"";
        for (std::size_t i = 0; i < c.steps.size(); ++i) {
            const double x = x0 + plot_w * static_cast<double>(c.steps[i]) / static_cast<double>(max_step);
            const double y = y0 - plot_h * (c.values[i] / max_v);
            os << fmt2(x) << ',' << fmt2(y) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << (x0 + 10) << "\" y=\"" << (40 + 14 * ci) << "\" font-family=\"monospace\" "
           << "font-size=\"11\" fill=\"" << colors[ci % 6] << "\">" << svg_escape(c.run_id) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(DataError::Kind::Io, "cannot write: " + path);
    os << content;
}

std::vector<TrainingCurve> read_td_curves(const std::vector<std::string>& run_dirs) {
    std::vector<TrainingCurve> curves;
    for (const std::string& dir : run_dirs) {
        fs::path log = fs::path(dir) / "metrics.log";
        if (!fs::exists(log)) continue;
        TrainingCurve c;
        c.run_id = fs::path(dir).filename().string();
        std::ifstream is(log);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("td_error")) continue;
            c.steps.push_back(j.at("step").get<long>());
            c.values.push_back(j.at("td_error").get<double>());
        }
        if (!c.steps.empty()) curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace

void compare_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw DataError(DataError::Kind::BadArgument, "no runs given");
    fs::create_directories(out_dir);

    // gather all eval reports, run_id defaulting to the directory name
    std::vector<EvalReport> reports;
    for (const std::string& dir : run_dirs) {
        for (const auto& entry : fs::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("eval_", 0) == 0 && entry.path().extension() == ".json") {
                EvalReport r = EvalReport::load(entry.path().string());
                if (r.run_id.empty()) r.run_id = fs::path(dir).filename().string();
                reports.push_back(std::move(r));
            }
        }
    }
    std::sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
        return std::tie(a.env_id, a.mode, a.run_id) < std::tie(b.env_id, b.mode, b.run_id);
    });

    std::ostringstream csv;
    csv << eval_csv_header() << '\n';
    for (const EvalReport& r : reports) csv << eval_csv_row(r) << '\n';

    // SR charts, one per (env, mode); a chart never mixes env ids
    std::map<std::pair<std::string, std::string>, std::vector<const EvalReport*>> groups;
    for (const EvalReport& r : reports) groups[{r.env_id, r.mode}].push_back(&r);
    for (const auto& [key, group] : groups) {
        std::vector<std::string> labels;
        std::vector<double> srs;
        for (const EvalReport* r : group) {
            labels.push_back(r->run_id);
            srs.push_back(r->sr);
        }
        write_file(out_dir + "/sr_" + key.first + "_" + key.second + ".svg",
                   svg_bar_chart("SR " + key.first + " (" + key.second + ")", labels, srs, 1.0));

        // CT chart omits runs that never succeeded (no CT defined)
        std::vector<std::string> ct_labels;
        std::vector<double> cts;
        double ct_max = 1.0;
        for (const EvalReport* r : group) {
            if (!r->ct) continue;
            ct_labels.push_back(r->run_id);
            cts.push_back(*r->ct);
            ct_max = std::max(ct_max, *r->ct);
        }
        if (!cts.empty()) {
            write_file(out_dir + "/ct_" + key.first + "_" + key.second + ".svg",
                       svg_bar_chart("CT " + key.first + " (" + key.second + ")", ct_labels, cts, ct_max));
        } else {
            csv << "# no CT for " << key.first << " " << key.second << " (no successful runs)\n";
        }
    }
    write_file(out_dir + "/report.csv", csv.str());

    std::vector<TrainingCurve> curves = read_td_curves(run_dirs);
    if (!curves.empty()) write_file(out_dir + "/td_error.svg", svg_line_chart("TD error", curves));
}

}  // namespace corl
