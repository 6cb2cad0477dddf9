#include "cascade/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cascade/cost.hpp"
#include "cascade/io.hpp"

namespace cascade {

using json = nlohmann::json;

namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string threshold_text(double th) { return is_pass_all(th) ? "PASS_ALL" : format_real(th); }

std::ofstream open_for_write(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

std::uint64_t parse_count(const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size()) throw DataError("cannot parse count '" + s + "'");
    return v;
}

constexpr const char* kPalette[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double width = 720, height = 480;
    double left = 80, right = 30, top = 30, bottom = 60;
    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
};

void svg_open(std::ostringstream& os, const Frame& f) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
       << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << f.width << "\" height=\"" << f.height
       << "\" fill=\"white\"/>\n";
    os << "<rect class=\"plot-area\" x=\"" << f.left << "\" y=\"" << f.top << "\" width=\""
       << f.plot_w() << "\" height=\"" << f.plot_h() << "\" fill=\"none\" stroke=\"black\"/>\n";
}

double nice_upper(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= v) return m * mag;
    }
    return 10.0 * mag;
}

}  // namespace

std::string operating_points_csv(const std::vector<OperatingPoint>& points) {
    if (points.empty()) throw std::invalid_argument("no operating points to write");
    const std::size_t n_stages = points.front().per_stage.size();
    std::ostringstream os;
    for (std::size_t s = 0; s + 1 < n_stages; ++s) os << "th_" << reporting_index(s, n_stages) << ',';
    os << "error,accuracy,cost_norm,cost_total_ops";
    for (std::size_t s = 0; s + 1 < n_stages; ++s) os << ",rho_" << reporting_index(s, n_stages);
    for (std::size_t s = 0; s < n_stages; ++s) {
        const auto k = reporting_index(s, n_stages);
        os << ",decided_" << k << ",correct_" << k << ",misclassified_" << k;
    }
    os << '\n';
    for (const auto& p : points) {
        for (double th : p.thresholds) os << threshold_text(th) << ',';
        os << format_real(p.error) << ',' << format_real(p.accuracy()) << ','
           << format_real(p.cost_norm) << ',' << format_real(p.cost_total_ops);
        for (double rho : p.pass_on_prob) os << ',' << format_real(rho);
        for (const auto& c : p.per_stage) os << ',' << c.decided << ',' << c.correct << ',' << c.misclassified;
        os << '\n';
    }
    return os.str();
}

void write_front(const std::vector<OperatingPoint>& front, const fs::path& path) {
    if (front.empty()) throw std::invalid_argument("write_front: empty front");
    open_for_write(path) << operating_points_csv(front);
}

void write_sweep(const SweepResult& sweep, const fs::path& path) {
    open_for_write(path) << operating_points_csv(sweep.points);
}

std::vector<OperatingPoint> read_operating_points(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    const auto header = split_csv(line);
    std::size_t n_th = 0;
    while (n_th < header.size() && header[n_th].rfind("th_", 0) == 0) ++n_th;
    const std::size_t n_stages = n_th + 1;
    const std::size_t expected = n_th + 4 + n_th + 3 * n_stages;
    if (header.size() != expected || header[n_th] != "error") {
        throw DataError(path.string() + ": unexpected operating-point header");
    }

    std::vector<OperatingPoint> points;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != expected) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": wrong column count");
        }
        OperatingPoint p;
        std::size_t c = 0;
        for (std::size_t i = 0; i < n_th; ++i, ++c) {
            p.thresholds.push_back(cells[c] == "PASS_ALL" ? kPassAll : parse_real(cells[c]));
        }
        p.error = parse_real(cells[c++]);
        ++c;  // accuracy is derived from the counts
        p.cost_norm = parse_real(cells[c++]);
        p.cost_total_ops = parse_real(cells[c++]);
        for (std::size_t i = 0; i < n_th; ++i) p.pass_on_prob.push_back(parse_real(cells[c++]));
        for (std::size_t s = 0; s < n_stages; ++s) {
            StageCounts sc;
            sc.decided = parse_count(cells[c++]);
            sc.correct = parse_count(cells[c++]);
            sc.misclassified = parse_count(cells[c++]);
            p.per_stage.push_back(sc);
        }
        points.push_back(std::move(p));
        ++row;
    }
    return points;
}

Summary summarize(const std::vector<OperatingPoint>& front, const CascadeConfig& config,
                  const std::vector<double>& stage_accuracies) {
    if (front.empty()) throw std::invalid_argument("summarize: empty front");
    Summary s;
    for (const auto& st : config.stages) {
        s.stage_names.push_back(st.name);
        s.stage_costs.push_back(st.cost_ops);
    }
    s.stage_accuracies = stage_accuracies;
    s.reference_accuracy = stage_accuracies.back();
    s.reference_cost_ops = config.reference().cost_ops;
    s.reduction_at_ref = cost_reduction(front, s.reference_accuracy, 1.0, 1.0);
    s.reduction_at_99 = cost_reduction(front, s.reference_accuracy, 1.0, kRelaxedAccuracyFraction);

    const auto best = std::max_element(front.begin(), front.end(), [](const auto& a, const auto& b) {
        return a.accuracy() < b.accuracy();
    });
    s.best_accuracy = best->accuracy();
    s.best_accuracy_cost_norm = best->cost_norm;
    s.exceeds_reference = s.best_accuracy > s.reference_accuracy;

    for (std::size_t i = 0; i + 1 < config.n_stages(); ++i) {
        s.bounds.push_back({config.stages[i].name, config.stages[i + 1].name,
                            pass_on_bound(config.stages[i].cost_ops, config.stages[i + 1].cost_ops)});
    }
    s.front_size = front.size();
    s.metric = std::string(to_string(config.metric));
    s.normalization = std::string(to_string(config.normalization));
    s.grid_points = config.grid.values().size();
    s.pass_all = config.grid.include_pass_all;
    s.cost_preset = config.cost_preset;
    return s;
}

std::string summary_to_json(const Summary& s) {
    auto reduction = [](const std::optional<double>& r) -> json {
        return r ? json(*r) : json("not reached");
    };
    json j;
    j["reference"] = {{"stage", s.stage_names.back()},
                      {"accuracy", s.reference_accuracy},
                      {"cost_ops", s.reference_cost_ops}};
    j["cost_reduction_at_ref"] = reduction(s.reduction_at_ref);
    j["cost_reduction_at_99pct_ref"] = reduction(s.reduction_at_99);
    j["best_accuracy"] = {{"accuracy", s.best_accuracy},
                          {"cost_norm", s.best_accuracy_cost_norm},
                          {"exceeds_reference", s.exceeds_reference}};
    j["stages"] = json::array();
    for (std::size_t i = 0; i < s.stage_names.size(); ++i) {
        j["stages"].push_back({{"name", s.stage_names[i]},
                               {"index", reporting_index(i, s.stage_names.size())},
                               {"cost_ops", s.stage_costs[i]},
                               {"accuracy", s.stage_accuracies[i]}});
    }
    j["profitability_bounds"] = json::array();
    for (const auto& b : s.bounds) {
        j["profitability_bounds"].push_back(
            {{"stage", b.stage}, {"next_stage", b.next_stage}, {"max_pass_on_prob", b.bound}});
    }
    j["front_size"] = s.front_size;
    j["metadata"] = {{"metric", s.metric},
                     {"normalization", s.normalization},
                     {"grid_points_per_stage", s.grid_points},
                     {"pass_all", s.pass_all},
                     {"cost_preset", s.cost_preset}};
    j["metadata"]["overrides"] = json::object();
    for (const auto& [key, value] : s.overrides) j["metadata"]["overrides"][key] = value;
    return j.dump(2) + "\n";
}

void write_summary(const Summary& summary, const fs::path& path) {
    open_for_write(path) << summary_to_json(summary);
}

std::string format_summary_table(const Summary& s) {
    auto reduction = [](const std::optional<double>& r) {
        return r ? fixed(*r) + "x" : std::string("not reached");
    };
    std::ostringstream os;
    os << "metric " << s.metric << ", normalization " << s.normalization << '\n';
    os << "stage                index  cost (ops)        accuracy\n";
    for (std::size_t i = 0; i < s.stage_names.size(); ++i) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %5zu  %-16s  %.2f%%\n", s.stage_names[i].c_str(),
                      reporting_index(i, s.stage_names.size()), format_real(s.stage_costs[i]).c_str(),
                      100.0 * s.stage_accuracies[i]);
        os << line;
    }
    os << "acc_ref                         " << fixed(100.0 * s.reference_accuracy) << "%\n";
    os << "cost @ acc_ref                  " << format_real(s.reference_cost_ops) << " ops\n";
    os << "cost reduction @ acc_ref        " << reduction(s.reduction_at_ref) << '\n';
    os << "cost reduction @ 99% acc_ref    " << reduction(s.reduction_at_99) << '\n';
    os << "best accuracy                   " << fixed(100.0 * s.best_accuracy) << "% at C_norm "
       << fixed(s.best_accuracy_cost_norm, 4) << (s.exceeds_reference ? "  (exceeds reference)" : "")
       << '\n';
    for (const auto& b : s.bounds) {
        os << "pass-on bound " << b.stage << " -> " << b.next_stage << ": rho <= " << fixed(b.bound, 6)
           << (b.bound < 0.0 ? "  (never profitable)" : "") << '\n';
    }
    return os.str();
}

std::pair<int, int> log_decades(double min_value, double max_value) {
    if (!(min_value > 0.0) || !(max_value > 0.0)) {
        throw std::invalid_argument("log axis needs positive values");
    }
    int lo = static_cast<int>(std::floor(std::log10(min_value)));
    int hi = static_cast<int>(std::ceil(std::log10(max_value)));
    if (hi <= lo) hi = lo + 1;
    return {lo, hi};
}

std::string render_pareto_svg(const std::vector<LabeledFront>& fronts) {
    if (fronts.empty()) throw std::invalid_argument("plot_pareto: no fronts");
    double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0, emax = 0.0;
    for (const auto& [label, pts] : fronts) {
        if (pts.empty()) throw std::invalid_argument("plot_pareto: empty front '" + label + "'");
        for (const auto& p : pts) {
            cmin = std::min(cmin, p.cost_norm);
            cmax = std::max(cmax, p.cost_norm);
            emax = std::max(emax, p.error);
        }
    }
    const auto [lo, hi] = log_decades(cmin, cmax);
    const double ytop = nice_upper(emax * 1.05);
    Frame f;
    auto px = [&](double c) { return f.left + (std::log10(c) - lo) / (hi - lo) * f.plot_w(); };
    auto py = [&](double e) { return f.top + (1.0 - e / ytop) * f.plot_h(); };

    std::ostringstream os;
    svg_open(os, f);
    os << "<g class=\"x-axis\" data-decades=\"" << lo << ' ' << hi << "\">\n";
    for (int d = lo; d <= hi; ++d) {
        const double x = px(std::pow(10.0, d));
        os << "<line x1=\"" << fixed(x) << "\" y1=\"" << f.top << "\" x2=\"" << fixed(x) << "\" y2=\""
           << f.top + f.plot_h() << "\" stroke=\"#dddddd\"/>\n";
        os << "<text class=\"tick\" x=\"" << fixed(x) << "\" y=\"" << f.top + f.plot_h() + 18
           << "\" text-anchor=\"middle\">10<tspan baseline-shift=\"super\" font-size=\"9\">" << d
           << "</tspan></text>\n";
    }
    os << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.height - 15
       << "\" text-anchor=\"middle\">normalized cost C_norm</text>\n</g>\n";
    os << "<g class=\"y-axis\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double e = ytop * i / 5.0;
        os << "<text class=\"tick\" x=\"" << f.left - 8 << "\" y=\"" << fixed(py(e) + 4)
           << "\" text-anchor=\"end\">" << fixed(100.0 * e, 2) << "%</text>\n";
    }
    os << "<text x=\"20\" y=\"" << f.top + f.plot_h() / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << f.top + f.plot_h() / 2 << ")\">total error e_tot</text>\n</g>\n";

    for (std::size_t i = 0; i < fronts.size(); ++i) {
        const auto& [label, pts] = fronts[i];
        const char* color = kPalette[i % std::size(kPalette)];
        os << "<g class=\"front\" data-label=\"" << escape_xml(label) << "\">\n<polyline fill=\"none\" stroke=\""
           << color << "\" stroke-width=\"1\" points=\"";
        for (const auto& p : pts) os << fixed(px(p.cost_norm)) << ',' << fixed(py(p.error)) << ' ';
        os << "\"/>\n";
        for (const auto& p : pts) {
            os << "<circle class=\"pt\" cx=\"" << fixed(px(p.cost_norm)) << "\" cy=\"" << fixed(py(p.error))
               << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        os << "</g>\n";
    }
    os << "<g class=\"legend\">\n";
    for (std::size_t i = 0; i < fronts.size(); ++i) {
        const double y = f.top + 16 + 16 * static_cast<double>(i);
        os << "<rect x=\"" << f.left + f.plot_w() - 170 << "\" y=\"" << y - 9
           << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n";
        os << "<text x=\"" << f.left + f.plot_w() - 155 << "\" y=\"" << y << "\">"
           << escape_xml(fronts[i].first) << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void plot_pareto(const std::vector<LabeledFront>& fronts, const fs::path& path) {
    const auto svg = render_pareto_svg(fronts);
    open_for_write(path) << svg;
}

std::vector<BreakdownRow> stage_breakdown(const SweepResult& sweep) {
    std::vector<BreakdownRow> rows;
    for (const auto& p : sweep.points) {
        if (p.thresholds.size() != 1 || p.per_stage.size() != 2) {
            throw std::invalid_argument("stage breakdown requires a 2-stage sweep");
        }
        const double n = static_cast<double>(p.n_samples());
        BreakdownRow r;
        r.threshold = p.thresholds[0];
        r.first_correct = static_cast<double>(p.per_stage[0].correct) / n;
        r.first_misclassified = static_cast<double>(p.per_stage[0].misclassified) / n;
        r.reference_correct = static_cast<double>(p.per_stage[1].correct) / n;
        r.reference_misclassified = static_cast<double>(p.per_stage[1].misclassified) / n;
        r.cost_norm = p.cost_norm;
        rows.push_back(r);
    }
    if (rows.empty()) throw std::invalid_argument("stage breakdown: empty sweep");
    return rows;
}

std::string render_stage_breakdown_svg(const SweepResult& sweep, const std::vector<std::string>& stage_names) {
    const auto rows = stage_breakdown(sweep);
    Frame f;
    f.right = 80;
    f.bottom = 80;
    const std::size_t n = rows.size();
    // Equidistant slots; the pass-all setting takes the last slot.
    auto px = [&](std::size_t i) {
        return f.left + (n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1)) * f.plot_w();
    };
    auto py = [&](double frac) { return f.top + (1.0 - frac) * f.plot_h(); };
    double cost_top = 0.0;
    for (const auto& r : rows) cost_top = std::max(cost_top, r.cost_norm);
    cost_top = nice_upper(cost_top);

    const std::string first = stage_names.size() > 0 ? stage_names[0] : "stage 1";
    const std::string ref = stage_names.size() > 1 ? stage_names[1] : "stage 0";
    struct Layer {
        std::string label;
        const char* color;
        double BreakdownRow::*field;
    };
    const Layer layers[] = {
        {first + " correct", "#74c476", &BreakdownRow::first_correct},
        {first + " misclassified", "#fb6a4a", &BreakdownRow::first_misclassified},
        {ref + " misclassified", "#cb181d", &BreakdownRow::reference_misclassified},
        {ref + " correct", "#238b45", &BreakdownRow::reference_correct},
    };

    std::ostringstream os;
    svg_open(os, f);
    std::vector<double> base(n, 0.0);
    for (const auto& layer : layers) {
        std::vector<double> upper(n);
        for (std::size_t i = 0; i < n; ++i) upper[i] = base[i] + rows[i].*(layer.field);
        os << "<polygon class=\"layer\" data-label=\"" << escape_xml(layer.label) << "\" fill=\"" << layer.color
           << "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < n; ++i) os << fixed(px(i)) << ',' << fixed(py(upper[i])) << ' ';
        for (std::size_t i = n; i-- > 0;) os << fixed(px(i)) << ',' << fixed(py(base[i])) << ' ';
        os << "\"/>\n";
        base = std::move(upper);
    }
    os << "<polyline class=\"cost\" fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
        os << fixed(px(i)) << ',' << fixed(f.top + (1.0 - rows[i].cost_norm / cost_top) * f.plot_h()) << ' ';
    }
    os << "\"/>\n";

    os << "<g class=\"x-axis\">\n";
    const std::size_t step = std::max<std::size_t>(1, (n - 1) / 10);
    std::vector<std::size_t> ticks;
    for (std::size_t i = 0; i + 1 < n; i += step) {
        if (px(n - 1) - px(i) >= 45.0) ticks.push_back(i);
    }
    ticks.push_back(n - 1);
    for (std::size_t i : ticks) {
        os << "<text class=\"tick\" x=\"" << fixed(px(i)) << "\" y=\"" << f.top + f.plot_h() + 18
           << "\" text-anchor=\"middle\">" << (is_pass_all(rows[i].threshold) ? "PASS_ALL" : fixed(rows[i].threshold))
           << "</text>\n";
    }
    os << "<text x=\"" << f.left + f.plot_w() / 2 << "\" y=\"" << f.top + f.plot_h() + 40
       << "\" text-anchor=\"middle\">threshold</text>\n</g>\n";
    os << "<g class=\"y-axis\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double frac = i / 5.0;
        os << "<text class=\"tick\" x=\"" << f.left - 8 << "\" y=\"" << fixed(py(frac) + 4)
           << "\" text-anchor=\"end\">" << i * 20 << "%</text>\n";
        os << "<text class=\"tick\" x=\"" << f.left + f.plot_w() + 8 << "\" y=\"" << fixed(py(frac) + 4)
           << "\">" << fixed(cost_top * frac) << "</text>\n";
    }
    os << "<text x=\"20\" y=\"" << f.top + f.plot_h() / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << f.top + f.plot_h() / 2 << ")\">share of samples</text>\n";
    os << "<text x=\"" << f.width - 20 << "\" y=\"" << f.top + f.plot_h() / 2
       << "\" text-anchor=\"middle\" transform=\"rotate(90 " << f.width - 20 << ' ' << f.top + f.plot_h() / 2
       << ")\">C_norm</text>\n</g>\n";
    os << "<g class=\"legend\">\n";
    // single row below the axis title
    double x = f.left;
    for (std::size_t i = 0; i < std::size(layers); ++i) {
        const double y = f.height - 12;
        os << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
           << layers[i].color << "\"/>\n<text x=\"" << x + 15 << "\" y=\"" << y << "\">"
           << escape_xml(layers[i].label) << "</text>\n";
        x += 35.0 + 7.0 * static_cast<double>(layers[i].label.size());
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

void plot_stage_breakdown(const SweepResult& sweep, const std::vector<std::string>& stage_names,
                          const fs::path& path) {
    const auto svg = render_stage_breakdown_svg(sweep, stage_names);
    open_for_write(path) << svg;
}

}  // namespace cascade
