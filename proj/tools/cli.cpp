#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cascade/cost.hpp"
#include "cascade/engine.hpp"
#include "cascade/io.hpp"
#include "cascade/report.hpp"
#include "cascade/sweep.hpp"

namespace cascade::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::string metric;
    std::string normalization;
    std::size_t grid = 0;
    bool no_pass_all = false;
    std::string cost_preset;
};

struct Options {
    std::string config;
    std::string out;
    Overrides overrides;
    std::vector<std::string> thresholds;
    int jobs = 0;
    std::size_t max_points = 10'000'000;
    bool serial = false;
    bool write_full_sweep = false;
    bool quiet = false;

    // synth
    std::uint64_t seed = 1;
    std::size_t n_samples = 10'000;
    std::size_t n_labels = 10;
    std::vector<std::string> stages;
    std::string format = "bin";
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--metric", o.metric, "Confidence metric (abs, bvsb, var, ent, kl_div, kurt)");
    cmd->add_option("--normalization", o.normalization, "Output normalization (softmax, linear)");
    cmd->add_option("--grid", o.grid, "Equidistant threshold points per stage")->check(CLI::Range(2, 1 << 20));
    cmd->add_flag("--no-pass-all", o.no_pass_all, "Drop the pass-all setting from the grid");
    cmd->add_option("--cost-preset", o.cost_preset, "Cost scale preset (conservative, aggressive)");
}

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return env && *env ? env : "cascade_out";
}

// Applies flag overrides to the config; returns the list echoed into metadata.
std::vector<std::pair<std::string, std::string>> apply_overrides(CascadeConfig& c, const Overrides& o) {
    std::vector<std::pair<std::string, std::string>> echo;
    if (!o.metric.empty()) {
        c.metric = parse_metric(o.metric);
        echo.emplace_back("metric", o.metric);
    }
    if (!o.normalization.empty()) {
        c.normalization = parse_normalization(o.normalization);
        echo.emplace_back("normalization", o.normalization);
    }
    if (o.grid != 0) {
        c.grid.points_per_stage = o.grid;
        c.grid.explicit_values.clear();
        echo.emplace_back("grid", std::to_string(o.grid));
    }
    if (o.no_pass_all) {
        c.grid.include_pass_all = false;
        echo.emplace_back("pass_all", "false");
    }
    if (!o.cost_preset.empty()) {
        c.cost_preset = o.cost_preset;
        apply_cost_scale(c, precision_scale_preset(o.cost_preset));
        echo.emplace_back("cost_preset", o.cost_preset);
    }
    return echo;
}

struct Loaded {
    CascadeConfig config;
    LabelVector labels;
    PreparedCascade prepared;
    std::vector<std::pair<std::string, std::string>> overrides;
};

Loaded load_all(const Options& opt, std::ostream& err) {
    if (opt.config.empty()) throw UsageError("--config is required");
    Loaded l;
    l.config = load_config(opt.config);
    l.overrides = apply_overrides(l.config, opt.overrides);
    for (const auto& w : config_warnings(l.config)) err << "warning: " << w << '\n';
    const auto shape = probe_scores(l.config.stages.front().scores_path);
    l.labels = load_labels(l.config.labels_path, shape.n_labels);
    l.prepared = prepare(l.config, l.labels);
    return l;
}

std::vector<double> stage_accuracies(const PreparedCascade& p) {
    std::vector<double> acc;
    for (const auto& st : p.stages) acc.push_back(stage_accuracy(st));
    return acc;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
    return buf;
}

int cmd_validate(const Options& opt, std::ostream& out, std::ostream& err) {
    const Loaded l = load_all(opt, err);
    const auto acc = stage_accuracies(l.prepared);
    const std::size_t n = l.config.n_stages();
    out << "samples " << l.prepared.n_samples << ", labels " << l.labels.n_labels << ", stages " << n << '\n';
    out << "stage                index  precision  cost (ops)        accuracy\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& st = l.config.stages[i];
        char line[200];
        std::snprintf(line, sizeof(line), "%-20s %5zu  %-9s  %-16s  %s%s\n", st.name.c_str(),
                      reporting_index(i, n), std::string(to_string(st.precision)).c_str(),
                      format_real(st.cost_ops).c_str(), pct(acc[i]).c_str(),
                      i + 1 == n ? "  (reference)" : "");
        out << line;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double bound = pass_on_bound(l.config.stages[i].cost_ops, l.config.stages[i + 1].cost_ops);
        out << "pass-on bound " << l.config.stages[i].name << " -> " << l.config.stages[i + 1].name
            << ": rho <= " << format_real(bound) << (bound < 0.0 ? "  (never profitable)" : "") << '\n';
    }
    out << "ok\n";
    return kOk;
}

ThresholdVector parse_thresholds(const std::vector<std::string>& raw) {
    ThresholdVector th;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            if (tok == "PASS_ALL" || tok == "pass_all") {
                th.push_back(kPassAll);
                continue;
            }
            try {
                const double v = parse_real(tok);
                if (!(v >= 0.0 && v <= 1.0)) throw UsageError("threshold out of [0,1]: " + tok);
                th.push_back(v);
            } catch (const DataError&) {
                throw UsageError("cannot parse threshold '" + tok + "'");
            }
        }
    }
    return th;
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& err) {
    const ThresholdVector th = parse_thresholds(opt.thresholds);
    const Loaded l = load_all(opt, err);
    const std::size_t n = l.config.n_stages();
    if (th.size() + 1 != n) {
        throw UsageError("--th expects " + std::to_string(n - 1) + " threshold(s) for a " + std::to_string(n) +
                         "-stage cascade, got " + std::to_string(th.size()));
    }
    const OperatingPoint p = evaluate(l.prepared, th);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        out << "th_" << reporting_index(i, n) << " " << (is_pass_all(th[i]) ? "PASS_ALL" : format_real(th[i]))
            << '\n';
    }
    out << "error " << format_real(p.error) << '\n';
    out << "accuracy " << format_real(p.accuracy()) << '\n';
    out << "cost_norm " << format_real(p.cost_norm) << '\n';
    out << "cost_total_ops " << format_real(p.cost_total_ops) << '\n';
    const auto diag = check_profitability(p, l.config);
    for (const auto& d : diag) {
        out << "rho_" << reporting_index(d.stage, n) << ' ' << format_real(d.pass_on_prob) << " (bound "
            << format_real(d.bound) << (d.profitable ? ", profitable" : ", not profitable") << ")\n";
    }
    out << "stage                index  decided  correct  misclassified\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = p.per_stage[i];
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %5zu  %7llu  %7llu  %13llu\n", l.config.stages[i].name.c_str(),
                      reporting_index(i, n), static_cast<unsigned long long>(c.decided),
                      static_cast<unsigned long long>(c.correct), static_cast<unsigned long long>(c.misclassified));
        out << line;
    }
    if (!opt.out.empty()) write_front({p}, opt.out);
    return kOk;
}

SweepResult run_sweep(const PreparedCascade& prepared, const ThresholdGrid& grid, const Options& opt) {
    SweepOptions so;
    so.jobs = opt.jobs;
    so.max_points = opt.max_points;
    if (!opt.serial && grid.is_equidistant()) return sweep_accelerated(prepared, grid, so);
    return sweep(prepared, grid, so);
}

PreparedCascade two_stage(const PreparedCascade& full, std::size_t first) {
    PreparedCascade p;
    p.n_samples = full.n_samples;
    p.metric = full.metric;
    p.normalization = full.normalization;
    p.stages = {full.stages[first], full.reference()};
    return p;
}

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
    const Loaded l = load_all(opt, err);
    const fs::path dir = opt.out.empty() ? fs::path(default_out_dir()) : fs::path(opt.out);
    fs::create_directories(dir);
    const std::size_t n = l.config.n_stages();

    const SweepResult result = run_sweep(l.prepared, l.config.grid, opt);
    const auto front = pareto_front(result.points);
    write_front(front, dir / "front.csv");
    if (opt.write_full_sweep) write_sweep(result, dir / "sweep.csv");

    Summary summary = summarize(front, l.config, stage_accuracies(l.prepared));
    summary.overrides = l.overrides;
    write_summary(summary, dir / "summary.json");

    // Every non-final stage paired with the reference, overlaid with the full cascade.
    std::vector<LabeledFront> fronts;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::string name = l.config.stages[i].name + "-" + l.config.reference().name;
        if (n == 2) {
            plot_stage_breakdown(result, {l.config.stages[0].name, l.config.reference().name},
                                 dir / ("breakdown_" + name + ".svg"));
            continue;
        }
        const PreparedCascade pair = two_stage(l.prepared, i);
        const SweepResult pair_sweep = run_sweep(pair, l.config.grid, opt);
        plot_stage_breakdown(pair_sweep, {l.config.stages[i].name, l.config.reference().name},
                             dir / ("breakdown_" + name + ".svg"));
        fronts.emplace_back(name, pareto_front(pair_sweep.points));
    }
    std::string full_label;
    for (std::size_t i = 0; i < n; ++i) full_label += (i ? "-" : "") + l.config.stages[i].name;
    fronts.insert(fronts.begin(), LabeledFront{full_label, front});
    plot_pareto(fronts, dir / "pareto.svg");

    if (!opt.quiet) {
        out << "swept " << result.points.size() << " operating points, " << front.size()
            << " on the Pareto front\n";
        out << format_summary_table(summary);
        out << "wrote " << (dir / "front.csv").string() << '\n';
    }
    return kOk;
}

std::vector<SynthStageParams> parse_stage_params(const std::vector<std::string>& raw) {
    if (raw.empty()) return {{0.90, 4.0, 1.0}, {0.99, 4.0, 100.0}};
    std::vector<SynthStageParams> out;
    for (const auto& item : raw) {
        std::stringstream ss(item);
        std::string tok;
        std::vector<double> v;
        while (std::getline(ss, tok, ':')) {
            try {
                v.push_back(parse_real(tok));
            } catch (const DataError&) {
                throw UsageError("cannot parse --stage '" + item + "'");
            }
        }
        if (v.size() != 3) throw UsageError("--stage expects accuracy:sharpness:cost, got '" + item + "'");
        out.push_back({v[0], v[1], v[2]});
    }
    return out;
}

int cmd_synth(const Options& opt, std::ostream& out, std::ostream&) {
    const fs::path dir = opt.out.empty() ? fs::path(default_out_dir()) : fs::path(opt.out);
    if (opt.format != "bin" && opt.format != "csv") throw UsageError("--format must be bin or csv");
    const auto params = parse_stage_params(opt.stages);
    SynthFixture fx;
    try {
        fx = synth_fixture(opt.seed, opt.n_samples, opt.n_labels, params);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!opt.overrides.metric.empty()) fx.config.metric = parse_metric(opt.overrides.metric);
    if (!opt.overrides.normalization.empty()) {
        fx.config.normalization = parse_normalization(opt.overrides.normalization);
    }
    if (opt.overrides.grid != 0) fx.config.grid.points_per_stage = opt.overrides.grid;
    if (opt.overrides.no_pass_all) fx.config.grid.include_pass_all = false;

    fs::create_directories(dir);
    for (std::size_t s = 0; s < fx.scores.size(); ++s) {
        auto& st = fx.config.stages[s];
        if (opt.format == "csv") st.scores_path = st.name + ".csv";
        save_scores(fx.scores[s], dir / st.scores_path);
    }
    save_labels(fx.labels, dir / fx.config.labels_path);
    save_config(fx.config, dir / "cascade.json");
    out << "wrote " << fx.scores.size() << "-stage fixture (" << opt.n_samples << " samples, " << opt.n_labels
        << " labels, seed " << opt.seed << ") to " << (dir / "cascade.json").string() << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cascaded classifier pass-on analysis and Pareto sweeps", "cascade"};
    app.require_subcommand(1, 1);
    Options opt;

    auto* validate = app.add_subcommand("validate", "Check a cascade config and report per-stage accuracy and cost");
    validate->add_option("--config", opt.config, "Cascade config (JSON)")->required();
    add_overrides(validate, opt.overrides);

    auto* eval = app.add_subcommand("eval", "Evaluate one threshold vector");
    eval->add_option("--config", opt.config, "Cascade config (JSON)")->required();
    eval->add_option("--th", opt.thresholds, "Thresholds, first stage first; PASS_ALL forwards every sample")
        ->required();
    eval->add_option("--out", opt.out, "Write the operating point as CSV");
    add_overrides(eval, opt.overrides);

    auto* sweep_cmd = app.add_subcommand("sweep", "Full-factorial threshold sweep with Pareto front and reports");
    sweep_cmd->add_option("--config", opt.config, "Cascade config (JSON)")->required();
    sweep_cmd->add_option("--out", opt.out, std::string("Output directory (default $") + kOutDirEnv + ")");
    sweep_cmd->add_option("--jobs", opt.jobs, "Worker threads (0 = all available)")->check(CLI::NonNegativeNumber);
    sweep_cmd->add_option("--max-points", opt.max_points, "Cap on the number of grid combinations");
    sweep_cmd->add_flag("--serial-kernel", opt.serial, "Evaluate every point directly instead of via histograms");
    sweep_cmd->add_flag("--write-sweep", opt.write_full_sweep, "Also write every swept point to sweep.csv");
    sweep_cmd->add_flag("-q,--quiet", opt.quiet, "Suppress the summary table");
    add_overrides(sweep_cmd, opt.overrides);

    auto* synth = app.add_subcommand("synth", "Write a synthetic cascade fixture");
    synth->add_option("--out", opt.out, std::string("Output directory (default $") + kOutDirEnv + ")");
    synth->add_option("--seed", opt.seed, "Random seed");
    synth->add_option("--n-samples", opt.n_samples, "Samples per stage");
    synth->add_option("--n-labels", opt.n_labels, "Label count");
    synth->add_option("--stage", opt.stages, "accuracy:sharpness:cost, cheapest stage first (repeatable)");
    synth->add_option("--format", opt.format, "Score file format (bin, csv)");
    add_overrides(synth, opt.overrides);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*validate) return cmd_validate(opt, out, err);
        if (*eval) return cmd_eval(opt, out, err);
        if (*sweep_cmd) return cmd_sweep(opt, out, err);
        if (*synth) return cmd_synth(opt, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ResourceLimitError& e) {
        err << "resource limit: " << e.what() << '\n';
        return kResourceError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

}  // namespace cascade::cli
