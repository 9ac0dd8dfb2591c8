// favq: run FavourQueue / DropTail experiments and fit the favour model.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "favq/analytic_model.hpp"
#include "favq/config.hpp"
#include "favq/experiment.hpp"

using namespace favq;

namespace {

struct Common {
    std::string config;
    std::string variant;
    std::string loads;
    std::string seeds;
    double duration = -1;
    double warmup = -1;
    int iw = -1;
    int queue_capacity = -1;
    std::string out = "results";
    bool quick = false;
    unsigned jobs = 1;
    bool dump_workload = false;
};

void add_common(CLI::App* app, Common& c, bool with_variant = true) {
    app->add_option("--config", c.config, "key = value config file");
    if (with_variant) {
        app->add_option("--variant", c.variant,
                        "droptail, favour, favour-pushout, a comma list, or all");
    }
    app->add_option("--loads", c.loads, "comma-separated loads");
    app->add_option("--seeds", c.seeds, "comma-separated seeds");
    app->add_option("--duration", c.duration, "simulated seconds");
    app->add_option("--warmup", c.warmup, "flows arriving earlier are ignored");
    app->add_option("--iw", c.iw, "initial window, packets");
    app->add_option("--queue-capacity", c.queue_capacity, "bottleneck buffer, packets");
    app->add_option("--out", c.out, "result root");
    app->add_flag("--quick", c.quick, "100 s and seeds 1,2,3");
    app->add_option("--jobs", c.jobs, "parallel runs")->check(CLI::PositiveNumber);
    app->add_flag("--dump-workload", c.dump_workload, "write workload.csv next to each run");
}

ExperimentConfig make_config(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.quick) apply_quick_preset(cfg);
    if (!c.loads.empty()) cfg.loads = parse_double_list(c.loads);
    if (!c.seeds.empty()) cfg.seeds = parse_u64_list(c.seeds);
    if (c.duration > 0) cfg.traffic.duration = c.duration;
    if (c.warmup >= 0) cfg.traffic.warmup = c.warmup;
    if (c.iw > 0) cfg.traffic.initial_window = c.iw;
    if (c.queue_capacity > 0) {
        cfg.topology.queue_capacity = static_cast<std::size_t>(c.queue_capacity);
    }
    cfg.validate();
    return cfg;
}

QueueVariant variant_or_throw(const std::string& name) {
    const auto v = parse_variant(name);
    if (!v) throw std::runtime_error("unknown variant '" + name + "'");
    return *v;
}

std::vector<QueueVariant> variants_of(const std::string& text,
                                      std::vector<QueueVariant> fallback) {
    if (text.empty()) return fallback;
    if (text == "all") {
        return {QueueVariant::DropTail, QueueVariant::FavourQueueNoPushOut,
                QueueVariant::FavourQueuePushOut};
    }
    std::vector<QueueVariant> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(variant_or_throw(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

ExperimentOptions options_of(const Common& c) {
    ExperimentOptions o;
    o.out = c.out;
    o.jobs = c.jobs;
    o.dump_workload = c.dump_workload;
    o.log = &std::cerr;
    return o;
}

const std::vector<QueueVariant> kPair = {QueueVariant::DropTail, QueueVariant::FavourQueuePushOut};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FavourQueue simulator"};
    app.require_subcommand(1);

    Common sweep_c, pers_c, qsize_c, iw_c, fit_c;
    std::string qsizes;
    auto* sweep = app.add_subcommand("sweep", "load sweep over variants and seeds");
    add_common(sweep, sweep_c);
    auto* pers = app.add_subcommand("persistent", "short flows plus persistent flows");
    add_common(pers, pers_c);
    auto* qsize = app.add_subcommand("qsize", "load sweep for several buffer sizes");
    add_common(qsize, qsize_c);
    qsize->add_option("--sizes", qsizes, "comma-separated buffer sizes");
    auto* iw10 = app.add_subcommand("iw10", "initial window 2 vs 10");
    add_common(iw10, iw_c);

    auto* fit = app.add_subcommand("fit", "fit the favour model to an empirical curve");
    std::string curve_path, results_dir, fit_variant = "favour-pushout", fit_out;
    double fit_rho = -1;
    std::int64_t s1_max = 64, s2_max = 1000;
    double plateau = 0.70;
    fit->add_option("--curve", curve_path, "CSV with size,probability");
    fit->add_option("--results", results_dir, "scenario directory of a sweep");
    fit->add_option("--variant", fit_variant, "variant to take from --results");
    fit->add_option("--rho", fit_rho, "load to take from --results");
    fit->add_option("--s1-max", s1_max);
    fit->add_option("--s2-max", s2_max);
    fit->add_option("--plateau", plateau);
    fit->add_option("--out", fit_out, "directory for fit.csv and model_curve.csv")->required();
    fit->add_option("--config", fit_c.config, "config for min flows per length");

    auto* agg = app.add_subcommand("aggregate", "rebuild aggregate and summary CSVs");
    std::string agg_dir;
    agg->add_option("dir", agg_dir, "scenario directory holding manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            const auto cfg = make_config(sweep_c);
            const auto r = run_sweep(cfg, variants_of(sweep_c.variant, kPair), options_of(sweep_c));
            std::cout << r.size() << " runs in " << (fs::path(sweep_c.out) / "sweep").string() << "\n";
        } else if (*pers) {
            const auto cfg = make_config(pers_c);
            const auto r = run_persistent_scenario(cfg, variants_of(pers_c.variant, kPair),
                                                   options_of(pers_c));
            std::cout << r.size() << " runs in " << (fs::path(pers_c.out) / "persistent").string() << "\n";
        } else if (*qsize) {
            auto cfg = make_config(qsize_c);
            if (!qsizes.empty()) {
                cfg.queue_sizes.clear();
                for (auto v : parse_u64_list(qsizes)) cfg.queue_sizes.push_back(v);
                cfg.validate();
            }
            const auto r = run_queue_size_sweep(cfg, variants_of(qsize_c.variant, kPair),
                                                options_of(qsize_c));
            std::cout << r.size() << " runs in " << (fs::path(qsize_c.out) / "qsize").string() << "\n";
        } else if (*iw10) {
            const auto cfg = make_config(iw_c);
            const auto r = run_iw10_preset(cfg, variants_of(iw_c.variant, kPair), options_of(iw_c));
            std::cout << r.size() << " runs in " << (fs::path(iw_c.out) / "iw10").string() << "\n";
        } else if (*fit) {
            const ExperimentConfig cfg =
                fit_c.config.empty() ? ExperimentConfig{} : load_config(fit_c.config);
            std::vector<CurvePoint> curve;
            if (!curve_path.empty()) {
                curve = read_curve_csv(curve_path);
            } else if (!results_dir.empty()) {
                const auto manifest = read_manifest(results_dir);
                if (!manifest) throw std::runtime_error("no manifest in " + results_dir);
                std::istringstream text(manifest->config_text);
                const auto run_cfg = parse_config(text);
                const auto variant = variant_or_throw(fit_variant);
                std::vector<FlowRecord> pooled;
                for (auto& r : load_runs(results_dir, *manifest, run_cfg.traffic.warmup)) {
                    if (r.run.cell.variant != variant) continue;
                    if (fit_rho >= 0 && std::abs(r.run.cell.rho - fit_rho) > 1e-9) continue;
                    pooled.insert(pooled.end(), r.flows.begin(), r.flows.end());
                }
                curve = favour_curve(pooled, cfg.fit_min_flows, cfg.fit_max_length);
                write_curve_csv(fs::path(fit_out) / "empirical_curve.csv", curve);
            } else {
                throw std::runtime_error("fit needs --curve or --results");
            }
            FavourModelParams init;
            init.plateau = plateau;
            FitOptions fo;
            fo.s1_max = s1_max;
            fo.s2_max = s2_max;
            const auto result = fit_model(curve, init, fo);
            write_fit(fit_out, curve, result);
            std::cout << "s1=" << result.params.s1 << " s2=" << result.params.s2
                      << " p_z1=" << format_double(result.params.p_z1)
                      << " rmse=" << format_double(result.rmse) << "\n";
        } else if (*agg) {
            const auto files = aggregate_scenario(agg_dir);
            std::cout << files.size() << " files written under " << agg_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "favq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
