#include "favq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef FAVQ_VERSION
#define FAVQ_VERSION "unknown"
#endif

namespace favq {

using nlohmann::json;

fs::path RunCell::relative_dir() const {
    fs::path p;
    if (!sub.empty()) p /= sub;
    p /= std::string(variant_name(variant));
    if (persistent_flows == 0) p /= "rho=" + format_double(rho);
    p /= "seed=" + std::to_string(seed);
    return p;
}

namespace {

std::string cell_key(const RunCell& c) { return c.relative_dir().generic_string(); }

// Hash of everything that changes a single run's output. The grid lists are
// left out so extending a sweep reuses the runs already on disk.
std::string physics_hash(ExperimentConfig cfg) {
    cfg.loads = {0.5};
    cfg.seeds = {1};
    cfg.queue_sizes = {1};
    cfg.fit_min_flows = 0;
    cfg.fit_max_length = 0;
    return config_hash(cfg);
}

json cell_to_json(const CellResult& r) {
    return json{{"sub", r.cell.sub},
                {"variant", std::string(variant_name(r.cell.variant))},
                {"rho", r.cell.rho},
                {"seed", r.cell.seed},
                {"queue_capacity", r.cell.queue_capacity},
                {"initial_window", r.cell.initial_window},
                {"persistent_flows", r.cell.persistent_flows},
                {"flows_csv", r.flows_csv.generic_string()},
                {"events", r.events},
                {"flows", r.flows}};
}

CellResult cell_from_json(const json& j) {
    CellResult r;
    r.cell.sub = j.at("sub").get<std::string>();
    const auto name = j.at("variant").get<std::string>();
    const auto variant = parse_variant(name);
    if (!variant) throw std::runtime_error("manifest: unknown variant " + name);
    r.cell.variant = *variant;
    r.cell.rho = j.at("rho").get<double>();
    r.cell.seed = j.at("seed").get<std::uint64_t>();
    r.cell.queue_capacity = j.at("queue_capacity").get<std::size_t>();
    r.cell.initial_window = j.at("initial_window").get<int>();
    r.cell.persistent_flows = j.at("persistent_flows").get<std::size_t>();
    r.flows_csv = j.at("flows_csv").get<std::string>();
    r.events = j.at("events").get<std::uint64_t>();
    r.flows = j.at("flows").get<std::size_t>();
    r.reused = true;
    return r;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

void write_workload_csv(const fs::path& path, const std::vector<FlowSpec>& flows) {
    std::ostringstream out;
    out << "flow_id,arrival_time,size,rtt_class,direction,initial_window,persistent\n";
    for (const auto& f : flows) {
        out << f.flow_id << ',' << format_double(f.arrival_time) << ',' << f.size << ','
            << f.rtt_class << ',' << (f.direction == Direction::Forward ? "forward" : "reverse")
            << ',' << f.initial_window << ',' << (f.persistent ? 1 : 0) << '\n';
    }
    write_text_atomic(path, out.str());
}

void write_persistent_csv(const fs::path& path, const std::vector<PersistentFlowStats>& stats) {
    std::ostringstream out;
    out << "flow_id,rtt_class,acked_packets,active_time,normalized_throughput\n";
    for (const auto& s : stats) {
        out << s.flow_id << ',' << s.rtt_class << ',' << s.acked_packets << ','
            << format_double(s.active_time) << ',' << format_double(s.normalized_throughput)
            << '\n';
    }
    write_text_atomic(path, out.str());
}

std::vector<PersistentFlowStats> read_persistent_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<PersistentFlowStats> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[5];
        for (auto& x : f) std::getline(ss, x, ',');
        PersistentFlowStats s;
        s.flow_id = static_cast<FlowId>(std::stoul(f[0]));
        s.rtt_class = static_cast<std::uint32_t>(std::stoul(f[1]));
        s.acked_packets = std::stoll(f[2]);
        s.active_time = std::stod(f[3]);
        s.normalized_throughput = std::stod(f[4]);
        out.push_back(s);
    }
    return out;
}

std::string manifest_text(const Manifest& m) {
    json runs = json::array();
    for (const auto& r : m.runs) runs.push_back(cell_to_json(r));
    json j{{"version", m.version},     {"config_hash", m.config_hash},
           {"scenario", m.scenario},   {"config", m.config_text},
           {"runs", runs},             {"files", m.files}};
    return j.dump(2) + "\n";
}

void log_line(const ExperimentOptions& o, const std::string& s) {
    static std::mutex m;
    if (!o.log) return;
    std::lock_guard<std::mutex> lock(m);
    *o.log << s << std::endl;
}

}  // namespace

std::optional<Manifest> read_manifest(const fs::path& scenario_dir) {
    const fs::path path = scenario_dir / "manifest.json";
    std::ifstream in(path);
    if (!in) return std::nullopt;
    const json j = json::parse(in);
    Manifest m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.scenario = j.at("scenario").get<std::string>();
    for (const auto& r : j.at("runs")) m.runs.push_back(cell_from_json(r));
    m.files = j.at("files").get<std::vector<std::string>>();
    return m;
}

void write_manifest(const fs::path& scenario_dir, const Manifest& manifest) {
    write_text_atomic(scenario_dir / "manifest.json", manifest_text(manifest));
}

std::vector<FlowSpec> build_workload(const ExperimentConfig& cfg, const RunCell& cell) {
    TrafficConfig traffic = cfg.traffic;
    traffic.load = cell.rho;
    traffic.initial_window = cell.initial_window;
    if (cell.persistent_flows > 0) {
        traffic.size_distribution = SizeDistribution::Geometric;
        traffic.mean_flow_size = cfg.persistent_short_mean;
    }
    auto flows = generate_workload(traffic, cfg.topology, cell.seed);
    if (cell.persistent_flows > 0) {
        add_persistent_flows(flows, cell.persistent_flows, cfg.persistent_start, cfg.topology,
                             cell.initial_window, cell.seed);
    }
    return flows;
}

RunResult simulate_cell(const ExperimentConfig& cfg, const RunCell& cell) {
    TopologyConfig topo = cfg.topology;
    topo.queue_capacity = cell.queue_capacity;
    RunOptions opts;
    opts.variant = cell.variant;
    opts.tcp = cfg.tcp;
    opts.duration = cfg.traffic.duration;
    opts.load = cell.rho;
    return run_dumbbell(topo, build_workload(cfg, cell), opts);
}

std::vector<CellResult> run_cells(const ExperimentConfig& cfg, const std::string& scenario,
                                  const std::vector<RunCell>& cells,
                                  const ExperimentOptions& options) {
    cfg.validate();
    const fs::path dir = options.out / scenario;
    fs::create_directories(dir);

    Manifest manifest;
    manifest.version = FAVQ_VERSION;
    manifest.config_hash = physics_hash(cfg);
    manifest.config_text = canonical_config(cfg);
    manifest.scenario = scenario;
    std::map<std::string, CellResult> done;
    if (auto old = read_manifest(dir); old && old->config_hash == manifest.config_hash) {
        for (auto& r : old->runs) {
            if (fs::exists(dir / r.flows_csv)) done.emplace(cell_key(r.cell), r);
        }
    } else if (old) {
        log_line(options, "config changed since the last run in " + dir.string() +
                              "; starting over");
    }

    std::vector<CellResult> results(cells.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (auto it = done.find(cell_key(cells[i])); it != done.end()) {
            results[i] = it->second;
            results[i].cell = cells[i];
        } else {
            todo.push_back(i);
        }
    }

    std::mutex manifest_mutex;
    auto save_manifest = [&] {
        Manifest m = manifest;
        std::set<std::string> files;
        for (const auto& [k, r] : done) {
            m.runs.push_back(r);
            files.insert(r.flows_csv.generic_string());
            const fs::path rel = r.flows_csv.parent_path();
            if (r.cell.persistent_flows > 0) files.insert((rel / "persistent.csv").generic_string());
            if (fs::exists(dir / rel / "workload.csv")) {
                files.insert((rel / "workload.csv").generic_string());
            }
        }
        m.files.assign(files.begin(), files.end());
        write_manifest(dir, m);
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= todo.size()) return;
            const RunCell& cell = cells[todo[k]];
            try {
                const fs::path rel = cell.relative_dir();
                fs::create_directories(dir / rel);
                if (options.dump_workload) {
                    write_workload_csv(dir / rel / "workload.csv", build_workload(cfg, cell));
                }
                const RunResult rr = simulate_cell(cfg, cell);
                std::ostringstream csv;
                write_flow_csv(csv, rr.flows);
                write_text_atomic(dir / rel / "flows.csv", csv.str());
                if (cell.persistent_flows > 0) {
                    write_persistent_csv(dir / rel / "persistent.csv", rr.persistent);
                }
                CellResult res{cell, rel / "flows.csv", rr.events_processed, rr.flows.size(), false};
                results[todo[k]] = res;
                std::lock_guard<std::mutex> lock(manifest_mutex);
                done[cell_key(cell)] = res;
                save_manifest();
                log_line(options, scenario + "/" + rel.generic_string() + ": " +
                                      std::to_string(rr.flows.size()) + " flows, " +
                                      std::to_string(rr.events_processed) + " events");
            } catch (...) {
                std::lock_guard<std::mutex> lock(manifest_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(todo.size())));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    {
        std::lock_guard<std::mutex> lock(manifest_mutex);
        save_manifest();
    }
    aggregate_scenario(dir);
    return results;
}

std::vector<CellResult> run_sweep(const ExperimentConfig& cfg,
                                  const std::vector<QueueVariant>& variants,
                                  const ExperimentOptions& options, const std::string& scenario) {
    std::vector<RunCell> cells;
    for (auto v : variants) {
        for (double rho : cfg.loads) {
            for (auto seed : cfg.seeds) {
                RunCell c;
                c.variant = v;
                c.rho = rho;
                c.seed = seed;
                c.queue_capacity = cfg.topology.queue_capacity;
                c.initial_window = cfg.traffic.initial_window;
                cells.push_back(c);
            }
        }
    }
    return run_cells(cfg, scenario, cells, options);
}

std::vector<CellResult> run_persistent_scenario(const ExperimentConfig& cfg,
                                                const std::vector<QueueVariant>& variants,
                                                const ExperimentOptions& options) {
    std::vector<RunCell> cells;
    for (auto v : variants) {
        for (auto seed : cfg.seeds) {
            RunCell c;
            c.variant = v;
            c.rho = cfg.persistent_short_load;
            c.seed = seed;
            c.queue_capacity = cfg.topology.queue_capacity;
            c.initial_window = cfg.traffic.initial_window;
            c.persistent_flows = cfg.persistent_flows;
            if (c.persistent_flows == 0) c.sub = "no-persistent";
            cells.push_back(c);
        }
    }
    return run_cells(cfg, "persistent", cells, options);
}

std::vector<CellResult> run_queue_size_sweep(const ExperimentConfig& cfg,
                                             const std::vector<QueueVariant>& variants,
                                             const ExperimentOptions& options) {
    std::vector<RunCell> cells;
    for (auto q : cfg.queue_sizes) {
        for (auto v : variants) {
            for (double rho : cfg.loads) {
                for (auto seed : cfg.seeds) {
                    RunCell c;
                    c.sub = "q=" + std::to_string(q);
                    c.variant = v;
                    c.rho = rho;
                    c.seed = seed;
                    c.queue_capacity = q;
                    c.initial_window = cfg.traffic.initial_window;
                    cells.push_back(c);
                }
            }
        }
    }
    return run_cells(cfg, "qsize", cells, options);
}

std::vector<CellResult> run_iw10_preset(const ExperimentConfig& cfg,
                                        const std::vector<QueueVariant>& variants,
                                        const ExperimentOptions& options) {
    std::vector<RunCell> cells;
    for (int iw : {2, 10}) {
        for (auto v : variants) {
            for (double rho : cfg.loads) {
                for (auto seed : cfg.seeds) {
                    RunCell c;
                    c.sub = "iw=" + std::to_string(iw);
                    c.variant = v;
                    c.rho = rho;
                    c.seed = seed;
                    c.queue_capacity = cfg.topology.queue_capacity;
                    c.initial_window = iw;
                    cells.push_back(c);
                }
            }
        }
    }
    return run_cells(cfg, "iw10", cells, options);
}

std::vector<FlowRecord> load_run(const fs::path& scenario_dir, const CellResult& run) {
    return read_flow_csv((scenario_dir / run.flows_csv).string());
}

std::vector<PooledRun> load_runs(const fs::path& scenario_dir, const Manifest& manifest,
                                 double warmup) {
    std::vector<PooledRun> out;
    for (const auto& r : manifest.runs) {
        out.push_back({r, measured_flows(load_run(scenario_dir, r), warmup)});
    }
    return out;
}

std::vector<CurvePoint> favour_curve(const std::vector<FlowRecord>& flows, std::size_t min_flows,
                                     std::int64_t max_length) {
    std::map<std::int64_t, std::vector<FlowRecord>> by_length;
    for (const auto& f : flows) {
        if (f.completed && f.length <= max_length) by_length[f.length].push_back(f);
    }
    std::vector<CurvePoint> out;
    for (const auto& [len, fl] : by_length) {
        if (fl.size() < min_flows) continue;
        if (auto p = favour_probability(fl)) out.push_back({len, *p});
    }
    return out;
}

std::vector<CurvePoint> read_curve_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    std::vector<CurvePoint> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected size,probability");
        }
        try {
            out.push_back({std::stoll(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out << "size,probability\n";
    for (const auto& p : curve) out << p.size << ',' << format_double(p.probability) << '\n';
    write_text_atomic(path, out.str());
}

void write_fit(const fs::path& out_dir, const std::vector<CurvePoint>& curve, const FitResult& fit) {
    std::ostringstream f;
    f << "s1,s2,p_z1,plateau,rmse,points\n"
      << fit.params.s1 << ',' << fit.params.s2 << ',' << format_double(fit.params.p_z1) << ','
      << format_double(fit.params.plateau) << ',' << format_double(fit.rmse) << ',' << curve.size()
      << '\n';
    write_text_atomic(out_dir / "fit.csv", f.str());
    std::ostringstream m;
    m << "size,empirical,model\n";
    for (const auto& p : curve) {
        m << p.size << ',' << format_double(p.probability) << ','
          << format_double(favour_prob(p.size, fit.params)) << '\n';
    }
    write_text_atomic(out_dir / "model_curve.csv", m.str());
}

double mean_flows_in_system(const std::vector<FlowRecord>& all_flows, double from, double to) {
    const auto series = flows_in_system(all_flows);
    return time_average(series, from, to);
}

// ---------------------------------------------------------------------------
// Aggregation.

namespace {

const char* kMetricHeader =
    "flows,completed,mean_latency,mean_goodput,drop_ratio,syn_loss,rto_ratio,"
    "rto_recovery_ratio,favour_probability,pushout_share,mean_queue_delay";

std::string metric_row(const std::vector<FlowRecord>& flows) {
    const auto done = completed_flows(flows);
    std::ostringstream out;
    out << flows.size() << ',' << done.size() << ',' << format_optional(mean_latency(done)) << ','
        << format_optional(mean_goodput(done)) << ',' << format_optional(drop_ratio(flows)) << ','
        << format_double(syn_loss_ratio(flows)) << ',' << format_optional(rto_ratio(flows)) << ','
        << format_optional(rto_recovery_ratio(flows)) << ','
        << format_optional(favour_probability(done)) << ','
        << format_optional(pushout_share(flows)) << ','
        << format_optional(mean_queue_delay(flows));
    return out.str();
}

void append(std::vector<FlowRecord>& to, const std::vector<FlowRecord>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

struct Table {
    std::ostringstream text;
    explicit Table(const std::string& header) { text << header << '\n'; }
};

// Log-spaced latency grid for the CCDF tables.
std::vector<double> ccdf_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 200; ++i) g.push_back(0.01 * std::pow(10.0, i / 50.0));
    return g;
}

std::vector<double> ccdf_at(std::vector<double> latencies, const std::vector<double>& grid) {
    std::sort(latencies.begin(), latencies.end());
    std::vector<double> out;
    for (double x : grid) {
        const auto above = latencies.end() - std::upper_bound(latencies.begin(), latencies.end(), x);
        out.push_back(latencies.empty() ? 0.0
                                        : static_cast<double>(above) / static_cast<double>(latencies.size()));
    }
    return out;
}

std::vector<double> latencies_of(const std::vector<FlowRecord>& flows) {
    std::vector<double> out;
    for (const auto& f : flows) {
        if (f.completed) out.push_back(f.latency);
    }
    return out;
}

}  // namespace

std::vector<std::string> aggregate_scenario(const fs::path& scenario_dir) {
    auto manifest = read_manifest(scenario_dir);
    if (!manifest) throw std::runtime_error("no manifest in " + scenario_dir.string());
    std::istringstream cfg_text(manifest->config_text);
    const ExperimentConfig cfg = parse_config(cfg_text);
    const double warmup = cfg.traffic.warmup;
    const double duration = cfg.traffic.duration;

    std::vector<std::string> written;
    auto emit = [&](const fs::path& rel, const std::string& text) {
        write_text_atomic(scenario_dir / rel, text);
        written.push_back(rel.generic_string());
    };

    // Per-run metrics, reused by every level.
    struct RunData {
        CellResult run;
        std::vector<FlowRecord> all;       // every forward flow
        std::vector<FlowRecord> measured;  // warm-up filtered
        std::string row;
    };
    std::vector<RunData> runs;
    for (const auto& r : manifest->runs) {
        RunData d{r, load_run(scenario_dir, r), {}, {}};
        d.measured = measured_flows(d.all, warmup);
        d.row = metric_row(d.measured);
        runs.push_back(std::move(d));
    }
    std::sort(runs.begin(), runs.end(), [](const RunData& a, const RunData& b) {
        const auto& x = a.run.cell;
        const auto& y = b.run.cell;
        return std::tie(x.sub, x.variant, x.rho, x.seed) < std::tie(y.sub, y.variant, y.rho, y.seed);
    });

    // aggregate.csv at each directory level above the runs.
    const std::string key_header = "sub,variant,rho,seed,";
    std::map<fs::path, std::ostringstream> levels;
    for (const auto& d : runs) {
        const auto& c = d.run.cell;
        const std::string line = c.sub + ',' + std::string(variant_name(c.variant)) + ',' +
                                 format_double(c.rho) + ',' + std::to_string(c.seed) + ',' + d.row +
                                 '\n';
        for (fs::path p = c.relative_dir().parent_path();; p = p.parent_path()) {
            auto& s = levels[p];
            if (s.tellp() == 0) s << key_header << kMetricHeader << '\n';
            s << line;
            if (p.empty()) break;
        }
    }
    for (auto& [p, s] : levels) emit(p / "aggregate.csv", s.str());

    // Pooled tables by (sub, variant) and (sub, variant, rho).
    using Group = std::pair<std::string, QueueVariant>;
    std::map<Group, std::vector<FlowRecord>> pooled;
    std::map<std::tuple<std::string, QueueVariant, double>, std::vector<FlowRecord>> pooled_load;
    std::map<std::tuple<std::string, QueueVariant, double>, std::vector<double>> seed_latency;
    for (const auto& d : runs) {
        const auto& c = d.run.cell;
        append(pooled[{c.sub, c.variant}], d.measured);
        append(pooled_load[{c.sub, c.variant, c.rho}], d.measured);
        if (auto m = mean_latency(completed_flows(d.measured))) {
            seed_latency[{c.sub, c.variant, c.rho}].push_back(*m);
        }
    }

    Table overall(std::string("sub,variant,") + kMetricHeader);
    for (const auto& [g, flows] : pooled) {
        overall.text << g.first << ',' << variant_name(g.second) << ',' << metric_row(flows) << '\n';
    }
    emit("summary/overall.csv", overall.text.str());

    Table by_load(std::string("sub,variant,rho,") + kMetricHeader + ",latency_seed_stddev");
    for (const auto& [k, flows] : pooled_load) {
        const auto& [sub, v, rho] = k;
        const auto& lat = seed_latency[k];
        double sd = 0.0;
        if (lat.size() > 1) {
            double mean = 0.0;
            for (double x : lat) mean += x;
            mean /= static_cast<double>(lat.size());
            for (double x : lat) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / static_cast<double>(lat.size() - 1));
        }
        by_load.text << sub << ',' << variant_name(v) << ',' << format_double(rho) << ','
                     << metric_row(flows) << ',' << format_double(sd) << '\n';
    }
    emit("summary/by_load.csv", by_load.text.str());

    Table by_length(std::string("sub,variant,length,") + kMetricHeader);
    for (const auto& [g, flows] : pooled) {
        std::map<std::int64_t, std::vector<FlowRecord>> buckets;
        for (const auto& f : flows) buckets[length_bucket(f.length)].push_back(f);
        for (const auto& [b, fl] : buckets) {
            by_length.text << g.first << ',' << variant_name(g.second) << ',' << b << ','
                           << metric_row(fl) << '\n';
        }
    }
    emit("summary/by_length.csv", by_length.text.str());

    // Latency CCDF per (sub, variant, rho) and pooled over loads.
    const auto grid = ccdf_grid();
    Table ccdf("sub,variant,rho,latency,ccdf");
    for (const auto& [k, flows] : pooled_load) {
        const auto& [sub, v, rho] = k;
        const auto vals = ccdf_at(latencies_of(flows), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ccdf.text << sub << ',' << variant_name(v) << ',' << format_double(rho) << ','
                      << format_double(grid[i]) << ',' << format_double(vals[i]) << '\n';
        }
    }
    for (const auto& [g, flows] : pooled) {
        const auto vals = ccdf_at(latencies_of(flows), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ccdf.text << g.first << ',' << variant_name(g.second) << ",all,"
                      << format_double(grid[i]) << ',' << format_double(vals[i]) << '\n';
        }
    }
    emit("summary/latency_ccdf.csv", ccdf.text.str());

    // Latency density in 100 ms bins up to 10 s.
    Table density("sub,variant,rho,bin_start,bin_end,mass");
    for (const auto& [k, flows] : pooled_load) {
        const auto& [sub, v, rho] = k;
        const auto done = completed_flows(flows);
        for (int i = 0; i < 100; ++i) {
            const double lo = 0.1 * i;
            const double hi = 0.1 * (i + 1);
            density.text << sub << ',' << variant_name(v) << ',' << format_double(rho) << ','
                         << format_double(lo) << ',' << format_double(hi) << ','
                         << format_double(latency_mass(done, lo, hi)) << '\n';
        }
    }
    emit("summary/latency_density.csv", density.text.str());

    // Paired comparison of each non-DropTail variant with DropTail.
    std::map<std::tuple<std::string, double, std::uint64_t>, const RunData*> droptail;
    for (const auto& d : runs) {
        if (d.run.cell.variant == QueueVariant::DropTail) {
            droptail[{d.run.cell.sub, d.run.cell.rho, d.run.cell.seed}] = &d;
        }
    }
    std::map<Group, std::vector<PairedFlowDelta>> pairs;
    std::map<std::tuple<std::string, QueueVariant, double>, std::vector<PairedFlowDelta>> pairs_load;
    for (const auto& d : runs) {
        const auto& c = d.run.cell;
        if (c.variant == QueueVariant::DropTail) continue;
        auto it = droptail.find({c.sub, c.rho, c.seed});
        if (it == droptail.end()) continue;
        auto p = pair_flows(it->second->measured, d.measured);
        auto& a = pairs[{c.sub, c.variant}];
        a.insert(a.end(), p.begin(), p.end());
        auto& b = pairs_load[{c.sub, c.variant, c.rho}];
        b.insert(b.end(), p.begin(), p.end());
    }
    if (!pairs.empty()) {
        Table gain_len("sub,variant,length,pairs,gain,p_improve,p_degrade,p_equal");
        Table gain_load("sub,variant,rho,pairs,gain,p_improve,p_degrade,p_equal");
        auto row = [](std::ostringstream& out, const std::vector<PairedFlowDelta>& p) {
            const auto ip = improvement_probability(p);
            out << p.size() << ',' << format_optional(latency_gain(p)) << ','
                << format_double(ip.improve) << ',' << format_double(ip.degrade) << ','
                << format_double(ip.equal) << '\n';
        };
        for (const auto& [g, p] : pairs) {
            std::map<std::int64_t, std::vector<PairedFlowDelta>> buckets;
            for (const auto& x : p) buckets[length_bucket(x.length)].push_back(x);
            for (const auto& [b, bp] : buckets) {
                gain_len.text << g.first << ',' << variant_name(g.second) << ',' << b << ',';
                row(gain_len.text, bp);
            }
            gain_load.text << g.first << ',' << variant_name(g.second) << ",all,";
            row(gain_load.text, p);
        }
        for (const auto& [k, p] : pairs_load) {
            const auto& [sub, v, rho] = k;
            gain_load.text << sub << ',' << variant_name(v) << ',' << format_double(rho) << ',';
            row(gain_load.text, p);
        }
        emit("summary/gain_by_length.csv", gain_len.text.str());
        emit("summary/gain_by_load.csv", gain_load.text.str());
    }

    // Flows in the system, time-averaged after the warm-up.
    Table fis("sub,variant,rho,seed,mean_flows_in_system");
    for (const auto& d : runs) {
        const auto& c = d.run.cell;
        double from = warmup;
        if (c.persistent_flows > 0) from = 0.5 * (cfg.persistent_start + duration);
        fis.text << c.sub << ',' << variant_name(c.variant) << ',' << format_double(c.rho) << ','
                 << c.seed << ',' << format_double(mean_flows_in_system(d.all, from, duration))
                 << '\n';
    }
    emit("summary/flows_in_system.csv", fis.text.str());

    // Persistent-flow throughput.
    bool any_persistent = false;
    Table pers("sub,variant,seed,persistent_flows,mean_normalized_throughput,throughput_variance,"
               "short_flows_in_system");
    for (const auto& d : runs) {
        const auto& c = d.run.cell;
        if (c.persistent_flows == 0) continue;
        any_persistent = true;
        const auto stats =
            read_persistent_csv(scenario_dir / d.run.flows_csv.parent_path() / "persistent.csv");
        double mean = 0.0;
        for (const auto& s : stats) mean += s.normalized_throughput;
        if (!stats.empty()) mean /= static_cast<double>(stats.size());
        double var = 0.0;
        for (const auto& s : stats) var += (s.normalized_throughput - mean) * (s.normalized_throughput - mean);
        if (stats.size() > 1) var /= static_cast<double>(stats.size() - 1);
        const double from = 0.5 * (cfg.persistent_start + duration);
        pers.text << c.sub << ',' << variant_name(c.variant) << ',' << c.seed << ',' << stats.size()
                  << ',' << format_double(mean) << ',' << format_double(var) << ','
                  << format_double(mean_flows_in_system(d.all, from, duration)) << '\n';
    }
    if (any_persistent) emit("summary/persistent.csv", pers.text.str());

    // Short-flow count on a 1 s grid, for plotting the persistent runs.
    Table series("sub,variant,rho,seed,time,flows_in_system");
    for (const auto& d : runs) {
        if (d.run.cell.persistent_flows == 0) continue;
        const auto& c = d.run.cell;
        const auto s = flows_in_system(d.all);
        std::size_t j = 0;
        std::int64_t current = 0;
        for (int t = 0; t <= static_cast<int>(duration); ++t) {
            while (j < s.size() && s[j].time <= t) current = s[j++].count;
            series.text << c.sub << ',' << variant_name(c.variant) << ',' << format_double(c.rho)
                        << ',' << c.seed << ',' << t << ',' << current << '\n';
        }
    }
    if (any_persistent) emit("summary/flows_in_system_series.csv", series.text.str());

    // Record the outputs in the manifest too.
    std::set<std::string> files(manifest->files.begin(), manifest->files.end());
    files.insert(written.begin(), written.end());
    manifest->files.assign(files.begin(), files.end());
    write_manifest(scenario_dir, *manifest);
    return written;
}

}  // namespace favq
