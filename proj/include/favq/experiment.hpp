#pragma once

// Experiment orchestration: runs grids of simulations, persists per-flow CSVs
// under a fixed directory layout, keeps a JSON manifest for resuming, and
// builds the summary tables from the CSVs alone.
//
//   <out>/<scenario>[/<sub>]/<variant>/rho=<r>/seed=<s>/flows.csv
//
// `sub` separates presets that vary something other than the variant, e.g.
// `q=16` for the queue-size sweep or `iw=10` for the initial-window preset.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "favq/analytic_model.hpp"
#include "favq/config.hpp"
#include "favq/dumbbell.hpp"
#include "favq/metrics.hpp"

namespace favq {

namespace fs = std::filesystem;

struct RunCell {
    std::string sub;  // empty for plain sweeps
    QueueVariant variant = QueueVariant::DropTail;
    double rho = 0.0;
    std::uint64_t seed = 1;
    std::size_t queue_capacity = 8;
    int initial_window = 2;
    std::size_t persistent_flows = 0;

    /// Relative directory of the run below the scenario directory.
    fs::path relative_dir() const;
};

struct ExperimentOptions {
    fs::path out = "results";
    unsigned jobs = 1;
    bool dump_workload = false;
    /// Progress lines go here when set.
    std::ostream* log = nullptr;
};

struct CellResult {
    RunCell cell;
    fs::path flows_csv;  // relative to the scenario directory
    std::uint64_t events = 0;
    std::size_t flows = 0;
    bool reused = false;  // found in the manifest, not rerun
};

/// Workload for one cell. Forward flows and the reverse traffic depend only
/// on (traffic config, rho, seed), so every variant sees the same flows.
std::vector<FlowSpec> build_workload(const ExperimentConfig& cfg, const RunCell& cell);

/// Runs one cell in memory.
RunResult simulate_cell(const ExperimentConfig& cfg, const RunCell& cell);

/// Runs every cell not already recorded in <out>/<scenario>/manifest.json,
/// writes the CSVs and the manifest, then the aggregate tables. A manifest
/// written under a different config hash is discarded.
std::vector<CellResult> run_cells(const ExperimentConfig& cfg, const std::string& scenario,
                                  const std::vector<RunCell>& cells,
                                  const ExperimentOptions& options);

/// The load sweep: every variant x load x seed of the config.
std::vector<CellResult> run_sweep(const ExperimentConfig& cfg,
                                  const std::vector<QueueVariant>& variants,
                                  const ExperimentOptions& options,
                                  const std::string& scenario = "sweep");

/// Short flows with geometric sizes plus persistent flows, one run per
/// variant x seed.
std::vector<CellResult> run_persistent_scenario(const ExperimentConfig& cfg,
                                                const std::vector<QueueVariant>& variants,
                                                const ExperimentOptions& options);

/// One sweep per bottleneck capacity in cfg.queue_sizes.
std::vector<CellResult> run_queue_size_sweep(const ExperimentConfig& cfg,
                                             const std::vector<QueueVariant>& variants,
                                             const ExperimentOptions& options);

/// {variants} x {IW 2, IW 10} over the config loads and seeds.
std::vector<CellResult> run_iw10_preset(const ExperimentConfig& cfg,
                                        const std::vector<QueueVariant>& variants,
                                        const ExperimentOptions& options);

// ---------------------------------------------------------------------------
// Reading results back.

struct Manifest {
    std::string version;
    std::string config_hash;
    std::string config_text;
    std::string scenario;
    std::vector<CellResult> runs;
    /// Every file the scenario wrote, relative to its directory.
    std::vector<std::string> files;
};

std::optional<Manifest> read_manifest(const fs::path& scenario_dir);
void write_manifest(const fs::path& scenario_dir, const Manifest& manifest);

/// Flow records of one recorded run.
std::vector<FlowRecord> load_run(const fs::path& scenario_dir, const CellResult& run);

/// Rebuilds aggregate.csv at every level and the summary/ tables from the
/// CSVs listed in the manifest. Returns the files written, relative to the
/// scenario directory.
std::vector<std::string> aggregate_scenario(const fs::path& scenario_dir);

// ---------------------------------------------------------------------------
// Analysis helpers shared by the CLI and the acceptance suite.

/// Flow records of one run, kept per run so flows can be paired by id.
struct PooledRun {
    CellResult run;
    std::vector<FlowRecord> flows;
};
/// Every run of the manifest, warm-up filtered.
std::vector<PooledRun> load_runs(const fs::path& scenario_dir, const Manifest& manifest,
                                 double warmup);

/// Empirical P(Favor|S = L) over completed flows, one point per length that
/// has at least `min_flows` flows and L <= max_length.
std::vector<CurvePoint> favour_curve(const std::vector<FlowRecord>& flows, std::size_t min_flows,
                                     std::int64_t max_length);

/// Reads `size,probability` CSV (header required).
std::vector<CurvePoint> read_curve_csv(const fs::path& path);
void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve);

/// Writes fit.csv (params and RMSE) and model_curve.csv (size, empirical,
/// model) into `out_dir`.
void write_fit(const fs::path& out_dir, const std::vector<CurvePoint>& curve,
               const FitResult& fit);

/// Time-average of the short-flow count over [from, to).
double mean_flows_in_system(const std::vector<FlowRecord>& all_flows, double from, double to);

}  // namespace favq
