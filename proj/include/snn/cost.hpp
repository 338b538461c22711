#pragma once

// Spike-traffic accounting over a placement, and a parametric latency and
// energy model. Coefficient defaults are placeholders, not measured data.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snn/builders.hpp"
#include "snn/placement.hpp"
#include "snn/raster.hpp"
#include "snn/simulator.hpp"

namespace snn {

struct TrafficStats {
    std::uint64_t intra_core = 0;
    std::uint64_t intra_chip = 0; // core to core on one chip
    std::uint64_t inter_chip = 0;
    std::vector<std::uint64_t> inter_chip_per_step;

    std::uint64_t total() const noexcept { return intra_core + intra_chip + inter_chip; }
    std::uint64_t peak_inter_chip() const noexcept;
    std::size_t steps() const noexcept { return inter_chip_per_step.size(); }

    /// Appends the steps of `other` after those of this run.
    void append(const TrafficStats& other);
    friend bool operator==(const TrafficStats&, const TrafficStats&) = default;
};

struct CostModel {
    double e_intra_core = 2e-11;  // J per delivery
    double e_intra_chip = 5e-11;  // J per delivery
    double e_inter_chip = 5e-10;  // J per delivery
    double e_neuron_update = 1e-12; // J per neuron-step
    double p_static = 1.0;        // W
    double step_time_base = 1e-5; // s per step
    double congestion_coeff = 1e-8; // s per inter-chip delivery above the threshold
    double congestion_threshold = 0.0; // inter-chip deliveries per step

    void validate() const;
};

/// Each spike counts one delivery per output axon of its neuron. Steps are
/// split across `threads` workers; the result does not depend on it.
TrafficStats account_traffic(const Placement& placement, const Raster& raster, const NetworkGraph& graph,
                             unsigned threads = 1);
TrafficStats account_traffic(const AxonTables& tables, const Raster& raster, const NetworkGraph& graph,
                             std::uint32_t cores_per_chip, unsigned threads = 1);

/// steps * step_time_base + congestion_coeff * sum over steps of the
/// inter-chip deliveries above the threshold.
double estimate_latency(const TrafficStats& traffic, const CostModel& model, std::size_t steps);

struct Energy {
    double static_energy = 0.0;
    double dynamic_energy = 0.0;
    double total() const noexcept { return static_energy + dynamic_energy; }
};

Energy estimate_energy(const TrafficStats& traffic, const CostModel& model, std::size_t steps,
                       std::size_t neuron_count, double latency);

double edp(double energy, double latency) noexcept;

// ---------------------------------------------------------------------------

struct StrategyCost {
    std::size_t cores = 0;
    std::size_t chips = 0;
    TrafficStats traffic;
    double latency = 0.0;
    Energy energy;
    double edp = 0.0;
};

StrategyCost evaluate_cost(const NetworkGraph& graph, const Placement& placement, const AxonTables& tables,
                           const std::vector<Raster>& rasters, const CostModel& model, unsigned threads = 1);

struct ComparisonRow {
    std::string label;
    int M = 0;
    std::size_t neurons = 0;
    std::size_t samples = 0;
    std::size_t steps = 0; // per sample
    StrategyCost naive;
    StrategyCost optimized;

    // optimized / naive; 1 when both are zero.
    double inter_chip_ratio() const noexcept;
    double latency_ratio() const noexcept;
    double energy_ratio() const noexcept;
    double edp_ratio() const noexcept;
};

ComparisonRow compare_placements(const NetworkGraph& graph, const Placement& naive, const Placement& optimized,
                                 const std::vector<Raster>& rasters, const CostModel& model,
                                 unsigned threads = 1);

struct BenchConfig {
    std::vector<int> Ms{2, 6, 10, 16, 20};
    RelNetConfig relnet{}; // M is overridden per row
    std::uint64_t seed = 1;
    std::size_t samples = 1;
    double word_fill = 1.0; // fraction of word slots used per sentence
    unsigned threads = 1;
    CostModel model{};
    CoreBudget budget = CoreBudget::relnet();
    BoardModel board{};
};

/// Random word inputs for every sentence of a RelNet graph, active for the
/// first T_word * N_words steps of `steps`.
InputMap random_relnet_inputs(const NetworkGraph& graph, const RelNetConfig& config, double word_fill,
                              std::size_t steps, Rng& rng);

/// Per M: RelNet with relays, naive and optimized placement, the same
/// simulated rasters accounted under both.
std::vector<ComparisonRow> compare_strategies(const BenchConfig& config);

void write_report_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, const std::string& config_hash);
void write_report_json(std::ostream& out, const std::vector<ComparisonRow>& rows, const CostModel& model,
                       const std::string& config_hash);
/// Whitespace-separated columns for external plotting, one line per row.
void write_plot_data(std::ostream& out, const std::vector<ComparisonRow>& rows);

} // namespace snn
