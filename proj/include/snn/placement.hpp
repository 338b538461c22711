#pragma once

// Mapping of a network graph onto a board of chips made of neuro-cores.
//
// An axon (i, C) connects presynaptic neuron i to core C: it is an input axon
// of C and an output axon of the core holding i. A core stores the synapses
// of every neuron placed on it.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snn/graph.hpp"

namespace snn {

struct CoreBudget {
    std::size_t max_neurons_1comp = 1024;
    std::size_t max_neurons_2comp = 512; // any neuron with AHP on the core
    std::size_t synapse_memory = 40000;
    std::size_t input_axons = 4096;
    std::size_t output_axons_interchip = 2048;
    std::size_t output_axons_intrachip = 4096; // all destinations on the source chip
    std::size_t neuron_core_fanout = 512;       // distinct destination cores per neuron
    // Extra per-core neuron cap for densely connected layers; 0 disables it.
    std::size_t layer_neuron_cap = 0;

    /// Budget used for RelNet layers (128 neurons per core).
    static CoreBudget relnet();
    void validate() const;
};

struct BoardModel {
    std::size_t chips = 32;
    std::size_t cores_per_chip = 128;

    std::size_t cores() const noexcept { return chips * cores_per_chip; }
    void validate() const;
};

/// Contiguous neuron range [begin, end) of one population.
struct NeuronRange {
    PopId pop = 0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const noexcept { return end - begin; }
    friend bool operator==(const NeuronRange&, const NeuronRange&) = default;
};

/// Load a range would put on a core of its own.
struct CoreLoad {
    std::size_t neurons = 0;
    std::size_t synapses = 0;
    std::size_t input_axons = 0;
    bool has_ahp = false;
};

CoreLoad core_load(const NetworkGraph& graph, const NeuronRange& range);

/// Neuron cap of a core holding `load` under `budget`.
std::size_t neuron_cap(const CoreBudget& budget, bool has_ahp) noexcept;

/// Fewest equal-as-possible slices of `pop` such that each slice meets the
/// neuron cap, the synapse memory and the input-axon limit, and holds at most
/// `extra_cap` neurons when that is non-zero. Throws Unplaceable when a single
/// neuron already breaks a limit.
std::vector<NeuronRange> split_layer(const NetworkGraph& graph, PopId pop, const CoreBudget& budget,
                                     std::size_t extra_cap = 0);

// ---------------------------------------------------------------------------
// RelNet relays and g_theta grouping.

struct InstanceGroup {
    std::vector<PairIndex> instances;
    std::vector<int> sentences; // sorted; 0 is the question
};

struct GroupingParams {
    std::size_t cores_per_chip = 128;
    std::size_t first_layer_cores = 4; // cores of one g_theta first layer
    std::size_t relay_size = 200;      // neurons per relay layer (LSNN size)
    CoreBudget budget = CoreBudget::relnet();
};

/// Cores taken by a relay of `size` neurons whose every neuron reaches
/// `destination_cores` cores on its own chip.
std::size_t relay_cores(std::size_t size, std::size_t destination_cores, const CoreBudget& budget);

/// Cores a group needs on its chip: first layers plus one relay per sentence.
std::size_t group_cores(const InstanceGroup& group, const GroupingParams& params);

/// Partitions the instances (i, j), i <= j <= M, into square blocks of the
/// upper-triangular index grid (triangles on the diagonal). The side is the
/// largest one for which every block fits on one chip.
std::vector<InstanceGroup> group_gtheta_instances(int M, const GroupingParams& params);

/// Side length chosen by group_gtheta_instances.
int grouping_side(int M, const GroupingParams& params);

/// Relay populations are named relay_name(sentence, group); each reproduces
/// its LSNN one-to-one with one step of latency and feeds the first g_theta
/// layers of its group through the original shared blocks.
NetworkGraph insert_relays(const NetworkGraph& relnet, const std::vector<InstanceGroup>& groups);

/// Groups from the first-layer sizes of a RelNet graph, then insert_relays.
NetworkGraph insert_relays(const NetworkGraph& relnet, const CoreBudget& budget = CoreBudget::relnet(),
                           std::size_t cores_per_chip = 128);

NeuronParams relay_params(double b0);

// ---------------------------------------------------------------------------

enum class Strategy : std::uint8_t {
    // Populations fill cores in graph order; relays follow their LSNN.
    naive,
    // Relays share a chip with the first layers they feed; deeper g_theta
    // layers of an instance share one chip.
    optimized,
};

const char* to_string(Strategy s) noexcept;
Strategy strategy_from_string(std::string_view text);

struct PlacedSlice {
    NeuronRange range;
    std::uint32_t chip = 0;
    std::uint32_t core = 0; // index within the chip

    friend bool operator==(const PlacedSlice&, const PlacedSlice&) = default;
};

struct Placement {
    BoardModel board;
    Strategy strategy = Strategy::naive;
    std::vector<PlacedSlice> slices; // sorted by (chip, core)

    std::size_t cores_used() const noexcept { return slices.size(); }
    std::size_t chips_used() const;
    std::uint32_t global_core(const PlacedSlice& s) const noexcept
    {
        return static_cast<std::uint32_t>(s.chip * board.cores_per_chip + s.core);
    }
};

struct PlaceOptions {
    Strategy strategy = Strategy::optimized;
    CoreBudget budget{};
    BoardModel board{};
};

/// Throws Unplaceable when the board runs out of cores or a layer cannot be
/// split.
Placement place(const NetworkGraph& graph, const PlaceOptions& options);

// ---------------------------------------------------------------------------

/// Per-neuron destination cores and per-core totals derived from a graph and
/// a placement.
struct AxonTables {
    std::vector<std::uint32_t> core_of;                  // global neuron -> global core
    std::vector<std::vector<std::uint32_t>> destinations; // global neuron -> sorted cores
    struct Core {
        std::uint32_t chip = 0;
        std::uint32_t core = 0;
        std::size_t neurons = 0;
        std::size_t synapses = 0;
        std::size_t input_axons = 0;
        std::size_t output_axons = 0;
        std::size_t output_axons_offchip = 0; // axons to cores on other chips
        std::size_t max_fanout = 0;           // largest per-neuron destination count
        bool has_ahp = false;
        bool input_only = false;              // holds input sources only
    };
    std::vector<Core> cores; // indexed like Placement::slices

    /// Output axons of the cores holding `pop` that lead to populations with
    /// role `to`, per core.
    std::vector<std::size_t> output_axons_to(const NetworkGraph& graph, const Placement& placement,
                                             PopId pop, Role to) const;
};

/// Throws InvalidInput unless every neuron is placed exactly once on a core
/// of the board.
AxonTables axon_tables(const NetworkGraph& graph, const Placement& placement);

enum class Budget : std::uint8_t {
    neurons,
    synapse_memory,
    input_axons,
    output_axons,
    fanout,
};

const char* to_string(Budget b) noexcept;

struct Violation {
    Budget budget = Budget::neurons;
    std::uint32_t chip = 0;
    std::uint32_t core = 0;
    std::size_t value = 0; // measured (for fanout: the worst neuron)
    std::size_t limit = 0;
    std::string message;
};

/// One violation per core and exceeded budget; empty iff the placement is
/// legal.
std::vector<Violation> verify(const NetworkGraph& graph, const Placement& placement,
                              const CoreBudget& budget);
std::vector<Violation> verify(const NetworkGraph& graph, const Placement& placement,
                              const AxonTables& tables, const CoreBudget& budget);

struct PlacementSummary {
    std::size_t cores = 0;       // excluding input-only cores
    std::size_t input_cores = 0;
    std::size_t chips = 0;
    std::size_t neurons = 0;     // excluding input sources
    std::size_t relay_layers = 0;
};

PlacementSummary summarize(const NetworkGraph& graph, const Placement& placement,
                           const AxonTables& tables);

// ---------------------------------------------------------------------------
// Placement file: JSON with one record per slice plus a per-core summary.

void save_placement(const std::filesystem::path& path, const Placement& placement,
                    const NetworkGraph& graph, const std::string& config_hash);
Placement load_placement(const std::filesystem::path& path, const NetworkGraph& graph);

} // namespace snn
