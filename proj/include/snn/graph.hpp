#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snn/neuron.hpp"

namespace snn {

using PopId = std::uint32_t;

enum class Role : std::uint8_t {
    input,
    recurrent,
    lsnn,
    gtheta,
    aggregation,
    fphi,
    readout,
    relay,
};

const char* to_string(Role role) noexcept;
Role role_from_string(std::string_view text);

enum class Pattern : std::uint8_t { dense, one_to_one, sparse };

const char* to_string(Pattern pattern) noexcept;
Pattern pattern_from_string(std::string_view text);

enum class SignConstraint : std::int8_t { none = 0, excitatory = 1, inhibitory = -1 };

/// Parameter block of a connection. Blocks are held by shared_ptr: every
/// connection carrying the same share tag points at the same block, so an
/// update is visible in all of them.
///
/// Dense and sparse blocks are stored row-major with rows = source neurons;
/// one-to-one blocks store one weight and delay per neuron.
struct WeightBlock {
    std::string share_tag;
    Pattern pattern = Pattern::dense;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> weights;
    std::vector<std::uint8_t> delays;
    std::vector<std::uint8_t> mask;          // sparse only, 1 = active
    std::vector<SignConstraint> row_signs;   // optional, one per source neuron
    bool frozen = false;

    static std::shared_ptr<WeightBlock> dense(std::string tag, std::size_t rows, std::size_t cols);
    static std::shared_ptr<WeightBlock> one_to_one(std::string tag, std::size_t size);
    static std::shared_ptr<WeightBlock> sparse(std::string tag, std::size_t rows, std::size_t cols);

    std::size_t index(std::size_t src, std::size_t dst) const noexcept { return src * cols + dst; }
    bool active(std::size_t src, std::size_t dst) const noexcept;
    std::size_t parameter_count() const noexcept { return weights.size(); }
    std::size_t synapse_count() const noexcept;
    std::uint8_t max_delay() const noexcept;
    SignConstraint sign_of_row(std::size_t src) const noexcept
    {
        return row_signs.empty() ? SignConstraint::none : row_signs[src];
    }
    void validate() const;
};

struct PairIndex {
    int i = 0;
    int j = 0;
    friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

struct PopulationSpec {
    std::string name;
    std::size_t size = 0;
    NeuronParams params;
    // Sorted neuron indices carrying AHP currents when params.kind is
    // lif_ahp; empty optional means every neuron has AHP.
    std::optional<std::vector<std::uint32_t>> ahp_subset;
    Role role = Role::recurrent;
    int layer = 0;         // 1-based layer index inside g_theta / f_phi
    PairIndex pair{};      // g_theta instance (1-based sentence indices)
    int sentence = -1;     // lsnn / relay / word input: 0 = question, 1..M sentences
    int relay_group = -1;  // relay: index of the chip group it feeds

    bool is_input() const noexcept { return params.kind == NeuronKind::input_source; }
    bool is_readout() const noexcept { return params.kind == NeuronKind::readout; }
    bool has_ahp(std::size_t neuron) const noexcept;
    std::size_t ahp_count() const noexcept;
    NeuronParams params_of(std::size_t neuron) const;
};

struct ConnectionSpec {
    PopId src = 0;
    PopId dst = 0;
    std::shared_ptr<WeightBlock> block;
};

class NetworkGraph {
public:
    PopId add_population(PopulationSpec spec);
    std::size_t connect(PopId src, PopId dst, std::shared_ptr<WeightBlock> block);

    std::size_t population_count() const noexcept { return populations_.size(); }
    const std::vector<PopulationSpec>& populations() const noexcept { return populations_; }
    const std::vector<ConnectionSpec>& connections() const noexcept { return connections_; }
    const PopulationSpec& population(PopId id) const { return populations_.at(id); }
    PopulationSpec& population(PopId id) { return populations_.at(id); }
    const ConnectionSpec& connection(std::size_t index) const { return connections_.at(index); }

    std::optional<PopId> find(std::string_view name) const;
    PopId require(std::string_view name) const;

    const std::vector<std::size_t>& incoming(PopId id) const { return incoming_.at(id); }
    const std::vector<std::size_t>& outgoing(PopId id) const { return outgoing_.at(id); }

    /// Distinct parameter blocks in order of first use.
    std::vector<std::shared_ptr<WeightBlock>> blocks() const;

    std::size_t neuron_offset(PopId id) const { return offsets_.at(id); }
    std::size_t total_neurons() const noexcept { return total_neurons_; }
    std::uint8_t max_delay() const noexcept;

    std::map<std::string, std::string>& metadata() noexcept { return metadata_; }
    const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

    /// Throws InvalidInput on dangling ids, shape mismatches or bad params.
    void validate() const;

    /// Content hash over structure, parameters and weights.
    std::uint64_t hash() const;

private:
    std::vector<PopulationSpec> populations_;
    std::vector<ConnectionSpec> connections_;
    std::vector<std::vector<std::size_t>> incoming_;
    std::vector<std::vector<std::size_t>> outgoing_;
    std::vector<std::size_t> offsets_;
    std::size_t total_neurons_ = 0;
    std::map<std::string, std::string> metadata_;
};

struct Subgraph {
    NetworkGraph graph;
    std::vector<PopId> to_original;
    std::vector<std::optional<PopId>> from_original;
};

/// Copies the populations in `keep` (original order). Populations in
/// `as_inputs` become input sources and lose their incoming connections.
/// Weight blocks stay shared with the original graph.
Subgraph extract_subgraph(const NetworkGraph& graph, std::span<const PopId> keep,
                          std::span<const PopId> as_inputs = {});

struct PopulationCount {
    PopId id = 0;
    std::string name;
    Role role = Role::recurrent;
    std::size_t neurons = 0;
    std::size_t synapses_in = 0;
};

struct ResourceCount {
    std::size_t neurons = 0;        // excludes input sources
    std::size_t input_neurons = 0;
    std::size_t synapses = 0;
    std::vector<PopulationCount> per_population;
};

ResourceCount count_resources(const NetworkGraph& graph);

} // namespace snn
