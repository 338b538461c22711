#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "snn/graph.hpp"
#include "snn/raster.hpp"

namespace snn {

enum class NumericMode : std::uint8_t { real, integer };

const char* to_string(NumericMode mode) noexcept;
NumericMode numeric_mode_from_string(std::string_view text);

struct SimOptions {
    NumericMode mode = NumericMode::real;
    unsigned threads = 1;
    // (population, neuron) pairs whose membrane voltage is recorded each step.
    std::vector<std::pair<PopId, std::uint32_t>> trace;
    bool trace_all = false;
};

struct SimResult {
    Raster raster;
    // Final membrane voltage of every readout neuron, keyed by population.
    std::map<PopId, std::vector<double>> readout;
};

using InputMap = std::map<PopId, SpikeMatrix>;

/// Runs `steps` synchronous updates. A spike emitted at step t over a synapse
/// with delay d enters the PSC update that produces step t + d + 1. Every input
/// population must be covered by `inputs` for all steps.
SimResult simulate(const NetworkGraph& graph, const InputMap& inputs, std::size_t steps,
                   const SimOptions& options = {});

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(const std::vector<double>& values);

std::vector<double> softmax(const std::vector<double>& logits);

/// Predicted digit of an sMNIST network: argmax of the readout voltages at
/// the last step.
std::size_t classify_smnist(const NetworkGraph& graph, const SpikeMatrix& encoded,
                            const SimOptions& options = {});

struct Story {
    std::vector<std::vector<std::uint32_t>> sentences;
    std::vector<std::uint32_t> question;
    std::uint32_t answer = 0;
};

struct RelNetAnswer {
    std::uint32_t word = 0;
    std::vector<double> probabilities;
    std::vector<double> logits;
    std::size_t instances = 0;
    Raster ff_raster;                 // feed-forward phase of the subgraph below
    std::vector<PopId> ff_to_graph;   // subgraph population -> graph population
    std::vector<SpikeMatrix> embeddings; // question first, then sentences
};

struct RelNetRunOptions {
    SimOptions sim;
    double readout_scale = 0.0; // 0 selects 1 / T_readout
    bool reversed_words = true;
};

/// Staged RelNet inference: each LSNN runs on its encoded sentence, the last
/// T_inp steps are replayed as embeddings into the feed-forward network for
/// T_sim steps, and the scaled readout voltages feed a softmax.
RelNetAnswer answer_relnet(const NetworkGraph& graph, const Story& story,
                           const RelNetRunOptions& options = {});

/// Embedding of one sentence through one LSNN population of the graph.
SpikeMatrix relnet_embedding(const NetworkGraph& graph, int sentence,
                             const std::vector<std::uint32_t>& words, const SimOptions& sim,
                             bool reversed_words = true);

/// Feed-forward subgraph for a story of `sentences` sentences: LSNNs become
/// inputs and only instances over existing sentences are kept.
Subgraph relnet_feedforward(const NetworkGraph& graph, int sentences);

struct SpikeMetrics {
    std::vector<std::vector<std::size_t>> counts; // per population, per neuron
    std::vector<std::vector<double>> rates_hz;
    std::map<Role, double> spikes_per_neuron;     // non-input populations only
    double mean_spikes_per_neuron = 0.0;          // over all non-input neurons
};

SpikeMetrics metrics(const Raster& raster, const NetworkGraph& graph);

} // namespace snn
