#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snn/graph.hpp"
#include "snn/random.hpp"

namespace snn {

struct LsnnConfig {
    std::size_t size = 200;
    double ahp_fraction = 0.5;
    int delay_min = 1;
    int delay_max = 3;
    bool self_connections = true;
    NeuronParams params = NeuronParams::lif_ahp(20.0, 5.0, 200.0, 48.0, 127.0, 0);
    double weight_gain = 1.0;
};

/// Single recurrent LSNN population with all-to-all recurrent synapses.
NetworkGraph build_lsnn(const LsnnConfig& config, std::uint64_t seed);

struct SmnistConfig {
    std::size_t inputs = 80;
    std::size_t recurrent = 240;
    std::size_t excitatory = 180;
    std::size_t ahp_neurons = 100; // drawn from the excitatory neurons
    std::size_t outputs = 10;
    double density = 0.20;
    double beta = 96.0;
    double b0 = 127.0;
    double tau_v = 20.0;
    double tau_i = 5.0;
    double tau_ahp = 700.0;
    int refractory = 1;
    int delay = 1;
    double tau_readout = 7.0;
    int readout_window = 56;
    double input_gain = 0.08;
    double recurrent_gain = 0.05;
    double readout_gain = 0.1;
    // Inhibitory rows are scaled by excitatory / inhibitory so that the mean
    // recurrent input starts near zero.
    bool balance_inhibition = true;
    // The last input neuron (end marker) reaches every recurrent neuron with
    // this initial weight; 0 keeps its row sparse and Gaussian like the rest.
    double end_marker_weight = 5.0;
};

NetworkGraph build_smnist_network(const SmnistConfig& config, std::uint64_t seed);

struct RelNetConfig {
    int M = 20;
    std::size_t vocab = 180;
    std::size_t lsnn_size = 200;
    std::size_t lsnn_ahp = 100;
    std::vector<std::size_t> gtheta_layers{256, 256, 256, 256};
    std::size_t aggregation = 256;
    std::vector<std::size_t> fphi_layers{256, 512, 160};
    int T_word = 10;
    int N_words = 11;
    int T_inp = 14;
    int T_sim = 37;
    int T_readout = 10;
    double tau_readout = 7.0;
    int delay_min = 1;
    int delay_max = 3;
    bool lsnn_self_connections = true;
    NeuronParams lsnn_params = NeuronParams::lif_ahp(20.0, 5.0, 200.0, 48.0, 127.0, 0);
    NeuronParams ff_params = NeuronParams::lif(7.0, 5.0, 127.0, 0);
    double lsnn_input_gain = 1.0;
    double lsnn_recurrent_gain = 0.5;
    double gtheta_gain = 1.0;
    double ff_gain = 1.0;
    double aggregation_weight = 60.0;

    int instance_count() const noexcept { return M * (M + 1) / 2; }
    int lsnn_steps() const noexcept { return T_word * N_words; }
    void validate() const;
};

/// Full RelNet graph without relay layers. Populations are emitted in this
/// order: word inputs (question, then sentences), question LSNN, sentence
/// LSNNs, g_theta instances layer by layer per instance, aggregation, f_phi
/// layers, readout.
NetworkGraph build_relnet(const RelNetConfig& config, std::uint64_t seed);

/// Pairs (i, j), 1 <= i <= j <= M, row-major.
std::vector<PairIndex> relnet_pairs(int M);

// Population naming shared by the builders, simulator staging and placement.
std::string word_input_name(int sentence);
std::string lsnn_name(int sentence);
std::string gtheta_name(PairIndex pair, int layer);
std::string relay_name(int sentence, int group);

/// Gaussian weights with standard deviation gain * b0 / sqrt(fanin).
void init_gaussian(WeightBlock& block, double gain, double b0, std::size_t fanin, Rng& rng);
void init_delays(WeightBlock& block, int lo, int hi, Rng& rng);

} // namespace snn
