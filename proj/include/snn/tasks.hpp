#pragma once

// Desk-scale training tasks: binary sequential MNIST and a synthetic
// pair-matching task on small RelNets.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "snn/builders.hpp"
#include "snn/encoders.hpp"
#include "snn/io.hpp"
#include "snn/training.hpp"

namespace snn {

struct EpochReport {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double heldout_accuracy = 0.0;
    double in_range = 0.0;          // held-out scaled-voltage samples in [-2, 0.4]
    double spikes_per_neuron = 0.0; // held-out, per sample
    double seconds = 0.0;           // wall time since training started
};

using ProgressFn = std::function<void(const EpochReport&)>;

// ---------------------------------------------------------------------------

struct SmnistTask {
    SmnistConfig network = [] {
        SmnistConfig c;
        c.outputs = 2;
        return c;
    }();
    ThresholdEncoderConfig encoder{};
    std::vector<int> digits{0, 1}; // label k is digits[k]
    std::size_t max_train = 1000;
    std::size_t epochs = 8;
    std::size_t batch_size = 20;
    OptimizerConfig optimizer{OptimizerKind::adam, 0.05};
    double lr_decay = 0.7;          // learning rate factor applied after each epoch
    double readout_lr_scale = 10.0; // learning rate multiplier of the readout block
    double readout_scale = 0.002;
    double lambda_v = 100.0;
    double lambda_rho = 0.0;
    double rho_target = 10.0;
    double rewire_magnitude = 0.5;
    double time_budget_s = 0.0; // stop after the epoch that crosses it; 0 = none
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct SmnistReport {
    std::vector<EpochReport> epochs;
    double initial_in_range = 0.0;
    double heldout_accuracy = 0.0;
    double in_range = 0.0;
    double seconds = 0.0;
    std::size_t train_samples = 0;
    std::size_t heldout_samples = 0;
};

/// Encodes every image whose label is one of `digits` (at most `limit`).
std::vector<TrainSample> encode_image_set(const ImageSet& set, const std::vector<int>& digits,
                                          const ThresholdEncoderConfig& encoder, PopId input,
                                          std::size_t limit);

/// Trains `graph` (built by build_smnist_network) with BPTT, Adam and
/// sign-preserving rewiring of the recurrent and readout blocks.
SmnistReport train_smnist(NetworkGraph& graph, const ImageSet& train, const ImageSet& heldout,
                          const SmnistTask& task, const ProgressFn& progress = {});

/// Fraction of `samples` classified correctly by the event simulator.
double smnist_accuracy(const NetworkGraph& graph, const std::vector<TrainSample>& samples,
                       unsigned threads = 1);

// ---------------------------------------------------------------------------
// Pair matching on the feed-forward part of a small RelNet. Each story has M
// sentences holding one symbol each; the question holds a symbol q and the
// answer is 1 when two different sentences carry symbols a, b with
// (a + b) mod K = q, else 0. Sentence embeddings are fixed random spike
// patterns per symbol with a little per-story jitter, standing in for the
// LSNN output.

struct PairMatchingTask {
    int M = 2;
    std::size_t symbols = 5;          // K
    std::size_t embedding = 20;       // LSNN population size
    std::vector<std::size_t> gtheta_layers{24, 24};
    std::size_t aggregation = 24;
    std::vector<std::size_t> fphi_layers{24};
    double pattern_density = 0.2;
    double jitter = 0.02;
    std::size_t train_stories = 1000;
    std::size_t test_stories = 100;
    std::size_t epochs = 30;
    std::size_t batch_size = 20;
    OptimizerConfig optimizer{OptimizerKind::adam, 0.05};
    double lambda_R = 1e-10;
    double R_target = 300.0;
    double lambda_rho = 1e-13;
    double rho_target = 20.0;
    double lambda_v = 0.01;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    RelNetConfig relnet_config() const;
};

struct PairMatchingReport {
    std::vector<EpochReport> epochs;
    double heldout_accuracy = 0.0;
    double spikes_per_neuron = 0.0;          // all non-input neurons of the feed-forward net
    double gtheta_spikes_per_instance = 0.0; // per g_theta neuron and instance
    double gtheta_summed_rate_hz = 0.0;      // mean over neurons of the rate summed over instances
    std::size_t neurons = 0;
};

struct PairMatchingData {
    Subgraph net; // feed-forward subgraph; LSNN populations are inputs
    std::vector<TrainSample> train;
    std::vector<TrainSample> test;
    LossConfig loss;
};

PairMatchingData make_pair_matching(const NetworkGraph& relnet, const PairMatchingTask& task);

PairMatchingReport train_pair_matching(const PairMatchingTask& task, const ProgressFn& progress = {});

} // namespace snn
