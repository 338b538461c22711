#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "snn/graph.hpp"
#include "snn/random.hpp"
#include "snn/simulator.hpp"

namespace snn {

struct SurrogateParams {
    double gamma = 0.3;
    double v_minus = 1.0;
    double v_plus = 1.0;

    void validate() const;
};

/// Piecewise-linear pseudo-derivative of the spike nonlinearity in scaled
/// voltage units: peak gamma at 0, zero outside [-v_minus, v_plus].
double pseudo_derivative(double v_s, const SurrogateParams& params) noexcept;

/// Primitive of pseudo_derivative, 0 below -v_minus and
/// gamma * (v_minus + v_plus) / 2 above v_plus.
double relaxed_spike(double v_s, const SurrogateParams& params) noexcept;

// ---------------------------------------------------------------------------
// Regularizers on plain data.

/// rates[b][k] in Hz. lambda * (sum_k (mean_b rates[b][k] - target)^2)^2.
double loss_rate(const std::vector<std::vector<double>>& rates, double lambda, double target_hz);

/// Penalty of one scaled-voltage sample before averaging.
double voltage_penalty(double v_s) noexcept;

/// lambda * (mean of voltage_penalty over all samples)^2.
double loss_voltage(std::span<const double> scaled_voltages, double lambda);

/// rates[b][instance][k] in Hz for one g_theta layer.
/// lambda * (mean_k (mean_b R_k^b - target)^2)^2 with R_k^b = sum over instances.
double loss_gtheta_rate(const std::vector<std::vector<std::vector<double>>>& rates, double lambda,
                        double target_hz);

/// Average spikes per neuron and instance when the summed rate sits at the
/// target: target / (M (M + 1) / 2) * T_sim / 1000.
double spikes_per_instance_at_target(int M, double target_hz, double window_ms);

/// Fraction of samples inside [-2, 0.4].
double in_range_fraction(std::span<const double> scaled_voltages);

// ---------------------------------------------------------------------------
// Network-level losses and gradients.

enum class TaskLoss : std::uint8_t { none, cross_entropy, mse_teacher };

struct LossConfig {
    TaskLoss task = TaskLoss::cross_entropy;
    PopId readout = 0;
    double readout_scale = 1.0;

    double lambda_rho = 0.0;
    double rho_target = 10.0;       // Hz
    std::vector<PopId> rate_pops;   // populations under the per-neuron rate loss

    double lambda_v = 0.0;
    std::vector<PopId> voltage_pops; // populations under the voltage loss

    double lambda_R = 0.0;
    double R_target = 300.0;         // Hz, summed over instances
    // One entry per g_theta layer; each lists that layer's instance populations.
    std::vector<std::vector<PopId>> gtheta_layers;

    void validate(const NetworkGraph& graph) const;
};

enum class ForwardMode : std::uint8_t {
    // Hard threshold transmits spikes; the backward pass uses the surrogate.
    spiking,
    // Transmits relaxed_spike(v_s); reset and refractoriness still follow the
    // hard threshold. Its exact gradient is what the backward pass computes.
    relaxed,
};

struct TrainSample {
    InputMap inputs;
    std::size_t steps = 0;
    int label = -1;
    std::vector<double> target;
};

using BlockGradients = std::unordered_map<const WeightBlock*, std::vector<double>>;

struct LossBreakdown {
    double total = 0.0;
    double task = 0.0;
    double rate = 0.0;
    double voltage = 0.0;
    double gtheta = 0.0;
};

struct BatchResult {
    LossBreakdown loss;
    BlockGradients gradients;              // empty for forward-only evaluation
    std::vector<std::vector<double>> logits; // scaled readout voltage per sample
    std::size_t correct = 0;
    double in_range = 0.0;                 // fraction of v_s samples in [-2, 0.4]
    double mean_spikes_per_neuron = 0.0;   // over non-input neurons, per sample
    std::uint64_t hard_pattern = 0;        // hash of all hard threshold decisions
};

struct EngineOptions {
    ForwardMode mode = ForwardMode::spiking;
    SurrogateParams surrogate;
    unsigned threads = 1;
};

/// Loss over the batch; no gradients.
BatchResult evaluate_batch(const NetworkGraph& graph, std::span<const TrainSample> batch,
                           const LossConfig& loss, const EngineOptions& options = {});

/// Reverse-mode gradients for every non-frozen block reachable in the graph.
BatchResult bptt_gradients(const NetworkGraph& graph, std::span<const TrainSample> batch,
                           const LossConfig& loss, const EngineOptions& options = {});

// ---------------------------------------------------------------------------

enum class OptimizerKind : std::uint8_t { momentum, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;  // beta1 for adam
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0; // 0 disables global-norm clipping
};

class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config) : config_(config) {}
    /// Applies one update to every block with a gradient; frozen blocks and
    /// inactive sparse synapses are left untouched.
    void step(const BlockGradients& gradients);
    const OptimizerConfig& config() const noexcept { return config_; }
    void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }
    /// Multiplies the learning rate of one block (default 1).
    void set_block_scale(const WeightBlock& block, double factor) { lr_scale_[&block] = factor; }

private:
    OptimizerConfig config_;
    std::unordered_map<const WeightBlock*, std::vector<double>> m_, v_;
    std::unordered_map<const WeightBlock*, double> lr_scale_;
    std::size_t t_ = 0;
};

/// Simplified DEEP-R on one sparse block with row signs: active synapses whose
/// weight left their row's sign are deactivated and as many dormant synapses
/// are activated at random with magnitude `initial_magnitude`.
/// Returns the number of rewired synapses.
std::size_t rewire_sparse(WeightBlock& block, double initial_magnitude, Rng& rng);

// ---------------------------------------------------------------------------
// Teacher-matching pretraining of an LSNN embedding.

struct TeacherSample {
    SpikeMatrix words;           // word input spike train
    std::vector<double> target;  // teacher output vector
};

struct PretrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    OptimizerConfig optimizer{};
    double readout_scale = 0.1;
    std::uint64_t seed = 1;
    double lambda_v = 0.0;
    int readout_window = 10;
};

struct PretrainResult {
    double initial_loss = 0.0;
    std::vector<double> epoch_loss; // training MSE after each epoch
    double final_loss = 0.0;
};

/// Current outputs of the auxiliary readout that pretrain_teacher_matching
/// would start from with the same config.
std::vector<std::vector<double>> teacher_readout_outputs(const NetworkGraph& graph, PopId word_input,
                                                         PopId lsnn, std::span<const TeacherSample> samples,
                                                         std::size_t readout_dim,
                                                         const PretrainConfig& config);

/// Trains the LSNN (word inputs -> lsnn population) of `graph` so that an
/// auxiliary linear readout reproduces the teacher vectors, then discards the
/// readout and freezes the LSNN blocks.
PretrainResult pretrain_teacher_matching(NetworkGraph& graph, PopId word_input, PopId lsnn,
                                         std::span<const TeacherSample> samples,
                                         std::size_t readout_dim, const PretrainConfig& config);

} // namespace snn
