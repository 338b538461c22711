#pragma once

// Single-neuron state transitions for LIF neurons with and without
// after-hyperpolarizing (AHP) currents, plus the non-spiking readout neuron.
//
// One step is 1 ms. The membrane voltage is kept as two components, one from
// the PSC and one from the AHP current, so that the scaled voltage used for
// training can be formed without extra bookkeeping:
//
//   i_psc[t+1] = a_i   * i_psc[t] + in[t+1]
//   i_ahp[t+1] = a_ahp * i_ahp[t] - beta * z[t]
//   v_psc[t+1] = a_v * v_psc[t] + i_psc[t+1] / g_v     (0 while refractory)
//   v_ahp[t+1] = a_v * v_ahp[t] + i_ahp[t+1] / g_v     (0 while refractory)
//   z[t+1]     = v_psc + v_ahp > b0, after which both components reset to 0.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>

namespace snn {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class NeuronKind : std::uint8_t { lif, lif_ahp, readout, input_source };

const char* to_string(NeuronKind kind) noexcept;
NeuronKind neuron_kind_from_string(const char* text);

struct NeuronParams {
    NeuronKind kind = NeuronKind::lif;
    double tau_v = 20.0;
    double tau_i = 5.0;
    double tau_ahp = kInfinity;
    double beta = 0.0;
    double b0 = 127.0;
    double g_v = 1.0;
    int refractory = 0;
    // Readout only: number of final steps during which the PSC is integrated.
    int readout_window = 10;

    /// Throws InvalidParameter when the kind-specific invariants do not hold.
    void validate() const;

    /// Same parameters with the AHP path removed (kind lif, beta 0).
    NeuronParams without_ahp() const;

    static NeuronParams lif(double tau_v, double tau_i, double b0, int refractory);
    static NeuronParams lif_ahp(double tau_v, double tau_i, double tau_ahp, double beta,
                                double b0, int refractory);
    static NeuronParams readout(double tau_readout, int window);
    static NeuronParams input_source();

    friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

/// exp(-1/tau); exactly 1 for an infinite time constant.
double decay_factor(double tau);

// Decay factors of one parameter set, computed once per population.
struct Decays {
    double psc = 0.0;
    double voltage = 0.0;
    double ahp = 0.0;

    static Decays exact(const NeuronParams& params);
    // round(4096 * a) / 4096, i.e. the factors the integer mode applies.
    static Decays quantized(const NeuronParams& params);
};

struct NeuronState {
    double i_psc = 0.0;
    double i_ahp = 0.0;
    double v_psc = 0.0;
    double v_ahp = 0.0;
    int refractory_left = 0;
    bool spiked = false; // z of the step that produced this state

    double v() const noexcept { return v_psc + v_ahp; }

    friend bool operator==(const NeuronState&, const NeuronState&) = default;
};

/// Advances one step in place and returns the emitted spike.
bool step_neuron(NeuronState& state, const NeuronParams& params, const Decays& decays,
                 double weighted_input) noexcept;

std::pair<NeuronState, bool> step_neuron(NeuronState state, const NeuronParams& params,
                                         double weighted_input);

/// (v - b0) / (b0 - v_ahp): 0 at threshold, -1 when the PSC contributes nothing.
double scaled_voltage(const NeuronState& state, const NeuronParams& params);

struct ReadoutState {
    double i_psc = 0.0;
    double v = 0.0;
    bool integration_enabled = false;
};

/// Non-leaky, non-spiking integration of the PSC during the final
/// params.readout_window steps of a run of total_steps.
void step_readout(ReadoutState& state, const NeuronParams& params, double psc_decay,
                  double weighted_input, std::size_t step, std::size_t total_steps) noexcept;

ReadoutState step_readout(ReadoutState state, const NeuronParams& params, double weighted_input,
                          std::size_t step, std::size_t total_steps);

// ---------------------------------------------------------------------------
// Integer mode: signed 24-bit registers, decays as multiply by
// round(4096 * a) followed by a rounding right shift of 12 bits.

inline constexpr int kRegisterBits = 24;
inline constexpr std::int32_t kRegisterMax = (1 << (kRegisterBits - 1)) - 1;
inline constexpr std::int32_t kRegisterMin = -(1 << (kRegisterBits - 1));
inline constexpr int kDecayShift = 12;
inline constexpr std::int32_t kDecayOne = 1 << kDecayShift;

constexpr std::int32_t saturate(std::int64_t x) noexcept
{
    return x > kRegisterMax ? kRegisterMax : (x < kRegisterMin ? kRegisterMin
                                                               : static_cast<std::int32_t>(x));
}

// round(x * d / 4096), halves rounded towards +inf.
constexpr std::int64_t apply_decay(std::int64_t x, std::int32_t d) noexcept
{
    return (x * d + (kDecayOne / 2)) >> kDecayShift;
}

struct QuantDecays {
    std::int32_t psc = 0;
    std::int32_t voltage = 0;
    std::int32_t ahp = 0;

    static QuantDecays of(const NeuronParams& params);
};

// Integer images of b0 and beta; weights are rounded the same way.
struct QuantParams {
    std::int64_t b0 = 0;
    std::int32_t beta = 0;
    int refractory = 0;
    bool spiking = true;

    static QuantParams of(const NeuronParams& params);
};

struct QuantNeuronState {
    std::int32_t i_psc = 0;
    std::int32_t i_ahp = 0;
    std::int32_t v_psc = 0;
    std::int32_t v_ahp = 0;
    int refractory_left = 0;
    bool spiked = false;

    std::int64_t v() const noexcept { return std::int64_t{v_psc} + v_ahp; }

    friend bool operator==(const QuantNeuronState&, const QuantNeuronState&) = default;
};

bool step_neuron(QuantNeuronState& state, const QuantParams& params, const QuantDecays& decays,
                 std::int64_t weighted_input) noexcept;

struct QuantReadoutState {
    std::int32_t i_psc = 0;
    std::int32_t v = 0;
    bool integration_enabled = false;
};

void step_readout(QuantReadoutState& state, int window, std::int32_t psc_decay,
                  std::int64_t weighted_input, std::size_t step, std::size_t total_steps) noexcept;

} // namespace snn
