#include "snn/neuron.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "snn/errors.hpp"

namespace snn {

namespace {

bool positive_or_infinite(double tau)
{
    return tau > 0.0 && !std::isnan(tau);
}

bool positive_finite(double tau)
{
    return tau > 0.0 && std::isfinite(tau);
}

} // namespace

const char* to_string(NeuronKind kind) noexcept
{
    switch (kind) {
    case NeuronKind::lif:
        return "lif";
    case NeuronKind::lif_ahp:
        return "lif_ahp";
    case NeuronKind::readout:
        return "readout";
    case NeuronKind::input_source:
        return "input_source";
    }
    return "?";
}

NeuronKind neuron_kind_from_string(const char* text)
{
    for (auto kind : {NeuronKind::lif, NeuronKind::lif_ahp, NeuronKind::readout,
                      NeuronKind::input_source}) {
        if (std::strcmp(text, to_string(kind)) == 0) {
            return kind;
        }
    }
    throw InvalidInput(std::string("unknown neuron kind '") + text + "'");
}

void NeuronParams::validate() const
{
    auto fail = [](const std::string& what) { throw InvalidParameter("neuron params: " + what); };
    if (kind == NeuronKind::input_source) {
        return;
    }
    if (!(g_v > 0.0) || !std::isfinite(g_v)) {
        fail("g_v must be positive and finite");
    }
    if (!positive_finite(tau_i)) {
        fail("tau_i must be positive and finite");
    }
    if (refractory < 0) {
        fail("refractory must be non-negative");
    }
    switch (kind) {
    case NeuronKind::lif:
    case NeuronKind::lif_ahp:
        if (!positive_finite(tau_v)) {
            fail("tau_v must be positive and finite for spiking neurons");
        }
        if (!std::isfinite(b0)) {
            fail("b0 must be finite for spiking neurons");
        }
        if (kind == NeuronKind::lif) {
            if (beta != 0.0) {
                fail("beta must be 0 for plain LIF neurons");
            }
            if (!positive_or_infinite(tau_ahp)) {
                fail("tau_ahp must be positive or infinite");
            }
        } else {
            if (!(beta > 0.0) || !std::isfinite(beta)) {
                fail("beta must be positive for LIF neurons with AHP");
            }
            if (!positive_finite(tau_ahp)) {
                fail("tau_ahp must be positive and finite for LIF neurons with AHP");
            }
            if (tau_ahp < 5.0 * tau_v) {
                fail("tau_ahp must be at least 5 * tau_v");
            }
        }
        break;
    case NeuronKind::readout:
        if (!positive_or_infinite(tau_v)) {
            fail("tau_v must be positive or infinite");
        }
        if (std::isfinite(b0)) {
            fail("readout neurons have no finite threshold");
        }
        if (beta != 0.0) {
            fail("readout neurons have no AHP current");
        }
        if (readout_window < 0) {
            fail("readout window must be non-negative");
        }
        break;
    case NeuronKind::input_source:
        break;
    }
}

NeuronParams NeuronParams::without_ahp() const
{
    NeuronParams p = *this;
    if (p.kind == NeuronKind::lif_ahp) {
        p.kind = NeuronKind::lif;
    }
    p.beta = 0.0;
    return p;
}

NeuronParams NeuronParams::lif(double tau_v, double tau_i, double b0, int refractory)
{
    NeuronParams p;
    p.kind = NeuronKind::lif;
    p.tau_v = tau_v;
    p.tau_i = tau_i;
    p.b0 = b0;
    p.refractory = refractory;
    return p;
}

NeuronParams NeuronParams::lif_ahp(double tau_v, double tau_i, double tau_ahp, double beta,
                                   double b0, int refractory)
{
    NeuronParams p = lif(tau_v, tau_i, b0, refractory);
    p.kind = NeuronKind::lif_ahp;
    p.tau_ahp = tau_ahp;
    p.beta = beta;
    return p;
}

NeuronParams NeuronParams::readout(double tau_readout, int window)
{
    NeuronParams p;
    p.kind = NeuronKind::readout;
    p.tau_v = kInfinity;
    p.tau_i = tau_readout;
    p.b0 = kInfinity;
    p.readout_window = window;
    return p;
}

NeuronParams NeuronParams::input_source()
{
    NeuronParams p;
    p.kind = NeuronKind::input_source;
    return p;
}

double decay_factor(double tau)
{
    if (std::isinf(tau) && tau > 0.0) {
        return 1.0;
    }
    if (!(tau > 0.0)) {
        throw InvalidParameter("decay_factor: time constant must be positive or infinite");
    }
    return std::exp(-1.0 / tau);
}

Decays Decays::exact(const NeuronParams& params)
{
    Decays d;
    d.psc = decay_factor(params.tau_i);
    d.voltage = decay_factor(params.tau_v);
    d.ahp = params.kind == NeuronKind::lif_ahp ? decay_factor(params.tau_ahp) : 0.0;
    return d;
}

Decays Decays::quantized(const NeuronParams& params)
{
    const QuantDecays q = QuantDecays::of(params);
    return {static_cast<double>(q.psc) / kDecayOne, static_cast<double>(q.voltage) / kDecayOne,
            static_cast<double>(q.ahp) / kDecayOne};
}

bool step_neuron(NeuronState& s, const NeuronParams& params, const Decays& d,
                 double weighted_input) noexcept
{
    s.i_psc = d.psc * s.i_psc + weighted_input;
    s.i_ahp = d.ahp * s.i_ahp - params.beta * (s.spiked ? 1.0 : 0.0);
    if (s.refractory_left > 0) {
        --s.refractory_left;
        s.v_psc = 0.0;
        s.v_ahp = 0.0;
        s.spiked = false;
        return false;
    }
    s.v_psc = d.voltage * s.v_psc + s.i_psc / params.g_v;
    s.v_ahp = d.voltage * s.v_ahp + s.i_ahp / params.g_v;
    s.spiked = s.v_psc + s.v_ahp > params.b0;
    if (s.spiked) {
        s.v_psc = 0.0;
        s.v_ahp = 0.0;
        s.refractory_left = params.refractory;
    }
    return s.spiked;
}

std::pair<NeuronState, bool> step_neuron(NeuronState state, const NeuronParams& params,
                                         double weighted_input)
{
    const bool spike = step_neuron(state, params, Decays::exact(params), weighted_input);
    return {state, spike};
}

double scaled_voltage(const NeuronState& state, const NeuronParams& params)
{
    if (!std::isfinite(params.b0)) {
        throw InvalidParameter("scaled_voltage: b0 must be finite");
    }
    const double denominator = params.b0 - state.v_ahp;
    if (denominator == 0.0) {
        throw DegenerateDenominator("scaled_voltage: b0 equals v_ahp");
    }
    return (state.v() - params.b0) / denominator;
}

void step_readout(ReadoutState& state, const NeuronParams& params, double psc_decay,
                  double weighted_input, std::size_t step, std::size_t total_steps) noexcept
{
    state.i_psc = psc_decay * state.i_psc + weighted_input;
    const auto window = static_cast<std::size_t>(params.readout_window);
    state.integration_enabled = step + window >= total_steps;
    if (state.integration_enabled) {
        state.v += state.i_psc;
    }
}

ReadoutState step_readout(ReadoutState state, const NeuronParams& params, double weighted_input,
                          std::size_t step, std::size_t total_steps)
{
    step_readout(state, params, decay_factor(params.tau_i), weighted_input, step, total_steps);
    return state;
}

// ---------------------------------------------------------------------------

QuantDecays QuantDecays::of(const NeuronParams& params)
{
    const Decays exact = Decays::exact(params);
    auto q = [](double a) { return static_cast<std::int32_t>(std::lround(a * kDecayOne)); };
    return {q(exact.psc), q(exact.voltage), q(exact.ahp)};
}

QuantParams QuantParams::of(const NeuronParams& params)
{
    QuantParams q;
    q.spiking = params.kind == NeuronKind::lif || params.kind == NeuronKind::lif_ahp;
    q.b0 = q.spiking ? std::llround(params.b0) : 0;
    q.beta = static_cast<std::int32_t>(std::lround(params.beta));
    q.refractory = params.refractory;
    return q;
}

bool step_neuron(QuantNeuronState& s, const QuantParams& params, const QuantDecays& d,
                 std::int64_t weighted_input) noexcept
{
    s.i_psc = saturate(apply_decay(s.i_psc, d.psc) + weighted_input);
    s.i_ahp = saturate(apply_decay(s.i_ahp, d.ahp) - (s.spiked ? params.beta : 0));
    if (s.refractory_left > 0) {
        --s.refractory_left;
        s.v_psc = 0;
        s.v_ahp = 0;
        s.spiked = false;
        return false;
    }
    s.v_psc = saturate(apply_decay(s.v_psc, d.voltage) + s.i_psc);
    s.v_ahp = saturate(apply_decay(s.v_ahp, d.voltage) + s.i_ahp);
    s.spiked = s.v() > params.b0;
    if (s.spiked) {
        s.v_psc = 0;
        s.v_ahp = 0;
        s.refractory_left = params.refractory;
    }
    return s.spiked;
}

void step_readout(QuantReadoutState& state, int window, std::int32_t psc_decay,
                  std::int64_t weighted_input, std::size_t step, std::size_t total_steps) noexcept
{
    state.i_psc = saturate(apply_decay(state.i_psc, psc_decay) + weighted_input);
    state.integration_enabled = step + static_cast<std::size_t>(window) >= total_steps;
    if (state.integration_enabled) {
        state.v = saturate(std::int64_t{state.v} + state.i_psc);
    }
}

} // namespace snn
