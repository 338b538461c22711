#include "snn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <unordered_map>

#include "snn/builders.hpp"
#include "snn/encoders.hpp"
#include "snn/errors.hpp"
#include "parallel.hpp"

namespace snn {

const char* to_string(NumericMode mode) noexcept
{
    return mode == NumericMode::real ? "real" : "integer";
}

NumericMode numeric_mode_from_string(std::string_view text)
{
    if (text == "real") {
        return NumericMode::real;
    }
    if (text == "integer") {
        return NumericMode::integer;
    }
    throw InvalidInput("unknown numeric mode '" + std::string(text) + "'");
}

namespace {

using detail::parallel_for;

// Outgoing synapses of one block grouped by source neuron.
struct CompiledBlock {
    std::vector<std::uint32_t> row_ptr;
    std::vector<std::uint32_t> dst;
    std::vector<std::uint8_t> delay;
    std::vector<double> w;
    std::vector<std::int64_t> wq;
};

CompiledBlock compile(const WeightBlock& b)
{
    CompiledBlock c;
    c.row_ptr.reserve(b.rows + 1);
    c.row_ptr.push_back(0);
    for (std::size_t r = 0; r < b.rows; ++r) {
        if (b.pattern == Pattern::one_to_one) {
            c.dst.push_back(static_cast<std::uint32_t>(r));
            c.delay.push_back(b.delays[r]);
            c.w.push_back(b.weights[r]);
        } else {
            for (std::size_t col = 0; col < b.cols; ++col) {
                const std::size_t k = b.index(r, col);
                if (b.pattern == Pattern::sparse && !b.mask[k]) {
                    continue;
                }
                c.dst.push_back(static_cast<std::uint32_t>(col));
                c.delay.push_back(b.delays[k]);
                c.w.push_back(b.weights[k]);
            }
        }
        c.row_ptr.push_back(static_cast<std::uint32_t>(c.dst.size()));
    }
    c.wq.resize(c.w.size());
    for (std::size_t k = 0; k < c.w.size(); ++k) {
        c.wq[k] = std::llround(c.w[k]);
    }
    return c;
}

struct PopRuntime {
    const PopulationSpec* spec = nullptr;
    bool input = false;
    bool readout = false;
    std::vector<std::uint8_t> has_ahp;
    NeuronParams with_ahp, without_ahp;
    Decays d_with, d_without;
    QuantParams q_with, q_without;
    QuantDecays qd_with, qd_without;
    std::vector<NeuronState> state;
    std::vector<QuantNeuronState> qstate;
    std::vector<ReadoutState> rstate;
    std::vector<QuantReadoutState> qrstate;
    std::vector<double> ring;
    std::vector<std::int64_t> qring;
    std::vector<std::uint32_t> spiking;
};

} // namespace

SimResult simulate(const NetworkGraph& graph, const InputMap& inputs, std::size_t steps,
                   const SimOptions& options)
{
    const bool integer = options.mode == NumericMode::integer;
    const std::size_t n_pops = graph.population_count();
    const std::size_t depth = static_cast<std::size_t>(graph.max_delay()) + 2;

    std::vector<PopRuntime> pops(n_pops);
    for (PopId id = 0; id < n_pops; ++id) {
        const auto& spec = graph.population(id);
        auto& rt = pops[id];
        rt.spec = &spec;
        rt.input = spec.is_input();
        rt.readout = spec.is_readout();
        if (rt.input) {
            const auto it = inputs.find(id);
            if (it == inputs.end() || it->second.neurons() != spec.size || it->second.steps() < steps) {
                throw InvalidInput("simulate: input population '" + spec.name +
                                   "' is not covered for all steps");
            }
            continue;
        }
        spec.params.validate();
        rt.with_ahp = spec.params;
        rt.without_ahp = spec.params.without_ahp();
        rt.d_with = Decays::exact(rt.with_ahp);
        rt.d_without = Decays::exact(rt.without_ahp);
        rt.q_with = QuantParams::of(rt.with_ahp);
        rt.q_without = QuantParams::of(rt.without_ahp);
        rt.qd_with = QuantDecays::of(rt.with_ahp);
        rt.qd_without = QuantDecays::of(rt.without_ahp);
        rt.has_ahp.resize(spec.size);
        for (std::size_t j = 0; j < spec.size; ++j) {
            rt.has_ahp[j] = spec.has_ahp(j) ? 1 : 0;
        }
        if (rt.readout) {
            rt.rstate.resize(spec.size);
            rt.qrstate.resize(spec.size);
        } else {
            rt.state.resize(spec.size);
            rt.qstate.resize(spec.size);
        }
        if (integer) {
            rt.qring.assign(depth * spec.size, 0);
        } else {
            rt.ring.assign(depth * spec.size, 0.0);
        }
    }

    std::unordered_map<const WeightBlock*, CompiledBlock> compiled;
    for (const auto& c : graph.connections()) {
        if (!compiled.contains(c.block.get())) {
            compiled.emplace(c.block.get(), compile(*c.block));
        }
    }

    std::vector<std::pair<PopId, std::uint32_t>> trace = options.trace;
    if (options.trace_all) {
        trace.clear();
        for (PopId id = 0; id < n_pops; ++id) {
            if (!pops[id].input) {
                for (std::uint32_t j = 0; j < graph.population(id).size; ++j) {
                    trace.emplace_back(id, j);
                }
            }
        }
    }
    std::vector<std::size_t> sizes;
    for (const auto& p : graph.populations()) {
        sizes.push_back(p.size);
    }
    SimResult result{Raster(sizes), {}};
    auto& traces = result.raster.voltage_traces();
    for (const auto& key : trace) {
        if (key.first >= n_pops || key.second >= graph.population(key.first).size) {
            throw InvalidInput("simulate: trace request out of range");
        }
        traces[key].reserve(steps);
    }

    std::vector<SpikeEvent> step_events;
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t slot = s % depth;

        // Phase 1: every neuron consumes its matured input and advances.
        parallel_for(n_pops, options.threads, [&](std::size_t id) {
            auto& rt = pops[id];
            rt.spiking.clear();
            const std::size_t n = rt.spec->size;
            if (rt.input) {
                const auto& m = inputs.at(static_cast<PopId>(id));
                const auto row = m.step_row(s);
                for (std::size_t j = 0; j < n; ++j) {
                    if (row[j]) {
                        rt.spiking.push_back(static_cast<std::uint32_t>(j));
                    }
                }
                return;
            }
            if (integer) {
                std::int64_t* in = rt.qring.data() + slot * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const bool ahp = rt.has_ahp[j] != 0;
                    if (rt.readout) {
                        step_readout(rt.qrstate[j], rt.with_ahp.readout_window,
                                     rt.qd_with.psc, in[j], s, steps);
                    } else if (step_neuron(rt.qstate[j], ahp ? rt.q_with : rt.q_without,
                                           ahp ? rt.qd_with : rt.qd_without, in[j])) {
                        rt.spiking.push_back(static_cast<std::uint32_t>(j));
                    }
                    in[j] = 0;
                }
            } else {
                double* in = rt.ring.data() + slot * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const bool ahp = rt.has_ahp[j] != 0;
                    if (rt.readout) {
                        step_readout(rt.rstate[j], rt.with_ahp, rt.d_with.psc, in[j], s, steps);
                    } else if (step_neuron(rt.state[j], ahp ? rt.with_ahp : rt.without_ahp,
                                           ahp ? rt.d_with : rt.d_without, in[j])) {
                        rt.spiking.push_back(static_cast<std::uint32_t>(j));
                    }
                    in[j] = 0.0;
                }
            }
        });

        step_events.clear();
        for (PopId id = 0; id < n_pops; ++id) {
            for (auto j : pops[id].spiking) {
                step_events.push_back({id, j});
            }
        }
        result.raster.push_step(step_events);
        for (auto& [key, values] : traces) {
            const auto& rt = pops[key.first];
            double v = 0.0;
            if (rt.readout) {
                v = integer ? rt.qrstate[key.second].v : rt.rstate[key.second].v;
            } else if (!rt.input) {
                v = integer ? static_cast<double>(rt.qstate[key.second].v()) : rt.state[key.second].v();
            }
            values.push_back(v);
        }

        // Phase 2: delivery, partitioned by target population so that the
        // summation order per target never depends on scheduling.
        parallel_for(n_pops, options.threads, [&](std::size_t dst) {
            auto& rt = pops[dst];
            if (rt.input) {
                return;
            }
            const std::size_t n = rt.spec->size;
            for (std::size_t ci : graph.incoming(static_cast<PopId>(dst))) {
                const auto& conn = graph.connection(ci);
                const auto& src_spikes = pops[conn.src].spiking;
                if (src_spikes.empty()) {
                    continue;
                }
                const auto& cb = compiled.at(conn.block.get());
                for (auto j : src_spikes) {
                    for (std::uint32_t k = cb.row_ptr[j]; k < cb.row_ptr[j + 1]; ++k) {
                        const std::size_t target_slot = (s + cb.delay[k] + 1) % depth;
                        if (integer) {
                            rt.qring[target_slot * n + cb.dst[k]] += cb.wq[k];
                        } else {
                            rt.ring[target_slot * n + cb.dst[k]] += cb.w[k];
                        }
                    }
                }
            }
        });
    }

    for (PopId id = 0; id < n_pops; ++id) {
        const auto& rt = pops[id];
        if (!rt.readout) {
            continue;
        }
        auto& out = result.readout[id];
        for (std::size_t j = 0; j < rt.spec->size; ++j) {
            out.push_back(integer ? static_cast<double>(rt.qrstate[j].v) : rt.rstate[j].v);
        }
    }
    return result;
}

std::size_t argmax(const std::vector<double>& values)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[best]) {
            best = k;
        }
    }
    return best;
}

std::vector<double> softmax(const std::vector<double>& logits)
{
    if (logits.empty()) {
        return {};
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        sum += p[k];
    }
    for (auto& x : p) {
        x /= sum;
    }
    return p;
}

std::size_t classify_smnist(const NetworkGraph& graph, const SpikeMatrix& encoded,
                            const SimOptions& options)
{
    const PopId input = graph.require("input");
    const PopId readout = graph.require("readout");
    const auto result = simulate(graph, {{input, encoded}}, encoded.steps(), options);
    return argmax(result.readout.at(readout));
}

// ---------------------------------------------------------------------------

namespace {

using detail::parallel_for;

int meta_int(const NetworkGraph& g, const char* key)
{
    const auto it = g.metadata().find(key);
    if (it == g.metadata().end()) {
        throw InvalidInput(std::string("graph metadata lacks '") + key + "'; not a RelNet graph");
    }
    return std::stoi(it->second);
}

} // namespace

SpikeMatrix relnet_embedding(const NetworkGraph& graph, int sentence,
                             const std::vector<std::uint32_t>& words, const SimOptions& sim,
                             bool reversed_words)
{
    WordEncoderConfig wc;
    wc.T_word = meta_int(graph, "T_word");
    wc.N_words = meta_int(graph, "N_words");
    wc.vocab = static_cast<std::size_t>(meta_int(graph, "vocab"));
    wc.order = reversed_words ? WordOrder::reversed : WordOrder::forward;
    const SpikeMatrix encoded = encode_sentence(words, wc);

    const PopId w = graph.require(word_input_name(sentence));
    const PopId l = graph.require(lsnn_name(sentence));
    const std::vector<PopId> keep{w, l};
    const auto sub = extract_subgraph(graph, keep);
    const auto result =
        simulate(sub.graph, {{*sub.from_original[w], encoded}}, encoded.steps(), sim);
    return extract_embedding(result.raster.population(*sub.from_original[l]),
                             meta_int(graph, "T_inp"), meta_int(graph, "T_sim"));
}

Subgraph relnet_feedforward(const NetworkGraph& graph, int sentences)
{
    std::vector<PopId> keep, as_inputs;
    for (PopId id = 0; id < graph.population_count(); ++id) {
        const auto& p = graph.population(id);
        switch (p.role) {
        case Role::input:
            break;
        case Role::lsnn:
            if (p.sentence <= sentences) {
                as_inputs.push_back(id);
            }
            break;
        case Role::relay:
            if (p.sentence <= sentences) {
                keep.push_back(id);
            }
            break;
        case Role::gtheta:
            if (p.pair.j <= sentences) {
                keep.push_back(id);
            }
            break;
        default:
            keep.push_back(id);
            break;
        }
    }
    return extract_subgraph(graph, keep, as_inputs);
}

RelNetAnswer answer_relnet(const NetworkGraph& graph, const Story& story,
                           const RelNetRunOptions& options)
{
    const int M = meta_int(graph, "M");
    const int L = static_cast<int>(story.sentences.size());
    if (L < 1 || L > M) {
        throw InvalidInput("answer_relnet: story must have 1.." + std::to_string(M) + " sentences");
    }
    const int T_sim = meta_int(graph, "T_sim");
    const int T_readout = meta_int(graph, "T_readout");

    RelNetAnswer ans;
    ans.embeddings.push_back(
        relnet_embedding(graph, 0, story.question, options.sim, options.reversed_words));
    for (int s = 1; s <= L; ++s) {
        ans.embeddings.push_back(relnet_embedding(graph, s, story.sentences[static_cast<std::size_t>(s - 1)],
                                                  options.sim, options.reversed_words));
    }

    const auto sub = relnet_feedforward(graph, L);
    InputMap inputs;
    for (int s = 0; s <= L; ++s) {
        inputs.emplace(*sub.from_original[graph.require(lsnn_name(s))],
                       ans.embeddings[static_cast<std::size_t>(s)]);
    }
    for (const auto& p : sub.graph.populations()) {
        ans.instances += (p.role == Role::gtheta && p.layer == 1) ? 1 : 0;
    }
    auto result = simulate(sub.graph, inputs, static_cast<std::size_t>(T_sim), options.sim);
    const PopId readout = *sub.from_original[graph.require("readout")];
    const double scale = options.readout_scale != 0.0 ? options.readout_scale
                                                      : 1.0 / std::max(1, T_readout);
    ans.logits = result.readout.at(readout);
    for (auto& x : ans.logits) {
        x *= scale;
    }
    ans.probabilities = softmax(ans.logits);
    ans.word = static_cast<std::uint32_t>(argmax(ans.logits));
    ans.ff_raster = std::move(result.raster);
    ans.ff_to_graph = sub.to_original;
    return ans;
}

SpikeMetrics metrics(const Raster& raster, const NetworkGraph& graph)
{
    if (raster.population_count() != graph.population_count()) {
        throw InvalidInput("metrics: raster does not belong to this graph");
    }
    SpikeMetrics m;
    m.counts.resize(graph.population_count());
    m.rates_hz.resize(graph.population_count());
    for (PopId id = 0; id < graph.population_count(); ++id) {
        m.counts[id].assign(graph.population(id).size, 0);
    }
    for (const auto& e : raster.all_events()) {
        ++m.counts[e.pop][e.neuron];
    }
    const double steps = static_cast<double>(raster.steps());
    std::map<Role, std::pair<std::size_t, std::size_t>> by_role;
    std::size_t total_spikes = 0, total_neurons = 0;
    for (PopId id = 0; id < graph.population_count(); ++id) {
        const auto& p = graph.population(id);
        auto& rates = m.rates_hz[id];
        rates.resize(p.size);
        std::size_t sum = 0;
        for (std::size_t j = 0; j < p.size; ++j) {
            rates[j] = steps > 0 ? static_cast<double>(m.counts[id][j]) * 1000.0 / steps : 0.0;
            sum += m.counts[id][j];
        }
        if (p.is_input()) {
            continue;
        }
        by_role[p.role].first += sum;
        by_role[p.role].second += p.size;
        total_spikes += sum;
        total_neurons += p.size;
    }
    for (const auto& [role, acc] : by_role) {
        m.spikes_per_neuron[role] =
            acc.second ? static_cast<double>(acc.first) / static_cast<double>(acc.second) : 0.0;
    }
    m.mean_spikes_per_neuron =
        total_neurons ? static_cast<double>(total_spikes) / static_cast<double>(total_neurons) : 0.0;
    return m;
}

} // namespace snn
