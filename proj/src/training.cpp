#include "snn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "snn/errors.hpp"
#include "parallel.hpp"

namespace snn {

void SurrogateParams::validate() const
{
    if (!(gamma > 0.0) || !(v_minus > 0.0) || !(v_plus > 0.0)) {
        throw InvalidParameter("surrogate parameters must be positive");
    }
}

double pseudo_derivative(double v_s, const SurrogateParams& p) noexcept
{
    if (v_s >= -p.v_minus && v_s < 0.0) {
        return p.gamma * (1.0 + v_s / p.v_minus);
    }
    if (v_s >= 0.0 && v_s <= p.v_plus) {
        return p.gamma * (1.0 - v_s / p.v_plus);
    }
    return 0.0;
}

double relaxed_spike(double v_s, const SurrogateParams& p) noexcept
{
    if (v_s < -p.v_minus) {
        return 0.0;
    }
    if (v_s < 0.0) {
        const double u = v_s + p.v_minus;
        return p.gamma * u * u / (2.0 * p.v_minus);
    }
    if (v_s <= p.v_plus) {
        return p.gamma * (p.v_minus / 2.0 + v_s - v_s * v_s / (2.0 * p.v_plus));
    }
    return p.gamma * (p.v_minus + p.v_plus) / 2.0;
}

// ---------------------------------------------------------------------------

namespace {

void check_lambda(double lambda, const char* name)
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw InvalidParameter(std::string(name) + " must be finite and >= 0");
    }
}

std::vector<double> batch_mean(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) {
        throw InvalidInput("batch must not be empty");
    }
    std::vector<double> mean(rows.front().size(), 0.0);
    for (const auto& r : rows) {
        if (r.size() != mean.size()) {
            throw InvalidInput("inconsistent neuron count across the batch");
        }
        for (std::size_t k = 0; k < r.size(); ++k) {
            mean[k] += r[k];
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(rows.size());
    }
    return mean;
}

} // namespace

double loss_rate(const std::vector<std::vector<double>>& rates, double lambda, double target_hz)
{
    check_lambda(lambda, "lambda_rho");
    double s = 0.0;
    for (double r : batch_mean(rates)) {
        s += (r - target_hz) * (r - target_hz);
    }
    return lambda * s * s;
}

double voltage_penalty(double v_s) noexcept
{
    const double hi = std::max(v_s - 0.4, 0.0);
    const double lo = std::max(-v_s - 2.0, 0.0);
    return hi * hi + lo * lo;
}

double loss_voltage(std::span<const double> scaled_voltages, double lambda)
{
    check_lambda(lambda, "lambda_v");
    if (scaled_voltages.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double v : scaled_voltages) {
        sum += voltage_penalty(v);
    }
    const double mean = sum / static_cast<double>(scaled_voltages.size());
    return lambda * mean * mean;
}

double loss_gtheta_rate(const std::vector<std::vector<std::vector<double>>>& rates, double lambda,
                        double target_hz)
{
    check_lambda(lambda, "lambda_R");
    std::vector<std::vector<double>> summed;
    summed.reserve(rates.size());
    for (const auto& story : rates) {
        if (story.empty()) {
            throw InvalidInput("story without g_theta instances");
        }
        std::vector<double> r(story.front().size(), 0.0);
        for (const auto& inst : story) {
            if (inst.size() != r.size()) {
                throw InvalidInput("instances of one layer differ in size");
            }
            for (std::size_t k = 0; k < r.size(); ++k) {
                r[k] += inst[k];
            }
        }
        summed.push_back(std::move(r));
    }
    const auto mean = batch_mean(summed);
    if (mean.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double r : mean) {
        s += (r - target_hz) * (r - target_hz);
    }
    s /= static_cast<double>(mean.size());
    return lambda * s * s;
}

double spikes_per_instance_at_target(int M, double target_hz, double window_ms)
{
    if (M < 1 || !(window_ms > 0.0) || !(target_hz >= 0.0)) {
        throw InvalidParameter("spikes_per_instance_at_target needs M >= 1 and a positive window");
    }
    const double instances = static_cast<double>(M) * (M + 1) / 2.0;
    return target_hz / instances * window_ms / 1000.0;
}

double in_range_fraction(std::span<const double> scaled_voltages)
{
    if (scaled_voltages.empty()) {
        return 1.0;
    }
    const auto inside = std::count_if(scaled_voltages.begin(), scaled_voltages.end(),
                                      [](double v) { return v >= -2.0 && v <= 0.4; });
    return static_cast<double>(inside) / static_cast<double>(scaled_voltages.size());
}

// ---------------------------------------------------------------------------

namespace {

enum class PopKind : std::uint8_t { input, spiking, readout };

struct PopInfo {
    PopKind kind = PopKind::spiking;
    std::size_t n = 0;
    double a_i = 0.0;
    double a_v = 0.0;
    double g_v = 1.0;
    double b0 = 0.0;
    int refractory = 0;
    int window = 0;
    std::vector<double> a_ahp; // per neuron, 0 without AHP
    std::vector<double> beta;  // per neuron, 0 without AHP
};

struct Conn {
    PopId src = 0;
    PopId dst = 0;
    const WeightBlock* block = nullptr;
    bool trainable = false;
    // Active synapses grouped by source neuron.
    std::vector<std::uint32_t> row_ptr;
    std::vector<std::uint32_t> dst_neuron;
    std::vector<std::uint8_t> delay;
    std::vector<std::size_t> weight_index;
};

struct Model {
    const NetworkGraph* graph = nullptr;
    std::vector<PopInfo> pops;
    std::vector<Conn> conns;
    std::vector<std::vector<std::size_t>> incoming; // conn indices per destination
    std::vector<std::vector<std::size_t>> outgoing;
    std::vector<const WeightBlock*> trainable_blocks;
    // Loss roles.
    std::vector<std::uint8_t> rate_pop;
    std::vector<std::uint8_t> voltage_pop;
    std::vector<int> gtheta_layer;    // -1 when not a g_theta instance under L_R
    std::size_t gtheta_layer_count = 0;
    std::vector<std::size_t> layer_width;
    std::vector<std::size_t> layer_instances;
};

Model compile(const NetworkGraph& graph, const LossConfig& loss)
{
    graph.validate();
    loss.validate(graph);
    Model m;
    m.graph = &graph;
    const std::size_t P = graph.population_count();
    m.pops.resize(P);
    for (PopId p = 0; p < P; ++p) {
        const auto& spec = graph.population(p);
        PopInfo& info = m.pops[p];
        info.n = spec.size;
        if (spec.is_input()) {
            info.kind = PopKind::input;
            continue;
        }
        const NeuronParams& prm = spec.params;
        info.a_i = decay_factor(prm.tau_i);
        if (spec.is_readout()) {
            info.kind = PopKind::readout;
            info.window = prm.readout_window;
            if (!graph.outgoing(p).empty()) {
                throw InvalidInput("readout population '" + spec.name + "' has outgoing connections");
            }
            continue;
        }
        info.a_v = decay_factor(prm.tau_v);
        info.g_v = prm.g_v;
        info.b0 = prm.b0;
        info.refractory = prm.refractory;
        info.a_ahp.assign(info.n, 0.0);
        info.beta.assign(info.n, 0.0);
        for (std::size_t j = 0; j < info.n; ++j) {
            if (spec.has_ahp(j)) {
                info.a_ahp[j] = decay_factor(prm.tau_ahp);
                info.beta[j] = prm.beta;
            }
        }
    }

    m.incoming.resize(P);
    m.outgoing.resize(P);
    std::set<const WeightBlock*> seen;
    for (std::size_t ci = 0; ci < graph.connections().size(); ++ci) {
        const auto& c = graph.connection(ci);
        const WeightBlock& b = *c.block;
        Conn cc;
        cc.src = c.src;
        cc.dst = c.dst;
        cc.block = &b;
        cc.trainable = !b.frozen;
        cc.row_ptr.assign(b.rows + 1, 0);
        for (std::size_t i = 0; i < b.rows; ++i) {
            if (b.pattern == Pattern::one_to_one) {
                cc.dst_neuron.push_back(static_cast<std::uint32_t>(i));
                cc.delay.push_back(b.delays[i]);
                cc.weight_index.push_back(i);
            } else {
                for (std::size_t j = 0; j < b.cols; ++j) {
                    if (b.active(i, j)) {
                        const std::size_t k = b.index(i, j);
                        cc.dst_neuron.push_back(static_cast<std::uint32_t>(j));
                        cc.delay.push_back(b.delays[k]);
                        cc.weight_index.push_back(k);
                    }
                }
            }
            cc.row_ptr[i + 1] = static_cast<std::uint32_t>(cc.dst_neuron.size());
        }
        if (cc.trainable && seen.insert(&b).second) {
            m.trainable_blocks.push_back(&b);
        }
        m.incoming[c.dst].push_back(m.conns.size());
        m.outgoing[c.src].push_back(m.conns.size());
        m.conns.push_back(std::move(cc));
    }

    m.gtheta_layer.assign(P, -1);
    m.gtheta_layer_count = loss.gtheta_layers.size();
    for (std::size_t l = 0; l < loss.gtheta_layers.size(); ++l) {
        const auto& layer = loss.gtheta_layers[l];
        m.layer_instances.push_back(layer.size());
        m.layer_width.push_back(graph.population(layer.front()).size);
        for (PopId p : layer) {
            m.gtheta_layer[p] = static_cast<int>(l);
        }
    }
    m.rate_pop.assign(P, 0);
    m.voltage_pop.assign(P, 0);
    if (loss.rate_pops.empty()) {
        for (PopId p = 0; p < P; ++p) {
            m.rate_pop[p] = m.pops[p].kind == PopKind::spiking && m.gtheta_layer[p] < 0;
        }
    } else {
        for (PopId p : loss.rate_pops) {
            m.rate_pop[p] = 1;
        }
    }
    if (loss.voltage_pops.empty()) {
        for (PopId p = 0; p < P; ++p) {
            m.voltage_pop[p] = m.pops[p].kind == PopKind::spiking;
        }
    } else {
        for (PopId p : loss.voltage_pops) {
            m.voltage_pop[p] = 1;
        }
    }
    return m;
}

// Complete forward record of one sample, all arrays step-major [t * n + j].
struct Trace {
    std::size_t T = 0;
    std::vector<std::vector<double>> z;      // transmitted value, all populations
    std::vector<std::vector<double>> p_hat;  // pre-reset PSC voltage component
    std::vector<std::vector<double>> q_hat;  // pre-reset AHP voltage component
    std::vector<std::vector<double>> v_s;
    std::vector<std::vector<std::uint8_t>> hard;
    std::vector<std::vector<std::uint8_t>> refractory;
    std::vector<std::vector<double>> readout; // final voltage per readout population
};

Trace forward(const Model& m, const TrainSample& sample, const EngineOptions& opt)
{
    const std::size_t T = sample.steps;
    const std::size_t P = m.pops.size();
    Trace tr;
    tr.T = T;
    tr.z.resize(P);
    tr.p_hat.resize(P);
    tr.q_hat.resize(P);
    tr.v_s.resize(P);
    tr.hard.resize(P);
    tr.refractory.resize(P);
    tr.readout.resize(P);
    std::vector<std::vector<double>> in(P);
    for (PopId p = 0; p < P; ++p) {
        const PopInfo& info = m.pops[p];
        tr.z[p].assign(T * info.n, 0.0);
        if (info.kind == PopKind::input) {
            const auto it = sample.inputs.find(p);
            if (it == sample.inputs.end() || it->second.neurons() != info.n || it->second.steps() < T) {
                throw InvalidInput("sample does not cover input population '" +
                                   m.graph->population(p).name + "'");
            }
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t j = 0; j < info.n; ++j) {
                    tr.z[p][t * info.n + j] = it->second.get(j, t) ? 1.0 : 0.0;
                }
            }
            continue;
        }
        in[p].assign(T * info.n, 0.0);
        if (info.kind == PopKind::spiking) {
            tr.p_hat[p].assign(T * info.n, 0.0);
            tr.q_hat[p].assign(T * info.n, 0.0);
            tr.v_s[p].assign(T * info.n, 0.0);
            tr.hard[p].assign(T * info.n, 0);
            tr.refractory[p].assign(T * info.n, 0);
        }
        tr.readout[p].assign(info.n, 0.0);
    }

    struct State {
        std::vector<double> i, a, pv, qv, rv;
        std::vector<int> refr;
    };
    std::vector<State> st(P);
    for (PopId p = 0; p < P; ++p) {
        const std::size_t n = m.pops[p].n;
        st[p].i.assign(n, 0.0);
        st[p].a.assign(n, 0.0);
        st[p].pv.assign(n, 0.0);
        st[p].qv.assign(n, 0.0);
        st[p].rv.assign(n, 0.0);
        st[p].refr.assign(n, 0);
    }

    const bool relaxed = opt.mode == ForwardMode::relaxed;
    for (std::size_t t = 0; t < T; ++t) {
        for (PopId p = 0; p < P; ++p) {
            const PopInfo& info = m.pops[p];
            const std::size_t n = info.n;
            const std::size_t base = t * n;
            State& s = st[p];
            if (info.kind == PopKind::readout) {
                const bool window = t + static_cast<std::size_t>(info.window) >= T;
                for (std::size_t j = 0; j < n; ++j) {
                    s.i[j] = info.a_i * s.i[j] + in[p][base + j];
                    if (window) {
                        s.rv[j] += s.i[j];
                    }
                }
                continue;
            }
            if (info.kind == PopKind::spiking) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double z_prev = t > 0 ? tr.z[p][base - n + j] : 0.0;
                    s.i[j] = info.a_i * s.i[j] + in[p][base + j];
                    s.a[j] = info.a_ahp[j] * s.a[j] - info.beta[j] * z_prev;
                    double ph = 0.0, qh = 0.0;
                    if (s.refr[j] > 0) {
                        --s.refr[j];
                        tr.refractory[p][base + j] = 1;
                    } else {
                        ph = info.a_v * s.pv[j] + s.i[j] / info.g_v;
                        qh = info.a_v * s.qv[j] + s.a[j] / info.g_v;
                    }
                    const double vs = (ph + qh - info.b0) / (info.b0 - qh);
                    const bool h = tr.refractory[p][base + j] == 0 && ph + qh > info.b0;
                    tr.p_hat[p][base + j] = ph;
                    tr.q_hat[p][base + j] = qh;
                    tr.v_s[p][base + j] = vs;
                    tr.hard[p][base + j] = h ? 1 : 0;
                    double z = 0.0;
                    if (tr.refractory[p][base + j] == 0) {
                        z = relaxed ? relaxed_spike(vs, opt.surrogate) : (h ? 1.0 : 0.0);
                    }
                    tr.z[p][base + j] = z;
                    if (h) {
                        s.pv[j] = 0.0;
                        s.qv[j] = 0.0;
                        s.refr[j] = info.refractory;
                    } else {
                        s.pv[j] = ph;
                        s.qv[j] = qh;
                    }
                }
            }
            // Scatter this step's output into future inputs.
            for (std::size_t ci : m.outgoing[p]) {
                const Conn& c = m.conns[ci];
                const std::size_t dn = m.pops[c.dst].n;
                const auto& w = c.block->weights;
                for (std::size_t i = 0; i < n; ++i) {
                    const double z = tr.z[p][base + i];
                    if (z == 0.0) {
                        continue;
                    }
                    for (std::uint32_t e = c.row_ptr[i]; e < c.row_ptr[i + 1]; ++e) {
                        const std::size_t ta = t + c.delay[e] + 1;
                        if (ta < T) {
                            in[c.dst][ta * dn + c.dst_neuron[e]] += w[c.weight_index[e]] * z;
                        }
                    }
                }
            }
        }
    }
    for (PopId p = 0; p < P; ++p) {
        if (m.pops[p].kind == PopKind::readout) {
            tr.readout[p] = st[p].rv;
        }
    }
    return tr;
}

// Per-sample quantities the batch-coupled losses need.
struct SampleSummary {
    std::vector<std::vector<double>> rate;                 // [pop][neuron], Hz; rate pops only
    std::vector<std::vector<std::vector<double>>> layer_rate; // [layer][instance][neuron], Hz
    double penalty_sum = 0.0;
    std::size_t voltage_samples = 0;
    std::size_t in_range = 0;
    std::vector<double> logits;
    double task_loss = 0.0;
    bool correct = false;
    std::size_t hard_spikes = 0;
    std::size_t spiking_neurons = 0;
    std::uint64_t pattern_hash = 0;
};

SampleSummary summarize(const Model& m, const Trace& tr, const TrainSample& sample,
                        const LossConfig& loss)
{
    SampleSummary s;
    const std::size_t P = m.pops.size();
    const double hz = 1000.0 / static_cast<double>(tr.T);
    s.rate.resize(P);
    s.layer_rate.resize(m.gtheta_layer_count);
    Fnv1a pattern;
    for (PopId p = 0; p < P; ++p) {
        const PopInfo& info = m.pops[p];
        if (info.kind != PopKind::spiking) {
            continue;
        }
        std::vector<double> r(info.n, 0.0);
        for (std::size_t t = 0; t < tr.T; ++t) {
            for (std::size_t j = 0; j < info.n; ++j) {
                const std::size_t k = t * info.n + j;
                r[j] += tr.z[p][k];
                s.hard_spikes += tr.hard[p][k];
                if (m.voltage_pop[p]) {
                    const double v = tr.v_s[p][k];
                    s.penalty_sum += voltage_penalty(v);
                    s.in_range += (v >= -2.0 && v <= 0.4) ? 1 : 0;
                    ++s.voltage_samples;
                }
            }
        }
        pattern.update(tr.hard[p].data(), tr.hard[p].size());
        s.spiking_neurons += info.n;
        for (auto& x : r) {
            x *= hz;
        }
        if (m.gtheta_layer[p] >= 0) {
            s.layer_rate[static_cast<std::size_t>(m.gtheta_layer[p])].push_back(r);
        }
        if (m.rate_pop[p]) {
            s.rate[p] = std::move(r);
        }
    }
    s.pattern_hash = pattern.digest();

    if (loss.task != TaskLoss::none) {
        const auto& v = tr.readout[loss.readout];
        s.logits.resize(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) {
            s.logits[k] = loss.readout_scale * v[k];
        }
        if (loss.task == TaskLoss::cross_entropy) {
            if (sample.label < 0 || static_cast<std::size_t>(sample.label) >= v.size()) {
                throw InvalidInput("sample label outside the readout range");
            }
            const double mx = *std::max_element(s.logits.begin(), s.logits.end());
            double z = 0.0;
            for (double l : s.logits) {
                z += std::exp(l - mx);
            }
            s.task_loss = -(s.logits[static_cast<std::size_t>(sample.label)] - mx - std::log(z));
            s.correct = argmax(s.logits) == static_cast<std::size_t>(sample.label);
        } else {
            if (sample.target.size() != v.size()) {
                throw InvalidInput("teacher target size does not match the readout dimension");
            }
            double sse = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double d = s.logits[k] - sample.target[k];
                sse += d * d;
            }
            s.task_loss = sse / static_cast<double>(v.size());
        }
    }
    return s;
}

// Batch statistics and the scalar losses derived from them.
struct BatchStats {
    std::vector<std::vector<double>> rate_mean;           // [pop][neuron]
    double rate_s = 0.0;                                  // sum_k (mean - target)^2
    double penalty_mean = 0.0;
    std::size_t voltage_samples = 0;
    std::vector<std::vector<double>> layer_mean;          // [layer][neuron]
    std::vector<double> layer_s;                          // mean_k (R - target)^2
    LossBreakdown loss;
};

BatchStats batch_stats(const Model& m, const std::vector<SampleSummary>& sums, const LossConfig& loss)
{
    BatchStats b;
    const double B = static_cast<double>(sums.size());
    const std::size_t P = m.pops.size();
    b.rate_mean.resize(P);
    double penalty = 0.0;
    for (const auto& s : sums) {
        penalty += s.penalty_sum;
        b.voltage_samples += s.voltage_samples;
        b.loss.task += s.task_loss / B;
    }
    for (PopId p = 0; p < P; ++p) {
        if (!m.rate_pop[p] || m.pops[p].kind != PopKind::spiking) {
            continue;
        }
        b.rate_mean[p].assign(m.pops[p].n, 0.0);
        for (const auto& s : sums) {
            for (std::size_t j = 0; j < m.pops[p].n; ++j) {
                b.rate_mean[p][j] += s.rate[p][j] / B;
            }
        }
        for (double r : b.rate_mean[p]) {
            b.rate_s += (r - loss.rho_target) * (r - loss.rho_target);
        }
    }
    b.penalty_mean = b.voltage_samples ? penalty / static_cast<double>(b.voltage_samples) : 0.0;
    b.layer_mean.resize(m.gtheta_layer_count);
    b.layer_s.assign(m.gtheta_layer_count, 0.0);
    for (std::size_t l = 0; l < m.gtheta_layer_count; ++l) {
        b.layer_mean[l].assign(m.layer_width[l], 0.0);
        for (const auto& s : sums) {
            for (const auto& inst : s.layer_rate[l]) {
                for (std::size_t k = 0; k < inst.size(); ++k) {
                    b.layer_mean[l][k] += inst[k] / B;
                }
            }
        }
        for (double r : b.layer_mean[l]) {
            b.layer_s[l] += (r - loss.R_target) * (r - loss.R_target);
        }
        b.layer_s[l] /= static_cast<double>(m.layer_width[l]);
        b.loss.gtheta += loss.lambda_R * b.layer_s[l] * b.layer_s[l];
    }
    b.loss.rate = loss.lambda_rho * b.rate_s * b.rate_s;
    b.loss.voltage = loss.lambda_v * b.penalty_mean * b.penalty_mean;
    b.loss.total = b.loss.task + b.loss.rate + b.loss.voltage + b.loss.gtheta;
    return b;
}

// Reverse pass for one sample; gradients are added into `grad` (indexed like
// model.trainable_blocks).
void backward(const Model& m, const Trace& tr, const TrainSample& sample, const SampleSummary& sum,
              const BatchStats& stats, const LossConfig& loss, const EngineOptions& opt,
              std::size_t batch, std::vector<std::vector<double>>& grad)
{
    const std::size_t T = tr.T;
    const std::size_t P = m.pops.size();
    const double B = static_cast<double>(batch);
    const double hz = 1000.0 / static_cast<double>(T);

    // dL/dz for every spiking population, seeded with the direct loss terms.
    std::vector<std::vector<double>> gz(P);
    for (PopId p = 0; p < P; ++p) {
        const PopInfo& info = m.pops[p];
        if (info.kind != PopKind::spiking) {
            continue;
        }
        gz[p].assign(T * info.n, 0.0);
        std::vector<double> direct(info.n, 0.0);
        if (m.rate_pop[p] && loss.lambda_rho > 0.0) {
            for (std::size_t j = 0; j < info.n; ++j) {
                direct[j] += loss.lambda_rho * 2.0 * stats.rate_s * 2.0 *
                             (stats.rate_mean[p][j] - loss.rho_target) * hz / B;
            }
        }
        if (m.gtheta_layer[p] >= 0 && loss.lambda_R > 0.0) {
            const auto l = static_cast<std::size_t>(m.gtheta_layer[p]);
            const double K = static_cast<double>(m.layer_width[l]);
            for (std::size_t j = 0; j < info.n; ++j) {
                direct[j] += loss.lambda_R * 2.0 * stats.layer_s[l] * 2.0 *
                             (stats.layer_mean[l][j] - loss.R_target) / K * hz / B;
            }
        }
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t j = 0; j < info.n; ++j) {
                gz[p][t * info.n + j] = direct[j];
            }
        }
    }

    // dL/dv_final of the readout.
    std::vector<double> g_out;
    if (loss.task != TaskLoss::none) {
        const std::size_t K = sum.logits.size();
        g_out.assign(K, 0.0);
        if (loss.task == TaskLoss::cross_entropy) {
            const auto p = softmax(sum.logits);
            for (std::size_t k = 0; k < K; ++k) {
                const double y = static_cast<std::size_t>(sample.label) == k ? 1.0 : 0.0;
                g_out[k] = (p[k] - y) * loss.readout_scale / B;
            }
        } else {
            for (std::size_t k = 0; k < K; ++k) {
                g_out[k] = 2.0 * (sum.logits[k] - sample.target[k]) * loss.readout_scale /
                           (static_cast<double>(K) * B);
            }
        }
    }
    const double v_coef = (loss.lambda_v > 0.0 && stats.voltage_samples > 0)
                              ? loss.lambda_v * 2.0 * stats.penalty_mean /
                                    static_cast<double>(stats.voltage_samples)
                              : 0.0;

    std::vector<std::size_t> slot(m.conns.size(), 0);
    for (std::size_t ci = 0; ci < m.conns.size(); ++ci) {
        const auto it = std::find(m.trainable_blocks.begin(), m.trainable_blocks.end(), m.conns[ci].block);
        slot[ci] = static_cast<std::size_t>(it - m.trainable_blocks.begin());
    }

    struct Carry {
        std::vector<double> gp, gq, gi, ga;
    };
    std::vector<Carry> carry(P);
    for (PopId p = 0; p < P; ++p) {
        const std::size_t n = m.pops[p].n;
        carry[p].gp.assign(n, 0.0);
        carry[p].gq.assign(n, 0.0);
        carry[p].gi.assign(n, 0.0);
        carry[p].ga.assign(n, 0.0);
    }
    std::vector<double> gin;

    for (std::size_t t = T; t-- > 0;) {
        for (PopId p = 0; p < P; ++p) {
            const PopInfo& info = m.pops[p];
            const std::size_t n = info.n;
            if (info.kind == PopKind::input) {
                continue;
            }
            Carry& c = carry[p];
            gin.assign(n, 0.0);
            if (info.kind == PopKind::readout) {
                const bool window = t + static_cast<std::size_t>(info.window) >= T;
                const bool is_task = loss.task != TaskLoss::none && p == loss.readout;
                for (std::size_t j = 0; j < n; ++j) {
                    double gi = c.gi[j];
                    if (window && is_task) {
                        gi += g_out[j];
                    }
                    gin[j] = gi;
                    c.gi[j] = info.a_i * gi;
                }
            } else {
                const std::size_t base = t * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t k = base + j;
                    double gi = c.gi[j];
                    double ga = c.ga[j];
                    if (tr.refractory[p][k]) {
                        c.gp[j] = 0.0;
                        c.gq[j] = 0.0;
                    } else {
                        const double vs = tr.v_s[p][k];
                        double gvs = gz[p][k] * pseudo_derivative(vs, opt.surrogate);
                        if (v_coef != 0.0 && m.voltage_pop[p]) {
                            const double d = 2.0 * std::max(vs - 0.4, 0.0) - 2.0 * std::max(-vs - 2.0, 0.0);
                            gvs += v_coef * d;
                        }
                        const double keep = tr.hard[p][k] ? 0.0 : 1.0;
                        const double D = info.b0 - tr.q_hat[p][k];
                        const double dp = c.gp[j] * keep + gvs / D;
                        const double dq = c.gq[j] * keep + gvs * tr.p_hat[p][k] / (D * D);
                        c.gp[j] = info.a_v * dp;
                        c.gq[j] = info.a_v * dq;
                        gi += dp / info.g_v;
                        ga += dq / info.g_v;
                    }
                    gin[j] = gi;
                    c.gi[j] = info.a_i * gi;
                    c.ga[j] = info.a_ahp[j] * ga;
                    if (t > 0 && info.beta[j] != 0.0) {
                        gz[p][k - n] -= info.beta[j] * ga;
                    }
                }
            }
            // Route input adjoints to weights and presynaptic outputs.
            for (std::size_t ci : m.incoming[p]) {
                const Conn& cn = m.conns[ci];
                const PopInfo& src = m.pops[cn.src];
                const bool src_spiking = src.kind == PopKind::spiking;
                const auto& w = cn.block->weights;
                double* gw = cn.trainable ? grad[slot[ci]].data() : nullptr;
                const std::size_t sn = src.n;
                for (std::size_t i = 0; i < sn; ++i) {
                    for (std::uint32_t e = cn.row_ptr[i]; e < cn.row_ptr[i + 1]; ++e) {
                        const std::size_t lag = static_cast<std::size_t>(cn.delay[e]) + 1;
                        if (t < lag) {
                            continue;
                        }
                        const std::size_t ts = (t - lag) * sn + i;
                        const double g = gin[cn.dst_neuron[e]];
                        if (gw != nullptr) {
                            gw[cn.weight_index[e]] += g * tr.z[cn.src][ts];
                        }
                        if (src_spiking) {
                            gz[cn.src][ts] += w[cn.weight_index[e]] * g;
                        }
                    }
                }
            }
        }
    }
}

BatchResult run_batch(const NetworkGraph& graph, std::span<const TrainSample> batch,
                      const LossConfig& loss, const EngineOptions& opt, bool with_gradients)
{
    opt.surrogate.validate();
    if (batch.empty()) {
        throw InvalidInput("batch must not be empty");
    }
    const Model m = compile(graph, loss);
    const std::size_t B = batch.size();
    std::vector<SampleSummary> sums(B);
    detail::parallel_for(B, opt.threads, [&](std::size_t b) {
        const Trace tr = forward(m, batch[b], opt);
        sums[b] = summarize(m, tr, batch[b], loss);
    });
    const BatchStats stats = batch_stats(m, sums, loss);

    BatchResult out;
    out.loss = stats.loss;
    std::size_t in_range = 0, spikes = 0, neurons = 0;
    Fnv1a pattern;
    for (const auto& s : sums) {
        out.logits.push_back(s.logits);
        out.correct += s.correct ? 1 : 0;
        in_range += s.in_range;
        spikes += s.hard_spikes;
        neurons += s.spiking_neurons;
        pattern.update_value(s.pattern_hash);
    }
    out.in_range = stats.voltage_samples ? static_cast<double>(in_range) /
                                               static_cast<double>(stats.voltage_samples)
                                         : 1.0;
    out.mean_spikes_per_neuron = neurons ? static_cast<double>(spikes) / static_cast<double>(neurons) : 0.0;
    out.hard_pattern = pattern.digest();
    if (!with_gradients) {
        return out;
    }

    // Per-sample gradients summed in sample order, independent of threads.
    std::vector<std::vector<std::vector<double>>> per_sample(B);
    detail::parallel_for(B, opt.threads, [&](std::size_t b) {
        auto& g = per_sample[b];
        g.resize(m.trainable_blocks.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            g[k].assign(m.trainable_blocks[k]->weights.size(), 0.0);
        }
        const Trace tr = forward(m, batch[b], opt);
        backward(m, tr, batch[b], sums[b], stats, loss, opt, B, g);
    });
    for (std::size_t k = 0; k < m.trainable_blocks.size(); ++k) {
        std::vector<double> total(m.trainable_blocks[k]->weights.size(), 0.0);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t e = 0; e < total.size(); ++e) {
                total[e] += per_sample[b][k][e];
            }
        }
        out.gradients.emplace(m.trainable_blocks[k], std::move(total));
    }
    return out;
}

} // namespace

void LossConfig::validate(const NetworkGraph& graph) const
{
    check_lambda(lambda_rho, "lambda_rho");
    check_lambda(lambda_v, "lambda_v");
    check_lambda(lambda_R, "lambda_R");
    if (!std::isfinite(readout_scale)) {
        throw InvalidParameter("readout_scale must be finite");
    }
    const std::size_t P = graph.population_count();
    if (task != TaskLoss::none && (readout >= P || !graph.population(readout).is_readout())) {
        throw InvalidInput("task loss needs a readout population");
    }
    auto spiking = [&](PopId p) {
        return p < P && !graph.population(p).is_input() && !graph.population(p).is_readout();
    };
    for (PopId p : rate_pops) {
        if (!spiking(p)) {
            throw InvalidInput("rate loss population is not a spiking population");
        }
    }
    for (PopId p : voltage_pops) {
        if (!spiking(p)) {
            throw InvalidInput("voltage loss population is not a spiking population");
        }
    }
    for (const auto& layer : gtheta_layers) {
        if (layer.empty()) {
            throw InvalidInput("g_theta layer without instances");
        }
        for (PopId p : layer) {
            if (!spiking(p) || graph.population(p).size != graph.population(layer.front()).size) {
                throw InvalidInput("g_theta layer instances must be spiking populations of equal size");
            }
        }
    }
}

BatchResult evaluate_batch(const NetworkGraph& graph, std::span<const TrainSample> batch,
                           const LossConfig& loss, const EngineOptions& options)
{
    return run_batch(graph, batch, loss, options, false);
}

BatchResult bptt_gradients(const NetworkGraph& graph, std::span<const TrainSample> batch,
                           const LossConfig& loss, const EngineOptions& options)
{
    return run_batch(graph, batch, loss, options, true);
}

// ---------------------------------------------------------------------------

void Optimizer::step(const BlockGradients& gradients)
{
    if (!(config_.learning_rate > 0.0)) {
        throw InvalidParameter("learning rate must be positive");
    }
    double scale = 1.0;
    if (config_.clip_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [block, g] : gradients) {
            for (double x : g) {
                sq += x * x;
            }
        }
        const double norm = std::sqrt(sq);
        if (norm > config_.clip_norm) {
            scale = config_.clip_norm / norm;
        }
    }
    ++t_;
    const double b1 = config_.momentum;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (const auto& [cblock, g] : gradients) {
        auto* block = const_cast<WeightBlock*>(cblock);
        if (block->frozen) {
            continue;
        }
        auto& m = m_[cblock];
        auto& v = v_[cblock];
        m.resize(g.size(), 0.0);
        v.resize(g.size(), 0.0);
        const bool sparse = block->pattern == Pattern::sparse;
        const auto it = lr_scale_.find(cblock);
        const double lr = config_.learning_rate * (it == lr_scale_.end() ? 1.0 : it->second);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (sparse && !block->mask[k]) {
                m[k] = 0.0;
                v[k] = 0.0;
                continue;
            }
            const double gk = g[k] * scale;
            if (config_.kind == OptimizerKind::momentum) {
                m[k] = b1 * m[k] + gk;
                block->weights[k] -= lr * m[k];
            } else {
                m[k] = b1 * m[k] + (1.0 - b1) * gk;
                v[k] = b2 * v[k] + (1.0 - b2) * gk * gk;
                block->weights[k] -= lr * (m[k] / c1) /
                                     (std::sqrt(v[k] / c2) + config_.epsilon);
            }
        }
    }
}

std::size_t rewire_sparse(WeightBlock& block, double initial_magnitude, Rng& rng)
{
    if (block.pattern != Pattern::sparse) {
        throw InvalidInput("rewiring applies to sparse blocks only");
    }
    if (block.frozen) {
        return 0;
    }
    if (!(initial_magnitude > 0.0)) {
        throw InvalidParameter("rewiring magnitude must be positive");
    }
    std::vector<std::size_t> dormant;
    std::size_t removed = 0;
    for (std::size_t i = 0; i < block.rows; ++i) {
        const auto sign = static_cast<double>(block.sign_of_row(i));
        for (std::size_t j = 0; j < block.cols; ++j) {
            const std::size_t k = block.index(i, j);
            if (!block.mask[k]) {
                dormant.push_back(k);
            } else if (sign != 0.0 && block.weights[k] * sign <= 0.0) {
                block.mask[k] = 0;
                block.weights[k] = 0.0;
                ++removed;
            }
        }
    }
    rng.shuffle(std::span<std::size_t>(dormant));
    const std::size_t revived = std::min(removed, dormant.size());
    for (std::size_t r = 0; r < revived; ++r) {
        const std::size_t k = dormant[r];
        double sign = static_cast<double>(block.sign_of_row(k / block.cols));
        if (sign == 0.0) {
            sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        }
        block.mask[k] = 1;
        block.weights[k] = sign * initial_magnitude;
    }
    return removed;
}

// ---------------------------------------------------------------------------

namespace {

struct AuxiliaryNet {
    Subgraph sub;
    PopId input = 0;
    PopId readout = 0;
    std::shared_ptr<WeightBlock> readout_block;
};

AuxiliaryNet auxiliary_net(const NetworkGraph& graph, PopId word_input, PopId lsnn,
                           std::size_t readout_dim, const PretrainConfig& config)
{
    if (readout_dim == 0) {
        throw InvalidInput("readout dimension must be positive");
    }
    const std::vector<PopId> keep{std::min(word_input, lsnn), std::max(word_input, lsnn)};
    AuxiliaryNet net;
    net.sub = extract_subgraph(graph, keep);
    net.input = *net.sub.from_original[word_input];
    const PopId l = *net.sub.from_original[lsnn];
    if (!net.sub.graph.population(net.input).is_input()) {
        throw InvalidInput("word input population must be an input source");
    }
    PopulationSpec out;
    out.name = "teacher_readout";
    out.size = readout_dim;
    out.params = NeuronParams::readout(5.0, config.readout_window);
    out.role = Role::readout;
    net.readout = net.sub.graph.add_population(out);
    net.readout_block = WeightBlock::dense("teacher_readout", net.sub.graph.population(l).size, readout_dim);
    Rng rng(config.seed, "teacher_readout");
    const double sd = 1.0 / std::sqrt(static_cast<double>(net.sub.graph.population(l).size));
    for (auto& w : net.readout_block->weights) {
        w = rng.normal(0.0, sd);
    }
    net.sub.graph.connect(l, net.readout, net.readout_block);
    return net;
}

std::vector<TrainSample> teacher_batch(const AuxiliaryNet& net, std::span<const TeacherSample> samples,
                                       std::size_t readout_dim)
{
    std::vector<TrainSample> out;
    out.reserve(samples.size());
    const std::size_t vocab = net.sub.graph.population(net.input).size;
    for (const auto& s : samples) {
        if (s.target.size() != readout_dim) {
            throw InvalidInput("teacher vector dimension does not match the readout dimension");
        }
        if (s.words.neurons() != vocab) {
            throw InvalidInput("word spike train does not match the vocabulary size");
        }
        TrainSample t;
        t.inputs[net.input] = s.words;
        t.steps = s.words.steps();
        t.target = s.target;
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

std::vector<std::vector<double>> teacher_readout_outputs(const NetworkGraph& graph, PopId word_input,
                                                         PopId lsnn, std::span<const TeacherSample> samples,
                                                         std::size_t readout_dim, const PretrainConfig& config)
{
    const AuxiliaryNet net = auxiliary_net(graph, word_input, lsnn, readout_dim, config);
    std::vector<TeacherSample> probe(samples.begin(), samples.end());
    for (auto& s : probe) {
        s.target.assign(readout_dim, 0.0);
    }
    const auto batch = teacher_batch(net, probe, readout_dim);
    LossConfig loss;
    loss.task = TaskLoss::mse_teacher;
    loss.readout = net.readout;
    loss.readout_scale = config.readout_scale;
    return evaluate_batch(net.sub.graph, batch, loss).logits;
}

PretrainResult pretrain_teacher_matching(NetworkGraph& graph, PopId word_input, PopId lsnn,
                                         std::span<const TeacherSample> samples,
                                         std::size_t readout_dim, const PretrainConfig& config)
{
    if (samples.empty() || config.batch_size == 0) {
        throw InvalidInput("teacher matching needs samples and a positive batch size");
    }
    AuxiliaryNet net = auxiliary_net(graph, word_input, lsnn, readout_dim, config);
    const auto data = teacher_batch(net, samples, readout_dim);
    LossConfig loss;
    loss.task = TaskLoss::mse_teacher;
    loss.readout = net.readout;
    loss.readout_scale = config.readout_scale;
    loss.lambda_v = config.lambda_v;

    PretrainResult result;
    Optimizer opt(config.optimizer);
    Rng rng(config.seed, "teacher_batches");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    result.initial_loss = evaluate_batch(net.sub.graph, data, loss).loss.task;
    for (std::size_t e = 0; e < config.epochs; ++e) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::vector<TrainSample> batch;
            for (std::size_t k = start; k < std::min(order.size(), start + config.batch_size); ++k) {
                batch.push_back(data[order[k]]);
            }
            const auto r = bptt_gradients(net.sub.graph, batch, loss);
            opt.step(r.gradients);
        }
        result.epoch_loss.push_back(evaluate_batch(net.sub.graph, data, loss).loss.task);
    }
    result.final_loss = result.epoch_loss.empty() ? result.initial_loss : result.epoch_loss.back();
    for (std::size_t ci : graph.incoming(lsnn)) {
        graph.connection(ci).block->frozen = true;
    }
    return result;
}

} // namespace snn
