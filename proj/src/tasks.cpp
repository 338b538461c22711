#include "snn/tasks.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>

#include "snn/errors.hpp"
#include "snn/simulator.hpp"

namespace snn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Evaluation {
    double accuracy = 0.0;
    double in_range = 0.0;
    double spikes_per_neuron = 0.0;
    double loss = 0.0;
};

// Evaluates in chunks so memory stays bounded; batch-coupled regularizers
// are reported per chunk and averaged.
Evaluation evaluate_all(const NetworkGraph& graph, const std::vector<TrainSample>& samples,
                        const LossConfig& loss, unsigned threads)
{
    Evaluation ev;
    if (samples.empty()) {
        return ev;
    }
    EngineOptions opt;
    opt.threads = threads;
    constexpr std::size_t chunk = 50;
    std::size_t correct = 0;
    double in_range = 0.0, spikes = 0.0, total = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        const std::size_t n = std::min(chunk, samples.size() - start);
        const auto r = evaluate_batch(graph, std::span<const TrainSample>(samples.data() + start, n), loss, opt);
        correct += r.correct;
        in_range += r.in_range * static_cast<double>(n);
        spikes += r.mean_spikes_per_neuron * static_cast<double>(n);
        total += r.loss.total * static_cast<double>(n);
    }
    const auto N = static_cast<double>(samples.size());
    ev.accuracy = static_cast<double>(correct) / N;
    ev.in_range = in_range / N;
    ev.spikes_per_neuron = spikes / N;
    ev.loss = total / N;
    return ev;
}

// One pass over `data` in shuffled minibatches. Returns (mean loss, accuracy)
// measured on each batch before its update.
std::pair<double, double> run_epoch(NetworkGraph& graph, const std::vector<TrainSample>& data,
                                    const LossConfig& loss, Optimizer& opt, std::size_t batch_size,
                                    Rng& order_rng, unsigned threads,
                                    const std::function<void()>& after_step)
{
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(std::span<std::size_t>(order));
    EngineOptions eopt;
    eopt.threads = threads;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<TrainSample> batch;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        batch.clear();
        for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
            batch.push_back(data[order[k]]);
        }
        const auto r = bptt_gradients(graph, batch, loss, eopt);
        loss_sum += r.loss.total * static_cast<double>(batch.size());
        correct += r.correct;
        opt.step(r.gradients);
        if (after_step) {
            after_step();
        }
    }
    const auto N = static_cast<double>(data.size());
    return {loss_sum / N, static_cast<double>(correct) / N};
}

} // namespace

std::vector<TrainSample> encode_image_set(const ImageSet& set, const std::vector<int>& digits,
                                          const ThresholdEncoderConfig& encoder, PopId input,
                                          std::size_t limit)
{
    std::vector<TrainSample> out;
    for (std::size_t k = 0; k < set.size() && out.size() < limit; ++k) {
        const auto it = std::find(digits.begin(), digits.end(), static_cast<int>(set.labels[k]));
        if (it == digits.end()) {
            continue;
        }
        TrainSample s;
        s.inputs[input] = encode_pixels(std::span<const std::uint8_t>(set.images[k]), encoder);
        s.steps = encoder.total_steps();
        s.label = static_cast<int>(it - digits.begin());
        out.push_back(std::move(s));
    }
    return out;
}

double smnist_accuracy(const NetworkGraph& graph, const std::vector<TrainSample>& samples, unsigned threads)
{
    if (samples.empty()) {
        return 0.0;
    }
    const PopId input = graph.require("input");
    SimOptions sim;
    sim.threads = threads;
    std::size_t correct = 0;
    for (const auto& s : samples) {
        correct += classify_smnist(graph, s.inputs.at(input), sim) == static_cast<std::size_t>(s.label) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

SmnistReport train_smnist(NetworkGraph& graph, const ImageSet& train, const ImageSet& heldout,
                          const SmnistTask& task, const ProgressFn& progress)
{
    if (task.batch_size == 0 || task.digits.size() < 2) {
        throw InvalidParameter("sMNIST training needs a positive batch size and at least two digits");
    }
    const PopId input = graph.require("input");
    const PopId rec = graph.require("recurrent");
    const PopId readout = graph.require("readout");
    if (graph.population(readout).size < task.digits.size()) {
        throw InvalidInput("readout has fewer neurons than classes");
    }
    const auto start = Clock::now();
    SmnistReport rep;
    const auto train_set = encode_image_set(train, task.digits, task.encoder, input, task.max_train);
    const auto test_set = encode_image_set(heldout, task.digits, task.encoder, input, heldout.size());
    rep.train_samples = train_set.size();
    rep.heldout_samples = test_set.size();
    if (train_set.empty()) {
        throw InvalidInput("no training images with the requested digits");
    }

    LossConfig loss;
    loss.task = TaskLoss::cross_entropy;
    loss.readout = readout;
    loss.readout_scale = task.readout_scale;
    loss.lambda_v = task.lambda_v;
    loss.voltage_pops = {rec};
    loss.lambda_rho = task.lambda_rho;
    loss.rho_target = task.rho_target;
    loss.rate_pops = {rec};

    rep.initial_in_range = evaluate_all(graph, test_set, loss, task.threads).in_range;

    std::vector<std::shared_ptr<WeightBlock>> signed_blocks;
    for (const auto& b : graph.blocks()) {
        if (b->pattern == Pattern::sparse && !b->row_signs.empty()) {
            signed_blocks.push_back(b);
        }
    }
    Optimizer opt(task.optimizer);
    for (const auto& c : graph.connections()) {
        if (c.dst == readout) {
            opt.set_block_scale(*c.block, task.readout_lr_scale);
        }
    }
    Rng order_rng(task.seed, "smnist-order");
    Rng rewire_rng(task.seed, "smnist-rewire");
    const auto rewire = [&] {
        for (const auto& b : signed_blocks) {
            rewire_sparse(*b, task.rewire_magnitude, rewire_rng);
        }
    };
    for (std::size_t e = 0; e < task.epochs; ++e) {
        EpochReport r;
        r.epoch = e + 1;
        std::tie(r.train_loss, r.train_accuracy) =
            run_epoch(graph, train_set, loss, opt, task.batch_size, order_rng, task.threads, rewire);
        const auto ev = evaluate_all(graph, test_set, loss, task.threads);
        r.heldout_accuracy = ev.accuracy;
        r.in_range = ev.in_range;
        r.spikes_per_neuron = ev.spikes_per_neuron;
        r.seconds = seconds_since(start);
        rep.epochs.push_back(r);
        if (progress) {
            progress(r);
        }
        opt.set_learning_rate(opt.config().learning_rate * task.lr_decay);
        if (task.time_budget_s > 0.0 && r.seconds > task.time_budget_s) {
            break;
        }
    }
    if (!rep.epochs.empty()) {
        rep.heldout_accuracy = rep.epochs.back().heldout_accuracy;
        rep.in_range = rep.epochs.back().in_range;
    } else {
        const auto ev = evaluate_all(graph, test_set, loss, task.threads);
        rep.heldout_accuracy = ev.accuracy;
        rep.in_range = ev.in_range;
    }
    rep.seconds = seconds_since(start);
    return rep;
}

// ---------------------------------------------------------------------------

RelNetConfig PairMatchingTask::relnet_config() const
{
    RelNetConfig c;
    c.M = M;
    c.vocab = std::max<std::size_t>(symbols, 2);
    c.lsnn_size = embedding;
    c.lsnn_ahp = embedding / 2;
    c.gtheta_layers = gtheta_layers;
    c.aggregation = aggregation;
    c.fphi_layers = fphi_layers;
    return c;
}

PairMatchingData make_pair_matching(const NetworkGraph& relnet, const PairMatchingTask& task)
{
    if (task.symbols < 2 || task.M < 2) {
        throw InvalidParameter("pair matching needs at least two symbols and two sentences");
    }
    const auto meta = [&](const char* key) { return std::stoi(relnet.metadata().at(key)); };
    const int T_inp = meta("T_inp");
    const int T_sim = meta("T_sim");
    const int T_readout = meta("T_readout");

    PairMatchingData d;
    d.net = relnet_feedforward(relnet, task.M);
    const auto& g = d.net.graph;

    Rng pattern_rng(task.seed, "pair-patterns");
    std::vector<SpikeMatrix> patterns;
    for (std::size_t s = 0; s < task.symbols; ++s) {
        SpikeMatrix m(task.embedding, static_cast<std::size_t>(T_inp));
        for (std::size_t t = 0; t < m.steps(); ++t) {
            for (std::size_t j = 0; j < m.neurons(); ++j) {
                m.set(j, t, pattern_rng.bernoulli(task.pattern_density));
            }
        }
        patterns.push_back(std::move(m));
    }

    const auto K = static_cast<int>(task.symbols);
    Rng story_rng(task.seed, "pair-stories");
    const auto embed = [&](int symbol) {
        SpikeMatrix m(task.embedding, static_cast<std::size_t>(T_sim));
        const auto& p = patterns[static_cast<std::size_t>(symbol)];
        for (std::size_t t = 0; t < p.steps(); ++t) {
            for (std::size_t j = 0; j < p.neurons(); ++j) {
                m.set(j, t, p.get(j, t) != story_rng.bernoulli(task.jitter));
            }
        }
        return m;
    };
    const auto make = [&](std::size_t n) {
        std::vector<TrainSample> out;
        for (std::size_t k = 0; k < n; ++k) {
            const int want = static_cast<int>(k % 2);
            std::vector<int> sym(static_cast<std::size_t>(task.M));
            int q = 0;
            for (;;) {
                for (auto& s : sym) {
                    s = story_rng.uniform_int(0, K - 1);
                }
                q = story_rng.uniform_int(0, K - 1);
                bool match = false;
                for (std::size_t a = 0; a < sym.size() && !match; ++a) {
                    for (std::size_t b = a + 1; b < sym.size() && !match; ++b) {
                        match = (sym[a] + sym[b]) % K == q;
                    }
                }
                if (static_cast<int>(match) == want) {
                    break;
                }
            }
            TrainSample s;
            s.steps = static_cast<std::size_t>(T_sim);
            s.label = want;
            s.inputs[*d.net.from_original[relnet.require(lsnn_name(0))]] = embed(q);
            for (int i = 1; i <= task.M; ++i) {
                s.inputs[*d.net.from_original[relnet.require(lsnn_name(i))]] =
                    embed(sym[static_cast<std::size_t>(i - 1)]);
            }
            out.push_back(std::move(s));
        }
        return out;
    };
    d.train = make(task.train_stories);
    d.test = make(task.test_stories);

    d.loss.task = TaskLoss::cross_entropy;
    d.loss.readout = g.require("readout");
    d.loss.readout_scale = 1.0 / std::max(1, T_readout);
    d.loss.lambda_R = task.lambda_R;
    d.loss.R_target = task.R_target;
    d.loss.lambda_rho = task.lambda_rho;
    d.loss.rho_target = task.rho_target;
    d.loss.lambda_v = task.lambda_v;
    std::map<int, std::vector<PopId>> layers;
    for (PopId p = 0; p < g.population_count(); ++p) {
        if (g.population(p).role == Role::gtheta) {
            layers[g.population(p).layer].push_back(p);
        }
    }
    for (auto& [layer, pops] : layers) {
        d.loss.gtheta_layers.push_back(std::move(pops));
    }
    return d;
}

PairMatchingReport train_pair_matching(const PairMatchingTask& task, const ProgressFn& progress)
{
    const auto start = Clock::now();
    const NetworkGraph relnet = build_relnet(task.relnet_config(), task.seed);
    PairMatchingData d = make_pair_matching(relnet, task);
    NetworkGraph& g = d.net.graph;

    Optimizer opt(task.optimizer);
    Rng order_rng(task.seed, "pair-order");
    PairMatchingReport rep;
    for (std::size_t e = 0; e < task.epochs; ++e) {
        EpochReport r;
        r.epoch = e + 1;
        std::tie(r.train_loss, r.train_accuracy) =
            run_epoch(g, d.train, d.loss, opt, task.batch_size, order_rng, task.threads, {});
        const auto ev = evaluate_all(g, d.test, d.loss, task.threads);
        r.heldout_accuracy = ev.accuracy;
        r.in_range = ev.in_range;
        r.spikes_per_neuron = ev.spikes_per_neuron;
        r.seconds = seconds_since(start);
        rep.epochs.push_back(r);
        if (progress) {
            progress(r);
        }
    }

    // Final statistics from the event simulator on the held-out stories.
    std::size_t correct = 0;
    double spikes = 0.0, gtheta = 0.0, summed = 0.0;
    const PopId readout = d.loss.readout;
    const double T_sim = static_cast<double>(d.test.front().steps);
    for (const auto& s : d.test) {
        const auto sim = simulate(g, s.inputs, s.steps);
        const auto m = metrics(sim.raster, g);
        spikes += m.mean_spikes_per_neuron;
        gtheta += m.spikes_per_neuron.count(Role::gtheta) ? m.spikes_per_neuron.at(Role::gtheta) : 0.0;
        double layer_sum = 0.0;
        for (const auto& layer : d.loss.gtheta_layers) {
            std::vector<double> per_neuron(g.population(layer.front()).size, 0.0);
            for (PopId p : layer) {
                for (std::size_t k = 0; k < per_neuron.size(); ++k) {
                    per_neuron[k] += static_cast<double>(m.counts[p][k]) * 1000.0 / T_sim;
                }
            }
            layer_sum += std::accumulate(per_neuron.begin(), per_neuron.end(), 0.0) /
                         static_cast<double>(per_neuron.size());
        }
        summed += layer_sum / static_cast<double>(d.loss.gtheta_layers.size());
        correct += argmax(sim.readout.at(readout)) == static_cast<std::size_t>(s.label) ? 1 : 0;
    }
    const auto N = static_cast<double>(d.test.size());
    rep.heldout_accuracy = static_cast<double>(correct) / N;
    rep.spikes_per_neuron = spikes / N;
    rep.gtheta_spikes_per_instance = gtheta / N;
    rep.gtheta_summed_rate_hz = summed / N;
    for (const auto& p : g.populations()) {
        rep.neurons += p.is_input() ? 0 : p.size;
    }
    return rep;
}

} // namespace snn
