#include "snn/builders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "snn/errors.hpp"

namespace snn {

namespace {

std::vector<std::uint32_t> draw_subset(std::size_t n, std::size_t k, Rng& rng)
{
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0U);
    rng.shuffle(std::span<std::uint32_t>(idx));
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Exactly round(density * rows * cols) active synapses, uniformly placed.
void init_mask(WeightBlock& block, double density, Rng& rng)
{
    const std::size_t total = block.rows * block.cols;
    const auto active = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
    std::vector<std::uint32_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0U);
    for (std::size_t i = 0; i < active; ++i) {
        std::swap(idx[i], idx[i + rng.below(total - i)]);
    }
    std::fill(block.mask.begin(), block.mask.end(), std::uint8_t{0});
    for (std::size_t i = 0; i < active; ++i) {
        block.mask[idx[i]] = 1;
    }
}

void apply_row_signs(WeightBlock& block)
{
    if (block.row_signs.empty()) {
        return;
    }
    for (std::size_t r = 0; r < block.rows; ++r) {
        const auto sign = block.row_signs[r];
        if (sign == SignConstraint::none) {
            continue;
        }
        const double s = sign == SignConstraint::excitatory ? 1.0 : -1.0;
        for (std::size_t c = 0; c < block.cols; ++c) {
            auto& w = block.weights[block.index(r, c)];
            w = s * std::abs(w);
        }
    }
}

PopulationSpec lsnn_population(std::string name, std::size_t size, std::size_t ahp,
                               const NeuronParams& params, std::vector<std::uint32_t> subset)
{
    PopulationSpec p;
    p.name = std::move(name);
    p.size = size;
    p.role = Role::lsnn;
    if (ahp == 0) {
        p.params = params.without_ahp();
    } else {
        p.params = params;
        if (ahp < size) {
            p.ahp_subset = std::move(subset);
        }
    }
    return p;
}

} // namespace

void init_gaussian(WeightBlock& block, double gain, double b0, std::size_t fanin, Rng& rng)
{
    const double sd = gain * b0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fanin, 1)));
    for (auto& w : block.weights) {
        w = rng.normal(0.0, sd);
    }
}

void init_delays(WeightBlock& block, int lo, int hi, Rng& rng)
{
    if (lo < 0 || hi < lo || hi > 255) {
        throw InvalidParameter("delay range must satisfy 0 <= lo <= hi <= 255");
    }
    for (auto& d : block.delays) {
        d = static_cast<std::uint8_t>(rng.uniform_int(lo, hi));
    }
}

NetworkGraph build_lsnn(const LsnnConfig& config, std::uint64_t seed)
{
    if (config.size == 0) {
        throw InvalidParameter("build_lsnn: size must be positive");
    }
    if (!(config.ahp_fraction >= 0.0 && config.ahp_fraction <= 1.0)) {
        throw InvalidParameter("build_lsnn: ahp_fraction must lie in [0, 1]");
    }
    Rng rng(seed, "lsnn");
    const auto ahp = static_cast<std::size_t>(
        std::llround(config.ahp_fraction * static_cast<double>(config.size)));
    NetworkGraph g;
    const PopId pop = g.add_population(lsnn_population(
        "lsnn", config.size, ahp, config.params, draw_subset(config.size, ahp, rng)));
    auto rec = WeightBlock::dense("lsnn.rec", config.size, config.size);
    init_gaussian(*rec, config.weight_gain, config.params.b0, config.size, rng);
    init_delays(*rec, config.delay_min, config.delay_max, rng);
    if (!config.self_connections) {
        rec->pattern = Pattern::sparse;
        rec->mask.assign(config.size * config.size, 1);
        for (std::size_t i = 0; i < config.size; ++i) {
            rec->mask[rec->index(i, i)] = 0;
            rec->weights[rec->index(i, i)] = 0.0;
        }
    }
    g.connect(pop, pop, rec);
    g.validate();
    return g;
}

NetworkGraph build_smnist_network(const SmnistConfig& c, std::uint64_t seed)
{
    if (c.excitatory > c.recurrent || c.ahp_neurons > c.excitatory || c.inputs == 0 ||
        c.outputs == 0 || !(c.density > 0.0 && c.density <= 1.0)) {
        throw InvalidParameter("build_smnist_network: inconsistent population sizes or density");
    }
    Rng rng(seed, "smnist");
    NetworkGraph g;

    PopulationSpec in;
    in.name = "input";
    in.size = c.inputs;
    in.params = NeuronParams::input_source();
    in.role = Role::input;
    const PopId input = g.add_population(std::move(in));

    PopulationSpec rec;
    rec.name = "recurrent";
    rec.size = c.recurrent;
    rec.role = Role::recurrent;
    rec.params = NeuronParams::lif_ahp(c.tau_v, c.tau_i, c.tau_ahp, c.beta, c.b0, c.refractory);
    if (c.ahp_neurons == 0) {
        rec.params = rec.params.without_ahp();
    } else {
        rec.ahp_subset = draw_subset(c.excitatory, c.ahp_neurons, rng);
    }
    const PopId recurrent = g.add_population(std::move(rec));

    PopulationSpec out;
    out.name = "readout";
    out.size = c.outputs;
    out.role = Role::readout;
    out.params = NeuronParams::readout(c.tau_readout, c.readout_window);
    const PopId readout = g.add_population(std::move(out));

    std::vector<SignConstraint> signs(c.recurrent, SignConstraint::excitatory);
    std::fill(signs.begin() + static_cast<std::ptrdiff_t>(c.excitatory), signs.end(),
              SignConstraint::inhibitory);

    auto make = [&](const char* tag, std::size_t rows, std::size_t cols, double gain,
                    bool signed_rows) {
        auto b = WeightBlock::sparse(tag, rows, cols);
        init_mask(*b, c.density, rng);
        const auto fanin = static_cast<std::size_t>(std::max(1.0, c.density * rows));
        init_gaussian(*b, gain, c.b0, fanin, rng);
        std::fill(b->delays.begin(), b->delays.end(), static_cast<std::uint8_t>(c.delay));
        if (signed_rows) {
            b->row_signs = signs;
            apply_row_signs(*b);
            if (c.balance_inhibition && c.excitatory < c.recurrent) {
                const double ratio = static_cast<double>(c.excitatory) /
                                     static_cast<double>(c.recurrent - c.excitatory);
                for (std::size_t r = c.excitatory; r < rows; ++r) {
                    for (std::size_t j = 0; j < cols; ++j) {
                        b->weights[b->index(r, j)] *= ratio;
                    }
                }
            }
        }
        for (std::size_t k = 0; k < b->mask.size(); ++k) {
            if (!b->mask[k]) {
                b->weights[k] = 0.0;
            }
        }
        return b;
    };
    auto in_block = make("smnist.in", c.inputs, c.recurrent, c.input_gain, false);
    if (c.end_marker_weight != 0.0) {
        const std::size_t marker = c.inputs - 1;
        for (std::size_t j = 0; j < c.recurrent; ++j) {
            in_block->mask[in_block->index(marker, j)] = 1;
            in_block->weights[in_block->index(marker, j)] = c.end_marker_weight;
        }
    }
    g.connect(input, recurrent, std::move(in_block));
    g.connect(recurrent, recurrent,
              make("smnist.rec", c.recurrent, c.recurrent, c.recurrent_gain, true));
    g.connect(recurrent, readout, make("smnist.out", c.recurrent, c.outputs, c.readout_gain, true));
    g.metadata()["network"] = "smnist";
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------

void RelNetConfig::validate() const
{
    if (M < 1) {
        throw InvalidParameter("RelNet: M must be at least 1");
    }
    if (vocab < 1) {
        throw InvalidParameter("RelNet: vocab must be at least 1");
    }
    if (lsnn_size == 0 || lsnn_ahp > lsnn_size || gtheta_layers.empty() || fphi_layers.empty() ||
        aggregation == 0 || gtheta_layers.back() != aggregation) {
        throw InvalidParameter("RelNet: inconsistent layer sizes");
    }
    if (T_word < 1 || N_words < 1 || T_inp < 1 || T_sim < T_inp || T_readout < 0 ||
        T_readout > T_sim) {
        throw InvalidParameter("RelNet: inconsistent timing constants");
    }
    if (delay_min < 1 || delay_max < delay_min) {
        throw InvalidParameter("RelNet: delays must lie in [1, delay_max]");
    }
    lsnn_params.validate();
    ff_params.validate();
}

std::vector<PairIndex> relnet_pairs(int M)
{
    std::vector<PairIndex> pairs;
    for (int i = 1; i <= M; ++i) {
        for (int j = i; j <= M; ++j) {
            pairs.push_back({i, j});
        }
    }
    return pairs;
}

std::string word_input_name(int sentence)
{
    return sentence == 0 ? std::string("words.q") : "words.s" + std::to_string(sentence);
}

std::string lsnn_name(int sentence)
{
    return sentence == 0 ? std::string("lsnn.q") : "lsnn.s" + std::to_string(sentence);
}

std::string gtheta_name(PairIndex pair, int layer)
{
    return "gtheta." + std::to_string(pair.i) + "." + std::to_string(pair.j) + ".l" +
           std::to_string(layer);
}

std::string relay_name(int sentence, int group)
{
    return "relay." + (sentence == 0 ? std::string("q") : "s" + std::to_string(sentence)) + ".g" +
           std::to_string(group);
}

NetworkGraph build_relnet(const RelNetConfig& c, std::uint64_t seed)
{
    c.validate();
    Rng rng(seed, "relnet");
    NetworkGraph g;
    const double b0 = c.ff_params.b0;

    // Word inputs and LSNNs. Sentence LSNNs share one parameter set (and AHP
    // subset); the question LSNN has its own.
    std::vector<PopId> words(static_cast<std::size_t>(c.M) + 1);
    for (int s = 0; s <= c.M; ++s) {
        PopulationSpec p;
        p.name = word_input_name(s);
        p.size = c.vocab;
        p.params = NeuronParams::input_source();
        p.role = Role::input;
        p.sentence = s;
        words[static_cast<std::size_t>(s)] = g.add_population(std::move(p));
    }

    auto lsnn_blocks = [&](const std::string& tag) {
        auto in = WeightBlock::dense("lsnn." + tag + ".in", c.vocab, c.lsnn_size);
        init_gaussian(*in, c.lsnn_input_gain, c.lsnn_params.b0, 1, rng);
        init_delays(*in, c.delay_min, c.delay_max, rng);
        auto rec = WeightBlock::dense("lsnn." + tag + ".rec", c.lsnn_size, c.lsnn_size);
        init_gaussian(*rec, c.lsnn_recurrent_gain, c.lsnn_params.b0, c.lsnn_size, rng);
        init_delays(*rec, c.delay_min, c.delay_max, rng);
        if (!c.lsnn_self_connections) {
            rec->pattern = Pattern::sparse;
            rec->mask.assign(c.lsnn_size * c.lsnn_size, 1);
            for (std::size_t i = 0; i < c.lsnn_size; ++i) {
                rec->mask[rec->index(i, i)] = 0;
                rec->weights[rec->index(i, i)] = 0.0;
            }
        }
        return std::pair{in, rec};
    };
    const auto q_subset = draw_subset(c.lsnn_size, c.lsnn_ahp, rng);
    const auto s_subset = draw_subset(c.lsnn_size, c.lsnn_ahp, rng);
    const auto [q_in, q_rec] = lsnn_blocks("question");
    const auto [s_in, s_rec] = lsnn_blocks("sentence");

    std::vector<PopId> lsnn(static_cast<std::size_t>(c.M) + 1);
    for (int s = 0; s <= c.M; ++s) {
        auto spec = lsnn_population(lsnn_name(s), c.lsnn_size, c.lsnn_ahp, c.lsnn_params,
                                    s == 0 ? q_subset : s_subset);
        spec.sentence = s;
        const PopId id = g.add_population(std::move(spec));
        lsnn[static_cast<std::size_t>(s)] = id;
        g.connect(words[static_cast<std::size_t>(s)], id, s == 0 ? q_in : s_in);
        g.connect(id, id, s == 0 ? q_rec : s_rec);
    }

    // g_theta blocks shared by every instance.
    const std::size_t h1 = c.gtheta_layers.front();
    auto slot = [&](const char* tag) {
        auto b = WeightBlock::dense(tag, c.lsnn_size, h1);
        init_gaussian(*b, c.gtheta_gain, b0, 3 * c.lsnn_size, rng);
        init_delays(*b, c.delay_min, c.delay_max, rng);
        return b;
    };
    const auto slot_i = slot("gtheta.l1.slot_i");
    const auto slot_j = slot("gtheta.l1.slot_j");
    const auto slot_q = slot("gtheta.l1.slot_q");
    std::vector<std::shared_ptr<WeightBlock>> deeper;
    for (std::size_t l = 1; l < c.gtheta_layers.size(); ++l) {
        auto b = WeightBlock::dense("gtheta.l" + std::to_string(l + 1), c.gtheta_layers[l - 1],
                                    c.gtheta_layers[l]);
        init_gaussian(*b, c.ff_gain, b0, c.gtheta_layers[l - 1], rng);
        init_delays(*b, c.delay_min, c.delay_max, rng);
        deeper.push_back(b);
    }
    auto agg_block = WeightBlock::one_to_one("aggregation", c.aggregation);
    std::fill(agg_block->weights.begin(), agg_block->weights.end(), c.aggregation_weight);
    init_delays(*agg_block, c.delay_min, c.delay_max, rng);

    std::vector<PopId> last_layers;
    for (const PairIndex pair : relnet_pairs(c.M)) {
        PopId prev = 0;
        for (std::size_t l = 0; l < c.gtheta_layers.size(); ++l) {
            PopulationSpec p;
            p.name = gtheta_name(pair, static_cast<int>(l) + 1);
            p.size = c.gtheta_layers[l];
            p.params = c.ff_params;
            p.role = Role::gtheta;
            p.layer = static_cast<int>(l) + 1;
            p.pair = pair;
            const PopId id = g.add_population(std::move(p));
            if (l == 0) {
                g.connect(lsnn[static_cast<std::size_t>(pair.i)], id, slot_i);
                g.connect(lsnn[static_cast<std::size_t>(pair.j)], id, slot_j);
                g.connect(lsnn[0], id, slot_q);
            } else {
                g.connect(prev, id, deeper[l - 1]);
            }
            prev = id;
        }
        last_layers.push_back(prev);
    }

    PopulationSpec agg;
    agg.name = "aggregation";
    agg.size = c.aggregation;
    agg.params = c.ff_params;
    agg.role = Role::aggregation;
    const PopId aggregation = g.add_population(std::move(agg));
    for (PopId src : last_layers) {
        g.connect(src, aggregation, agg_block);
    }

    PopId prev = aggregation;
    std::size_t prev_size = c.aggregation;
    for (std::size_t l = 0; l < c.fphi_layers.size(); ++l) {
        PopulationSpec p;
        p.name = "fphi.l" + std::to_string(l + 1);
        p.size = c.fphi_layers[l];
        p.params = c.ff_params;
        p.role = Role::fphi;
        p.layer = static_cast<int>(l) + 1;
        const PopId id = g.add_population(std::move(p));
        auto b = WeightBlock::dense("fphi.l" + std::to_string(l + 1), prev_size, c.fphi_layers[l]);
        init_gaussian(*b, c.ff_gain, b0, prev_size, rng);
        init_delays(*b, c.delay_min, c.delay_max, rng);
        g.connect(prev, id, b);
        prev = id;
        prev_size = c.fphi_layers[l];
    }

    PopulationSpec out;
    out.name = "readout";
    out.size = c.vocab;
    out.params = NeuronParams::readout(c.tau_readout, c.T_readout);
    out.role = Role::readout;
    const PopId readout = g.add_population(std::move(out));
    auto rb = WeightBlock::dense("readout", prev_size, c.vocab);
    init_gaussian(*rb, 1.0, 1.0, prev_size, rng);
    init_delays(*rb, c.delay_min, c.delay_max, rng);
    g.connect(prev, readout, rb);

    auto& meta = g.metadata();
    meta["network"] = "relnet";
    meta["M"] = std::to_string(c.M);
    meta["vocab"] = std::to_string(c.vocab);
    meta["T_word"] = std::to_string(c.T_word);
    meta["N_words"] = std::to_string(c.N_words);
    meta["T_inp"] = std::to_string(c.T_inp);
    meta["T_sim"] = std::to_string(c.T_sim);
    meta["T_readout"] = std::to_string(c.T_readout);
    g.validate();
    return g;
}

} // namespace snn
