#include <gtest/gtest.h>

#include <set>

#include "snn/builders.hpp"
#include "snn/errors.hpp"
#include "snn/graph.hpp"

using namespace snn;

namespace {

PopulationSpec pop(std::string name, std::size_t size, NeuronParams params = NeuronParams::lif(20, 5, 127, 0))
{
    PopulationSpec p;
    p.name = std::move(name);
    p.size = size;
    p.params = params;
    return p;
}

// Recount by walking every connection and enumerating active synapses one by one.
std::size_t brute_force_synapses(const NetworkGraph& g)
{
    std::size_t n = 0;
    for (const auto& c : g.connections()) {
        const auto& b = *c.block;
        for (std::size_t r = 0; r < b.rows; ++r) {
            for (std::size_t col = 0; col < b.cols; ++col) {
                n += b.active(r, col) ? 1 : 0;
            }
        }
    }
    return n;
}

} // namespace

TEST(Graph, EmptyGraphCountsZero)
{
    NetworkGraph g;
    const auto r = count_resources(g);
    EXPECT_EQ(r.neurons, 0u);
    EXPECT_EQ(r.synapses, 0u);
}

TEST(Graph, DenseCountIsProduct)
{
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 3));
    const auto b = g.add_population(pop("b", 4));
    g.connect(a, b, WeightBlock::dense("w", 3, 4));
    const auto r = count_resources(g);
    EXPECT_EQ(r.synapses, 12u);
    EXPECT_EQ(r.neurons, 7u);
}

TEST(Graph, RejectsShapeMismatchAndDanglingIds)
{
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 3));
    const auto b = g.add_population(pop("b", 4));
    EXPECT_THROW(g.connect(a, b, WeightBlock::dense("w", 4, 3)), InvalidInput);
    EXPECT_THROW(g.connect(a, 7, WeightBlock::dense("w", 3, 4)), InvalidInput);
    EXPECT_THROW(g.connect(a, b, WeightBlock::one_to_one("o", 3)), InvalidInput);
}

TEST(Graph, RelayMustBeOneToOne)
{
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 3));
    auto r = pop("relay", 3);
    r.role = Role::relay;
    const auto b = g.add_population(r);
    g.connect(a, b, WeightBlock::dense("w", 3, 3));
    EXPECT_THROW(g.validate(), InvalidInput);
}

TEST(Lsnn, AhpSubsetSizeAndDeterminism)
{
    LsnnConfig c;
    const auto g1 = build_lsnn(c, 42);
    const auto g2 = build_lsnn(c, 42);
    EXPECT_EQ(g1.population(0).ahp_count(), 100u);
    EXPECT_EQ(g1.population(0).ahp_subset, g2.population(0).ahp_subset);
    EXPECT_EQ(g1.connection(0).block->delays, g2.connection(0).block->delays);
    EXPECT_EQ(g1.hash(), g2.hash());
    EXPECT_NE(g1.hash(), build_lsnn(c, 43).hash());
    for (auto d : g1.connection(0).block->delays) {
        EXPECT_GE(d, 1);
        EXPECT_LE(d, 3);
    }
}

TEST(Lsnn, ZeroFractionHasNoAhp)
{
    LsnnConfig c;
    c.ahp_fraction = 0.0;
    const auto g = build_lsnn(c, 1);
    EXPECT_EQ(g.population(0).params.kind, NeuronKind::lif);
    EXPECT_EQ(g.population(0).ahp_count(), 0u);
    c.size = 0;
    EXPECT_THROW(build_lsnn(c, 1), InvalidParameter);
}

TEST(Smnist, StructureDensityAndSigns)
{
    const auto g = build_smnist_network(SmnistConfig{}, 3);
    const auto r = count_resources(g);
    EXPECT_EQ(r.input_neurons, 80u);
    EXPECT_EQ(r.neurons, 250u);
    const double possible = 80.0 * 240 + 240.0 * 240 + 240.0 * 10;
    EXPECT_NEAR(static_cast<double>(r.synapses) / possible, 0.20, 0.01);
    EXPECT_EQ(r.synapses, brute_force_synapses(g));

    const auto rec = g.require("recurrent");
    EXPECT_EQ(g.population(rec).ahp_count(), 100u);
    for (auto j : *g.population(rec).ahp_subset) {
        EXPECT_LT(j, 180u); // drawn from the excitatory neurons
    }
    for (std::size_t ci : g.outgoing(rec)) {
        const auto& b = *g.connection(ci).block;
        for (std::size_t row = 180; row < 240; ++row) {
            for (std::size_t col = 0; col < b.cols; ++col) {
                ASSERT_LE(b.weights[b.index(row, col)], 0.0);
            }
        }
    }
}

TEST(RelNet, PairCoverage)
{
    for (int M : {1, 2, 5, 20}) {
        const auto pairs = relnet_pairs(M);
        EXPECT_EQ(static_cast<int>(pairs.size()), M * (M + 1) / 2);
        std::set<PairIndex> unique(pairs.begin(), pairs.end());
        EXPECT_EQ(unique.size(), pairs.size());
        for (auto p : pairs) {
            EXPECT_LE(1, p.i);
            EXPECT_LE(p.i, p.j);
            EXPECT_LE(p.j, M);
        }
    }
}

TEST(RelNet, SingleSentenceHasOneInstance)
{
    RelNetConfig c;
    c.M = 1;
    c.vocab = 12;
    const auto g = build_relnet(c, 1);
    int instances = 0;
    for (const auto& p : g.populations()) {
        instances += (p.role == Role::gtheta && p.layer == 1) ? 1 : 0;
    }
    EXPECT_EQ(instances, 1);
}

TEST(RelNet, FullScaleNeuronCountWithoutRelays)
{
    RelNetConfig c; // M = 20, vocab = 180
    const auto g = build_relnet(c, 7);
    const auto r = count_resources(g);
    EXPECT_EQ(r.neurons, 210u * 4 * 256 + 21u * 200 + 256 + 928 + 180);
    EXPECT_EQ(r.input_neurons, 21u * 180);
}

TEST(RelNet, WeightSharingAndDelayBounds)
{
    RelNetConfig c;
    c.M = 4;
    c.vocab = 10;
    const auto g = build_relnet(c, 5);
    const auto a = g.require(gtheta_name({1, 2}, 2));
    const auto b = g.require(gtheta_name({3, 4}, 2));
    auto block_a = g.connection(g.incoming(a).front()).block;
    auto block_b = g.connection(g.incoming(b).front()).block;
    EXPECT_EQ(block_a.get(), block_b.get());
    block_a->weights[0] = 1234.5;
    EXPECT_EQ(block_b->weights[0], 1234.5);

    for (const auto& blk : g.blocks()) {
        for (auto d : blk->delays) {
            ASSERT_GE(d, 1);
            ASSERT_LE(d, 3);
        }
    }
    // Sentence LSNNs share weights, the question LSNN has its own.
    const auto s1 = g.require(lsnn_name(1)), s2 = g.require(lsnn_name(2)), q = g.require(lsnn_name(0));
    auto rec = [&](PopId id) {
        for (auto ci : g.incoming(id)) {
            if (g.connection(ci).src == id) {
                return g.connection(ci).block.get();
            }
        }
        return static_cast<WeightBlock*>(nullptr);
    };
    EXPECT_EQ(rec(s1), rec(s2));
    EXPECT_NE(rec(s1), rec(q));
}

TEST(RelNet, CountMatchesIndependentRecount)
{
    RelNetConfig c;
    c.M = 6;
    c.vocab = 30;
    const auto g = build_relnet(c, 9);
    const auto r = count_resources(g);
    std::size_t neurons = 0;
    for (const auto& p : g.populations()) {
        neurons += p.is_input() ? 0 : p.size;
    }
    EXPECT_EQ(r.neurons, neurons);
    EXPECT_EQ(r.synapses, brute_force_synapses(g));
    // Closed form: 21 instances of (600*256 + 3*256*256) plus the rest.
    const std::size_t expected = 7 * (30 * 200 + 200 * 200) + 21 * (600 * 256 + 3 * 256 * 256) +
                                 21 * 256 + 256 * 256 + 256 * 512 + 512 * 160 + 160 * 30;
    EXPECT_EQ(r.synapses, expected);
}

TEST(Subgraph, InputsReplaceUpstream)
{
    RelNetConfig c;
    c.M = 2;
    c.vocab = 8;
    const auto g = build_relnet(c, 2);
    std::vector<PopId> keep, inputs;
    for (PopId id = 0; id < g.population_count(); ++id) {
        const auto role = g.population(id).role;
        if (role == Role::lsnn) {
            inputs.push_back(id);
        } else if (role != Role::input) {
            keep.push_back(id);
        }
    }
    const auto sub = extract_subgraph(g, keep, inputs);
    EXPECT_EQ(sub.graph.population_count(), keep.size() + inputs.size());
    const auto q = *sub.from_original[g.require(lsnn_name(0))];
    EXPECT_TRUE(sub.graph.population(q).is_input());
    EXPECT_TRUE(sub.graph.incoming(q).empty());
    EXPECT_NO_THROW(sub.graph.validate());
}
