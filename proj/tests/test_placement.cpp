#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <set>
#include <tuple>

#include "snn/builders.hpp"
#include "snn/errors.hpp"
#include "snn/placement.hpp"
#include "snn/simulator.hpp"

using namespace snn;
namespace fs = std::filesystem;

namespace {

PopulationSpec pop(std::string name, std::size_t size, NeuronParams params = NeuronParams::lif(20, 5, 127, 0))
{
    PopulationSpec p;
    p.name = std::move(name);
    p.size = size;
    p.params = params;
    if (params.kind == NeuronKind::input_source) {
        p.role = Role::input;
    }
    return p;
}

std::shared_ptr<WeightBlock> dense(const std::string& tag, std::size_t rows, std::size_t cols)
{
    auto b = WeightBlock::dense(tag, rows, cols);
    std::fill(b->weights.begin(), b->weights.end(), 1.0);
    return b;
}

// Synapse and presynaptic-neuron counts of a range, one synapse at a time.
std::pair<std::size_t, std::size_t> recount(const NetworkGraph& g, const NeuronRange& r)
{
    std::size_t synapses = 0;
    std::size_t axons = 0;
    for (const auto& c : g.connections()) {
        if (c.dst != r.pop) {
            continue;
        }
        for (std::size_t i = 0; i < c.block->rows; ++i) {
            bool any = false;
            for (auto j = r.begin; j < r.end; ++j) {
                if (c.block->active(i, j)) {
                    ++synapses;
                    any = true;
                }
            }
            axons += any ? 1 : 0;
        }
    }
    return {synapses, axons};
}

RelNetConfig full_config(int M)
{
    RelNetConfig c;
    c.M = M;
    return c;
}

const NetworkGraph& full_relnet_20()
{
    static const NetworkGraph g = build_relnet(full_config(20), 1);
    return g;
}

const NetworkGraph& relayed_relnet_20()
{
    static const NetworkGraph g = insert_relays(full_relnet_20());
    return g;
}

PlaceOptions relnet_options(Strategy s)
{
    PlaceOptions o;
    o.strategy = s;
    o.budget = CoreBudget::relnet();
    return o;
}

std::size_t count_role(const NetworkGraph& g, Role role)
{
    std::size_t n = 0;
    for (const auto& p : g.populations()) {
        n += p.role == role ? 1 : 0;
    }
    return n;
}

class TempDir {
public:
    TempDir()
    {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = fs::temp_directory_path() /
                (std::string("snn-place-") + info->test_suite_name() + "-" + info->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const char* name) const { return path_ / name; }

private:
    fs::path path_;
};

} // namespace

TEST(CoreLoad, MatchesPerSynapseRecount)
{
    Rng rng(3, "core-load");
    NetworkGraph g;
    const auto in = g.add_population(pop("in", 30, NeuronParams::input_source()));
    const auto a = g.add_population(pop("a", 25));
    auto sp = WeightBlock::sparse("s", 30, 25);
    for (auto& m : sp->mask) {
        m = rng.uniform() < 0.3 ? 1 : 0;
    }
    g.connect(in, a, sp);
    g.connect(a, a, WeightBlock::one_to_one("self", 25));
    g.connect(in, a, dense("d", 30, 25));
    for (const NeuronRange r : {NeuronRange{a, 0, 25}, NeuronRange{a, 3, 9}, NeuronRange{a, 24, 25}}) {
        const auto load = core_load(g, r);
        const auto [syn, axons] = recount(g, r);
        EXPECT_EQ(load.synapses, syn);
        // Dense rows cover every input; the self block adds one axon per neuron.
        EXPECT_EQ(load.input_axons, 30 + r.size());
        EXPECT_EQ(load.neurons, r.size());
    }
}

TEST(SplitLayer, RelNetLayersSplitAsExpected)
{
    const auto& g = full_relnet_20();
    const auto budget = CoreBudget::relnet();
    const auto agg = split_layer(g, g.require("aggregation"), budget);
    ASSERT_EQ(agg.size(), 14u);
    for (const auto& r : agg) {
        EXPECT_LE(r.size(), 19u);
    }
    const auto l1 = split_layer(g, g.require(gtheta_name({1, 2}, 1)), budget);
    ASSERT_EQ(l1.size(), 4u);
    for (const auto& r : l1) {
        EXPECT_EQ(r.size(), 64u);
    }
    const auto lsnn = split_layer(g, g.require(lsnn_name(3)), budget);
    ASSERT_EQ(lsnn.size(), 2u);
    EXPECT_EQ(lsnn[0].size(), 100u);
    EXPECT_EQ(split_layer(g, g.require(gtheta_name({1, 2}, 2)), budget).size(), 2u);
    EXPECT_EQ(split_layer(g, g.require("readout"), budget).size(), 2u);
}

TEST(SplitLayer, FewestSlicesThatFit)
{
    Rng rng(5, "split");
    const CoreBudget budget;
    for (int trial = 0; trial < 10; ++trial) {
        NetworkGraph g;
        const std::size_t rows = 400 + static_cast<std::size_t>(rng.uniform() * 3000);
        const std::size_t cols = 50 + static_cast<std::size_t>(rng.uniform() * 400);
        const auto in = g.add_population(pop("in", rows, NeuronParams::input_source()));
        const auto a = g.add_population(pop("a", cols));
        auto sp = WeightBlock::sparse("s", rows, cols);
        const double density = 0.05 + 0.5 * rng.uniform();
        for (auto& m : sp->mask) {
            m = rng.uniform() < density ? 1 : 0;
        }
        g.connect(in, a, sp);
        const auto slices = split_layer(g, a, budget);
        std::uint32_t next = 0;
        for (const auto& r : slices) {
            EXPECT_EQ(r.begin, next);
            next = r.end;
            const auto [syn, axons] = recount(g, r);
            EXPECT_LE(syn, budget.synapse_memory);
            EXPECT_LE(axons, budget.input_axons);
            EXPECT_LE(r.size(), budget.max_neurons_1comp);
        }
        EXPECT_EQ(next, cols);
        // One slice fewer (equal split) breaks some limit.
        if (slices.size() > 1) {
            const std::size_t n = slices.size() - 1;
            bool broken = false;
            std::uint32_t begin = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const auto len = static_cast<std::uint32_t>(cols / n + (k < cols % n ? 1 : 0));
                const auto [syn, axons] = recount(g, {a, begin, begin + len});
                broken = broken || syn > budget.synapse_memory || axons > budget.input_axons ||
                         len > budget.max_neurons_1comp;
                begin += len;
            }
            EXPECT_TRUE(broken);
        }
    }
}

TEST(SplitLayer, AhpHalvesTheNeuronCap)
{
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 1024));
    auto ahp = pop("b", 1024, NeuronParams::lif_ahp(20, 5, 200, 48, 127, 0));
    ahp.ahp_subset = std::vector<std::uint32_t>{700};
    const auto b = g.add_population(ahp);
    EXPECT_EQ(split_layer(g, a, CoreBudget{}).size(), 1u);
    const auto s = split_layer(g, b, CoreBudget{});
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[1].size(), 512u);
}

TEST(SplitLayer, SingleNeuronOverLimitIsUnplaceable)
{
    for (const std::size_t rows : {4096, 4097}) {
        NetworkGraph g;
        const auto in = g.add_population(pop("in", rows, NeuronParams::input_source()));
        const auto a = g.add_population(pop("a", 3));
        g.connect(in, a, dense("d", rows, 3));
        if (rows <= 4096) {
            EXPECT_EQ(split_layer(g, a, CoreBudget{}).size(), 1u);
        } else {
            EXPECT_THROW(split_layer(g, a, CoreBudget{}), Unplaceable);
        }
    }
    NetworkGraph g;
    const auto in = g.add_population(pop("in", 3000, NeuronParams::input_source()));
    const auto a = g.add_population(pop("a", 2));
    for (int k = 0; k < 14; ++k) {
        g.connect(in, a, dense("d" + std::to_string(k), 3000, 2));
    }
    EXPECT_THROW(split_layer(g, a, CoreBudget{}), Unplaceable); // 42000 synapses per neuron
}

TEST(Grouping, CoversEveryInstanceOnce)
{
    const GroupingParams params;
    for (const int M : {1, 2, 5, 6, 7, 10, 16, 20}) {
        const auto groups = group_gtheta_instances(M, params);
        const int side = grouping_side(M, params);
        std::map<std::pair<int, int>, int> seen;
        for (const auto& gr : groups) {
            EXPECT_LE(group_cores(gr, params), params.cores_per_chip);
            EXPECT_LE(gr.sentences.size(), static_cast<std::size_t>(2 * side + 1));
            EXPECT_EQ(gr.sentences.front(), 0);
            std::set<int> needed{0};
            for (const auto& p : gr.instances) {
                ++seen[{p.i, p.j}];
                needed.insert(p.i);
                needed.insert(p.j);
            }
            EXPECT_EQ(std::vector<int>(needed.begin(), needed.end()), gr.sentences);
        }
        ASSERT_EQ(seen.size(), static_cast<std::size_t>(M * (M + 1) / 2)) << "M=" << M;
        for (const auto& [pair, n] : seen) {
            EXPECT_EQ(n, 1);
            EXPECT_LE(pair.first, pair.second);
        }
        // The next larger side would overflow a chip.
        if (side < M) {
            bool overflow = false;
            const int bigger = side + 1;
            // Upper-left block of the larger side holds bigger*(bigger+1)/2 instances.
            InstanceGroup block;
            std::set<int> sentences{0};
            for (int i = 1; i <= bigger; ++i) {
                for (int j = i; j <= bigger; ++j) {
                    block.instances.push_back({i, j});
                    sentences.insert(i);
                    sentences.insert(j);
                }
            }
            block.sentences.assign(sentences.begin(), sentences.end());
            overflow = group_cores(block, params) > params.cores_per_chip;
            // Or an off-diagonal block of the larger side.
            if (!overflow && M >= 2 * bigger) {
                InstanceGroup off;
                std::set<int> s2{0};
                for (int i = 1; i <= bigger; ++i) {
                    for (int j = bigger + 1; j <= 2 * bigger; ++j) {
                        off.instances.push_back({i, j});
                        s2.insert(i);
                        s2.insert(j);
                    }
                }
                off.sentences.assign(s2.begin(), s2.end());
                overflow = group_cores(off, params) > params.cores_per_chip;
            }
            EXPECT_TRUE(overflow) << "M=" << M;
        }
    }
    EXPECT_EQ(grouping_side(20, params), 5);
    EXPECT_EQ(group_gtheta_instances(20, params).size(), 10u);
}

TEST(Grouping, RelayCoresFollowOutputAxonLimit)
{
    const auto b = CoreBudget::relnet();
    EXPECT_EQ(relay_cores(200, 0, b), 2u);
    EXPECT_EQ(relay_cores(200, 20, b), 2u);  // 4096 / 20 = 204 > 128
    EXPECT_EQ(relay_cores(200, 100, b), 5u); // 40 neurons per core
    EXPECT_THROW(relay_cores(200, 5000, b), Unplaceable);
}

TEST(Relays, InsertedPerSentenceAndGroup)
{
    const auto& g = relayed_relnet_20();
    EXPECT_EQ(count_role(g, Role::relay), 90u);
    std::size_t neurons = 0;
    for (const auto& p : g.populations()) {
        neurons += p.is_input() ? 0 : p.size;
    }
    EXPECT_EQ(neurons, 238604u);
    // Every first g_theta layer is fed by relays only, and each relay by its LSNN.
    for (PopId p = 0; p < g.population_count(); ++p) {
        const auto& spec = g.population(p);
        if (spec.role == Role::gtheta && spec.layer == 1) {
            for (const auto ci : g.incoming(p)) {
                EXPECT_EQ(g.population(g.connection(ci).src).role, Role::relay);
            }
        }
        if (spec.role == Role::relay) {
            ASSERT_EQ(g.incoming(p).size(), 1u);
            const auto& src = g.population(g.connection(g.incoming(p)[0]).src);
            EXPECT_EQ(src.role, Role::lsnn);
            EXPECT_EQ(src.sentence, spec.sentence);
            EXPECT_TRUE(g.connection(g.incoming(p)[0]).block->frozen);
        }
    }
    EXPECT_THROW(insert_relays(g), InvalidInput);
}

TEST(Relays, GroupsMustCoverInstancesOnce)
{
    RelNetConfig c;
    c.M = 2;
    c.vocab = 12;
    c.lsnn_size = 10;
    c.lsnn_ahp = 5;
    c.gtheta_layers = {8, 8};
    c.aggregation = 8;
    c.fphi_layers = {8};
    const auto g = build_relnet(c, 1);
    std::vector<InstanceGroup> missing{{{{1, 1}, {1, 2}}, {0, 1, 2}}};
    EXPECT_THROW(insert_relays(g, missing), InvalidInput);
    std::vector<InstanceGroup> twice{{{{1, 1}, {1, 2}, {2, 2}}, {0, 1, 2}}, {{{2, 2}}, {0, 2}}};
    EXPECT_THROW(insert_relays(g, twice), InvalidInput);
}

TEST(Relays, DelayDownstreamActivityByOneStep)
{
    RelNetConfig c;
    c.M = 2;
    c.vocab = 12;
    c.lsnn_size = 20;
    c.lsnn_ahp = 10;
    c.gtheta_layers = {16, 16};
    c.aggregation = 16;
    c.fphi_layers = {16};
    const auto g = build_relnet(c, 8);
    const auto r = insert_relays(g, {{{{1, 1}, {1, 2}}, {0, 1, 2}}, {{{2, 2}}, {0, 2}}});
    const std::size_t steps = static_cast<std::size_t>(c.lsnn_steps() + c.T_sim);
    Rng rng(8, "relay-inputs");
    InputMap inputs;
    for (PopId p = 0; p < g.population_count(); ++p) {
        if (g.population(p).is_input()) {
            SpikeMatrix m(g.population(p).size, steps);
            for (std::size_t t = 0; t < static_cast<std::size_t>(c.lsnn_steps()); ++t) {
                for (std::size_t j = 0; j < m.neurons(); ++j) {
                    m.set(j, t, rng.uniform() < 0.3);
                }
            }
            inputs[p] = std::move(m);
        }
    }
    const auto a = simulate(g, inputs, steps).raster;
    const auto b = simulate(r, inputs, steps).raster;
    std::size_t downstream_spikes = 0;
    for (PopId p = 0; p < g.population_count(); ++p) {
        const auto& spec = g.population(p);
        const auto pa = a.population(p);
        const auto pb = b.population(p);
        const bool shifted = spec.role != Role::input && spec.role != Role::lsnn;
        for (std::size_t t = 0; t + 1 < steps; ++t) {
            for (std::size_t j = 0; j < spec.size; ++j) {
                ASSERT_EQ(pa.get(j, t), pb.get(j, shifted ? t + 1 : t))
                    << spec.name << " neuron " << j << " step " << t;
            }
        }
        if (shifted) {
            downstream_spikes += pa.count();
            for (std::size_t j = 0; j < spec.size; ++j) {
                EXPECT_FALSE(pb.get(j, 0));
            }
        }
    }
    EXPECT_GT(downstream_spikes, 0u);
    for (PopId p = g.population_count(); p < r.population_count(); ++p) {
        const auto& spec = r.population(p);
        const auto src = r.require(lsnn_name(spec.sentence));
        const auto lsnn = b.population(src);
        const auto relay = b.population(p);
        for (std::size_t t = 0; t + 1 < steps; ++t) {
            for (std::size_t j = 0; j < spec.size; ++j) {
                ASSERT_EQ(lsnn.get(j, t), relay.get(j, t + 1));
            }
        }
    }
}

TEST(Verify, ReportsEachExceededBudgetAtTheBoundary)
{
    const auto run = [](std::size_t rows, std::size_t neurons, bool ahp) {
        NetworkGraph g;
        const auto in = g.add_population(pop("in", rows, NeuronParams::input_source()));
        auto spec = ahp ? pop("a", neurons, NeuronParams::lif_ahp(20, 5, 200, 48, 127, 0)) : pop("a", neurons);
        const auto a = g.add_population(spec);
        g.connect(in, a, dense("d", rows, neurons));
        Placement p;
        p.board = {1, 128};
        p.slices = {{{a, 0, static_cast<std::uint32_t>(neurons)}, 0, 0}};
        for (std::uint32_t k = 0; k * 1000 < rows; ++k) {
            const auto end = std::min<std::uint32_t>(static_cast<std::uint32_t>(rows), (k + 1) * 1000);
            p.slices.push_back({{in, k * 1000, end}, 0, k + 1});
        }
        return std::pair{g, p};
    };
    const auto budgets = [](const std::vector<Violation>& v) {
        std::multiset<Budget> out;
        for (const auto& x : v) {
            out.insert(x.budget);
        }
        return out;
    };
    const CoreBudget b;
    {
        auto [g, p] = run(21, 2000, false); // 42000 synapses, 1024-neuron cap broken
        const auto v = verify(g, p, b);
        EXPECT_EQ(budgets(v), (std::multiset<Budget>{Budget::neurons, Budget::synapse_memory}));
    }
    {
        auto [g, p] = run(40, 1000, false); // 40000 synapses exactly
        EXPECT_TRUE(verify(g, p, b).empty());
    }
    {
        auto [g, p] = run(40001, 1, false);
        EXPECT_EQ(budgets(verify(g, p, b)),
                  (std::multiset<Budget>{Budget::synapse_memory, Budget::input_axons}));
    }
    {
        auto [g, p] = run(4096, 1, false);
        EXPECT_TRUE(verify(g, p, b).empty());
    }
    {
        auto [g, p] = run(4097, 1, false);
        const auto v = verify(g, p, b);
        ASSERT_EQ(v.size(), 1u);
        EXPECT_EQ(v[0].budget, Budget::input_axons);
        EXPECT_EQ(v[0].value, 4097u);
        EXPECT_EQ(v[0].core, 0u);
    }
    {
        auto [g, p] = run(1, 513, true);
        const auto v = verify(g, p, b);
        ASSERT_EQ(v.size(), 1u);
        EXPECT_EQ(v[0].budget, Budget::neurons);
        EXPECT_EQ(v[0].limit, 512u);
    }
    {
        auto [g, p] = run(1, 512, true);
        EXPECT_TRUE(verify(g, p, b).empty());
    }
}

TEST(Verify, OutputAxonLimitDependsOnDestinationChip)
{
    for (const bool same_chip : {true, false}) {
        for (const std::size_t n : {2048, 2049, 4096, 4097}) {
            NetworkGraph g;
            const auto in = g.add_population(pop("in", n, NeuronParams::input_source()));
            const auto a = g.add_population(pop("a", 1));
            auto sp = WeightBlock::sparse("s", n, 1);
            std::fill(sp->mask.begin(), sp->mask.end(), 1);
            g.connect(in, a, sp);
            CoreBudget b;
            b.input_axons = 10000;
            b.max_neurons_1comp = 10000;
            Placement p;
            p.board = {2, 4};
            p.slices = {{{in, 0, static_cast<std::uint32_t>(n)}, 0, 0},
                        {{a, 0, 1}, same_chip ? 0u : 1u, same_chip ? 1u : 0u}};
            std::sort(p.slices.begin(), p.slices.end(), [](const auto& x, const auto& y) {
                return std::tie(x.chip, x.core) < std::tie(y.chip, y.core);
            });
            const auto v = verify(g, p, b);
            const std::size_t limit = same_chip ? 4096 : 2048;
            if (n > limit) {
                ASSERT_EQ(v.size(), 1u) << n;
                EXPECT_EQ(v[0].budget, Budget::output_axons);
                EXPECT_EQ(v[0].limit, limit);
            } else {
                EXPECT_TRUE(v.empty()) << n;
            }
        }
    }
}

TEST(Verify, FanoutCountsDistinctCores)
{
    for (const std::size_t cores : {512, 513}) {
        NetworkGraph g;
        const auto in = g.add_population(pop("in", 1, NeuronParams::input_source()));
        const auto a = g.add_population(pop("a", cores));
        g.connect(in, a, dense("d", 1, cores));
        Placement p;
        p.board = {5, 128};
        p.slices.push_back({{in, 0, 1}, 0, 0});
        for (std::uint32_t k = 0; k < cores; ++k) {
            p.slices.push_back({{a, k, k + 1}, (k + 1) / 128, (k + 1) % 128});
        }
        const auto v = verify(g, p, CoreBudget{});
        if (cores > 512) {
            ASSERT_EQ(v.size(), 1u);
            EXPECT_EQ(v[0].budget, Budget::fanout);
            EXPECT_EQ(v[0].value, 513u);
        } else {
            EXPECT_TRUE(v.empty());
        }
    }
}

TEST(AxonTables, RejectIncompleteOrOverlappingPlacements)
{
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 10));
    Placement p;
    p.board = {1, 4};
    p.slices = {{{a, 0, 6}, 0, 0}};
    EXPECT_THROW(axon_tables(g, p), InvalidInput);
    p.slices = {{{a, 0, 6}, 0, 0}, {{a, 5, 10}, 0, 1}};
    EXPECT_THROW(axon_tables(g, p), InvalidInput);
    p.slices = {{{a, 0, 6}, 0, 0}, {{a, 6, 10}, 0, 0}};
    EXPECT_THROW(axon_tables(g, p), InvalidInput);
    p.slices = {{{a, 0, 6}, 0, 0}, {{a, 6, 10}, 0, 4}};
    EXPECT_THROW(axon_tables(g, p), InvalidInput);
    p.slices = {{{a, 0, 6}, 0, 0}, {{a, 6, 10}, 0, 1}};
    EXPECT_NO_THROW(axon_tables(g, p));
}

TEST(Place, RelNetWithoutRelaysBreaksFanout)
{
    const auto& g = full_relnet_20();
    const auto o = relnet_options(Strategy::naive);
    const auto p = place(g, o);
    const auto t = axon_tables(g, p);
    const auto q = g.require(lsnn_name(0));
    // Each question-LSNN neuron reaches all 4 first-layer cores of 210 instances.
    for (const auto n : t.output_axons_to(g, p, q, Role::gtheta)) {
        EXPECT_EQ(n, 100u * 840u);
    }
    const auto v = verify(g, p, t, o.budget);
    ASSERT_FALSE(v.empty());
    bool fanout = false;
    for (const auto& x : v) {
        fanout = fanout || (x.budget == Budget::fanout && x.value > 512);
    }
    EXPECT_TRUE(fanout);
}

TEST(Place, RelNetWithRelaysIsLegalForEveryM)
{
    std::size_t previous = 0;
    for (const int M : {2, 6, 10, 16, 20}) {
        const auto g = insert_relays(build_relnet(full_config(M), 1));
        for (const auto s : {Strategy::naive, Strategy::optimized}) {
            const auto o = relnet_options(s);
            const auto p = place(g, o);
            const auto t = axon_tables(g, p);
            const auto v = verify(g, p, t, o.budget);
            EXPECT_TRUE(v.empty()) << "M=" << M << " " << to_string(s) << ": " << v.front().message;
            if (s == Strategy::optimized) {
                const auto sum = summarize(g, p, t);
                EXPECT_GT(sum.cores, previous) << "M=" << M;
                previous = sum.cores;
            }
        }
    }
}

TEST(Place, OptimizedRelNet20Totals)
{
    const auto& g = relayed_relnet_20();
    const auto o = relnet_options(Strategy::optimized);
    const auto p = place(g, o);
    const auto t = axon_tables(g, p);
    const auto s = summarize(g, p, t);
    EXPECT_NEAR(static_cast<double>(s.cores), 2308.0, 0.15 * 2308.0);
    EXPECT_GE(s.chips, 19u);
    EXPECT_LE(s.chips, 25u);
    EXPECT_EQ(s.relay_layers, 90u);
    EXPECT_EQ(s.neurons, 238604u);
    // Each LSNN core feeds only relays beyond its own recurrent connections.
    for (const auto n : t.output_axons_to(g, p, g.require(lsnn_name(0)), Role::relay)) {
        EXPECT_EQ(n, 1000u);
    }
    for (const auto n : t.output_axons_to(g, p, g.require(lsnn_name(7)), Role::relay)) {
        EXPECT_EQ(n, 400u);
    }
    // Relays sit on the chip of the first layers they feed.
    for (PopId r = 0; r < g.population_count(); ++r) {
        if (g.population(r).role != Role::relay) {
            continue;
        }
        const auto offset = g.neuron_offset(r);
        for (std::size_t j = 0; j < g.population(r).size; ++j) {
            const auto chip = t.core_of[offset + j] / 128;
            for (const auto d : t.destinations[offset + j]) {
                EXPECT_EQ(d / 128, chip);
            }
        }
    }
}

TEST(Place, NaiveKeepsRelaysNextToTheirSource)
{
    const auto g = insert_relays(build_relnet(full_config(6), 1));
    const auto p = place(g, relnet_options(Strategy::naive));
    std::map<PopId, std::uint32_t> first;
    std::map<PopId, std::uint32_t> last;
    for (const auto& s : p.slices) {
        const auto c = p.global_core(s);
        first.try_emplace(s.range.pop, c);
        last[s.range.pop] = c;
    }
    for (PopId r = 0; r < g.population_count(); ++r) {
        if (g.population(r).role == Role::relay) {
            const auto src = g.require(lsnn_name(g.population(r).sentence));
            EXPECT_EQ(first[r], last[src] + 1);
        }
    }
}

TEST(Place, BoardOverflowIsUnplaceable)
{
    PlaceOptions o = relnet_options(Strategy::optimized);
    o.board.chips = 4;
    EXPECT_THROW(place(relayed_relnet_20(), o), Unplaceable);
}

TEST(PlacementFile, RoundTrip)
{
    TempDir dir;
    const auto g = insert_relays(build_relnet(full_config(2), 1));
    const auto p = place(g, relnet_options(Strategy::optimized));
    save_placement(dir / "p.json", p, g, "beef");
    const auto back = load_placement(dir / "p.json", g);
    EXPECT_EQ(back.slices, p.slices);
    EXPECT_EQ(back.strategy, p.strategy);
    EXPECT_EQ(back.board.chips, p.board.chips);
    const auto other = build_relnet(full_config(2), 1);
    EXPECT_THROW(load_placement(dir / "p.json", other), InvalidInput);
    EXPECT_THROW(load_placement(dir / "missing.json", g), InvalidInput);
}

TEST(Strategy, ParsesNames)
{
    EXPECT_EQ(strategy_from_string("naive"), Strategy::naive);
    EXPECT_EQ(strategy_from_string(to_string(Strategy::optimized)), Strategy::optimized);
    EXPECT_THROW(strategy_from_string("greedy"), InvalidInput);
}
