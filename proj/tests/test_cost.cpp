#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include <json.hpp>

#include "snn/builders.hpp"
#include "snn/cost.hpp"
#include "snn/errors.hpp"
#include "snn/simulator.hpp"

using namespace snn;

namespace {

PopulationSpec pop(std::string name, std::size_t size, bool input = false)
{
    PopulationSpec p;
    p.name = std::move(name);
    p.size = size;
    p.params = input ? NeuronParams::input_source() : NeuronParams::lif(20, 5, 127, 0);
    p.role = input ? Role::input : Role::recurrent;
    return p;
}

Raster one_spike(const NetworkGraph& g, PopId p, std::uint32_t neuron, std::size_t steps)
{
    std::vector<std::size_t> sizes;
    for (const auto& s : g.populations()) {
        sizes.push_back(s.size);
    }
    Raster r(sizes);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<SpikeEvent> ev;
        if (t == 0) {
            ev.push_back({p, neuron});
        }
        r.push_step(ev);
    }
    return r;
}

// Source in fans out to three single-neuron cores: its own core, another
// core of chip 0, and a core of chip 1.
struct Fixture {
    NetworkGraph g;
    Placement p;
    PopId in = 0;
};

Fixture three_way()
{
    Fixture f;
    f.in = f.g.add_population(pop("in", 2, true));
    const auto a = f.g.add_population(pop("a", 3));
    auto b = WeightBlock::dense("d", 2, 3);
    std::fill(b->weights.begin(), b->weights.end(), 1.0);
    f.g.connect(f.in, a, b);
    f.p.board = {2, 4};
    f.p.slices = {{{f.in, 0, 2}, 0, 0}, {{a, 0, 1}, 0, 1}, {{a, 1, 2}, 0, 2}, {{a, 2, 3}, 1, 0}};
    return f;
}

// Recount by walking every synapse of every spiking neuron.
TrafficStats brute_force(const NetworkGraph& g, const Placement& p, const Raster& raster)
{
    std::map<std::pair<PopId, std::uint32_t>, std::uint32_t> core;
    for (const auto& s : p.slices) {
        for (auto j = s.range.begin; j < s.range.end; ++j) {
            core[{s.range.pop, j}] = p.global_core(s);
        }
    }
    const auto cpc = static_cast<std::uint32_t>(p.board.cores_per_chip);
    TrafficStats out;
    for (std::size_t t = 0; t < raster.steps(); ++t) {
        std::uint64_t inter = 0;
        for (const auto& e : raster.events(t)) {
            std::set<std::uint32_t> dest;
            for (const auto& c : g.connections()) {
                if (c.src != e.pop) {
                    continue;
                }
                for (std::size_t j = 0; j < c.block->cols; ++j) {
                    if (c.block->active(e.neuron, j)) {
                        dest.insert(core.at({c.dst, static_cast<std::uint32_t>(j)}));
                    }
                }
            }
            const auto src = core.at({e.pop, e.neuron});
            for (const auto d : dest) {
                if (d == src) {
                    ++out.intra_core;
                } else if (d / cpc == src / cpc) {
                    ++out.intra_chip;
                } else {
                    ++out.inter_chip;
                    ++inter;
                }
            }
        }
        out.inter_chip_per_step.push_back(inter);
    }
    return out;
}

RelNetConfig bench_relnet(int M)
{
    RelNetConfig c;
    c.M = M;
    return c;
}

} // namespace

TEST(Traffic, EmptyRasterIsZero)
{
    auto f = three_way();
    const auto t = account_traffic(f.p, Raster({2, 3}), f.g);
    EXPECT_EQ(t.total(), 0u);
    EXPECT_EQ(t.peak_inter_chip(), 0u);
}

TEST(Traffic, SingleSpikeCountsEachOutputAxon)
{
    auto f = three_way();
    const auto t = account_traffic(f.p, one_spike(f.g, f.in, 1, 3), f.g);
    EXPECT_EQ(t.intra_core, 0u);
    EXPECT_EQ(t.intra_chip, 2u);
    EXPECT_EQ(t.inter_chip, 1u);
    EXPECT_EQ(t.inter_chip_per_step, (std::vector<std::uint64_t>{1, 0, 0}));

    // A destination on the spiking neuron's own core counts as intra-core.
    NetworkGraph g;
    const auto a = g.add_population(pop("a", 4));
    auto b = WeightBlock::dense("d", 4, 4);
    std::fill(b->weights.begin(), b->weights.end(), 1.0);
    g.connect(a, a, b);
    Placement p;
    p.board = {1, 4};
    p.slices = {{{a, 0, 2}, 0, 0}, {{a, 2, 3}, 0, 1}, {{a, 3, 4}, 0, 2}};
    const auto u = account_traffic(p, one_spike(g, a, 0, 1), g);
    EXPECT_EQ(u.intra_core, 1u);
    EXPECT_EQ(u.intra_chip, 2u);
    EXPECT_EQ(u.inter_chip, 0u);
}

TEST(Traffic, MismatchIsInvalidInput)
{
    auto f = three_way();
    EXPECT_THROW(account_traffic(f.p, Raster({2, 4}), f.g), InvalidInput);
    EXPECT_THROW(account_traffic(f.p, Raster({2}), f.g), InvalidInput);
    f.p.slices.pop_back();
    EXPECT_THROW(account_traffic(f.p, Raster({2, 3}), f.g), InvalidInput);
}

TEST(Traffic, RelNetSampleMatchesBruteForceRecount)
{
    const auto cfg = bench_relnet(6);
    const auto g = insert_relays(build_relnet(cfg, 3));
    const std::size_t steps = static_cast<std::size_t>(cfg.lsnn_steps() + cfg.T_sim);
    Rng rng(3, "traffic-sample");
    const auto raster = simulate(g, random_relnet_inputs(g, cfg, 1.0, steps, rng), steps).raster;
    ASSERT_GT(raster.total_spikes(), 1000u);
    for (const auto s : {Strategy::naive, Strategy::optimized}) {
        PlaceOptions o;
        o.strategy = s;
        o.budget = CoreBudget::relnet();
        const auto p = place(g, o);
        const auto fast = account_traffic(p, raster, g, 4);
        EXPECT_EQ(fast, brute_force(g, p, raster)) << to_string(s);
        EXPECT_EQ(fast, account_traffic(p, raster, g, 1));
        // Conservation: every spike delivers once per output axon.
        const auto tables = axon_tables(g, p);
        std::uint64_t expected = 0;
        for (const auto& e : raster.all_events()) {
            expected += tables.destinations[g.neuron_offset(e.pop) + e.neuron].size();
        }
        EXPECT_EQ(fast.total(), expected);
    }
}

TEST(Latency, BaseAndCongestion)
{
    CostModel m;
    TrafficStats zero;
    zero.inter_chip_per_step.assign(10, 0);
    EXPECT_DOUBLE_EQ(estimate_latency(zero, m, 10), 10 * m.step_time_base);

    TrafficStats t;
    t.inter_chip_per_step = {5, 0, 12};
    t.inter_chip = 17;
    TrafficStats t2 = t;
    for (auto& v : t2.inter_chip_per_step) {
        v *= 2;
    }
    const double base = 3 * m.step_time_base;
    const double c1 = estimate_latency(t, m, 3) - base;
    const double c2 = estimate_latency(t2, m, 3) - base;
    EXPECT_NEAR(c1, 17 * m.congestion_coeff, 1e-18);
    EXPECT_NEAR(c2, 2 * c1, 1e-18);

    m.congestion_threshold = 6;
    EXPECT_NEAR(estimate_latency(t, m, 3) - base, 6 * m.congestion_coeff, 1e-18);
}

TEST(Energy, MatchesHandComputation)
{
    TrafficStats t;
    t.intra_core = 100;
    t.intra_chip = 40;
    t.inter_chip = 7;
    t.inter_chip_per_step = {3, 4};
    CostModel m;
    m.e_intra_core = 1.0;
    m.e_intra_chip = 10.0;
    m.e_inter_chip = 100.0;
    m.e_neuron_update = 0.5;
    m.p_static = 2.0;
    // 100 + 400 + 700 + 0.5 * 30 neurons * 2 steps = 1230; static 2 W * 4 s.
    const auto e = estimate_energy(t, m, 2, 30, 4.0);
    EXPECT_DOUBLE_EQ(e.dynamic_energy, 1230.0);
    EXPECT_DOUBLE_EQ(e.static_energy, 8.0);
    EXPECT_DOUBLE_EQ(e.total(), 1238.0);
    EXPECT_DOUBLE_EQ(estimate_energy(t, m, 2, 30, 8.0).static_energy, 16.0);

    const CostModel zero{0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(estimate_energy(t, zero, 2, 30, estimate_latency(t, zero, 2)).total(), 0.0);
}

TEST(Energy, LinearInCoefficients)
{
    TrafficStats t;
    t.intra_core = 11;
    t.intra_chip = 23;
    t.inter_chip = 5;
    t.inter_chip_per_step = {2, 3};
    const CostModel m;
    CostModel m3 = m;
    for (double* c : {&m3.e_intra_core, &m3.e_intra_chip, &m3.e_inter_chip, &m3.e_neuron_update, &m3.p_static,
                      &m3.step_time_base, &m3.congestion_coeff}) {
        *c *= 3.0;
    }
    const double l1 = estimate_latency(t, m, 2);
    const double l3 = estimate_latency(t, m3, 2);
    EXPECT_NEAR(l3, 3 * l1, 1e-15);
    // Energy with every coefficient tripled, at a fixed latency.
    EXPECT_NEAR(estimate_energy(t, m3, 2, 9, l1).total(), 3 * estimate_energy(t, m, 2, 9, l1).total(), 1e-15);
}

TEST(Energy, RejectsNegativeCoefficients)
{
    CostModel m;
    m.e_inter_chip = -1;
    EXPECT_THROW(m.validate(), InvalidParameter);
}

TEST(Edp, Product)
{
    EXPECT_EQ(edp(0.0, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(edp(2.0, 3.0), 6.0);
}

TEST(Compare, IdenticalPlacementsGiveUnitRatios)
{
    const auto cfg = bench_relnet(2);
    const auto g = insert_relays(build_relnet(cfg, 2));
    const std::size_t steps = static_cast<std::size_t>(cfg.lsnn_steps() + cfg.T_sim);
    Rng rng(2, "compare");
    const std::vector<Raster> rasters{simulate(g, random_relnet_inputs(g, cfg, 0.5, steps, rng), steps).raster};
    PlaceOptions o;
    o.budget = CoreBudget::relnet();
    const auto p = place(g, o);
    const auto row = compare_placements(g, p, p, rasters, CostModel{});
    EXPECT_EQ(row.edp_ratio(), 1.0);
    EXPECT_EQ(row.latency_ratio(), 1.0);
    EXPECT_EQ(row.energy_ratio(), 1.0);
    EXPECT_EQ(row.inter_chip_ratio(), 1.0);
    EXPECT_EQ(row.samples, 1u);
    EXPECT_EQ(row.steps, steps);
}

TEST(Compare, StrategiesReportOneRowPerM)
{
    BenchConfig c;
    c.Ms = {2, 6};
    c.threads = 2;
    const auto rows = compare_strategies(c);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].M, 2);
    EXPECT_LE(rows[1].optimized.traffic.inter_chip, rows[1].naive.traffic.inter_chip);
    EXPECT_LT(rows[1].edp_ratio(), 1.0);

    c.threads = 1;
    const auto again = compare_strategies(c);
    std::ostringstream a, b;
    write_report_csv(a, rows, "h");
    write_report_csv(b, again, "h");
    EXPECT_EQ(a.str(), b.str());

    std::istringstream lines(a.str());
    std::string header, line;
    std::getline(lines, header);
    std::size_t n = 0;
    const auto commas = std::count(header.begin(), header.end(), ',');
    while (std::getline(lines, line)) {
        ++n;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), commas);
    }
    EXPECT_EQ(n, 2u);
    EXPECT_NE(header.find("edp_ratio"), std::string::npos);

    std::ostringstream js;
    write_report_json(js, rows, c.model, "h");
    const auto doc = nlohmann::json::parse(js.str());
    EXPECT_EQ(doc.at("rows").size(), 2u);
    EXPECT_EQ(doc.at("config_hash"), "h");
    std::ostringstream plot;
    write_plot_data(plot, rows);
    const auto text = plot.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(Compare, RejectsEmptyBench)
{
    BenchConfig c;
    c.Ms.clear();
    EXPECT_THROW(compare_strategies(c), InvalidParameter);
}
