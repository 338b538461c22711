#include "snn/cost.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <ostream>

#include <json.hpp>

#include "parallel.hpp"
#include "snn/encoders.hpp"
#include "snn/errors.hpp"
#include "snn/io.hpp"
#include "snn/simulator.hpp"

namespace snn {

using nlohmann::json;

std::uint64_t TrafficStats::peak_inter_chip() const noexcept
{
    return inter_chip_per_step.empty()
               ? 0
               : *std::max_element(inter_chip_per_step.begin(), inter_chip_per_step.end());
}

void TrafficStats::append(const TrafficStats& other)
{
    intra_core += other.intra_core;
    intra_chip += other.intra_chip;
    inter_chip += other.inter_chip;
    inter_chip_per_step.insert(inter_chip_per_step.end(), other.inter_chip_per_step.begin(),
                               other.inter_chip_per_step.end());
}

void CostModel::validate() const
{
    for (const double v : {e_intra_core, e_intra_chip, e_inter_chip, e_neuron_update, p_static, step_time_base,
                           congestion_coeff, congestion_threshold}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidParameter("cost model coefficients must be finite and non-negative");
        }
    }
}

TrafficStats account_traffic(const Placement& placement, const Raster& raster, const NetworkGraph& graph,
                             unsigned threads)
{
    return account_traffic(axon_tables(graph, placement), raster, graph,
                           static_cast<std::uint32_t>(placement.board.cores_per_chip), threads);
}

TrafficStats account_traffic(const AxonTables& tables, const Raster& raster, const NetworkGraph& graph,
                             std::uint32_t cores_per_chip, unsigned threads)
{
    if (tables.core_of.size() != graph.total_neurons() || raster.population_count() != graph.population_count()) {
        throw InvalidInput("raster, placement and graph do not match");
    }
    for (PopId p = 0; p < graph.population_count(); ++p) {
        if (raster.population_sizes()[p] != graph.population(p).size) {
            throw InvalidInput("raster population sizes do not match the graph");
        }
    }
    if (cores_per_chip == 0) {
        throw InvalidParameter("cores_per_chip must be positive");
    }
    // Deliveries per spike of each neuron, by class.
    struct Counts {
        std::uint32_t core = 0, chip = 0, inter = 0;
    };
    std::vector<Counts> per_neuron(tables.core_of.size());
    for (std::size_t n = 0; n < per_neuron.size(); ++n) {
        const auto src = tables.core_of[n];
        for (const auto d : tables.destinations[n]) {
            if (d == src) {
                ++per_neuron[n].core;
            } else if (d / cores_per_chip == src / cores_per_chip) {
                ++per_neuron[n].chip;
            } else {
                ++per_neuron[n].inter;
            }
        }
    }
    std::vector<std::size_t> offsets(graph.population_count());
    for (PopId p = 0; p < graph.population_count(); ++p) {
        offsets[p] = graph.neuron_offset(p);
    }

    const std::size_t steps = raster.steps();
    std::vector<std::array<std::uint64_t, 3>> per_step(steps, {0, 0, 0});
    detail::parallel_for(steps, threads, [&](std::size_t t) {
        auto& acc = per_step[t];
        for (const auto& e : raster.events(t)) {
            const auto& c = per_neuron[offsets[e.pop] + e.neuron];
            acc[0] += c.core;
            acc[1] += c.chip;
            acc[2] += c.inter;
        }
    });
    TrafficStats s;
    s.inter_chip_per_step.reserve(steps);
    for (const auto& acc : per_step) {
        s.intra_core += acc[0];
        s.intra_chip += acc[1];
        s.inter_chip += acc[2];
        s.inter_chip_per_step.push_back(acc[2]);
    }
    return s;
}

double estimate_latency(const TrafficStats& traffic, const CostModel& model, std::size_t steps)
{
    double excess = 0.0;
    for (const auto n : traffic.inter_chip_per_step) {
        excess += std::max(0.0, static_cast<double>(n) - model.congestion_threshold);
    }
    return static_cast<double>(steps) * model.step_time_base + model.congestion_coeff * excess;
}

Energy estimate_energy(const TrafficStats& traffic, const CostModel& model, std::size_t steps,
                       std::size_t neuron_count, double latency)
{
    Energy e;
    e.static_energy = model.p_static * latency;
    e.dynamic_energy = static_cast<double>(traffic.intra_core) * model.e_intra_core +
                       static_cast<double>(traffic.intra_chip) * model.e_intra_chip +
                       static_cast<double>(traffic.inter_chip) * model.e_inter_chip +
                       static_cast<double>(neuron_count) * static_cast<double>(steps) * model.e_neuron_update;
    return e;
}

double edp(double energy, double latency) noexcept
{
    return energy * latency;
}

// ---------------------------------------------------------------------------

StrategyCost evaluate_cost(const NetworkGraph& graph, const Placement& placement, const AxonTables& tables,
                           const std::vector<Raster>& rasters, const CostModel& model, unsigned threads)
{
    model.validate();
    StrategyCost c;
    const auto summary = summarize(graph, placement, tables);
    c.cores = summary.cores;
    c.chips = summary.chips;
    std::size_t steps = 0;
    for (const auto& r : rasters) {
        c.traffic.append(account_traffic(tables, r, graph, static_cast<std::uint32_t>(placement.board.cores_per_chip),
                                         threads));
        steps += r.steps();
    }
    c.latency = estimate_latency(c.traffic, model, steps);
    c.energy = estimate_energy(c.traffic, model, steps, summary.neurons, c.latency);
    c.edp = edp(c.energy.total(), c.latency);
    return c;
}

namespace {

double ratio(double opt, double naive) noexcept
{
    if (naive == 0.0) {
        return opt == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return opt / naive;
}

} // namespace

double ComparisonRow::inter_chip_ratio() const noexcept
{
    return ratio(static_cast<double>(optimized.traffic.inter_chip), static_cast<double>(naive.traffic.inter_chip));
}

double ComparisonRow::latency_ratio() const noexcept
{
    return ratio(optimized.latency, naive.latency);
}

double ComparisonRow::energy_ratio() const noexcept
{
    return ratio(optimized.energy.total(), naive.energy.total());
}

double ComparisonRow::edp_ratio() const noexcept
{
    return ratio(optimized.edp, naive.edp);
}

ComparisonRow compare_placements(const NetworkGraph& graph, const Placement& naive, const Placement& optimized,
                                 const std::vector<Raster>& rasters, const CostModel& model, unsigned threads)
{
    ComparisonRow row;
    row.samples = rasters.size();
    row.steps = rasters.empty() ? 0 : rasters.front().steps();
    const auto tn = axon_tables(graph, naive);
    row.naive = evaluate_cost(graph, naive, tn, rasters, model, threads);
    const auto to = axon_tables(graph, optimized);
    row.optimized = evaluate_cost(graph, optimized, to, rasters, model, threads);
    row.neurons = summarize(graph, naive, tn).neurons;
    return row;
}

InputMap random_relnet_inputs(const NetworkGraph& graph, const RelNetConfig& config, double word_fill,
                              std::size_t steps, Rng& rng)
{
    if (!(word_fill > 0.0 && word_fill <= 1.0)) {
        throw InvalidParameter("word_fill must lie in (0, 1]");
    }
    WordEncoderConfig wc;
    wc.T_word = config.T_word;
    wc.N_words = config.N_words;
    wc.vocab = config.vocab;
    if (steps < wc.total_steps()) {
        throw InvalidParameter("input window is shorter than the word presentation");
    }
    const auto words = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(word_fill * config.N_words)));
    InputMap inputs;
    for (int s = 0; s <= config.M; ++s) {
        std::vector<std::uint32_t> ids(words);
        for (auto& id : ids) {
            id = static_cast<std::uint32_t>(rng.below(config.vocab));
        }
        const auto encoded = encode_sentence(ids, wc);
        SpikeMatrix m(encoded.neurons(), steps);
        for (std::size_t t = 0; t < encoded.steps(); ++t) {
            for (std::size_t j = 0; j < encoded.neurons(); ++j) {
                if (encoded.get(j, t)) {
                    m.set(j, t);
                }
            }
        }
        inputs.emplace(graph.require(word_input_name(s)), std::move(m));
    }
    return inputs;
}

std::vector<ComparisonRow> compare_strategies(const BenchConfig& config)
{
    config.model.validate();
    if (config.Ms.empty() || config.samples == 0) {
        throw InvalidParameter("benchmark needs at least one M and one sample");
    }
    std::vector<ComparisonRow> rows;
    for (const int M : config.Ms) {
        RelNetConfig rc = config.relnet;
        rc.M = M;
        const auto graph = insert_relays(build_relnet(rc, config.seed), config.budget, config.board.cores_per_chip);
        const std::size_t steps = static_cast<std::size_t>(rc.lsnn_steps() + rc.T_sim);
        std::vector<Raster> rasters;
        SimOptions sim;
        sim.threads = config.threads;
        for (std::size_t k = 0; k < config.samples; ++k) {
            Rng rng(config.seed, "bench-inputs", static_cast<std::uint64_t>(M) * 1000003ULL + k);
            const auto inputs = random_relnet_inputs(graph, rc, config.word_fill, steps, rng);
            rasters.push_back(simulate(graph, inputs, steps, sim).raster);
        }
        PlaceOptions po;
        po.budget = config.budget;
        po.board = config.board;
        po.strategy = Strategy::naive;
        const auto naive = place(graph, po);
        po.strategy = Strategy::optimized;
        const auto optimized = place(graph, po);
        auto row = compare_placements(graph, naive, optimized, rasters, config.model, config.threads);
        row.M = M;
        row.label = "M=" + std::to_string(M);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

namespace {

json cost_json(const StrategyCost& c)
{
    return {{"cores", c.cores},
            {"chips", c.chips},
            {"intra_core", c.traffic.intra_core},
            {"intra_chip", c.traffic.intra_chip},
            {"inter_chip", c.traffic.inter_chip},
            {"peak_inter_chip", c.traffic.peak_inter_chip()},
            {"latency_s", c.latency},
            {"static_energy_j", c.energy.static_energy},
            {"dynamic_energy_j", c.energy.dynamic_energy},
            {"energy_j", c.energy.total()},
            {"edp_js", c.edp}};
}

} // namespace

void write_report_csv(std::ostream& out, const std::vector<ComparisonRow>& rows, const std::string& config_hash)
{
    out << "label,M,neurons,samples,steps";
    for (const char* s : {"naive", "optimized"}) {
        for (const char* f : {"cores", "chips", "intra_core", "intra_chip", "inter_chip", "peak_inter_chip",
                              "latency_s", "energy_j", "edp_js"}) {
            out << ',' << s << '_' << f;
        }
    }
    out << ",inter_chip_ratio,latency_ratio,energy_ratio,edp_ratio,config_hash,tool_version\n";
    const auto prec = out.precision(10);
    for (const auto& r : rows) {
        out << r.label << ',' << r.M << ',' << r.neurons << ',' << r.samples << ',' << r.steps;
        for (const auto* c : {&r.naive, &r.optimized}) {
            out << ',' << c->cores << ',' << c->chips << ',' << c->traffic.intra_core << ','
                << c->traffic.intra_chip << ',' << c->traffic.inter_chip << ',' << c->traffic.peak_inter_chip()
                << ',' << c->latency << ',' << c->energy.total() << ',' << c->edp;
        }
        out << ',' << r.inter_chip_ratio() << ',' << r.latency_ratio() << ',' << r.energy_ratio() << ','
            << r.edp_ratio() << ',' << config_hash << ',' << kToolVersion << '\n';
    }
    out.precision(prec);
}

void write_report_json(std::ostream& out, const std::vector<ComparisonRow>& rows, const CostModel& model,
                       const std::string& config_hash)
{
    json doc;
    doc["format"] = "snn-cost-report";
    doc["version"] = 1;
    doc["tool_version"] = std::string(kToolVersion);
    doc["config_hash"] = config_hash;
    doc["model"] = {{"e_intra_core", model.e_intra_core},
                    {"e_intra_chip", model.e_intra_chip},
                    {"e_inter_chip", model.e_inter_chip},
                    {"e_neuron_update", model.e_neuron_update},
                    {"p_static", model.p_static},
                    {"step_time_base", model.step_time_base},
                    {"congestion_coeff", model.congestion_coeff},
                    {"congestion_threshold", model.congestion_threshold},
                    {"note", "placeholder coefficients, not measured hardware values"}};
    json list = json::array();
    for (const auto& r : rows) {
        list.push_back({{"label", r.label},
                        {"M", r.M},
                        {"neurons", r.neurons},
                        {"samples", r.samples},
                        {"steps", r.steps},
                        {"naive", cost_json(r.naive)},
                        {"optimized", cost_json(r.optimized)},
                        {"ratios",
                         {{"inter_chip", r.inter_chip_ratio()},
                          {"latency", r.latency_ratio()},
                          {"energy", r.energy_ratio()},
                          {"edp", r.edp_ratio()}}}});
    }
    doc["rows"] = std::move(list);
    out << doc.dump(1) << '\n';
}

void write_plot_data(std::ostream& out, const std::vector<ComparisonRow>& rows)
{
    out << "# M naive_chips optimized_chips naive_inter_chip optimized_inter_chip naive_edp optimized_edp\n";
    const auto prec = out.precision(10);
    for (const auto& r : rows) {
        out << r.M << ' ' << r.naive.chips << ' ' << r.optimized.chips << ' ' << r.naive.traffic.inter_chip << ' '
            << r.optimized.traffic.inter_chip << ' ' << r.naive.edp << ' ' << r.optimized.edp << '\n';
    }
    out.precision(prec);
}

} // namespace snn
