#include "snn/placement.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "snn/builders.hpp"
#include "snn/errors.hpp"
#include "snn/io.hpp"

namespace snn {

using nlohmann::json;

namespace {

constexpr std::uint32_t kUnplaced = std::numeric_limits<std::uint32_t>::max();

std::string range_label(const NetworkGraph& g, const NeuronRange& r)
{
    return g.population(r.pop).name + "[" + std::to_string(r.begin) + "," + std::to_string(r.end) + ")";
}

std::vector<NeuronRange> equal_slices(PopId pop, std::size_t size, std::size_t n)
{
    std::vector<NeuronRange> out;
    const std::size_t base = size / n;
    const std::size_t extra = size % n;
    std::uint32_t begin = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto len = static_cast<std::uint32_t>(base + (k < extra ? 1 : 0));
        out.push_back({pop, begin, begin + len});
        begin += len;
    }
    return out;
}

bool is_first_gtheta(const PopulationSpec& p)
{
    return p.role == Role::gtheta && p.layer == 1;
}

} // namespace

CoreBudget CoreBudget::relnet()
{
    CoreBudget b;
    b.layer_neuron_cap = 128;
    return b;
}

void CoreBudget::validate() const
{
    if (max_neurons_1comp == 0 || max_neurons_2comp == 0 || synapse_memory == 0 || input_axons == 0 ||
        output_axons_interchip == 0 || output_axons_intrachip == 0 || neuron_core_fanout == 0) {
        throw InvalidParameter("core budget entries must be positive");
    }
}

void BoardModel::validate() const
{
    if (chips == 0 || cores_per_chip == 0) {
        throw InvalidParameter("board needs at least one chip and one core per chip");
    }
}

std::size_t neuron_cap(const CoreBudget& budget, bool has_ahp) noexcept
{
    std::size_t cap = has_ahp ? budget.max_neurons_2comp : budget.max_neurons_1comp;
    if (budget.layer_neuron_cap > 0) {
        cap = std::min(cap, budget.layer_neuron_cap);
    }
    return cap;
}

CoreLoad core_load(const NetworkGraph& graph, const NeuronRange& r)
{
    const auto& pop = graph.population(r.pop);
    if (r.begin > r.end || r.end > pop.size) {
        throw InvalidInput("neuron range " + range_label(graph, r) + " is out of bounds");
    }
    CoreLoad load;
    load.neurons = r.size();
    for (auto j = r.begin; j < r.end; ++j) {
        if (pop.has_ahp(j)) {
            load.has_ahp = true;
            break;
        }
    }
    std::map<PopId, std::vector<char>> presyn;
    for (const auto ci : graph.incoming(r.pop)) {
        const auto& c = graph.connection(ci);
        const auto& b = *c.block;
        auto& marks = presyn[c.src];
        marks.resize(graph.population(c.src).size, 0);
        switch (b.pattern) {
        case Pattern::dense:
            load.synapses += b.rows * r.size();
            std::fill(marks.begin(), marks.end(), 1);
            break;
        case Pattern::one_to_one:
            load.synapses += r.size();
            for (auto j = r.begin; j < r.end; ++j) {
                marks[j] = 1;
            }
            break;
        case Pattern::sparse:
            for (std::size_t i = 0; i < b.rows; ++i) {
                for (auto j = r.begin; j < r.end; ++j) {
                    if (b.mask[b.index(i, j)]) {
                        ++load.synapses;
                        marks[i] = 1;
                    }
                }
            }
            break;
        }
    }
    for (const auto& [src, marks] : presyn) {
        load.input_axons += static_cast<std::size_t>(std::count(marks.begin(), marks.end(), 1));
    }
    return load;
}

std::vector<NeuronRange> split_layer(const NetworkGraph& graph, PopId pop, const CoreBudget& budget,
                                     std::size_t extra_cap)
{
    budget.validate();
    const std::size_t size = graph.population(pop).size;
    if (size == 0) {
        return {};
    }
    std::size_t cap = neuron_cap(budget, false);
    if (extra_cap > 0) {
        cap = std::min(cap, extra_cap);
    }
    const auto fits = [&](const NeuronRange& r, std::string* why) {
        const auto load = core_load(graph, r);
        std::size_t limit = neuron_cap(budget, load.has_ahp);
        if (extra_cap > 0) {
            limit = std::min(limit, extra_cap);
        }
        if (load.neurons > limit) {
            if (why) *why = "neuron cap";
            return false;
        }
        if (load.synapses > budget.synapse_memory) {
            if (why) *why = "synapse memory (" + std::to_string(load.synapses) + " > " +
                            std::to_string(budget.synapse_memory) + ")";
            return false;
        }
        if (load.input_axons > budget.input_axons) {
            if (why) *why = "input axons (" + std::to_string(load.input_axons) + " > " +
                            std::to_string(budget.input_axons) + ")";
            return false;
        }
        return true;
    };
    for (std::size_t n = (size + cap - 1) / cap; n <= size; ++n) {
        auto slices = equal_slices(pop, size, n);
        if (std::all_of(slices.begin(), slices.end(), [&](const NeuronRange& r) { return fits(r, nullptr); })) {
            return slices;
        }
    }
    for (std::uint32_t j = 0; j < size; ++j) {
        std::string why;
        if (!fits({pop, j, j + 1}, &why)) {
            throw Unplaceable("neuron " + std::to_string(j) + " of '" + graph.population(pop).name +
                              "' alone exceeds the " + why + " of a core");
        }
    }
    throw Unplaceable("population '" + graph.population(pop).name + "' cannot be split");
}

// ---------------------------------------------------------------------------

std::size_t relay_cores(std::size_t size, std::size_t destination_cores, const CoreBudget& budget)
{
    std::size_t cap = neuron_cap(budget, false);
    if (destination_cores > 0) {
        cap = std::min(cap, budget.output_axons_intrachip / destination_cores);
    }
    if (cap == 0) {
        throw Unplaceable("a relay neuron reaching " + std::to_string(destination_cores) +
                          " cores exceeds the output-axon limit of a core");
    }
    return (size + cap - 1) / cap;
}

std::size_t group_cores(const InstanceGroup& group, const GroupingParams& params)
{
    std::size_t cores = group.instances.size() * params.first_layer_cores;
    for (const int s : group.sentences) {
        std::size_t users = 0;
        for (const auto& p : group.instances) {
            users += (s == 0 || p.i == s || p.j == s) ? 1 : 0;
        }
        cores += relay_cores(params.relay_size, users * params.first_layer_cores, params.budget);
    }
    return cores;
}

namespace {

std::vector<InstanceGroup> square_blocks(int M, int side)
{
    std::vector<InstanceGroup> out;
    const int nb = (M + side - 1) / side;
    for (int a = 0; a < nb; ++a) {
        for (int b = a; b < nb; ++b) {
            InstanceGroup g;
            std::set<int> sentences{0};
            for (int i = a * side + 1; i <= std::min(M, (a + 1) * side); ++i) {
                for (int j = std::max(i, b * side + 1); j <= std::min(M, (b + 1) * side); ++j) {
                    g.instances.push_back({i, j});
                    sentences.insert(i);
                    sentences.insert(j);
                }
            }
            g.sentences.assign(sentences.begin(), sentences.end());
            out.push_back(std::move(g));
        }
    }
    return out;
}

} // namespace

int grouping_side(int M, const GroupingParams& params)
{
    if (M < 1) {
        throw InvalidParameter("grouping needs M >= 1");
    }
    for (int side = M; side >= 1; --side) {
        const auto groups = square_blocks(M, side);
        if (std::all_of(groups.begin(), groups.end(), [&](const InstanceGroup& g) {
                return group_cores(g, params) <= params.cores_per_chip;
            })) {
            return side;
        }
    }
    throw Unplaceable("a single g_theta instance and its relays do not fit on one chip");
}

std::vector<InstanceGroup> group_gtheta_instances(int M, const GroupingParams& params)
{
    return square_blocks(M, grouping_side(M, params));
}

NeuronParams relay_params(double b0)
{
    // Near-zero time constants: nothing carries over from one step to the next.
    return NeuronParams::lif(0.01, 0.01, b0, 0);
}

NetworkGraph insert_relays(const NetworkGraph& relnet, const std::vector<InstanceGroup>& groups)
{
    std::map<int, PopId> lsnn;
    std::map<std::pair<int, int>, PopId> first_layer;
    double b0 = 0.0;
    std::size_t lsnn_size = 0;
    for (PopId id = 0; id < relnet.population_count(); ++id) {
        const auto& p = relnet.population(id);
        if (p.role == Role::relay) {
            throw InvalidInput("graph already contains relay layers");
        }
        if (p.role == Role::lsnn) {
            lsnn[p.sentence] = id;
            lsnn_size = p.size;
        }
        if (is_first_gtheta(p)) {
            first_layer[{p.pair.i, p.pair.j}] = id;
            b0 = p.params.b0;
        }
    }
    if (first_layer.empty() || lsnn.empty()) {
        throw InvalidInput("relay insertion needs a RelNet graph");
    }
    std::map<std::pair<int, int>, int> group_of;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& p : groups[g].instances) {
            if (!first_layer.count({p.i, p.j}) || !group_of.emplace(std::pair{p.i, p.j}, static_cast<int>(g)).second) {
                throw InvalidInput("instance groups must cover every g_theta instance exactly once");
            }
        }
    }
    if (group_of.size() != first_layer.size()) {
        throw InvalidInput("instance groups must cover every g_theta instance exactly once");
    }

    NetworkGraph g;
    for (const auto& p : relnet.populations()) {
        g.add_population(p);
    }
    std::map<std::pair<int, int>, PopId> relay; // (sentence, group) -> id
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        for (const int s : groups[gi].sentences) {
            if (!lsnn.count(s)) {
                throw InvalidInput("instance group refers to a missing sentence LSNN");
            }
            PopulationSpec p;
            p.name = relay_name(s, static_cast<int>(gi));
            p.size = lsnn_size;
            p.params = relay_params(b0);
            p.role = Role::relay;
            p.sentence = s;
            p.relay_group = static_cast<int>(gi);
            relay[{s, static_cast<int>(gi)}] = g.add_population(std::move(p));
        }
    }
    auto link = WeightBlock::one_to_one("relay.link", lsnn_size);
    std::fill(link->weights.begin(), link->weights.end(), 2.0 * b0);
    std::fill(link->delays.begin(), link->delays.end(), std::uint8_t{0});
    link->frozen = true;

    for (const auto& c : relnet.connections()) {
        const auto& src = relnet.population(c.src);
        const auto& dst = relnet.population(c.dst);
        if (src.role == Role::lsnn && is_first_gtheta(dst)) {
            const int gi = group_of.at({dst.pair.i, dst.pair.j});
            g.connect(relay.at({src.sentence, gi}), c.dst, c.block);
        } else {
            g.connect(c.src, c.dst, c.block);
        }
    }
    for (const auto& [key, id] : relay) {
        g.connect(lsnn.at(key.first), id, link);
    }
    g.metadata() = relnet.metadata();
    g.metadata()["relay_layers"] = std::to_string(relay.size());
    g.validate();
    return g;
}

NetworkGraph insert_relays(const NetworkGraph& relnet, const CoreBudget& budget, std::size_t cores_per_chip)
{
    const auto it = relnet.metadata().find("M");
    if (it == relnet.metadata().end()) {
        throw InvalidInput("relay insertion needs a RelNet graph (metadata lacks M)");
    }
    GroupingParams params;
    params.cores_per_chip = cores_per_chip;
    params.budget = budget;
    const PopId l1 = relnet.require(gtheta_name({1, 1}, 1));
    params.first_layer_cores = split_layer(relnet, l1, budget).size();
    params.relay_size = relnet.population(relnet.require(lsnn_name(0))).size;
    return insert_relays(relnet, group_gtheta_instances(std::stoi(it->second), params));
}

// ---------------------------------------------------------------------------

const char* to_string(Strategy s) noexcept
{
    return s == Strategy::naive ? "naive" : "optimized";
}

Strategy strategy_from_string(std::string_view text)
{
    if (text == "naive") {
        return Strategy::naive;
    }
    if (text == "optimized") {
        return Strategy::optimized;
    }
    throw InvalidInput("unknown placement strategy '" + std::string(text) + "'");
}

std::size_t Placement::chips_used() const
{
    std::set<std::uint32_t> chips;
    for (const auto& s : slices) {
        chips.insert(s.chip);
    }
    return chips.size();
}

namespace {

using SliceTable = std::vector<std::vector<NeuronRange>>;

// Largest number of distinct destination cores over the neurons of `pop`
// when every population is split as in `slices`.
std::size_t max_fanout(const NetworkGraph& g, PopId pop, const SliceTable& slices)
{
    const auto& out = g.outgoing(pop);
    if (out.empty()) {
        return 0;
    }
    const auto slice_of = [&](PopId p, std::uint32_t j) {
        const auto& s = slices[p];
        const auto it = std::upper_bound(s.begin(), s.end(), j,
                                         [](std::uint32_t v, const NeuronRange& r) { return v < r.end; });
        return static_cast<std::size_t>(it - s.begin());
    };
    std::size_t worst = 0;
    std::set<std::pair<PopId, std::size_t>> cores;
    for (std::uint32_t i = 0; i < g.population(pop).size; ++i) {
        cores.clear();
        for (const auto ci : out) {
            const auto& c = g.connection(ci);
            const auto& b = *c.block;
            switch (b.pattern) {
            case Pattern::dense:
                for (std::size_t k = 0; k < slices[c.dst].size(); ++k) {
                    cores.insert({c.dst, k});
                }
                break;
            case Pattern::one_to_one:
                cores.insert({c.dst, slice_of(c.dst, i)});
                break;
            case Pattern::sparse:
                for (std::uint32_t j = 0; j < b.cols; ++j) {
                    if (b.mask[b.index(i, j)]) {
                        cores.insert({c.dst, slice_of(c.dst, j)});
                    }
                }
                break;
            }
        }
        worst = std::max(worst, cores.size());
    }
    return worst;
}

// Splits every population by its incoming load, then re-splits producers
// whose cores would exceed the output-axon limit, until nothing changes.
SliceTable split_all(const NetworkGraph& g, const CoreBudget& budget, Strategy strategy)
{
    SliceTable slices(g.population_count());
    for (PopId p = 0; p < g.population_count(); ++p) {
        slices[p] = split_layer(g, p, budget);
    }
    for (int pass = 0; pass < 16; ++pass) {
        bool changed = false;
        for (PopId p = 0; p < g.population_count(); ++p) {
            const std::size_t fanout = max_fanout(g, p, slices);
            if (fanout == 0 || fanout > budget.neuron_core_fanout) {
                continue; // splitting cannot fix a fanout violation
            }
            const bool local = strategy == Strategy::optimized && g.population(p).role == Role::relay;
            const std::size_t limit = local ? budget.output_axons_intrachip : budget.output_axons_interchip;
            const std::size_t cap = std::max<std::size_t>(1, limit / fanout);
            const bool too_big = std::any_of(slices[p].begin(), slices[p].end(),
                                             [&](const NeuronRange& r) { return r.size() > cap; });
            if (too_big) {
                slices[p] = split_layer(g, p, budget, cap);
                changed = true;
            }
        }
        if (!changed) {
            return slices;
        }
    }
    throw Unplaceable("core splitting did not settle");
}

class CoreCursor {
public:
    CoreCursor(const BoardModel& board, Placement& out) : board_(board), out_(out) {}

    std::size_t free_on_chip() const noexcept { return board_.cores_per_chip - core_; }

    void next_chip()
    {
        if (core_ > 0) {
            ++chip_;
            core_ = 0;
        }
    }

    // Places the slices consecutively, spilling over chip boundaries.
    void fill(const std::vector<NeuronRange>& ranges)
    {
        for (const auto& r : ranges) {
            if (core_ == board_.cores_per_chip) {
                ++chip_;
                core_ = 0;
            }
            if (chip_ >= board_.chips) {
                throw Unplaceable("board capacity of " + std::to_string(board_.cores()) +
                                  " cores exceeded");
            }
            out_.slices.push_back({r, static_cast<std::uint32_t>(chip_), static_cast<std::uint32_t>(core_)});
            ++core_;
        }
    }

    // Keeps the slices on one chip, moving to a fresh chip when needed.
    void fill_together(const std::vector<NeuronRange>& ranges, const std::string& what)
    {
        if (ranges.size() > board_.cores_per_chip) {
            throw Unplaceable(what + " needs " + std::to_string(ranges.size()) +
                              " cores, more than one chip holds");
        }
        if (ranges.size() > free_on_chip()) {
            next_chip();
        }
        fill(ranges);
    }

private:
    const BoardModel& board_;
    Placement& out_;
    std::size_t chip_ = 0;
    std::size_t core_ = 0;
};

void place_naive(const NetworkGraph& g, const SliceTable& slices, CoreCursor& cursor)
{
    std::map<PopId, std::vector<PopId>> relays_of;
    for (PopId p = 0; p < g.population_count(); ++p) {
        if (g.population(p).role == Role::relay) {
            for (const auto ci : g.incoming(p)) {
                relays_of[g.connection(ci).src].push_back(p);
            }
        }
    }
    for (PopId p = 0; p < g.population_count(); ++p) {
        if (g.population(p).role == Role::relay) {
            continue;
        }
        cursor.fill(slices[p]);
        for (PopId r : relays_of[p]) {
            cursor.fill(slices[r]);
        }
    }
}

void place_optimized(const NetworkGraph& g, const SliceTable& slices, CoreCursor& cursor)
{
    std::map<int, std::vector<PopId>> group_members; // relay group -> relays, then first layers
    std::map<std::pair<int, int>, std::vector<PopId>> deeper;
    std::vector<PopId> rest;
    std::map<PopId, int> group_of_first;
    for (PopId p = 0; p < g.population_count(); ++p) {
        const auto& spec = g.population(p);
        if (spec.role == Role::relay) {
            group_members[spec.relay_group].push_back(p);
        } else if (is_first_gtheta(spec)) {
            int group = -1;
            for (const auto ci : g.incoming(p)) {
                const auto& src = g.population(g.connection(ci).src);
                group = src.role == Role::relay ? src.relay_group : -1;
                if (group < 0) {
                    break;
                }
            }
            if (group < 0) {
                rest.push_back(p); // fed directly by LSNNs
            } else {
                group_of_first[p] = group;
            }
        } else if (spec.role == Role::gtheta) {
            deeper[{spec.pair.i, spec.pair.j}].push_back(p);
        } else {
            rest.push_back(p);
        }
    }
    for (const auto& [p, group] : group_of_first) {
        group_members[group].push_back(p);
    }

    // Inputs, LSNNs and the shared layers, each population kept on one chip
    // when it fits.
    for (PopId p : rest) {
        if (slices[p].size() <= cursor.free_on_chip()) {
            cursor.fill(slices[p]);
        } else if (slices[p].size() <= 128) {
            cursor.fill_together(slices[p], g.population(p).name);
        } else {
            cursor.fill(slices[p]);
        }
    }
    for (const auto& [group, members] : group_members) {
        std::vector<NeuronRange> ranges;
        for (PopId p : members) {
            ranges.insert(ranges.end(), slices[p].begin(), slices[p].end());
        }
        cursor.fill_together(ranges, "relay group " + std::to_string(group));
    }
    for (const auto& [pair, layers] : deeper) {
        std::vector<NeuronRange> ranges;
        for (PopId p : layers) {
            ranges.insert(ranges.end(), slices[p].begin(), slices[p].end());
        }
        cursor.fill_together(ranges, "g_theta instance " + std::to_string(pair.first) + "," +
                                         std::to_string(pair.second));
    }
}

} // namespace

Placement place(const NetworkGraph& graph, const PlaceOptions& options)
{
    options.budget.validate();
    options.board.validate();
    Placement out;
    out.board = options.board;
    out.strategy = options.strategy;
    const auto slices = split_all(graph, options.budget, options.strategy);
    CoreCursor cursor(options.board, out);
    if (options.strategy == Strategy::naive) {
        place_naive(graph, slices, cursor);
    } else {
        place_optimized(graph, slices, cursor);
    }
    std::sort(out.slices.begin(), out.slices.end(), [](const PlacedSlice& a, const PlacedSlice& b) {
        return std::tie(a.chip, a.core) < std::tie(b.chip, b.core);
    });
    return out;
}

// ---------------------------------------------------------------------------

AxonTables axon_tables(const NetworkGraph& graph, const Placement& placement)
{
    placement.board.validate();
    AxonTables t;
    t.core_of.assign(graph.total_neurons(), kUnplaced);
    std::vector<int> slice_at(placement.board.cores(), -1);
    std::vector<std::vector<std::uint32_t>> pop_cores(graph.population_count());
    for (std::size_t k = 0; k < placement.slices.size(); ++k) {
        const auto& s = placement.slices[k];
        if (s.chip >= placement.board.chips || s.core >= placement.board.cores_per_chip) {
            throw InvalidInput("slice " + range_label(graph, s.range) + " lies outside the board");
        }
        if (s.range.pop >= graph.population_count() || s.range.end > graph.population(s.range.pop).size ||
            s.range.begin >= s.range.end) {
            throw InvalidInput("placement slice does not match the graph");
        }
        const auto core = placement.global_core(s);
        if (slice_at[core] >= 0) {
            throw InvalidInput("core " + std::to_string(s.chip) + ":" + std::to_string(s.core) +
                               " holds more than one slice");
        }
        slice_at[core] = static_cast<int>(k);
        pop_cores[s.range.pop].push_back(core);
        const auto offset = graph.neuron_offset(s.range.pop);
        for (auto j = s.range.begin; j < s.range.end; ++j) {
            if (t.core_of[offset + j] != kUnplaced) {
                throw InvalidInput("neuron " + std::to_string(j) + " of '" +
                                   graph.population(s.range.pop).name + "' is placed twice");
            }
            t.core_of[offset + j] = core;
        }
    }
    for (PopId p = 0; p < graph.population_count(); ++p) {
        const auto offset = graph.neuron_offset(p);
        for (std::size_t j = 0; j < graph.population(p).size; ++j) {
            if (t.core_of[offset + j] == kUnplaced) {
                throw InvalidInput("population '" + graph.population(p).name + "' is not fully placed");
            }
        }
    }

    t.destinations.assign(graph.total_neurons(), {});
    for (PopId p = 0; p < graph.population_count(); ++p) {
        const auto offset = graph.neuron_offset(p);
        for (const auto ci : graph.outgoing(p)) {
            const auto& c = graph.connection(ci);
            const auto& b = *c.block;
            const auto dst_offset = graph.neuron_offset(c.dst);
            for (std::uint32_t i = 0; i < graph.population(p).size; ++i) {
                auto& d = t.destinations[offset + i];
                switch (b.pattern) {
                case Pattern::dense:
                    d.insert(d.end(), pop_cores[c.dst].begin(), pop_cores[c.dst].end());
                    break;
                case Pattern::one_to_one:
                    d.push_back(t.core_of[dst_offset + i]);
                    break;
                case Pattern::sparse:
                    for (std::uint32_t j = 0; j < b.cols; ++j) {
                        if (b.mask[b.index(i, j)]) {
                            d.push_back(t.core_of[dst_offset + j]);
                        }
                    }
                    break;
                }
            }
        }
    }
    for (auto& d : t.destinations) {
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
    }

    t.cores.resize(placement.slices.size());
    for (std::size_t k = 0; k < placement.slices.size(); ++k) {
        const auto& s = placement.slices[k];
        auto& c = t.cores[k];
        c.chip = s.chip;
        c.core = s.core;
        const auto load = core_load(graph, s.range);
        c.neurons = load.neurons;
        c.synapses = load.synapses;
        c.has_ahp = load.has_ahp;
        c.input_only = graph.population(s.range.pop).is_input();
        const auto offset = graph.neuron_offset(s.range.pop);
        for (auto j = s.range.begin; j < s.range.end; ++j) {
            const auto& d = t.destinations[offset + j];
            c.output_axons += d.size();
            c.max_fanout = std::max(c.max_fanout, d.size());
            for (const auto dst : d) {
                c.output_axons_offchip += dst / placement.board.cores_per_chip != s.chip ? 1 : 0;
                ++t.cores[static_cast<std::size_t>(slice_at[dst])].input_axons;
            }
        }
    }
    return t;
}

std::vector<std::size_t> AxonTables::output_axons_to(const NetworkGraph& graph, const Placement& placement,
                                                     PopId pop, Role to) const
{
    std::map<std::uint32_t, PopId> pop_at;
    for (const auto& s : placement.slices) {
        pop_at[placement.global_core(s)] = s.range.pop;
    }
    std::vector<std::size_t> out;
    for (const auto& s : placement.slices) {
        if (s.range.pop != pop) {
            continue;
        }
        std::size_t n = 0;
        const auto offset = graph.neuron_offset(pop);
        for (auto j = s.range.begin; j < s.range.end; ++j) {
            for (const auto dst : destinations[offset + j]) {
                n += graph.population(pop_at.at(dst)).role == to ? 1 : 0;
            }
        }
        out.push_back(n);
    }
    return out;
}

const char* to_string(Budget b) noexcept
{
    switch (b) {
    case Budget::neurons:
        return "neurons";
    case Budget::synapse_memory:
        return "synapse_memory";
    case Budget::input_axons:
        return "input_axons";
    case Budget::output_axons:
        return "output_axons";
    case Budget::fanout:
        return "fanout";
    }
    return "?";
}

namespace {

// Destination cores of the worst neuron of `r`, counted by population role.
std::string fanout_breakdown(const NetworkGraph& graph, const Placement& placement, const AxonTables& tables,
                             const NeuronRange& r)
{
    std::vector<PopId> pop_at(placement.board.cores(), 0);
    for (const auto& s : placement.slices) {
        pop_at[placement.global_core(s)] = s.range.pop;
    }
    const auto offset = graph.neuron_offset(r.pop);
    std::size_t worst = offset + r.begin;
    for (auto j = r.begin; j < r.end; ++j) {
        if (tables.destinations[offset + j].size() > tables.destinations[worst].size()) {
            worst = offset + j;
        }
    }
    std::map<std::string, std::size_t> by_role;
    for (const auto d : tables.destinations[worst]) {
        ++by_role[to_string(graph.population(pop_at[d]).role)];
    }
    std::string text = " (";
    for (const auto& [role, n] : by_role) {
        text += (text.size() > 2 ? ", " : "") + std::to_string(n) + " to " + role;
    }
    return text + ")";
}

} // namespace

std::vector<Violation> verify(const NetworkGraph& graph, const Placement& placement, const CoreBudget& budget)
{
    return verify(graph, placement, axon_tables(graph, placement), budget);
}

std::vector<Violation> verify(const NetworkGraph& graph, const Placement& placement,
                              const AxonTables& tables, const CoreBudget& budget)
{
    budget.validate();
    std::vector<Violation> out;
    for (std::size_t k = 0; k < tables.cores.size(); ++k) {
        const auto& c = tables.cores[k];
        const auto label = "chip " + std::to_string(c.chip) + " core " + std::to_string(c.core) + " (" +
                           range_label(graph, placement.slices[k].range) + "): ";
        const auto add = [&](Budget b, std::size_t value, std::size_t limit, const std::string& what) {
            out.push_back({b, c.chip, c.core, value, limit,
                           label + what + " " + std::to_string(value) + " > " + std::to_string(limit)});
        };
        const auto cap = neuron_cap(budget, c.has_ahp);
        if (c.neurons > cap) {
            add(Budget::neurons, c.neurons, cap, "neurons");
        }
        if (c.synapses > budget.synapse_memory) {
            add(Budget::synapse_memory, c.synapses, budget.synapse_memory, "synapses");
        }
        if (c.input_axons > budget.input_axons) {
            add(Budget::input_axons, c.input_axons, budget.input_axons, "input axons");
        }
        const auto out_limit = c.output_axons_offchip > 0 ? budget.output_axons_interchip
                                                          : budget.output_axons_intrachip;
        if (c.output_axons > out_limit) {
            add(Budget::output_axons, c.output_axons, out_limit,
                c.output_axons_offchip > 0 ? "output axons (off-chip)" : "output axons (on-chip)");
        }
        if (c.max_fanout > budget.neuron_core_fanout) {
            add(Budget::fanout, c.max_fanout, budget.neuron_core_fanout, "neuron fanout");
            out.back().message += fanout_breakdown(graph, placement, tables, placement.slices[k].range);
        }
    }
    return out;
}

PlacementSummary summarize(const NetworkGraph& graph, const Placement& placement, const AxonTables& tables)
{
    PlacementSummary s;
    for (const auto& c : tables.cores) {
        (c.input_only ? s.input_cores : s.cores) += 1;
    }
    s.chips = placement.chips_used();
    for (const auto& p : graph.populations()) {
        s.neurons += p.is_input() ? 0 : p.size;
        s.relay_layers += p.role == Role::relay ? 1 : 0;
    }
    return s;
}

// ---------------------------------------------------------------------------

void save_placement(const std::filesystem::path& path, const Placement& placement,
                    const NetworkGraph& graph, const std::string& config_hash)
{
    const auto tables = axon_tables(graph, placement);
    json doc;
    doc["format"] = "snn-placement";
    doc["version"] = 1;
    doc["tool_version"] = std::string(kToolVersion);
    doc["config_hash"] = config_hash;
    doc["graph_hash"] = hex64(graph.hash());
    doc["strategy"] = to_string(placement.strategy);
    doc["board"] = {{"chips", placement.board.chips}, {"cores_per_chip", placement.board.cores_per_chip}};
    json slices = json::array();
    json cores = json::array();
    for (std::size_t k = 0; k < placement.slices.size(); ++k) {
        const auto& s = placement.slices[k];
        const auto& c = tables.cores[k];
        slices.push_back({{"population", graph.population(s.range.pop).name},
                          {"begin", s.range.begin},
                          {"end", s.range.end},
                          {"chip", s.chip},
                          {"core", s.core}});
        cores.push_back({{"chip", c.chip},
                         {"core", c.core},
                         {"neurons", c.neurons},
                         {"synapses", c.synapses},
                         {"input_axons", c.input_axons},
                         {"output_axons", c.output_axons},
                         {"output_axons_offchip", c.output_axons_offchip},
                         {"max_fanout", c.max_fanout}});
    }
    doc["slices"] = std::move(slices);
    doc["cores"] = std::move(cores);
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write '" + path.string() + "'");
    }
    out << doc.dump(1) << '\n';
}

Placement load_placement(const std::filesystem::path& path, const NetworkGraph& graph)
{
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot read '" + path.string() + "'");
    }
    try {
        json doc;
        in >> doc;
        if (doc.at("format") != "snn-placement" || doc.at("version").get<int>() != 1) {
            throw InvalidInput("'" + path.string() + "' is not a supported placement file");
        }
        if (doc.at("graph_hash").get<std::string>() != hex64(graph.hash())) {
            throw InvalidInput("placement '" + path.string() + "' was made for a different network");
        }
        Placement p;
        p.strategy = strategy_from_string(doc.at("strategy").get<std::string>());
        p.board.chips = doc.at("board").at("chips").get<std::size_t>();
        p.board.cores_per_chip = doc.at("board").at("cores_per_chip").get<std::size_t>();
        for (const auto& s : doc.at("slices")) {
            PlacedSlice ps;
            ps.range.pop = graph.require(s.at("population").get<std::string>());
            ps.range.begin = s.at("begin").get<std::uint32_t>();
            ps.range.end = s.at("end").get<std::uint32_t>();
            ps.chip = s.at("chip").get<std::uint32_t>();
            ps.core = s.at("core").get<std::uint32_t>();
            p.slices.push_back(ps);
        }
        return p;
    } catch (const json::exception& e) {
        throw InvalidInput("malformed placement file '" + path.string() + "': " + e.what());
    }
}

} // namespace snn
