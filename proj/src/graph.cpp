#include "snn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <unordered_set>

#include "snn/errors.hpp"
#include "snn/random.hpp"

namespace snn {

const char* to_string(Role role) noexcept
{
    switch (role) {
    case Role::input:
        return "input";
    case Role::recurrent:
        return "recurrent";
    case Role::lsnn:
        return "lsnn";
    case Role::gtheta:
        return "gtheta";
    case Role::aggregation:
        return "aggregation";
    case Role::fphi:
        return "fphi";
    case Role::readout:
        return "readout";
    case Role::relay:
        return "relay";
    }
    return "?";
}

Role role_from_string(std::string_view text)
{
    for (auto role : {Role::input, Role::recurrent, Role::lsnn, Role::gtheta, Role::aggregation,
                      Role::fphi, Role::readout, Role::relay}) {
        if (text == to_string(role)) {
            return role;
        }
    }
    throw InvalidInput("unknown population role '" + std::string(text) + "'");
}

const char* to_string(Pattern pattern) noexcept
{
    switch (pattern) {
    case Pattern::dense:
        return "dense";
    case Pattern::one_to_one:
        return "one_to_one";
    case Pattern::sparse:
        return "sparse";
    }
    return "?";
}

Pattern pattern_from_string(std::string_view text)
{
    for (auto p : {Pattern::dense, Pattern::one_to_one, Pattern::sparse}) {
        if (text == to_string(p)) {
            return p;
        }
    }
    throw InvalidInput("unknown connection pattern '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

std::shared_ptr<WeightBlock> WeightBlock::dense(std::string tag, std::size_t rows,
                                                std::size_t cols)
{
    auto b = std::make_shared<WeightBlock>();
    b->share_tag = std::move(tag);
    b->pattern = Pattern::dense;
    b->rows = rows;
    b->cols = cols;
    b->weights.assign(rows * cols, 0.0);
    b->delays.assign(rows * cols, 1);
    return b;
}

std::shared_ptr<WeightBlock> WeightBlock::one_to_one(std::string tag, std::size_t size)
{
    auto b = std::make_shared<WeightBlock>();
    b->share_tag = std::move(tag);
    b->pattern = Pattern::one_to_one;
    b->rows = size;
    b->cols = size;
    b->weights.assign(size, 0.0);
    b->delays.assign(size, 1);
    return b;
}

std::shared_ptr<WeightBlock> WeightBlock::sparse(std::string tag, std::size_t rows,
                                                 std::size_t cols)
{
    auto b = dense(std::move(tag), rows, cols);
    b->pattern = Pattern::sparse;
    b->mask.assign(rows * cols, 0);
    return b;
}

bool WeightBlock::active(std::size_t src, std::size_t dst) const noexcept
{
    switch (pattern) {
    case Pattern::dense:
        return true;
    case Pattern::one_to_one:
        return src == dst;
    case Pattern::sparse:
        return mask[index(src, dst)] != 0;
    }
    return false;
}

std::size_t WeightBlock::synapse_count() const noexcept
{
    switch (pattern) {
    case Pattern::dense:
        return rows * cols;
    case Pattern::one_to_one:
        return rows;
    case Pattern::sparse:
        return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
    }
    return 0;
}

std::uint8_t WeightBlock::max_delay() const noexcept
{
    std::uint8_t m = 0;
    for (std::size_t k = 0; k < delays.size(); ++k) {
        if (pattern == Pattern::sparse && mask[k] == 0) {
            continue;
        }
        m = std::max(m, delays[k]);
    }
    return m;
}

void WeightBlock::validate() const
{
    const std::size_t n = pattern == Pattern::one_to_one ? rows : rows * cols;
    if (pattern == Pattern::one_to_one && rows != cols) {
        throw InvalidInput("block '" + share_tag + "': one-to-one block must be square");
    }
    if (weights.size() != n || delays.size() != n) {
        throw InvalidInput("block '" + share_tag + "': weight/delay storage size mismatch");
    }
    if (pattern == Pattern::sparse && mask.size() != n) {
        throw InvalidInput("block '" + share_tag + "': mask size mismatch");
    }
    if (!row_signs.empty() && row_signs.size() != rows) {
        throw InvalidInput("block '" + share_tag + "': row sign size mismatch");
    }
    for (double w : weights) {
        if (!std::isfinite(w)) {
            throw InvalidInput("block '" + share_tag + "': non-finite weight");
        }
    }
}

// ---------------------------------------------------------------------------

bool PopulationSpec::has_ahp(std::size_t neuron) const noexcept
{
    if (params.kind != NeuronKind::lif_ahp) {
        return false;
    }
    if (!ahp_subset) {
        return true;
    }
    return std::binary_search(ahp_subset->begin(), ahp_subset->end(),
                              static_cast<std::uint32_t>(neuron));
}

std::size_t PopulationSpec::ahp_count() const noexcept
{
    if (params.kind != NeuronKind::lif_ahp) {
        return 0;
    }
    return ahp_subset ? ahp_subset->size() : size;
}

NeuronParams PopulationSpec::params_of(std::size_t neuron) const
{
    return has_ahp(neuron) ? params : params.without_ahp();
}

// ---------------------------------------------------------------------------

PopId NetworkGraph::add_population(PopulationSpec spec)
{
    if (spec.ahp_subset) {
        auto& s = *spec.ahp_subset;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
    }
    const auto id = static_cast<PopId>(populations_.size());
    offsets_.push_back(total_neurons_);
    total_neurons_ += spec.size;
    populations_.push_back(std::move(spec));
    incoming_.emplace_back();
    outgoing_.emplace_back();
    return id;
}

std::size_t NetworkGraph::connect(PopId src, PopId dst, std::shared_ptr<WeightBlock> block)
{
    if (src >= populations_.size() || dst >= populations_.size()) {
        throw InvalidInput("connect: population id out of range");
    }
    if (!block) {
        throw InvalidInput("connect: missing weight block");
    }
    const auto& s = populations_[src];
    const auto& d = populations_[dst];
    if (block->rows != s.size || block->cols != d.size) {
        throw InvalidInput("connect: block '" + block->share_tag + "' shape does not match " +
                           s.name + " -> " + d.name);
    }
    if (d.is_input()) {
        throw InvalidInput("connect: input population " + d.name + " cannot receive synapses");
    }
    const std::size_t index = connections_.size();
    connections_.push_back({src, dst, std::move(block)});
    outgoing_[src].push_back(index);
    incoming_[dst].push_back(index);
    return index;
}

std::optional<PopId> NetworkGraph::find(std::string_view name) const
{
    for (std::size_t i = 0; i < populations_.size(); ++i) {
        if (populations_[i].name == name) {
            return static_cast<PopId>(i);
        }
    }
    return std::nullopt;
}

PopId NetworkGraph::require(std::string_view name) const
{
    if (auto id = find(name)) {
        return *id;
    }
    throw InvalidInput("no population named '" + std::string(name) + "'");
}

std::vector<std::shared_ptr<WeightBlock>> NetworkGraph::blocks() const
{
    std::vector<std::shared_ptr<WeightBlock>> out;
    std::unordered_set<const WeightBlock*> seen;
    for (const auto& c : connections_) {
        if (seen.insert(c.block.get()).second) {
            out.push_back(c.block);
        }
    }
    return out;
}

std::uint8_t NetworkGraph::max_delay() const noexcept
{
    std::uint8_t m = 0;
    std::unordered_set<const WeightBlock*> seen;
    for (const auto& c : connections_) {
        if (seen.insert(c.block.get()).second) {
            m = std::max(m, c.block->max_delay());
        }
    }
    return m;
}

void NetworkGraph::validate() const
{
    std::set<std::string> names;
    for (const auto& p : populations_) {
        if (!names.insert(p.name).second) {
            throw InvalidInput("duplicate population name '" + p.name + "'");
        }
        if (p.size == 0) {
            throw InvalidInput("population '" + p.name + "' is empty");
        }
        if (p.ahp_subset) {
            if (p.params.kind != NeuronKind::lif_ahp) {
                throw InvalidInput("population '" + p.name + "' has an AHP subset but no AHP");
            }
            if (!p.ahp_subset->empty() && p.ahp_subset->back() >= p.size) {
                throw InvalidInput("population '" + p.name + "': AHP index out of range");
            }
        }
        try {
            p.params.validate();
        } catch (const InvalidParameter& e) {
            throw InvalidInput("population '" + p.name + "': " + e.what());
        }
    }
    for (const auto& c : connections_) {
        if (c.src >= populations_.size() || c.dst >= populations_.size()) {
            throw InvalidInput("dangling connection endpoint");
        }
        c.block->validate();
        if (c.block->rows != populations_[c.src].size ||
            c.block->cols != populations_[c.dst].size) {
            throw InvalidInput("connection shape mismatch for block '" + c.block->share_tag + "'");
        }
        if (populations_[c.dst].role == Role::relay && c.block->pattern != Pattern::one_to_one) {
            throw InvalidInput("relay population '" + populations_[c.dst].name +
                               "' must be fed one-to-one");
        }
    }
}

std::uint64_t NetworkGraph::hash() const
{
    Fnv1a h;
    h.update("snn-graph");
    for (const auto& p : populations_) {
        h.update(p.name);
        h.update_value(static_cast<std::uint64_t>(p.size));
        h.update_value(static_cast<std::uint8_t>(p.params.kind));
        for (double x : {p.params.tau_v, p.params.tau_i, p.params.tau_ahp, p.params.beta,
                         p.params.b0, p.params.g_v}) {
            h.update_value(x);
        }
        h.update_value(static_cast<std::int64_t>(p.params.refractory));
        h.update_value(static_cast<std::int64_t>(p.params.readout_window));
        if (p.ahp_subset) {
            for (auto j : *p.ahp_subset) {
                h.update_value(j);
            }
        }
        h.update_value(static_cast<std::uint8_t>(p.role));
    }
    std::vector<const WeightBlock*> order;
    for (const auto& c : connections_) {
        h.update_value(c.src);
        h.update_value(c.dst);
        h.update(c.block->share_tag);
    }
    for (const auto& b : blocks()) {
        h.update(b->share_tag);
        h.update_value(static_cast<std::uint8_t>(b->pattern));
        for (double w : b->weights) {
            h.update_value(w);
        }
        h.update(b->delays.data(), b->delays.size());
        h.update(b->mask.data(), b->mask.size());
    }
    return h.digest();
}

// ---------------------------------------------------------------------------

Subgraph extract_subgraph(const NetworkGraph& graph, std::span<const PopId> keep,
                          std::span<const PopId> as_inputs)
{
    Subgraph sub;
    sub.from_original.assign(graph.population_count(), std::nullopt);
    std::vector<char> kept(graph.population_count(), 0);
    std::vector<char> input(graph.population_count(), 0);
    for (PopId id : keep) {
        kept.at(id) = 1;
    }
    for (PopId id : as_inputs) {
        kept.at(id) = 1;
        input.at(id) = 1;
    }
    for (PopId id = 0; id < graph.population_count(); ++id) {
        if (!kept[id]) {
            continue;
        }
        PopulationSpec spec = graph.population(id);
        if (input[id]) {
            spec.params = NeuronParams::input_source();
            spec.ahp_subset.reset();
        }
        sub.from_original[id] = sub.graph.add_population(std::move(spec));
        sub.to_original.push_back(id);
    }
    for (const auto& c : graph.connections()) {
        if (!kept[c.src] || !kept[c.dst] || input[c.dst]) {
            continue;
        }
        sub.graph.connect(*sub.from_original[c.src], *sub.from_original[c.dst], c.block);
    }
    sub.graph.metadata() = graph.metadata();
    return sub;
}

ResourceCount count_resources(const NetworkGraph& graph)
{
    ResourceCount r;
    r.per_population.reserve(graph.population_count());
    for (PopId id = 0; id < graph.population_count(); ++id) {
        const auto& p = graph.population(id);
        PopulationCount pc{id, p.name, p.role, p.size, 0};
        for (std::size_t ci : graph.incoming(id)) {
            pc.synapses_in += graph.connection(ci).block->synapse_count();
        }
        if (p.is_input()) {
            r.input_neurons += p.size;
        } else {
            r.neurons += p.size;
        }
        r.synapses += pc.synapses_in;
        r.per_population.push_back(std::move(pc));
    }
    return r;
}

} // namespace snn
