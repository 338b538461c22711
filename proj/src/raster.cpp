#include "snn/raster.hpp"

#include <algorithm>

#include "snn/errors.hpp"

namespace snn {

std::size_t SpikeMatrix::count() const noexcept
{
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::size_t SpikeMatrix::count_step(std::size_t step) const
{
    const auto row = step_row(step);
    return static_cast<std::size_t>(std::count(row.begin(), row.end(), std::uint8_t{1}));
}

std::size_t SpikeMatrix::count_neuron(std::size_t neuron) const
{
    std::size_t n = 0;
    for (std::size_t t = 0; t < steps_; ++t) {
        n += get(neuron, t) ? 1 : 0;
    }
    return n;
}

void Raster::push_step(std::span<const SpikeEvent> events)
{
    for (std::size_t k = 0; k < events.size(); ++k) {
        const auto& e = events[k];
        if (e.pop >= sizes_.size() || e.neuron >= sizes_[e.pop]) {
            throw InvalidInput("raster event references a nonexistent neuron");
        }
        if (k > 0 && !(events[k - 1] < e)) {
            throw InvalidInput("raster events of a step must be sorted and unique");
        }
    }
    events_.insert(events_.end(), events.begin(), events.end());
    offsets_.push_back(events_.size());
}

std::span<const SpikeEvent> Raster::events(std::size_t step) const
{
    if (step >= steps()) {
        throw InvalidInput("raster step out of range");
    }
    return {events_.data() + offsets_[step], offsets_[step + 1] - offsets_[step]};
}

SpikeMatrix Raster::population(std::uint32_t pop) const
{
    SpikeMatrix m(sizes_.at(pop), steps());
    for (std::size_t t = 0; t < steps(); ++t) {
        for (const auto& e : events(t)) {
            if (e.pop == pop) {
                m.set(e.neuron, t);
            }
        }
    }
    return m;
}

} // namespace snn
