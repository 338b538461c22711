#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace snn {

/// Dense binary spike block of one population, stored step-major.
class SpikeMatrix {
public:
    SpikeMatrix() = default;
    SpikeMatrix(std::size_t neurons, std::size_t steps)
        : neurons_(neurons), steps_(steps), bits_(neurons * steps, 0)
    {
    }

    std::size_t neurons() const noexcept { return neurons_; }
    std::size_t steps() const noexcept { return steps_; }

    bool get(std::size_t neuron, std::size_t step) const { return bits_[step * neurons_ + neuron] != 0; }
    void set(std::size_t neuron, std::size_t step, bool value = true)
    {
        bits_[step * neurons_ + neuron] = value ? 1 : 0;
    }
    std::span<const std::uint8_t> step_row(std::size_t step) const
    {
        return {bits_.data() + step * neurons_, neurons_};
    }

    std::size_t count() const noexcept;
    std::size_t count_step(std::size_t step) const;
    std::size_t count_neuron(std::size_t neuron) const;

    friend bool operator==(const SpikeMatrix&, const SpikeMatrix&) = default;

private:
    std::size_t neurons_ = 0;
    std::size_t steps_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct SpikeEvent {
    std::uint32_t pop = 0;
    std::uint32_t neuron = 0;
    friend auto operator<=>(const SpikeEvent&, const SpikeEvent&) = default;
};

/// Network-wide spike record. Events of a step are sorted by population then
/// neuron; steps are stored in CSR form.
class Raster {
public:
    Raster() = default;
    explicit Raster(std::vector<std::size_t> population_sizes)
        : sizes_(std::move(population_sizes)), offsets_{0}
    {
    }

    /// Appends the next step; events must already be sorted.
    void push_step(std::span<const SpikeEvent> events);

    std::size_t steps() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t population_count() const noexcept { return sizes_.size(); }
    const std::vector<std::size_t>& population_sizes() const noexcept { return sizes_; }
    std::span<const SpikeEvent> events(std::size_t step) const;
    std::span<const SpikeEvent> all_events() const noexcept { return events_; }
    std::size_t total_spikes() const noexcept { return events_.size(); }

    /// Spikes of one population as a dense block.
    SpikeMatrix population(std::uint32_t pop) const;

    // Opt-in state traces keyed by (population, neuron); one value per step.
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>>& voltage_traces() noexcept
    {
        return traces_;
    }
    const std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>>& voltage_traces()
        const noexcept
    {
        return traces_;
    }

    friend bool operator==(const Raster& a, const Raster& b)
    {
        return a.sizes_ == b.sizes_ && a.offsets_ == b.offsets_ && a.events_ == b.events_;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_{0};
    std::vector<SpikeEvent> events_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> traces_;
};

} // namespace snn
