#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snn/raster.hpp"

namespace snn {

enum class ThresholdScheme : std::uint8_t {
    // Two neurons per threshold (rising, falling), thresholds over [0, 255].
    paired,
    // One neuron per threshold over [0, 256]; even neurons signal rising and
    // odd neurons falling gray values.
    interleaved,
};

struct ThresholdEncoderConfig {
    std::size_t num_input_neurons = 80;
    ThresholdScheme scheme = ThresholdScheme::paired;
    std::size_t pixels = 784;
    std::size_t tail_steps = 56;
    // Fires every step of the tail; defaults to the last input neuron.
    std::size_t end_marker_neuron = 79;

    std::size_t num_thresholds() const noexcept;
    std::vector<double> thresholds() const;
    std::size_t total_steps() const noexcept { return pixels + tail_steps; }
    void validate() const;
};

/// Pixel transition (p[t], p[t+1]) is encoded at step t for t < pixels - 1.
/// Step pixels - 1 is silent and the end marker fires during the final
/// tail_steps steps.
SpikeMatrix encode_pixels(std::span<const std::uint8_t> pixels, const ThresholdEncoderConfig& config);
SpikeMatrix encode_pixels(std::span<const double> pixels, const ThresholdEncoderConfig& config);

enum class WordOrder : std::uint8_t {
    // First word in the last window.
    reversed,
    // Words in reading order, packed against the final step.
    forward,
};

struct WordEncoderConfig {
    int T_word = 10;
    int N_words = 11;
    std::size_t vocab = 180;
    WordOrder order = WordOrder::reversed;

    std::size_t total_steps() const noexcept
    {
        return static_cast<std::size_t>(T_word) * static_cast<std::size_t>(N_words);
    }
};

SpikeMatrix encode_sentence(std::span<const std::uint32_t> word_ids, const WordEncoderConfig& config);

/// Last T_inp steps of an LSNN raster copied to columns 0 .. T_inp-1 of a
/// T_sim-step block, the rest zero.
SpikeMatrix extract_embedding(const SpikeMatrix& lsnn_raster, int T_inp, int T_sim);

} // namespace snn
