#include "snn/encoders.hpp"

#include <string>

#include "snn/errors.hpp"

namespace snn {

std::size_t ThresholdEncoderConfig::num_thresholds() const noexcept
{
    return scheme == ThresholdScheme::paired ? num_input_neurons / 2 : num_input_neurons - 1;
}

std::vector<double> ThresholdEncoderConfig::thresholds() const
{
    const std::size_t n = num_thresholds();
    const double top = scheme == ThresholdScheme::paired ? 255.0 : 256.0;
    std::vector<double> thr(n);
    for (std::size_t k = 0; k < n; ++k) {
        thr[k] = n == 1 ? 0.0 : top * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return thr;
}

void ThresholdEncoderConfig::validate() const
{
    if (num_input_neurons < 2 || end_marker_neuron >= num_input_neurons || pixels < 2) {
        throw InvalidParameter("threshold encoder: need >= 2 neurons, >= 2 pixels and a valid end marker");
    }
    if (scheme == ThresholdScheme::paired && num_input_neurons % 2 != 0) {
        throw InvalidParameter("threshold encoder: paired scheme needs an even neuron count");
    }
}

namespace {

template <typename T>
SpikeMatrix encode_impl(std::span<const T> pixels, const ThresholdEncoderConfig& c)
{
    c.validate();
    if (pixels.size() != c.pixels) {
        throw InvalidInput("encode_pixels: expected " + std::to_string(c.pixels) + " pixels, got " +
                           std::to_string(pixels.size()));
    }
    for (const auto p : pixels) {
        const auto v = static_cast<double>(p);
        if (!(v >= 0.0 && v <= 255.0)) {
            throw InvalidInput("encode_pixels: pixel values must lie in [0, 255]");
        }
    }
    const auto thr = c.thresholds();
    SpikeMatrix out(c.num_input_neurons, c.total_steps());
    for (std::size_t t = 0; t + 1 < pixels.size(); ++t) {
        const auto cur = static_cast<double>(pixels[t]);
        const auto next = static_cast<double>(pixels[t + 1]);
        for (std::size_t k = 0; k < thr.size(); ++k) {
            if (c.scheme == ThresholdScheme::paired) {
                if (cur <= thr[k] && next >= thr[k]) {
                    out.set(2 * k, t);
                }
                if (cur >= thr[k] && next <= thr[k]) {
                    out.set(2 * k + 1, t);
                }
            } else {
                const bool rising_neuron = k % 2 == 0;
                if (rising_neuron && cur < next && cur <= thr[k] && thr[k] <= next) {
                    out.set(k, t);
                }
                if (!rising_neuron && cur > next && next <= thr[k] && thr[k] <= cur) {
                    out.set(k, t);
                }
            }
        }
    }
    for (std::size_t t = c.pixels; t < c.total_steps(); ++t) {
        out.set(c.end_marker_neuron, t);
    }
    return out;
}

} // namespace

SpikeMatrix encode_pixels(std::span<const std::uint8_t> pixels, const ThresholdEncoderConfig& config)
{
    return encode_impl(pixels, config);
}

SpikeMatrix encode_pixels(std::span<const double> pixels, const ThresholdEncoderConfig& config)
{
    return encode_impl(pixels, config);
}

SpikeMatrix encode_sentence(std::span<const std::uint32_t> word_ids, const WordEncoderConfig& c)
{
    if (c.T_word < 1 || c.N_words < 1) {
        throw InvalidParameter("encode_sentence: T_word and N_words must be positive");
    }
    const auto n_words = static_cast<std::size_t>(c.N_words);
    if (word_ids.empty() || word_ids.size() > n_words) {
        throw InvalidInput("encode_sentence: sentence must have 1.." + std::to_string(n_words) +
                           " words, got " + std::to_string(word_ids.size()));
    }
    const auto T = static_cast<std::size_t>(c.T_word);
    SpikeMatrix out(c.vocab, c.total_steps());
    const std::size_t len = word_ids.size();
    for (std::size_t k = 0; k < len; ++k) {
        if (word_ids[k] >= c.vocab) {
            throw InvalidInput("encode_sentence: word id " + std::to_string(word_ids[k]) +
                               " outside vocabulary");
        }
        const std::size_t window = c.order == WordOrder::reversed ? n_words - 1 - k : n_words - len + k;
        for (std::size_t t = window * T; t < (window + 1) * T; ++t) {
            out.set(word_ids[k], t);
        }
    }
    return out;
}

SpikeMatrix extract_embedding(const SpikeMatrix& raster, int T_inp, int T_sim)
{
    if (T_inp < 0 || T_sim < T_inp) {
        throw InvalidParameter("extract_embedding: need 0 <= T_inp <= T_sim");
    }
    const auto tin = static_cast<std::size_t>(T_inp);
    if (raster.steps() < tin) {
        throw InvalidInput("extract_embedding: raster shorter than T_inp");
    }
    SpikeMatrix out(raster.neurons(), static_cast<std::size_t>(T_sim));
    const std::size_t start = raster.steps() - tin;
    for (std::size_t t = 0; t < tin; ++t) {
        for (std::size_t n = 0; n < raster.neurons(); ++n) {
            if (raster.get(n, start + t)) {
                out.set(n, t);
            }
        }
    }
    return out;
}

} // namespace snn
