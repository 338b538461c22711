#include <gtest/gtest.h>

#include <set>
#include <tuple>
#include <vector>

#include "snn/encoders.hpp"
#include "snn/errors.hpp"
#include "snn/random.hpp"

#include "listing_oracle.hpp"

using namespace snn;

namespace {

std::set<std::pair<int, int>> as_set(const SpikeMatrix& m)
{
    std::set<std::pair<int, int>> out;
    for (std::size_t t = 0; t < m.steps(); ++t) {
        for (std::size_t n = 0; n < m.neurons(); ++n) {
            if (m.get(n, t)) {
                out.insert({static_cast<int>(t), static_cast<int>(n)});
            }
        }
    }
    return out;
}

} // namespace

TEST(EncodePixels, ConstantImageOnlyEndMarker)
{
    std::vector<std::uint8_t> px(784, 100);
    const auto m = encode_pixels(px, ThresholdEncoderConfig{});
    EXPECT_EQ(m.steps(), 840u);
    EXPECT_EQ(m.count(), 56u);
    EXPECT_EQ(m.count_neuron(79), 56u);
    for (std::size_t t = 784; t < 840; ++t) {
        EXPECT_TRUE(m.get(79, t));
    }
}

TEST(EncodePixels, DeskConfigHandExample)
{
    ThresholdEncoderConfig c;
    c.num_input_neurons = 8;
    c.end_marker_neuron = 7;
    c.pixels = 2;
    EXPECT_EQ(c.thresholds(), (std::vector<double>{0, 85, 170, 255}));
    const std::vector<std::uint8_t> px{50, 200};
    const auto m = encode_pixels(px, c);
    EXPECT_TRUE(m.get(2, 0));
    EXPECT_TRUE(m.get(4, 0));
    EXPECT_EQ(m.count_step(0), 2u);
}

TEST(EncodePixels, EqualityFiresBothNeurons)
{
    ThresholdEncoderConfig c;
    c.num_input_neurons = 8;
    c.end_marker_neuron = 7;
    c.pixels = 2;
    const std::vector<std::uint8_t> px{85, 85};
    const auto m = encode_pixels(px, c);
    EXPECT_TRUE(m.get(2, 0));
    EXPECT_TRUE(m.get(3, 0));
    EXPECT_EQ(m.count_step(0), 2u);
}

TEST(EncodePixels, MatchesIndependentTranscription)
{
    Rng rng(77, "encoder");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> px(784);
        std::vector<int> ints(784);
        for (std::size_t k = 0; k < px.size(); ++k) {
            // Mix of exact threshold values, zeros and random values.
            const int v = rng.bernoulli(0.2) ? 0 : (rng.bernoulli(0.1) ? 255 : rng.uniform_int(0, 255));
            px[k] = static_cast<std::uint8_t>(v);
            ints[k] = v;
        }
        const auto m = encode_pixels(px, ThresholdEncoderConfig{});
        ASSERT_EQ(m.steps(), 840u);
        ASSERT_EQ(as_set(m), oracle::listing_transcription(ints, 80));
    }
}

TEST(EncodePixels, InterleavedSchemeDiffersFromPaired)
{
    ThresholdEncoderConfig c;
    c.scheme = ThresholdScheme::interleaved;
    EXPECT_EQ(c.num_thresholds(), 79u);
    EXPECT_DOUBLE_EQ(c.thresholds().back(), 256.0);
    std::vector<std::uint8_t> px(784, 0);
    px[1] = 255;
    const auto m = encode_pixels(px, c);
    EXPECT_EQ(m.steps(), 840u);
    // Rising 0 -> 255 crosses every threshold up to 255: even neurons 0..76.
    for (std::size_t k = 0; k < 79; ++k) {
        EXPECT_EQ(m.get(k, 0), k % 2 == 0 && k < 78) << k;
    }
    // Falling 255 -> 0: odd neurons.
    for (std::size_t k = 0; k < 79; ++k) {
        EXPECT_EQ(m.get(k, 1), k % 2 == 1) << k;
    }
}

TEST(EncodePixels, RejectsWrongPixelCount)
{
    std::vector<std::uint8_t> px(100, 0);
    EXPECT_THROW(encode_pixels(px, ThresholdEncoderConfig{}), InvalidInput);
    std::vector<double> bad(784, 300.0);
    EXPECT_THROW(encode_pixels(bad, ThresholdEncoderConfig{}), InvalidInput);
}

TEST(EncodeSentence, SingleWordFillsLastWindow)
{
    WordEncoderConfig c;
    c.vocab = 20;
    const std::vector<std::uint32_t> words{7};
    const auto m = encode_sentence(words, c);
    EXPECT_EQ(m.steps(), 110u);
    EXPECT_EQ(m.count(), 10u);
    for (std::size_t t = 100; t < 110; ++t) {
        EXPECT_TRUE(m.get(7, t));
    }
}

TEST(EncodeSentence, ReversedAndForwardOrder)
{
    WordEncoderConfig c;
    c.vocab = 20;
    const std::vector<std::uint32_t> words{1, 2, 3};
    const auto rev = encode_sentence(words, c);
    EXPECT_TRUE(rev.get(1, 109));
    EXPECT_TRUE(rev.get(2, 99));
    EXPECT_TRUE(rev.get(3, 89));
    EXPECT_EQ(rev.count_step(79), 0u);
    c.order = WordOrder::forward;
    const auto fwd = encode_sentence(words, c);
    EXPECT_TRUE(fwd.get(3, 109));
    EXPECT_TRUE(fwd.get(1, 89));
}

TEST(EncodeSentence, FullSentenceHasNoSilentPrefixAndOneHotSteps)
{
    WordEncoderConfig c;
    c.vocab = 50;
    Rng rng(4, "words");
    std::vector<std::uint32_t> words(11);
    for (auto& w : words) {
        w = static_cast<std::uint32_t>(rng.below(50));
    }
    const auto m = encode_sentence(words, c);
    for (std::size_t t = 0; t < 110; ++t) {
        EXPECT_EQ(m.count_step(t), 1u);
    }
    words.push_back(1);
    EXPECT_THROW(encode_sentence(words, c), InvalidInput);
    EXPECT_THROW(encode_sentence(std::vector<std::uint32_t>{}, c), InvalidInput);
    EXPECT_THROW(encode_sentence(std::vector<std::uint32_t>{50}, c), InvalidInput);
}

TEST(Embedding, IndexArithmeticAndPadding)
{
    SpikeMatrix r(200, 110);
    EXPECT_EQ(extract_embedding(r, 14, 37).count(), 0u);
    r.set(5, 109);
    r.set(6, 96);
    r.set(7, 95); // outside the last 14 steps
    const auto e = extract_embedding(r, 14, 37);
    EXPECT_EQ(e.steps(), 37u);
    EXPECT_TRUE(e.get(5, 13));
    EXPECT_TRUE(e.get(6, 0));
    EXPECT_EQ(e.count(), 2u);
    for (std::size_t t = 14; t < 37; ++t) {
        EXPECT_EQ(e.count_step(t), 0u);
    }
    EXPECT_THROW(extract_embedding(SpikeMatrix(3, 5), 14, 37), InvalidInput);
}
