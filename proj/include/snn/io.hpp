#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "snn/graph.hpp"
#include "snn/raster.hpp"
#include "snn/simulator.hpp"

namespace snn {

inline constexpr std::string_view kToolVersion = "0.3.0";
inline constexpr int kNetworkSchemaVersion = 1;
inline constexpr int kRasterFormatVersion = 1;
inline constexpr int kCheckpointVersion = 1;

/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);
std::uint64_t parse_hex64(std::string_view text);

// ---------------------------------------------------------------------------
// IDX (MNIST byte layout, big-endian header).

struct ImageSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<std::uint8_t>> images; // row-major pixels
    std::vector<std::uint8_t> labels;

    std::size_t size() const noexcept { return images.size(); }
};

/// Reads an idx3 image file and the matching idx1 label file.
ImageSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx(const ImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels);

// ---------------------------------------------------------------------------
// Network description: a JSON document plus an optional binary sidecar that
// holds weights, delays and masks of every block.

struct NetworkFileOptions {
    bool sidecar = true;       // false stores weights inline in the JSON
    std::string config_hash;   // embedded as-is
};

/// Writes `path` and, with a sidecar, `path` + ".bin".
void save_network(const NetworkGraph& graph, const std::filesystem::path& path,
                  const NetworkFileOptions& options = {});
NetworkGraph load_network(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Raster text format: '#' header lines, then one "step pop neuron" record per
// event sorted by step, population, neuron.

struct RasterHeader {
    std::size_t steps = 0;
    std::string graph_hash;
    std::string config_hash;
    std::string tool_version{kToolVersion};
    std::vector<std::size_t> population_sizes;
};

void write_raster(std::ostream& out, const Raster& raster, const RasterHeader& header);
Raster read_raster(std::istream& in, RasterHeader* header = nullptr);
void save_raster(const std::filesystem::path& path, const Raster& raster, const RasterHeader& header);
Raster load_raster(const std::filesystem::path& path, RasterHeader* header = nullptr);

/// Input spike trains in the same format; population ids refer to the graph.
void save_inputs(const std::filesystem::path& path, const InputMap& inputs, std::size_t steps,
                 const NetworkGraph& graph, const std::string& config_hash);
InputMap load_inputs(const std::filesystem::path& path, const NetworkGraph& graph, std::size_t* steps = nullptr);

// ---------------------------------------------------------------------------
// Stories in the numbered-line bAbI layout:
//   1 Mary moved to the bathroom.
//   2 Where is Mary?<TAB>bathroom<TAB>1
// Numbering restarts at 1 for a new story. Each question yields one Story
// holding every statement of its story seen so far.

class Vocabulary {
public:
    std::uint32_t id(std::string_view word);          // adds unseen words
    std::uint32_t find(std::string_view word) const;  // throws InvalidInput
    const std::string& word(std::uint32_t id) const { return words_.at(id); }
    std::size_t size() const noexcept { return words_.size(); }

    void save(const std::filesystem::path& path) const; // one word per line
    static Vocabulary load(const std::filesystem::path& path);

private:
    std::vector<std::string> words_;
    std::map<std::string, std::uint32_t, std::less<>> ids_;
};

std::vector<Story> read_stories(std::istream& in, Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Checkpoints: every parameter block by share tag, with seed and config.

struct CheckpointInfo {
    std::uint64_t seed = 0;
    std::string config_json = "{}";
    std::string config_hash;
};

void save_checkpoint(const std::filesystem::path& path, const NetworkGraph& graph,
                     const CheckpointInfo& info);
/// Overwrites the weights, masks and frozen flags of every block of `graph`
/// whose share tag appears in the checkpoint; shapes must agree.
CheckpointInfo load_checkpoint(const std::filesystem::path& path, NetworkGraph& graph);

} // namespace snn
