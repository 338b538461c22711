#include "snn/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "snn/errors.hpp"

namespace snn {

using nlohmann::json;

std::string hex64(std::uint64_t value)
{
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf.data(), 16);
}

std::uint64_t parse_hex64(std::string_view text)
{
    if (text.empty() || text.size() > 16) {
        throw InvalidInput("bad hex value '" + std::string(text) + "'");
    }
    std::uint64_t v = 0;
    for (char c : text) {
        v <<= 4;
        if (c >= '0' && c <= '9') {
            v |= static_cast<std::uint64_t>(c - '0');
        } else if (c >= 'a' && c <= 'f') {
            v |= static_cast<std::uint64_t>(c - 'a' + 10);
        } else {
            throw InvalidInput("bad hex value '" + std::string(text) + "'");
        }
    }
    return v;
}

namespace {

std::ifstream open_in(const std::filesystem::path& path, bool binary = false)
{
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) {
        throw InvalidInput("cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false)
{
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) {
        throw InvalidInput("cannot write '" + path.string() + "'");
    }
    return out;
}

std::uint32_t read_be32(std::istream& in)
{
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw InvalidInput("truncated IDX header");
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v)
{
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), 4);
}

} // namespace

ImageSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels)
{
    auto img = open_in(images, true);
    if (read_be32(img) != 0x803) {
        throw InvalidInput("'" + images.string() + "' is not an idx3 ubyte file");
    }
    const std::size_t n = read_be32(img);
    ImageSet set;
    set.rows = read_be32(img);
    set.cols = read_be32(img);
    set.images.assign(n, std::vector<std::uint8_t>(set.rows * set.cols));
    for (auto& im : set.images) {
        if (!img.read(reinterpret_cast<char*>(im.data()), static_cast<std::streamsize>(im.size()))) {
            throw InvalidInput("truncated image data in '" + images.string() + "'");
        }
    }
    auto lab = open_in(labels, true);
    if (read_be32(lab) != 0x801) {
        throw InvalidInput("'" + labels.string() + "' is not an idx1 ubyte file");
    }
    if (read_be32(lab) != n) {
        throw InvalidInput("image and label counts differ");
    }
    set.labels.resize(n);
    if (!lab.read(reinterpret_cast<char*>(set.labels.data()), static_cast<std::streamsize>(n))) {
        throw InvalidInput("truncated label data in '" + labels.string() + "'");
    }
    return set;
}

void write_idx(const ImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels)
{
    if (set.labels.size() != set.images.size()) {
        throw InvalidInput("image and label counts differ");
    }
    auto img = open_out(images, true);
    write_be32(img, 0x803);
    write_be32(img, static_cast<std::uint32_t>(set.size()));
    write_be32(img, static_cast<std::uint32_t>(set.rows));
    write_be32(img, static_cast<std::uint32_t>(set.cols));
    for (const auto& im : set.images) {
        if (im.size() != set.rows * set.cols) {
            throw InvalidInput("image size does not match the header");
        }
        img.write(reinterpret_cast<const char*>(im.data()), static_cast<std::streamsize>(im.size()));
    }
    auto lab = open_out(labels, true);
    write_be32(lab, 0x801);
    write_be32(lab, static_cast<std::uint32_t>(set.size()));
    lab.write(reinterpret_cast<const char*>(set.labels.data()), static_cast<std::streamsize>(set.size()));
}

// ---------------------------------------------------------------------------

namespace {

// JSON has no infinity; null stands for +inf (untimed decays, readout threshold).
json number_or_null(double x)
{
    return std::isfinite(x) ? json(x) : json(nullptr);
}

double number_or_inf(const json& j)
{
    return j.is_null() ? kInfinity : j.get<double>();
}

json params_to_json(const NeuronParams& p)
{
    return {{"kind", to_string(p.kind)},      {"tau_v", number_or_null(p.tau_v)},
            {"tau_i", number_or_null(p.tau_i)}, {"tau_ahp", number_or_null(p.tau_ahp)},
            {"beta", number_or_null(p.beta)}, {"b0", number_or_null(p.b0)},
            {"g_v", number_or_null(p.g_v)},                   {"refractory", p.refractory},
            {"readout_window", p.readout_window}};
}

NeuronParams params_from_json(const json& j)
{
    NeuronParams p;
    p.kind = neuron_kind_from_string(j.at("kind").get<std::string>().c_str());
    p.tau_v = number_or_inf(j.at("tau_v"));
    p.tau_i = number_or_inf(j.at("tau_i"));
    p.tau_ahp = number_or_inf(j.at("tau_ahp"));
    p.beta = number_or_inf(j.at("beta"));
    p.b0 = number_or_inf(j.at("b0"));
    p.g_v = number_or_inf(j.at("g_v"));
    p.refractory = j.at("refractory").get<int>();
    p.readout_window = j.at("readout_window").get<int>();
    return p;
}

// Sidecar layout: "SNNW", u32 version, u32 block count, then per block the
// weights (f64 little-endian), delays (u8) and, for sparse blocks, mask (u8).
constexpr std::array<char, 4> kSidecarMagic{'S', 'N', 'N', 'W'};

template <typename T>
void put(std::ostream& out, const T& v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in)
{
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw InvalidInput("truncated network sidecar");
    }
    return v;
}

static_assert(std::numeric_limits<double>::is_iec559, "sidecar stores IEEE doubles");

} // namespace

void save_network(const NetworkGraph& graph, const std::filesystem::path& path,
                  const NetworkFileOptions& options)
{
    graph.validate();
    const auto blocks = graph.blocks();
    json doc;
    doc["format"] = "snn-network";
    doc["schema_version"] = kNetworkSchemaVersion;
    doc["tool_version"] = std::string(kToolVersion);
    doc["config_hash"] = options.config_hash;
    doc["graph_hash"] = hex64(graph.hash());
    doc["metadata"] = graph.metadata();

    json pops = json::array();
    for (const auto& p : graph.populations()) {
        json jp{{"name", p.name},         {"size", p.size},
                {"role", to_string(p.role)}, {"layer", p.layer},
                {"pair", {p.pair.i, p.pair.j}}, {"sentence", p.sentence},
                {"relay_group", p.relay_group}, {"params", params_to_json(p.params)}};
        if (p.ahp_subset) {
            jp["ahp_subset"] = *p.ahp_subset;
        }
        pops.push_back(std::move(jp));
    }
    doc["populations"] = std::move(pops);

    std::map<const WeightBlock*, std::size_t> index;
    json jblocks = json::array();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        const WeightBlock& b = *blocks[k];
        index[&b] = k;
        json jb{{"share_tag", b.share_tag}, {"pattern", to_string(b.pattern)},
                {"rows", b.rows},           {"cols", b.cols},
                {"frozen", b.frozen}};
        if (!b.row_signs.empty()) {
            std::vector<int> signs;
            for (auto s : b.row_signs) {
                signs.push_back(static_cast<int>(s));
            }
            jb["row_signs"] = signs;
        }
        if (!options.sidecar) {
            jb["weights"] = b.weights;
            jb["delays"] = b.delays;
            if (b.pattern == Pattern::sparse) {
                jb["mask"] = b.mask;
            }
        }
        jblocks.push_back(std::move(jb));
    }
    doc["blocks"] = std::move(jblocks);

    json conns = json::array();
    for (const auto& c : graph.connections()) {
        conns.push_back({{"src", c.src}, {"dst", c.dst}, {"block", index.at(c.block.get())}});
    }
    doc["connections"] = std::move(conns);

    if (options.sidecar) {
        const std::filesystem::path side = path.string() + ".bin";
        doc["weights_file"] = side.filename().string();
        auto out = open_out(side, true);
        out.write(kSidecarMagic.data(), 4);
        put<std::uint32_t>(out, 1);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
        for (const auto& b : blocks) {
            for (double w : b->weights) {
                std::uint64_t bits = 0;
                std::memcpy(&bits, &w, sizeof bits);
                for (int s = 0; s < 64; s += 8) {
                    out.put(static_cast<char>(bits >> s));
                }
            }
            out.write(reinterpret_cast<const char*>(b->delays.data()), static_cast<std::streamsize>(b->delays.size()));
            if (b->pattern == Pattern::sparse) {
                out.write(reinterpret_cast<const char*>(b->mask.data()), static_cast<std::streamsize>(b->mask.size()));
            }
        }
    } else {
        doc["weights_file"] = nullptr;
    }
    auto out = open_out(path);
    out << doc.dump(1) << '\n';
}

NetworkGraph load_network(const std::filesystem::path& path)
{
    json doc;
    try {
        auto in = open_in(path);
        in >> doc;
    } catch (const json::exception& e) {
        throw InvalidInput("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        if (doc.at("format") != "snn-network") {
            throw InvalidInput("'" + path.string() + "' is not a network file");
        }
        if (doc.at("schema_version").get<int>() != kNetworkSchemaVersion) {
            throw InvalidInput("unsupported network schema version");
        }
        NetworkGraph g;
        for (const auto& [k, v] : doc.at("metadata").items()) {
            g.metadata()[k] = v.get<std::string>();
        }
        for (const auto& jp : doc.at("populations")) {
            PopulationSpec p;
            p.name = jp.at("name").get<std::string>();
            p.size = jp.at("size").get<std::size_t>();
            p.role = role_from_string(jp.at("role").get<std::string>());
            p.layer = jp.at("layer").get<int>();
            p.pair = {jp.at("pair").at(0).get<int>(), jp.at("pair").at(1).get<int>()};
            p.sentence = jp.at("sentence").get<int>();
            p.relay_group = jp.at("relay_group").get<int>();
            p.params = params_from_json(jp.at("params"));
            if (jp.contains("ahp_subset")) {
                p.ahp_subset = jp.at("ahp_subset").get<std::vector<std::uint32_t>>();
            }
            g.add_population(std::move(p));
        }
        std::vector<std::shared_ptr<WeightBlock>> blocks;
        for (const auto& jb : doc.at("blocks")) {
            const auto tag = jb.at("share_tag").get<std::string>();
            const auto pattern = pattern_from_string(jb.at("pattern").get<std::string>());
            const auto rows = jb.at("rows").get<std::size_t>();
            const auto cols = jb.at("cols").get<std::size_t>();
            std::shared_ptr<WeightBlock> b;
            switch (pattern) {
            case Pattern::dense: b = WeightBlock::dense(tag, rows, cols); break;
            case Pattern::sparse: b = WeightBlock::sparse(tag, rows, cols); break;
            case Pattern::one_to_one: b = WeightBlock::one_to_one(tag, rows); break;
            }
            b->frozen = jb.at("frozen").get<bool>();
            if (jb.contains("row_signs")) {
                for (int s : jb.at("row_signs").get<std::vector<int>>()) {
                    b->row_signs.push_back(static_cast<SignConstraint>(s));
                }
            }
            if (jb.contains("weights")) {
                b->weights = jb.at("weights").get<std::vector<double>>();
                b->delays = jb.at("delays").get<std::vector<std::uint8_t>>();
                if (pattern == Pattern::sparse) {
                    b->mask = jb.at("mask").get<std::vector<std::uint8_t>>();
                }
            }
            blocks.push_back(std::move(b));
        }
        if (!doc.at("weights_file").is_null()) {
            auto in = open_in(path.parent_path() / doc.at("weights_file").get<std::string>(), true);
            std::array<char, 4> magic{};
            in.read(magic.data(), 4);
            if (magic != kSidecarMagic || get<std::uint32_t>(in) != 1) {
                throw InvalidInput("bad network sidecar header");
            }
            if (get<std::uint32_t>(in) != blocks.size()) {
                throw InvalidInput("network sidecar block count mismatch");
            }
            for (auto& b : blocks) {
                for (double& w : b->weights) {
                    std::uint64_t bits = 0;
                    for (int s = 0; s < 64; s += 8) {
                        bits |= std::uint64_t{get<std::uint8_t>(in)} << s;
                    }
                    std::memcpy(&w, &bits, sizeof w);
                }
                if (!in.read(reinterpret_cast<char*>(b->delays.data()), static_cast<std::streamsize>(b->delays.size()))) {
                    throw InvalidInput("truncated network sidecar");
                }
                if (b->pattern == Pattern::sparse &&
                    !in.read(reinterpret_cast<char*>(b->mask.data()), static_cast<std::streamsize>(b->mask.size()))) {
                    throw InvalidInput("truncated network sidecar");
                }
            }
        }
        for (const auto& jc : doc.at("connections")) {
            g.connect(jc.at("src").get<PopId>(), jc.at("dst").get<PopId>(),
                      blocks.at(jc.at("block").get<std::size_t>()));
        }
        g.validate();
        if (doc.contains("graph_hash") && doc.at("graph_hash").get<std::string>() != hex64(g.hash())) {
            throw InvalidInput("network file content does not match its graph hash");
        }
        return g;
    } catch (const json::exception& e) {
        throw InvalidInput("malformed network file '" + path.string() + "': " + e.what());
    } catch (const std::out_of_range& e) {
        throw InvalidInput("malformed network file '" + path.string() + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------

void write_raster(std::ostream& out, const Raster& raster, const RasterHeader& header)
{
    out << "# snn-raster " << kRasterFormatVersion << '\n';
    out << "# steps " << header.steps << '\n';
    out << "# graph_hash " << header.graph_hash << '\n';
    out << "# config_hash " << header.config_hash << '\n';
    out << "# tool_version " << header.tool_version << '\n';
    out << "# population_sizes";
    for (auto s : header.population_sizes) {
        out << ' ' << s;
    }
    out << '\n';
    for (std::size_t t = 0; t < raster.steps(); ++t) {
        for (const auto& e : raster.events(t)) {
            out << t << ' ' << e.pop << ' ' << e.neuron << '\n';
        }
    }
}

Raster read_raster(std::istream& in, RasterHeader* header)
{
    RasterHeader h;
    std::string line;
    bool sizes_seen = false;
    bool magic = false;
    std::vector<std::vector<SpikeEvent>> steps;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "snn-raster") {
                int v = 0;
                ls >> v;
                if (v != kRasterFormatVersion) {
                    throw InvalidInput("unsupported raster format version");
                }
                magic = true;
            } else if (key == "steps") {
                ls >> h.steps;
                steps.assign(h.steps, {});
            } else if (key == "graph_hash") {
                ls >> h.graph_hash;
            } else if (key == "config_hash") {
                ls >> h.config_hash;
            } else if (key == "tool_version") {
                ls >> h.tool_version;
            } else if (key == "population_sizes") {
                std::size_t s = 0;
                while (ls >> s) {
                    h.population_sizes.push_back(s);
                }
                sizes_seen = true;
            }
            continue;
        }
        std::size_t t = 0;
        SpikeEvent e{};
        if (!(ls >> t >> e.pop >> e.neuron) || t >= h.steps) {
            throw InvalidInput("bad raster record on line " + std::to_string(line_no));
        }
        steps[t].push_back(e);
    }
    if (!magic || !sizes_seen) {
        throw InvalidInput("raster header is incomplete");
    }
    Raster r(h.population_sizes);
    for (auto& ev : steps) {
        r.push_step(std::move(ev));
    }
    if (header != nullptr) {
        *header = h;
    }
    return r;
}

void save_raster(const std::filesystem::path& path, const Raster& raster, const RasterHeader& header)
{
    auto out = open_out(path);
    write_raster(out, raster, header);
}

Raster load_raster(const std::filesystem::path& path, RasterHeader* header)
{
    auto in = open_in(path);
    return read_raster(in, header);
}

void save_inputs(const std::filesystem::path& path, const InputMap& inputs, std::size_t steps,
                 const NetworkGraph& graph, const std::string& config_hash)
{
    RasterHeader h;
    h.steps = steps;
    h.graph_hash = hex64(graph.hash());
    h.config_hash = config_hash;
    for (const auto& p : graph.populations()) {
        h.population_sizes.push_back(p.size);
    }
    std::vector<std::size_t> sizes = h.population_sizes;
    Raster r(sizes);
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<SpikeEvent> ev;
        for (const auto& [pop, m] : inputs) {
            if (t >= m.steps()) {
                continue;
            }
            for (std::uint32_t j = 0; j < m.neurons(); ++j) {
                if (m.get(j, t)) {
                    ev.push_back({pop, j});
                }
            }
        }
        std::sort(ev.begin(), ev.end());
        r.push_step(std::move(ev));
    }
    save_raster(path, r, h);
}

InputMap load_inputs(const std::filesystem::path& path, const NetworkGraph& graph, std::size_t* steps)
{
    RasterHeader h;
    const Raster r = load_raster(path, &h);
    if (h.population_sizes.size() != graph.population_count()) {
        throw InvalidInput("input raster was written for a different graph");
    }
    InputMap inputs;
    for (PopId p = 0; p < graph.population_count(); ++p) {
        if (graph.population(p).is_input()) {
            inputs[p] = r.population(p);
        }
    }
    for (std::size_t t = 0; t < r.steps(); ++t) {
        for (const auto& e : r.events(t)) {
            if (!graph.population(e.pop).is_input()) {
                throw InvalidInput("input raster has events for a non-input population");
            }
        }
    }
    if (steps != nullptr) {
        *steps = h.steps;
    }
    return inputs;
}

// ---------------------------------------------------------------------------

std::uint32_t Vocabulary::id(std::string_view word)
{
    const auto it = ids_.find(word);
    if (it != ids_.end()) {
        return it->second;
    }
    const auto id = static_cast<std::uint32_t>(words_.size());
    words_.emplace_back(word);
    ids_.emplace(std::string(word), id);
    return id;
}

std::uint32_t Vocabulary::find(std::string_view word) const
{
    const auto it = ids_.find(word);
    if (it == ids_.end()) {
        throw InvalidInput("unknown word '" + std::string(word) + "'");
    }
    return it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const
{
    auto out = open_out(path);
    for (const auto& w : words_) {
        out << w << '\n';
    }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path)
{
    auto in = open_in(path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            v.id(line);
        }
    }
    return v;
}

namespace {

std::vector<std::string> words_of(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '-') {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

} // namespace

std::vector<Story> read_stories(std::istream& in, Vocabulary& vocab)
{
    std::vector<Story> out;
    std::vector<std::vector<std::uint32_t>> statements;
    std::string line;
    std::size_t line_no = 0;
    int prev = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::size_t pos = 0;
        int number = 0;
        try {
            number = std::stoi(line, &pos);
        } catch (const std::exception&) {
            throw InvalidInput("story line " + std::to_string(line_no) + " does not start with a number");
        }
        if (number <= prev) {
            statements.clear();
        }
        prev = number;
        const std::string rest = line.substr(pos);
        const auto tab = rest.find('\t');
        if (tab == std::string::npos) {
            std::vector<std::uint32_t> ids;
            for (const auto& w : words_of(rest)) {
                ids.push_back(vocab.id(w));
            }
            statements.push_back(std::move(ids));
            continue;
        }
        Story s;
        s.sentences = statements;
        for (const auto& w : words_of(rest.substr(0, tab))) {
            s.question.push_back(vocab.id(w));
        }
        const auto end = rest.find('\t', tab + 1);
        const auto answer = words_of(rest.substr(tab + 1, end == std::string::npos ? std::string::npos : end - tab - 1));
        if (answer.size() != 1) {
            throw InvalidInput("question on line " + std::to_string(line_no) + " needs a one-word answer");
        }
        s.answer = vocab.id(answer.front());
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const NetworkGraph& graph, const CheckpointInfo& info)
{
    json doc;
    doc["format"] = "snn-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["tool_version"] = std::string(kToolVersion);
    doc["seed"] = info.seed;
    doc["config_hash"] = info.config_hash;
    doc["config"] = json::parse(info.config_json);
    doc["graph_hash"] = hex64(graph.hash());
    json blocks = json::array();
    for (const auto& b : graph.blocks()) {
        json jb{{"share_tag", b->share_tag}, {"rows", b->rows}, {"cols", b->cols},
                {"frozen", b->frozen},       {"weights", b->weights}};
        if (b->pattern == Pattern::sparse) {
            jb["mask"] = b->mask;
        }
        blocks.push_back(std::move(jb));
    }
    doc["blocks"] = std::move(blocks);
    auto out = open_out(path);
    out << doc.dump(1) << '\n';
}

CheckpointInfo load_checkpoint(const std::filesystem::path& path, NetworkGraph& graph)
{
    json doc;
    try {
        auto in = open_in(path);
        in >> doc;
        if (doc.at("format") != "snn-checkpoint" || doc.at("version").get<int>() != kCheckpointVersion) {
            throw InvalidInput("'" + path.string() + "' is not a supported checkpoint");
        }
        std::map<std::string, const json*> by_tag;
        for (const auto& jb : doc.at("blocks")) {
            by_tag[jb.at("share_tag").get<std::string>()] = &jb;
        }
        for (const auto& b : graph.blocks()) {
            const auto it = by_tag.find(b->share_tag);
            if (it == by_tag.end()) {
                continue;
            }
            const json& jb = *it->second;
            auto w = jb.at("weights").get<std::vector<double>>();
            if (jb.at("rows").get<std::size_t>() != b->rows || jb.at("cols").get<std::size_t>() != b->cols ||
                w.size() != b->weights.size()) {
                throw InvalidInput("checkpoint block '" + b->share_tag + "' has a different shape");
            }
            b->weights = std::move(w);
            b->frozen = jb.at("frozen").get<bool>();
            if (b->pattern == Pattern::sparse && jb.contains("mask")) {
                b->mask = jb.at("mask").get<std::vector<std::uint8_t>>();
            }
        }
        CheckpointInfo info;
        info.seed = doc.at("seed").get<std::uint64_t>();
        info.config_json = doc.at("config").dump();
        info.config_hash = doc.at("config_hash").get<std::string>();
        return info;
    } catch (const json::exception& e) {
        throw InvalidInput("malformed checkpoint '" + path.string() + "': " + e.what());
    }
}

} // namespace snn
