// snnc: command-line front end for building, simulating, training, placing
// and costing spiking networks.
//
// Exit status: 0 success, 1 verification failure or runtime error, 2 usage
// error (unknown command or flag, invalid option value).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "snn/builders.hpp"
#include "snn/cost.hpp"
#include "snn/encoders.hpp"
#include "snn/errors.hpp"
#include "snn/io.hpp"
#include "snn/placement.hpp"
#include "snn/simulator.hpp"
#include "snn/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace snn;

namespace {

// Options in these groups never affect results and stay out of the config hash.
constexpr const char* kOutputGroup = "Output";
constexpr const char* kRuntimeGroup = "Runtime";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numbers hash by value so "1", "1.0" and "01" agree; list defaults lose their brackets.
std::vector<std::string> normalized_values(const CLI::Option& opt)
{
    std::vector<std::string> raw = opt.results();
    if (opt.count() == 0) {
        std::string d = opt.get_default_str();
        std::erase_if(d, [](char ch) { return ch == '[' || ch == ']' || ch == ' ' || ch == '"'; });
        raw = CLI::detail::split(d, ',');
    }
    std::vector<std::string> out;
    for (const auto& r : raw) {
        char* end = nullptr;
        const double x = std::strtod(r.c_str(), &end);
        if (!r.empty() && end == r.c_str() + r.size()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out.emplace_back(buf);
        } else {
            out.push_back(r);
        }
    }
    return out;
}

/// Hash over the subcommand name and every result-affecting option value.
std::string config_hash(const CLI::App& sub)
{
    Fnv1a h;
    h.update(sub.get_name());
    for (const auto* opt : sub.get_options()) {
        const auto& group = opt->get_group();
        if (group == kOutputGroup || group == kRuntimeGroup || opt->get_name() == "--help") {
            continue;
        }
        h.update("\n");
        h.update(opt->get_name());
        for (const auto& v : normalized_values(*opt)) {
            h.update("=");
            h.update(v);
        }
    }
    return hex64(h.digest());
}

void ensure_parent(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
}

std::ofstream open_out(const fs::path& path)
{
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write '" + path.string() + "'");
    }
    return out;
}

void write_json(const fs::path& path, const json& doc)
{
    auto out = open_out(path);
    out << doc.dump(1) << '\n';
}

json artifact_header(const std::string& kind, const std::string& hash)
{
    return {{"format", kind}, {"tool_version", std::string(kToolVersion)}, {"config_hash", hash}};
}

bool is_relnet(const NetworkGraph& g)
{
    return g.metadata().count("M") > 0;
}

bool has_relays(const NetworkGraph& g)
{
    for (const auto& p : g.populations()) {
        if (p.role == Role::relay) {
            return true;
        }
    }
    return false;
}

// --layer-cap: -1 picks the RelNet budget for RelNet graphs, else the plain one.
CoreBudget budget_for(const NetworkGraph& g, int layer_cap)
{
    CoreBudget b = layer_cap < 0 && is_relnet(g) ? CoreBudget::relnet() : CoreBudget{};
    if (layer_cap >= 0) {
        b.layer_neuron_cap = static_cast<std::size_t>(layer_cap);
    }
    return b;
}

void add_model_options(CLI::App* sub, CostModel& m)
{
    const char* g = "Cost model (placeholder coefficients)";
    sub->add_option("--e-intra-core", m.e_intra_core, "J per delivery within a core")->capture_default_str()->group(g);
    sub->add_option("--e-intra-chip", m.e_intra_chip, "J per core-to-core delivery on a chip")
        ->capture_default_str()
        ->group(g);
    sub->add_option("--e-inter-chip", m.e_inter_chip, "J per chip-to-chip delivery")->capture_default_str()->group(g);
    sub->add_option("--e-neuron-update", m.e_neuron_update, "J per neuron and step")->capture_default_str()->group(g);
    sub->add_option("--p-static", m.p_static, "static power in W")->capture_default_str()->group(g);
    sub->add_option("--step-time", m.step_time_base, "seconds per step")->capture_default_str()->group(g);
    sub->add_option("--congestion-coeff", m.congestion_coeff, "seconds per inter-chip delivery above the threshold")
        ->capture_default_str()
        ->group(g);
    sub->add_option("--congestion-threshold", m.congestion_threshold, "inter-chip deliveries per step")
        ->capture_default_str()
        ->group(g);
}

std::size_t non_input_neurons(const NetworkGraph& g)
{
    return count_resources(g).neurons;
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string kind;
    RelNetConfig relnet;
    SmnistConfig smnist;
    LsnnConfig lsnn;
    bool relays = false;
    std::uint64_t seed = 1;
    std::string output;
    bool inline_weights = false;
};

int run_build(const CLI::App& sub, const BuildArgs& a)
{
    NetworkGraph g;
    if (a.kind == "relnet") {
        const auto base = build_relnet(a.relnet, a.seed);
        std::size_t instances = 0;
        for (const auto& p : base.populations()) {
            instances += (p.role == Role::gtheta && p.layer == 1) ? 1 : 0;
        }
        const auto with = insert_relays(base);
        std::size_t relays = 0;
        for (const auto& p : with.populations()) {
            relays += p.role == Role::relay ? 1 : 0;
        }
        std::cout << "g_theta instances: " << instances << '\n'
                  << "neurons: " << non_input_neurons(base) << '\n'
                  << "neurons with relays: " << non_input_neurons(with) << " (" << relays << " relay layers)\n";
        g = a.relays ? with : base;
    } else if (a.kind == "smnist") {
        g = build_smnist_network(a.smnist, a.seed);
    } else {
        g = build_lsnn(a.lsnn, a.seed);
    }
    const auto res = count_resources(g);
    std::cout << "populations: " << g.population_count() << '\n'
              << "written neurons: " << res.neurons << " (+" << res.input_neurons << " input sources)\n"
              << "synapses: " << res.synapses << '\n';
    if (!a.output.empty()) {
        ensure_parent(a.output);
        save_network(g, a.output, {!a.inline_weights, config_hash(sub)});
        std::cout << "network: " << a.output << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
    std::string source;
    std::string network;
    std::string out_dir;
    std::string images, labels;
    std::vector<int> digits{0, 1};
    std::size_t limit = 0;
    std::string stories;
    std::size_t samples = 1;
    double word_fill = 1.0;
    std::uint64_t seed = 1;
    bool forward_words = false;
};

SpikeMatrix pad_to(const SpikeMatrix& m, std::size_t steps)
{
    SpikeMatrix out(m.neurons(), steps);
    for (std::size_t t = 0; t < std::min(steps, m.steps()); ++t) {
        for (std::size_t j = 0; j < m.neurons(); ++j) {
            if (m.get(j, t)) {
                out.set(j, t);
            }
        }
    }
    return out;
}

RelNetConfig relnet_config_of(const NetworkGraph& g)
{
    const auto meta = [&](const char* key) { return std::stoi(g.metadata().at(key)); };
    RelNetConfig c;
    c.M = meta("M");
    c.T_word = meta("T_word");
    c.N_words = meta("N_words");
    c.vocab = static_cast<std::size_t>(meta("vocab"));
    c.T_sim = meta("T_sim");
    return c;
}

int run_encode(const CLI::App& sub, const EncodeArgs& a)
{
    const auto g = load_network(a.network);
    const auto hash = config_hash(sub);
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    char name[64];
    if (a.source == "mnist") {
        const auto set = read_idx(a.images, a.labels);
        const auto samples = encode_image_set(set, a.digits, ThresholdEncoderConfig{}, g.require("input"),
                                              a.limit == 0 ? set.size() : a.limit);
        auto labels = open_out(dir / "labels.txt");
        for (std::size_t k = 0; k < samples.size(); ++k) {
            std::snprintf(name, sizeof name, "sample_%05zu.txt", k);
            save_inputs(dir / name, samples[k].inputs, samples[k].steps, g, hash);
            labels << name << ' ' << a.digits[static_cast<std::size_t>(samples[k].label)] << '\n';
        }
        std::cout << "encoded " << samples.size() << " images of " << samples.front().steps << " steps\n";
        return 0;
    }
    if (!is_relnet(g)) {
        throw InvalidInput("encode " + a.source + " needs a RelNet network");
    }
    const auto rc = relnet_config_of(g);
    const std::size_t steps = static_cast<std::size_t>(rc.lsnn_steps() + rc.T_sim);
    if (a.source == "random") {
        for (std::size_t k = 0; k < a.samples; ++k) {
            Rng rng(a.seed, "encode-random", k);
            std::snprintf(name, sizeof name, "sample_%05zu.txt", k);
            save_inputs(dir / name, random_relnet_inputs(g, rc, a.word_fill, steps, rng), steps, g, hash);
        }
        std::cout << "wrote " << a.samples << " random word samples of " << steps << " steps\n";
        return 0;
    }
    std::ifstream in(a.stories);
    if (!in) {
        throw InvalidInput("cannot read '" + a.stories + "'");
    }
    Vocabulary vocab;
    const auto stories = read_stories(in, vocab);
    if (vocab.size() > rc.vocab) {
        throw InvalidInput("stories use " + std::to_string(vocab.size()) + " distinct words; the network has " +
                           std::to_string(rc.vocab));
    }
    vocab.save(dir / "vocab.txt");
    WordEncoderConfig wc;
    wc.T_word = rc.T_word;
    wc.N_words = rc.N_words;
    wc.vocab = rc.vocab;
    wc.order = a.forward_words ? WordOrder::forward : WordOrder::reversed;
    const auto clip = [&](const std::vector<std::uint32_t>& words) {
        const auto n = std::min<std::size_t>(words.size(), static_cast<std::size_t>(rc.N_words));
        return std::vector<std::uint32_t>(words.end() - static_cast<std::ptrdiff_t>(n), words.end());
    };
    auto answers = open_out(dir / "answers.txt");
    for (std::size_t k = 0; k < stories.size(); ++k) {
        const auto& st = stories[k];
        InputMap inputs;
        inputs.emplace(g.require(word_input_name(0)), pad_to(encode_sentence(clip(st.question), wc), steps));
        // The most recent M statements fill sentences 1..M.
        const std::size_t n = std::min<std::size_t>(st.sentences.size(), static_cast<std::size_t>(rc.M));
        for (std::size_t s = 0; s < n; ++s) {
            const auto& words = st.sentences[st.sentences.size() - n + s];
            if (!words.empty()) {
                inputs.emplace(g.require(word_input_name(static_cast<int>(s + 1))),
                               pad_to(encode_sentence(clip(words), wc), steps));
            }
        }
        std::snprintf(name, sizeof name, "story_%05zu.txt", k);
        save_inputs(dir / name, inputs, steps, g, hash);
        answers << name << ' ' << vocab.word(st.answer) << '\n';
    }
    std::cout << "encoded " << stories.size() << " questions, vocabulary " << vocab.size() << " words\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string network;
    std::string inputs;
    std::size_t steps = 0;
    std::string mode = "real";
    unsigned threads = 1;
    std::string output;
    std::string metrics;
};

int run_simulate(const CLI::App& sub, const SimulateArgs& a)
{
    const auto g = load_network(a.network);
    std::size_t file_steps = 0;
    const auto inputs = a.inputs.empty() ? InputMap{} : load_inputs(a.inputs, g, &file_steps);
    const std::size_t steps = a.steps > 0 ? a.steps : file_steps;
    if (steps == 0) {
        throw UsageError("simulate needs --steps or an input file");
    }
    SimOptions opt;
    opt.mode = numeric_mode_from_string(a.mode);
    opt.threads = a.threads;
    const auto result = simulate(g, inputs, steps, opt);
    const auto hash = config_hash(sub);
    const auto m = metrics(result.raster, g);
    std::cout << "steps: " << steps << '\n'
              << "spikes: " << result.raster.total_spikes() << '\n'
              << "mean spikes per neuron: " << m.mean_spikes_per_neuron << '\n';
    json readout = json::object();
    for (const auto& [pop, v] : result.readout) {
        std::cout << "readout " << g.population(pop).name << ": argmax " << argmax(v) << '\n';
        readout[g.population(pop).name] = {{"voltages", v}, {"argmax", argmax(v)}};
    }
    if (!a.output.empty()) {
        RasterHeader h;
        h.steps = steps;
        h.graph_hash = hex64(g.hash());
        h.config_hash = hash;
        h.population_sizes = result.raster.population_sizes();
        ensure_parent(a.output);
        save_raster(a.output, result.raster, h);
    }
    if (!a.metrics.empty()) {
        auto doc = artifact_header("snn-metrics", hash);
        doc["steps"] = steps;
        doc["spikes"] = result.raster.total_spikes();
        doc["mean_spikes_per_neuron"] = m.mean_spikes_per_neuron;
        json by_role = json::object();
        for (const auto& [role, v] : m.spikes_per_neuron) {
            by_role[to_string(role)] = v;
        }
        doc["spikes_per_neuron_by_role"] = by_role;
        json pops = json::array();
        for (PopId p = 0; p < g.population_count(); ++p) {
            std::size_t total = 0;
            for (const auto c : m.counts[p]) {
                total += c;
            }
            pops.push_back({{"name", g.population(p).name}, {"spikes", total}});
        }
        doc["populations"] = pops;
        doc["readout"] = readout;
        write_json(a.metrics, doc);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string task;
    std::string data_dir = "data/mnist01";
    SmnistTask smnist;
    PairMatchingTask pair;
    std::size_t epochs = 0; // 0 keeps the task default
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string checkpoint;
    std::string network_out;
    std::string report;
};

json epochs_json(const std::vector<EpochReport>& epochs)
{
    json list = json::array();
    for (const auto& e : epochs) {
        list.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"heldout_accuracy", e.heldout_accuracy},
                        {"in_range", e.in_range},
                        {"spikes_per_neuron", e.spikes_per_neuron}});
    }
    return list;
}

void print_epoch(const EpochReport& e)
{
    std::printf("epoch %zu  loss %.4f  train %.3f  heldout %.3f  in-range %.3f  spikes/neuron %.3f\n", e.epoch,
                e.train_loss, e.train_accuracy, e.heldout_accuracy, e.in_range, e.spikes_per_neuron);
    std::fflush(stdout);
}

int run_train(const CLI::App& sub, TrainArgs a)
{
    const auto hash = config_hash(sub);
    auto report = artifact_header("snn-train-report", hash);
    report["task"] = a.task;
    report["seed"] = a.seed;
    if (a.task == "smnist") {
        auto& t = a.smnist;
        t.seed = a.seed;
        t.threads = a.threads;
        if (a.epochs > 0) {
            t.epochs = a.epochs;
        }
        const fs::path d = a.data_dir;
        const auto train = read_idx(d / "train-images-idx3-ubyte", d / "train-labels-idx1-ubyte");
        const auto test = read_idx(d / "test-images-idx3-ubyte", d / "test-labels-idx1-ubyte");
        auto g = build_smnist_network(t.network, a.seed);
        const auto r = train_smnist(g, train, test, t, print_epoch);
        std::printf("heldout accuracy %.4f  in-range %.4f (initial %.4f)  %zu train / %zu heldout\n",
                    r.heldout_accuracy, r.in_range, r.initial_in_range, r.train_samples, r.heldout_samples);
        report["heldout_accuracy"] = r.heldout_accuracy;
        report["in_range"] = r.in_range;
        report["initial_in_range"] = r.initial_in_range;
        report["epochs"] = epochs_json(r.epochs);
        if (!a.checkpoint.empty()) {
            ensure_parent(a.checkpoint);
            save_checkpoint(a.checkpoint, g, {a.seed, "{}", hash});
        }
        if (!a.network_out.empty()) {
            ensure_parent(a.network_out);
            save_network(g, a.network_out, {true, hash});
        }
    } else {
        auto& t = a.pair;
        t.seed = a.seed;
        t.threads = a.threads;
        if (a.epochs > 0) {
            t.epochs = a.epochs;
        }
        const auto r = train_pair_matching(t, print_epoch);
        std::printf("heldout accuracy %.4f  spikes per neuron %.4f  g_theta spikes per instance %.4f\n",
                    r.heldout_accuracy, r.spikes_per_neuron, r.gtheta_spikes_per_instance);
        report["M"] = t.M;
        report["heldout_accuracy"] = r.heldout_accuracy;
        report["spikes_per_neuron"] = r.spikes_per_neuron;
        report["gtheta_spikes_per_instance"] = r.gtheta_spikes_per_instance;
        report["neurons"] = r.neurons;
        report["epochs"] = epochs_json(r.epochs);
    }
    if (!a.report.empty()) {
        write_json(a.report, report);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct PlaceArgs {
    std::string network;
    std::string strategy = "optimized";
    bool no_relays = false;
    int layer_cap = -1;
    BoardModel board;
    std::string output;
    std::string network_out;
};

void print_violations(const std::vector<Violation>& v)
{
    std::cout << v.size() << " violation" << (v.size() == 1 ? "" : "s") << '\n';
    for (const auto& x : v) {
        std::cout << "  [" << to_string(x.budget) << "] " << x.message << '\n';
    }
}

int run_place(const CLI::App& sub, const PlaceArgs& a)
{
    auto g = load_network(a.network);
    const auto budget = budget_for(g, a.layer_cap);
    bool inserted = false;
    if (!a.no_relays && is_relnet(g) && !has_relays(g)) {
        g = insert_relays(g, budget, a.board.cores_per_chip);
        inserted = true;
    }
    PlaceOptions po;
    po.strategy = strategy_from_string(a.strategy);
    po.budget = budget;
    po.board = a.board;
    const auto p = place(g, po);
    const auto tables = axon_tables(g, p);
    const auto s = summarize(g, p, tables);
    const auto hash = config_hash(sub);
    std::cout << "strategy: " << to_string(p.strategy) << '\n'
              << "cores: " << s.cores << " (+" << s.input_cores << " input cores)\n"
              << "chips: " << s.chips << '\n'
              << "neurons: " << s.neurons << '\n'
              << "relay layers: " << s.relay_layers << '\n';
    if (!a.output.empty()) {
        ensure_parent(a.output);
        save_placement(a.output, p, g, hash);
        std::cout << "placement: " << a.output << '\n';
    }
    if (inserted) {
        fs::path net = a.network_out;
        if (net.empty()) {
            if (a.output.empty()) {
                throw UsageError("relays were inserted; give --network-out or -o to keep the placed network");
            }
            net = fs::path(a.output).replace_extension(".network.json");
        }
        ensure_parent(net);
        save_network(g, net, {true, hash});
        std::cout << "placed network (with relays): " << net.string() << '\n';
    }
    const auto v = verify(g, p, tables, budget);
    std::cout << "verify: ";
    print_violations(v);
    return 0;
}

struct VerifyArgs {
    std::string network;
    std::string placement;
    int layer_cap = -1;
};

int run_verify(const VerifyArgs& a)
{
    const auto g = load_network(a.network);
    const auto p = load_placement(a.placement, g);
    const auto v = verify(g, p, budget_for(g, a.layer_cap));
    print_violations(v);
    return v.empty() ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct CostArgs {
    std::string network;
    std::string placement;
    std::vector<std::string> rasters;
    CostModel model;
    unsigned threads = 1;
    std::string output;
};

int run_cost(const CLI::App& sub, const CostArgs& a)
{
    const auto g = load_network(a.network);
    const auto p = load_placement(a.placement, g);
    std::vector<Raster> rasters;
    for (const auto& path : a.rasters) {
        RasterHeader h;
        rasters.push_back(load_raster(path, &h));
        if (!h.graph_hash.empty() && h.graph_hash != hex64(g.hash())) {
            throw InvalidInput("raster '" + path + "' was produced by a different network");
        }
    }
    const auto tables = axon_tables(g, p);
    const auto c = evaluate_cost(g, p, tables, rasters, a.model, a.threads);
    std::printf("deliveries: intra-core %llu  intra-chip %llu  inter-chip %llu  (peak inter-chip %llu per step)\n",
                static_cast<unsigned long long>(c.traffic.intra_core),
                static_cast<unsigned long long>(c.traffic.intra_chip),
                static_cast<unsigned long long>(c.traffic.inter_chip),
                static_cast<unsigned long long>(c.traffic.peak_inter_chip()));
    std::printf("latency %.6g s  energy %.6g J (static %.6g, dynamic %.6g)  EDP %.6g J*s\n", c.latency,
                c.energy.total(), c.energy.static_energy, c.energy.dynamic_energy, c.edp);
    if (!a.output.empty()) {
        auto doc = artifact_header("snn-cost", config_hash(sub));
        doc["strategy"] = to_string(p.strategy);
        doc["rasters"] = rasters.size();
        doc["cores"] = c.cores;
        doc["chips"] = c.chips;
        doc["intra_core"] = c.traffic.intra_core;
        doc["intra_chip"] = c.traffic.intra_chip;
        doc["inter_chip"] = c.traffic.inter_chip;
        doc["peak_inter_chip"] = c.traffic.peak_inter_chip();
        doc["latency_s"] = c.latency;
        doc["static_energy_j"] = c.energy.static_energy;
        doc["dynamic_energy_j"] = c.energy.dynamic_energy;
        doc["energy_j"] = c.energy.total();
        doc["edp_js"] = c.edp;
        doc["model_note"] = "placeholder coefficients, not measured hardware values";
        write_json(a.output, doc);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    BenchConfig config;
    std::string output;
    std::string json_out;
    std::string plot_out;
};

int run_bench(const CLI::App& sub, const BenchArgs& a)
{
    const auto hash = config_hash(sub);
    const auto start = std::chrono::steady_clock::now();
    const auto rows = compare_strategies(a.config);
    if (a.output.empty()) {
        write_report_csv(std::cout, rows, hash);
    } else {
        auto out = open_out(a.output);
        write_report_csv(out, rows, hash);
    }
    if (!a.json_out.empty()) {
        auto out = open_out(a.json_out);
        write_report_json(out, rows, a.config.model, hash);
    }
    if (!a.plot_out.empty()) {
        auto out = open_out(a.plot_out);
        write_plot_data(out, rows);
    }
    for (const auto& r : rows) {
        std::fprintf(stderr, "M=%d  inter-chip %llu -> %llu  EDP ratio %.4f\n", r.M,
                     static_cast<unsigned long long>(r.naive.traffic.inter_chip),
                     static_cast<unsigned long long>(r.optimized.traffic.inter_chip), r.edp_ratio());
    }
    std::fprintf(stderr, "%.1f s\n",
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spiking network simulator, trainer, placement compiler and cost model"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.set_config("--config", "", "read options from a TOML file");
    std::string write_config;
    app.add_option("--write-config", write_config, "save the effective options as TOML and continue");
    app.require_subcommand(1);
    app.fallthrough();

    // build
    BuildArgs build;
    auto* b = app.add_subcommand("build", "emit a network file from a builder");
    b->add_option("kind", build.kind, "relnet, smnist or lsnn")
        ->required()
        ->check(CLI::IsMember({"relnet", "smnist", "lsnn"}));
    b->add_option("--M", build.relnet.M, "RelNet sentences")->capture_default_str()->check(CLI::Range(1, 64));
    b->add_option("--vocab", build.relnet.vocab, "RelNet vocabulary size")->capture_default_str();
    b->add_option("--lsnn-size", build.relnet.lsnn_size, "neurons per RelNet LSNN")->capture_default_str();
    b->add_flag("--relays", build.relays, "write the RelNet with relay layers inserted");
    b->add_option("--outputs", build.smnist.outputs, "sMNIST readout neurons")->capture_default_str();
    b->add_option("--size", build.lsnn.size, "LSNN size")->capture_default_str();
    b->add_option("--seed", build.seed, "root seed")->capture_default_str();
    b->add_option("-o,--output", build.output, "network file")->group(kOutputGroup);
    b->add_flag("--inline-weights", build.inline_weights, "store weights in the JSON instead of a sidecar")
        ->group(kOutputGroup);

    // encode
    EncodeArgs enc;
    auto* e = app.add_subcommand("encode", "turn a dataset into input spike files");
    e->add_option("source", enc.source, "mnist, stories or random")
        ->required()
        ->check(CLI::IsMember({"mnist", "stories", "random"}));
    e->add_option("--network", enc.network, "network the inputs are for")->required();
    e->add_option("--out-dir", enc.out_dir, "directory for the input files")->required()->group(kOutputGroup);
    e->add_option("--images", enc.images, "IDX image file (mnist)");
    e->add_option("--labels", enc.labels, "IDX label file (mnist)");
    e->add_option("--digits", enc.digits, "digits to keep, label k is the k-th")->delimiter(',')->capture_default_str();
    e->add_option("--limit", enc.limit, "at most this many images (0 = all)")->capture_default_str();
    e->add_option("--stories", enc.stories, "numbered-line story file (stories)");
    e->add_flag("--forward-words", enc.forward_words, "present words in reading order");
    e->add_option("--samples", enc.samples, "random samples")->capture_default_str();
    e->add_option("--word-fill", enc.word_fill, "fraction of word slots used (random)")->capture_default_str();
    e->add_option("--seed", enc.seed, "root seed (random)")->capture_default_str();

    // simulate
    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "run a network on an input file");
    s->add_option("--network", sim.network, "network file")->required();
    s->add_option("--inputs", sim.inputs, "input spike file");
    s->add_option("--steps", sim.steps, "steps (default: from the input file)");
    s->add_option("--mode", sim.mode, "real or integer")->capture_default_str()->check(CLI::IsMember({"real", "integer"}));
    s->add_option("--threads", sim.threads, "worker threads")->capture_default_str()->group(kRuntimeGroup);
    s->add_option("-o,--output", sim.output, "raster file")->group(kOutputGroup);
    s->add_option("--metrics", sim.metrics, "metrics JSON file")->group(kOutputGroup);

    // train
    TrainArgs tr;
    auto* t = app.add_subcommand("train", "desk-scale training run");
    t->add_option("task", tr.task, "smnist or pair")->required()->check(CLI::IsMember({"smnist", "pair"}));
    t->add_option("--data-dir", tr.data_dir, "directory with the IDX files (smnist)")->capture_default_str();
    t->add_option("--epochs", tr.epochs, "epochs (0 = task default)")->capture_default_str();
    t->add_option("--max-train", tr.smnist.max_train, "training images (smnist)")->capture_default_str();
    t->add_option("--lambda-v", tr.smnist.lambda_v, "voltage regularizer weight (smnist)")->capture_default_str();
    t->add_option("--time-budget", tr.smnist.time_budget_s, "stop after the epoch crossing this many seconds")
        ->capture_default_str();
    t->add_option("--M", tr.pair.M, "sentences (pair)")->capture_default_str();
    t->add_option("--train-stories", tr.pair.train_stories, "training stories (pair)")->capture_default_str();
    t->add_option("--lambda-R", tr.pair.lambda_R, "g_theta rate regularizer weight (pair)")->capture_default_str();
    t->add_option("--seed", tr.seed, "root seed")->capture_default_str();
    t->add_option("--threads", tr.threads, "worker threads")->capture_default_str()->group(kRuntimeGroup);
    t->add_option("--checkpoint", tr.checkpoint, "checkpoint file (smnist)")->group(kOutputGroup);
    t->add_option("--network-out", tr.network_out, "trained network file (smnist)")->group(kOutputGroup);
    t->add_option("--report", tr.report, "report JSON file")->group(kOutputGroup);

    // place
    PlaceArgs pl;
    auto* p = app.add_subcommand("place", "map a network onto the board");
    p->add_option("--network", pl.network, "network file")->required();
    p->add_option("--strategy", pl.strategy, "naive or optimized")
        ->capture_default_str()
        ->check(CLI::IsMember({"naive", "optimized"}));
    p->add_flag("--no-relays", pl.no_relays, "do not insert relay layers into a RelNet");
    p->add_option("--layer-cap", pl.layer_cap, "per-core neuron cap (-1: 128 for RelNet, none otherwise)")
        ->capture_default_str();
    p->add_option("--chips", pl.board.chips, "chips on the board")->capture_default_str();
    p->add_option("--cores-per-chip", pl.board.cores_per_chip, "cores per chip")->capture_default_str();
    p->add_option("-o,--output", pl.output, "placement file")->group(kOutputGroup);
    p->add_option("--network-out", pl.network_out, "network file with relays (default: next to -o)")
        ->group(kOutputGroup);

    // verify
    VerifyArgs vf;
    auto* v = app.add_subcommand("verify", "check a placement against the core budgets");
    v->add_option("--network", vf.network, "network file")->required();
    v->add_option("--placement", vf.placement, "placement file")->required();
    v->add_option("--layer-cap", vf.layer_cap, "per-core neuron cap (-1: 128 for RelNet, none otherwise)")
        ->capture_default_str();

    // cost
    CostArgs co;
    auto* c = app.add_subcommand("cost", "spike traffic, latency, energy and EDP of a placement");
    c->add_option("--network", co.network, "network file")->required();
    c->add_option("--placement", co.placement, "placement file")->required();
    c->add_option("--raster", co.rasters, "raster file (repeatable)")->required();
    add_model_options(c, co.model);
    c->add_option("--threads", co.threads, "worker threads")->capture_default_str()->group(kRuntimeGroup);
    c->add_option("-o,--output", co.output, "report JSON file")->group(kOutputGroup);

    // bench
    BenchArgs be;
    auto* bn = app.add_subcommand("bench", "naive vs optimized placement over a set of M");
    bn->add_option("--M", be.config.Ms, "comma-separated sentence counts")->delimiter(',')->capture_default_str();
    bn->add_option("--samples", be.config.samples, "random word samples per M")->capture_default_str();
    bn->add_option("--word-fill", be.config.word_fill, "fraction of word slots used")->capture_default_str();
    bn->add_option("--seed", be.config.seed, "root seed")->capture_default_str();
    add_model_options(bn, be.config.model);
    bn->add_option("--threads", be.config.threads, "worker threads")->capture_default_str()->group(kRuntimeGroup);
    bn->add_option("-o,--output", be.output, "CSV file (default: stdout)")->group(kOutputGroup);
    bn->add_option("--json", be.json_out, "structured report file")->group(kOutputGroup);
    bn->add_option("--plot", be.plot_out, "plot data file")->group(kOutputGroup);

    for (auto* sub : app.get_subcommands({})) {
        sub->configurable();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }
    if (!write_config.empty()) {
        for (auto* sub : app.get_subcommands()) {
            auto out = open_out(write_config);
            out << "# snnc " << kToolVersion << "\n[" << sub->get_name() << "]\n" << sub->config_to_str(true, false);
        }
    }

    try {
        if (b->parsed()) {
            return run_build(*b, build);
        }
        if (e->parsed()) {
            return run_encode(*e, enc);
        }
        if (s->parsed()) {
            return run_simulate(*s, sim);
        }
        if (t->parsed()) {
            return run_train(*t, tr);
        }
        if (p->parsed()) {
            return run_place(*p, pl);
        }
        if (v->parsed()) {
            return run_verify(vf);
        }
        if (c->parsed()) {
            return run_cost(*c, co);
        }
        return run_bench(*bn, be);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << '\n';
        return 2;
    } catch (const InvalidParameter& err) {
        std::cerr << "invalid parameter: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}
