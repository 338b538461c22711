// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Criteria 1 and 3 drive the snnc executable; the rest run in-process.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "snn/builders.hpp"
#include "snn/cost.hpp"
#include "snn/encoders.hpp"
#include "snn/io.hpp"
#include "snn/placement.hpp"
#include "snn/simulator.hpp"
#include "snn/tasks.hpp"
#include "snn/training.hpp"

#include "gradient_oracle.hpp"
#include "listing_oracle.hpp"
#include "reference_sim.hpp"

namespace fs = std::filesystem;
using namespace snn;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Command {
    int status = -1;
    std::string output;
};

Command run(const std::string& args)
{
    Command c;
    const std::string cmd = std::string(SNNC_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return c;
    }
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
        c.output += buf.data();
    }
    const int raw = pclose(pipe);
    c.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return c;
}

bool contains(const std::string& text, const std::string& needle)
{
    return text.find(needle) != std::string::npos;
}

fs::path work_dir()
{
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("snn-acceptance-" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

const NetworkGraph& relayed_relnet(int M)
{
    static std::map<int, NetworkGraph> cache;
    auto it = cache.find(M);
    if (it == cache.end()) {
        RelNetConfig c;
        c.M = M;
        it = cache.emplace(M, insert_relays(build_relnet(c, 1))).first;
    }
    return it->second;
}

PlaceOptions relnet_options(Strategy s)
{
    PlaceOptions o;
    o.strategy = s;
    o.budget = CoreBudget::relnet();
    return o;
}

// ---------------------------------------------------------------------------

Outcome c1_build()
{
    const auto c = run("build relnet --M 20 --vocab 180");
    const bool ok = c.status == 0 && contains(c.output, "g_theta instances: 210\n") &&
                    contains(c.output, "neurons with relays: 238604 ");
    return {ok, ok ? "210 g_theta instances, 238604 neurons with relays" : c.output};
}

Outcome c2_aggregation()
{
    RelNetConfig c;
    c.M = 20;
    const auto g = build_relnet(c, 1);
    const auto slices = split_layer(g, g.require("aggregation"), CoreBudget::relnet());
    std::size_t widest = 0;
    for (const auto& r : slices) {
        widest = std::max<std::size_t>(widest, r.size());
    }
    std::ostringstream d;
    d << slices.size() << " cores, at most " << widest << " neurons each";
    return {slices.size() == 14 && widest == 19, d.str()};
}

Outcome c3_axons()
{
    const auto& g = relayed_relnet(20);
    const auto o = relnet_options(Strategy::optimized);
    const auto p = place(g, o);
    const auto t = axon_tables(g, p);
    std::set<std::size_t> question, sentence;
    for (const auto n : t.output_axons_to(g, p, g.require(lsnn_name(0)), Role::relay)) {
        question.insert(n);
    }
    for (int s = 1; s <= 20; ++s) {
        for (const auto n : t.output_axons_to(g, p, g.require(lsnn_name(s)), Role::relay)) {
            sentence.insert(n);
        }
    }
    const bool relays_ok = question == std::set<std::size_t>{1000} && sentence == std::set<std::size_t>{400};

    const auto dir = work_dir();
    const auto net = (dir / "net20.json").string();
    const auto plc = (dir / "naive20.json").string();
    const auto b = run("build relnet --M 20 --vocab 180 -o " + net);
    const auto pl = run("place --network " + net + " --strategy naive --no-relays -o " + plc);
    const auto v = run("verify --network " + net + " --placement " + plc);
    const bool cli_ok = b.status == 0 && pl.status == 0 && v.status == 1 && contains(v.output, "[fanout]") &&
                        contains(v.output, "> 512 (840 to gtheta");
    std::ostringstream d;
    d << "question " << (question.size() == 1 ? std::to_string(*question.begin()) : "mixed") << ", sentence "
      << (sentence.size() == 1 ? std::to_string(*sentence.begin()) : "mixed")
      << "; without relays verify exit " << v.status;
    if (!cli_ok) {
        d << "\n" << v.output;
    }
    return {relays_ok && cli_ok, d.str()};
}

Outcome c4_placement()
{
    const auto& g = relayed_relnet(20);
    const auto o = relnet_options(Strategy::optimized);
    const auto p = place(g, o);
    const auto t = axon_tables(g, p);
    const auto v = verify(g, p, t, o.budget);
    const auto s = summarize(g, p, t);
    const double cores = static_cast<double>(s.cores);
    std::ostringstream d;
    d << v.size() << " violations, " << s.cores << " cores (+" << s.input_cores << " input), " << s.chips
      << " chips";
    const bool ok = v.empty() && std::abs(cores - 2308.0) <= 0.15 * 2308.0 && s.chips >= 19 && s.chips <= 25;
    return {ok, d.str()};
}

Outcome c5_reference()
{
    Rng rng(2024, "acceptance-reference");
    constexpr int steps = 1000;
    double worst_real = 0.0;
    std::size_t integer_mismatches = 0, spike_mismatches = 0, largest = 0;
    for (int n = 0; n < 10; ++n) {
        InputMap inputs;
        const auto g = oracle::random_network(rng, inputs, steps);
        std::size_t neurons = 0;
        for (const auto& pop : g.populations()) {
            neurons += pop.size;
        }
        largest = std::max(largest, neurons);
        for (const auto mode : {NumericMode::integer, NumericMode::real}) {
            SimOptions opt;
            opt.mode = mode;
            opt.trace_all = true;
            const auto sim = simulate(g, inputs, steps, opt);
            const auto ref = oracle::reference_simulate(g, inputs, steps, mode == NumericMode::integer);
            for (PopId p = 0; p < g.population_count(); ++p) {
                const auto m = sim.raster.population(p);
                for (std::size_t t = 0; t < steps; ++t) {
                    for (std::size_t j = 0; j < g.population(p).size; ++j) {
                        if (m.get(j, t) != (ref.z[p][t][j] == 1)) {
                            ++spike_mismatches;
                        }
                        if (g.population(p).is_input()) {
                            continue;
                        }
                        const double a = sim.raster.voltage_traces().at({p, static_cast<std::uint32_t>(j)})[t];
                        const double b = ref.v[p][t][j];
                        if (mode == NumericMode::integer) {
                            integer_mismatches += a != b ? 1 : 0;
                        } else {
                            worst_real = std::max(worst_real, std::abs(a - b) / std::max(1.0, std::abs(b)));
                        }
                    }
                }
            }
        }
    }
    std::ostringstream d;
    d << "largest network " << largest << " neurons; integer mismatches " << integer_mismatches
      << ", spike mismatches " << spike_mismatches << ", worst real deviation " << worst_real;
    return {largest <= 50 && integer_mismatches == 0 && spike_mismatches == 0 && worst_real <= 1e-9, d.str()};
}

Outcome c6_gradients()
{
    std::size_t valid = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 1; valid < 100 && seed < 40; ++seed) {
        auto pr = oracle::gradcheck_problem(seed);
        EngineOptions opt;
        opt.mode = ForwardMode::relaxed;
        const auto r = bptt_gradients(pr.graph, pr.batch, pr.loss, opt);
        Rng rng(seed, "probe");
        for (int k = 0; k < 10; ++k) {
            const auto probe = oracle::fd_probe(pr.graph, pr.batch, pr.loss, r.gradients, rng);
            if (probe.smooth) {
                ++valid;
                worst = std::max(worst, probe.relative_error);
            }
        }
    }
    std::ostringstream d;
    d << valid << " probes, worst relative error " << worst;
    return {valid >= 100 && worst < 1e-4, d.str()};
}

Outcome c7_regularizers()
{
    const std::vector<std::vector<double>> rates{{10.0, 10.0}, {10.0, 10.0}};
    const std::vector<double> voltages{-2.0, -1.0, 0.0, 0.4};
    const std::vector<std::vector<std::vector<double>>> gtheta{{{300.0, 0.0}, {0.0, 300.0}}};
    const double lr = loss_rate(rates, 1.0, 10.0);
    const double lv = loss_voltage(voltages, 1.0);
    const double lR = loss_gtheta_rate(gtheta, 1.0, 300.0);
    const double s2 = spikes_per_instance_at_target(2, 300.0, 37.0);
    const double s20 = spikes_per_instance_at_target(20, 300.0, 37.0);
    // 300 Hz over 37 ms shared by M(M+1)/2 instances.
    const double want2 = 300.0 * 0.037 / 3.0;
    const double want20 = 300.0 * 0.037 / 210.0;
    std::ostringstream d;
    d << "L_rho " << lr << ", L_v " << lv << ", L_R " << lR << "; spikes per instance " << s2 << " (M=2), "
      << std::round(s20 * 100.0) / 100.0 << " (M=20)";
    const bool ok = lr == 0.0 && lv == 0.0 && lR == 0.0 && std::abs(s2 - want2) < 1e-12 &&
                    std::abs(s20 - want20) < 1e-15 && std::abs(s2 - 3.7) < 1e-12 &&
                    std::round(s20 * 100.0) / 100.0 == 0.05;
    return {ok, d.str()};
}

Outcome c8_smnist()
{
    const fs::path d = fs::path(SNN_DATA_DIR) / "mnist01";
    const auto train = read_idx(d / "train-images-idx3-ubyte", d / "train-labels-idx1-ubyte");
    const auto test = read_idx(d / "test-images-idx3-ubyte", d / "test-labels-idx1-ubyte");
    SmnistTask task;
    auto g = build_smnist_network(task.network, task.seed);
    const auto r = train_smnist(g, train, test, task);
    std::ostringstream out;
    out << r.train_samples << " train samples, held-out accuracy " << r.heldout_accuracy << " on "
        << r.heldout_samples << ", in-range " << r.in_range;
    return {r.train_samples == 1000 && r.heldout_accuracy >= 0.85 && r.in_range >= 0.95, out.str()};
}

Outcome c9_pair_matching()
{
    PairMatchingTask two;
    two.M = 2;
    PairMatchingTask six;
    six.M = 6;
    const auto a = train_pair_matching(two);
    const auto b = train_pair_matching(six);
    std::ostringstream d;
    d << "spikes per neuron " << a.spikes_per_neuron << " (M=2), " << b.spikes_per_neuron << " (M=6)";
    return {b.spikes_per_neuron < a.spikes_per_neuron, d.str()};
}

Outcome c10_bench()
{
    BenchConfig c;
    c.Ms = {6, 10, 16, 20};
    c.threads = 4;
    const auto rows = compare_strategies(c);
    bool ok = rows.size() == 4;
    std::ostringstream d;
    for (const auto& r : rows) {
        ok = ok && r.optimized.traffic.inter_chip <= r.naive.traffic.inter_chip && r.optimized.edp < r.naive.edp;
        d << (d.tellp() > 0 ? "; " : "") << "M=" << r.M << " EDP ratio " << std::round(r.edp_ratio() * 1000.0) / 1000.0;
    }
    return {ok, d.str()};
}

Outcome c11_encoder()
{
    Rng rng(11, "acceptance-encoder");
    std::size_t mismatches = 0, wrong_length = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<std::uint8_t> px(784);
        std::vector<int> ints(784);
        for (std::size_t i = 0; i < px.size(); ++i) {
            const int v = rng.bernoulli(0.2) ? 0 : rng.uniform_int(0, 255);
            px[i] = static_cast<std::uint8_t>(v);
            ints[i] = v;
        }
        const auto m = encode_pixels(px, ThresholdEncoderConfig{});
        wrong_length += m.steps() != 840 ? 1 : 0;
        std::set<std::pair<int, int>> got;
        for (std::size_t t = 0; t < m.steps(); ++t) {
            for (std::size_t n = 0; n < m.neurons(); ++n) {
                if (m.get(n, t)) {
                    got.insert({static_cast<int>(t), static_cast<int>(n)});
                }
            }
        }
        mismatches += got != oracle::listing_transcription(ints, 80) ? 1 : 0;
    }
    std::ostringstream d;
    d << "1000 images, " << mismatches << " mismatches, " << wrong_length << " not 840 steps";
    return {mismatches == 0 && wrong_length == 0, d.str()};
}

struct Criterion {
    int id;
    const char* name;
    double limit_s; // wall or CPU seconds
    bool cpu_limit;
    std::function<Outcome()> check;
};

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "build relnet M=20 counts", 5, false, c1_build},
        {2, "aggregation split", 1, false, c2_aggregation},
        {3, "output axons per LSNN core", 10, false, c3_axons},
        {4, "optimized M=20 placement", 60, false, c4_placement},
        {5, "simulator vs reference", 30, false, c5_reference},
        {6, "BPTT vs finite differences", 60, false, c6_gradients},
        {7, "regularizers at target", 1, false, c7_regularizers},
        {8, "sMNIST 0 vs 1", 600, true, c8_smnist},
        {9, "pair matching sparsity", 1800, true, c9_pair_matching},
        {10, "placement strategy comparison", 600, false, c10_bench},
        {11, "threshold encoder", 30, false, c11_encoder},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto wall0 = std::chrono::steady_clock::now();
        const std::clock_t cpu0 = std::clock();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        const double cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
        const double used = c.cpu_limit ? cpu : wall;
        const bool in_time = used < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s [%2d] %-30s %8.2f s %s (limit %.0f s)  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, used,
                    c.cpu_limit ? "cpu" : "wall", c.limit_s, o.detail.c_str(), in_time ? "" : "  [over time]");
        std::fflush(stdout);
    }
    std::error_code ec;
    fs::remove_all(work_dir(), ec);
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
