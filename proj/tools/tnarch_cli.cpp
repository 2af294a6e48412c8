// tnarch: build ConvAC weight tensors as tensor networks, measure the
// correlations they support, and compare matricization ranks against
// min-cut bounds on the network graph.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tnarch/analysis.hpp"
#include "tnarch/convac.hpp"
#include "tnarch/simulation.hpp"
#include "tnarch/spectrum.hpp"

using namespace tnarch;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + out_path);
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        const unsigned long v = std::stoul(item, &pos);
        if (pos != item.size()) throw ValidationError("bad index list entry: " + item);
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError("empty index list");
    return out;
}

Selection parse_selection(const std::string& text) {
    if (text == "all") return Selection::all();
    if (text.rfind("sample:", 0) == 0) {
        const unsigned long long k = std::stoull(text.substr(7));
        if (k == 0) throw ValidationError("sample count must be >= 1");
        return Selection::take(k);
    }
    throw ValidationError("expected 'all' or 'sample:K', got '" + text + "'");
}

struct CommonArgs {
    std::string spec_path;
    std::string out_path;
    std::uint64_t seed = 1;
    bool compact = false;

    int indent() const { return compact ? -1 : 2; }
    ConvACSpec spec() const {
        if (spec_path.empty()) throw ValidationError("--spec is required");
        return ConvACSpec::from_json(read_file(spec_path));
    }
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_spec = true) {
    if (with_spec)
        cmd->add_option("--spec", args.spec_path, "ConvAC architecture JSON file");
    cmd->add_option("--seed", args.seed, "seed for deterministic weight draws");
    cmd->add_option("--out", args.out_path, "write machine output here instead of stdout");
    cmd->add_flag("--json", args.compact, "compact single-line JSON output");
}

int run_analyze(const CommonArgs& args, const std::string& partition_text,
                std::size_t class_index, double tol) {
    const ConvACSpec spec = args.spec();
    const InputPartition p =
        InputPartition::from_a(parse_index_list(partition_text), spec.n_inputs);

    const WeightSet w = random_weights(spec, args.seed);
    const DenseTensor a = weights_tensor(spec, w, class_index);
    const SingularSpectrum s =
        svd_spectrum(matricize(a, IndexPartition::from_rows(p.a, spec.n_inputs)));
    const EntanglementReport ent = entanglement_measures(s, tol);

    const AnalysisGraph g = analysis_graph_for(spec);
    const CutReport mc = min_cut(g, p);
    const BigInt lb = power_of_p_lower_bound(g, p);

    json j;
    j["rank"] = numerical_rank(s, tol);
    j["entropy"] = ent.entropy;
    j["geometric"] = ent.geometric;
    j["schmidt"] = ent.schmidt;
    j["mincut"] = mc.weight.str();
    j["lower_bound"] = lb.str();
    j["tolerance"] = tol;
    j["class"] = class_index;
    j["partition_mask"] = p.mask(spec.n_inputs);
    emit(j.dump(args.indent()), args.out_path);
    return 0;
}

int run_mincut(const CommonArgs& args, const std::string& partition_text,
               bool modified, bool with_lower_bound) {
    const ConvACSpec spec = args.spec();
    const InputPartition p =
        InputPartition::from_a(parse_index_list(partition_text), spec.n_inputs);
    const AnalysisGraph g = analysis_graph_for(spec);
    const CutReport r = modified ? modified_min_cut(g, p) : min_cut(g, p);
    json j = json::parse(cut_report_to_json(r));
    if (with_lower_bound) j["lower_bound"] = power_of_p_lower_bound(g, p).str();
    emit(j.dump(args.indent()), args.out_path);
    return 0;
}

int run_simulate(const CommonArgs& args, const SimulationConfig& cfg) {
    const SimulationReport report = run_simulation(cfg);
    emit(simulation_csv(report.records), args.out_path);
    std::cerr << summary_json(report, 2) << '\n';
    return 0;
}

int run_advise(const CommonArgs& args, std::size_t feature_size) {
    const Advice adv = advise(args.spec(), feature_size);
    emit(adv.to_json(args.indent()), args.out_path);
    return 0;
}

int run_contract(const CommonArgs& args, const std::string& tn_path,
                 std::size_t class_index, bool emit_tn) {
    if (!tn_path.empty()) {
        const TensorNetwork tn = network_from_json(read_file(tn_path));
        if (emit_tn) {
            emit(network_to_json(tn, args.indent()), args.out_path);
            return 0;
        }
        const DenseTensor t = contract(tn);
        json j;
        j["shape"] = t.shape;
        j["data"] = t.data;
        emit(j.dump(args.indent()), args.out_path);
        return 0;
    }
    const ConvACSpec spec = args.spec();
    const WeightSet w = random_weights(spec, args.seed);
    if (emit_tn) {
        emit(network_to_json(build_tn(spec, w).tn, args.indent()), args.out_path);
        return 0;
    }
    const DenseTensor t = weights_tensor(spec, w, class_index);
    json j;
    j["shape"] = t.shape;
    j["data"] = t.data;
    emit(j.dump(args.indent()), args.out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor-network analysis of convolutional arithmetic circuits"};
    app.require_subcommand(1);

    CommonArgs analyze_args, mincut_args, simulate_args, advise_args, contract_args;

    auto* analyze = app.add_subcommand(
        "analyze", "entanglement measures and cut bounds for one partition");
    std::string analyze_partition;
    std::size_t analyze_class = 1;
    double analyze_tol = kDefaultRankTol;
    add_common(analyze, analyze_args);
    analyze->add_option("--partition", analyze_partition,
                        "comma-separated input indices of side A (1-based)")
        ->required();
    analyze->add_option("--class", analyze_class, "class index y (1-based)");
    analyze->add_option("--tol", analyze_tol, "relative rank tolerance");

    auto* mincut_cmd =
        app.add_subcommand("mincut", "minimal multiplicative cut for one partition");
    std::string mincut_partition;
    bool mincut_modified = false, mincut_lb = false;
    add_common(mincut_cmd, mincut_args);
    mincut_cmd
        ->add_option("--partition", mincut_partition,
                     "comma-separated input indices of side A (1-based)")
        ->required();
    mincut_cmd->add_flag("--modified", mincut_modified,
                         "count each delta group once (general pooling bound)");
    mincut_cmd->add_flag("--lower-bound", mincut_lb,
                         "also report the power-of-p lower bound");

    auto* simulate =
        app.add_subcommand("simulate", "rank vs min-cut sweep over arrangements "
                                       "and balanced partitions (CSV)");
    SimulationConfig cfg;
    std::string arrangements_text = "all", partitions_text = "all", dims_text;
    add_common(simulate, simulate_args, /*with_spec=*/false);
    simulate->add_option("--n", cfg.n, "number of inputs (power of 2)");
    simulate->add_option("--m", cfg.m, "representation dimension");
    simulate->add_option("--dims", dims_text,
                         "candidate bond dimensions, e.g. 2,3,5,7,11,13");
    simulate->add_option("--arrangements", arrangements_text, "all | sample:K");
    simulate->add_option("--partitions", partitions_text, "all | sample:K");
    simulate->add_option("--tol", cfg.rank_tol, "relative rank tolerance");
    simulate->add_option("--threads", cfg.threads, "worker threads");
    simulate->add_option("--weight-seeds", cfg.weight_seeds_per_config,
                         "weight draws per configuration");

    auto* advise_cmd = app.add_subcommand(
        "advise", "channel-allocation guidance for a feature size");
    std::size_t feature_size = 1;
    add_common(advise_cmd, advise_args);
    advise_cmd->add_option("--feature-size", feature_size, "feature size D in [1, n/2]")
        ->required();

    auto* contract_cmd = app.add_subcommand(
        "contract", "contract a weights network (or a serialized TN) to a tensor");
    std::string tn_path;
    std::size_t contract_class = 1;
    bool emit_tn = false;
    add_common(contract_cmd, contract_args);
    contract_cmd->add_option("--tn", tn_path, "serialized tensor network JSON file");
    contract_cmd->add_option("--class", contract_class, "class index y (1-based)");
    contract_cmd->add_flag("--emit-tn", emit_tn,
                           "emit the network serialization instead of contracting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << app.help() << '\n';
        return 1;
    }

    try {
        if (*analyze)
            return run_analyze(analyze_args, analyze_partition, analyze_class,
                               analyze_tol);
        if (*mincut_cmd)
            return run_mincut(mincut_args, mincut_partition, mincut_modified, mincut_lb);
        if (*simulate) {
            if (!dims_text.empty()) cfg.dim_pool = parse_index_list(dims_text);
            cfg.arrangements = parse_selection(arrangements_text);
            cfg.partitions = parse_selection(partitions_text);
            cfg.master_seed = simulate_args.seed;
            return run_simulate(simulate_args, cfg);
        }
        if (*advise_cmd) return run_advise(advise_args, feature_size);
        if (*contract_cmd)
            return run_contract(contract_args, tn_path, contract_class, emit_tn);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const SizeLimitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
