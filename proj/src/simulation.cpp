#include "tnarch/simulation.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tnarch/rng.hpp"

namespace tnarch {

using nlohmann::json;

namespace {

// Pascal's triangle up to n = 30 (fits comfortably in uint64).
std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    static const auto table = [] {
        std::array<std::array<std::uint64_t, 31>, 31> c{};
        for (std::size_t i = 0; i <= 30; ++i) {
            c[i][0] = 1;
            for (std::size_t j = 1; j <= i; ++j)
                c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0);
        }
        return c;
    }();
    return table[n][k];
}

} // namespace

BalancedPartitions::BalancedPartitions(std::size_t n) : n_(n) {
    if (n < 2 || n % 2 != 0)
        throw ValidationError("BalancedPartitions: n must be even and >= 2");
    if (n > 28)
        throw ValidationError("BalancedPartitions: n > 28 exceeds the enumeration cap; "
                              "use sampling mode");
    count_ = binomial(n - 1, n / 2 - 1); // A = {1} + (n/2 - 1) of the rest
}

InputPartition BalancedPartitions::at(std::uint64_t index) const {
    if (index >= count_)
        throw ValidationError("BalancedPartitions: index out of range");
    std::vector<std::size_t> a{1};
    std::size_t k = n_ / 2 - 1;
    std::uint64_t r = index;
    for (std::size_t v = 2; k > 0 && v <= n_; ++v) {
        const std::uint64_t with_v = binomial(n_ - v, k - 1);
        if (r < with_v) {
            a.push_back(v);
            --k;
        } else {
            r -= with_v;
        }
    }
    return InputPartition::from_a(std::move(a), n_);
}

std::vector<InputPartition> enumerate_balanced_partitions(std::size_t n) {
    const BalancedPartitions seq(n);
    std::vector<InputPartition> out;
    out.reserve(static_cast<std::size_t>(seq.size()));
    for (std::uint64_t i = 0; i < seq.size(); ++i) out.push_back(seq.at(i));
    return out;
}

std::uint64_t count_arrangements(std::size_t pool_size, std::size_t length) {
    if (length > pool_size) return 0;
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < length; ++i) c *= pool_size - i;
    return c;
}

std::vector<std::size_t> arrangement_at(const std::vector<std::size_t>& pool,
                                        std::size_t length, std::uint64_t index) {
    std::vector<std::size_t> remaining = pool;
    std::sort(remaining.begin(), remaining.end());
    if (length > remaining.size())
        throw ValidationError("arrangement_at: pool smaller than requested length");
    std::vector<std::size_t> out;
    std::uint64_t r = index;
    for (std::size_t i = 0; i < length; ++i) {
        const std::uint64_t tail = count_arrangements(remaining.size() - 1, length - i - 1);
        const std::size_t pick = static_cast<std::size_t>(r / tail);
        if (pick >= remaining.size())
            throw ValidationError("arrangement_at: index out of range");
        out.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
        r %= tail;
    }
    return out;
}

namespace {

// k distinct indices out of [0, total), deterministic in `key` (Floyd's
// sampling), returned sorted.
std::vector<std::uint64_t> sample_ids(std::uint64_t total, const Selection& sel,
                                      std::uint64_t key) {
    std::vector<std::uint64_t> ids;
    if (!sel.sample || sel.count >= total) {
        ids.resize(total);
        for (std::uint64_t i = 0; i < total; ++i) ids[i] = i;
        return ids;
    }
    if (sel.count == 0) throw ValidationError("sample count must be >= 1");
    std::set<std::uint64_t> chosen;
    for (std::uint64_t j = total - sel.count; j < total; ++j) {
        const std::uint64_t t = rng::uniform_below(key, j, j + 1);
        chosen.insert(chosen.count(t) ? j : t);
    }
    ids.assign(chosen.begin(), chosen.end());
    return ids;
}

std::string join_channels(const std::vector<std::size_t>& channels) {
    std::string s;
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (i) s += '|';
        s += std::to_string(channels[i]);
    }
    return s;
}

std::string format_ratio(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", r);
    return buf;
}

} // namespace

SimulationReport run_simulation(const SimulationConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.weight_seeds_per_config < 1)
        throw ValidationError("run_simulation: weight_seeds_per_config must be >= 1");
    std::size_t depth = 0;
    for (std::size_t v = 1; v < cfg.n; v *= 2) ++depth;
    if ((std::size_t{1} << depth) != cfg.n)
        throw ValidationError("run_simulation: n must be a power of 2");
    for (std::size_t d : cfg.dim_pool)
        if (d < 2) throw ValidationError("run_simulation: dim pool entries must be >= 2");

    const std::uint64_t n_arr = count_arrangements(cfg.dim_pool.size(), depth);
    if (n_arr == 0)
        throw ValidationError("run_simulation: dim pool has fewer entries than layers");
    const BalancedPartitions partitions(cfg.n);

    const std::vector<std::uint64_t> arr_ids =
        sample_ids(n_arr, cfg.arrangements, rng::derive(cfg.master_seed, 0xA11));
    const std::vector<std::uint64_t> part_ids =
        sample_ids(partitions.size(), cfg.partitions, rng::derive(cfg.master_seed, 0xB22));

    // partitions and their matricizations are shared across arrangements
    std::vector<InputPartition> parts;
    parts.reserve(part_ids.size());
    for (std::uint64_t pid : part_ids) parts.push_back(partitions.at(pid));

    SimulationReport report;
    std::vector<std::vector<SimulationRecord>> slots(arr_ids.size());
    std::atomic<std::size_t> next{0};
    std::mutex fail_mutex;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= arr_ids.size()) return;
            try {
                const std::uint64_t aid = arr_ids[slot];
                const std::vector<std::size_t> channels =
                    arrangement_at(cfg.dim_pool, depth, aid);
                ConvACSpec spec;
                spec.n_inputs = cfg.n;
                spec.rep_dim = cfg.m;
                spec.channels = channels;
                spec.n_classes = 1;
                spec.pool_arity = 2;
                spec.kind = DepthKind::deep;

                const AnalysisGraph graph = analysis_graph_for(spec);

                std::vector<DenseTensor> tensors;
                for (std::size_t s = 0; s < cfg.weight_seeds_per_config; ++s) {
                    const std::uint64_t wseed =
                        rng::derive(rng::derive(cfg.master_seed, aid), s);
                    tensors.push_back(weights_tensor(spec, random_weights(spec, wseed),
                                                     1, cfg.size_cap));
                }

                std::vector<SimulationRecord>& out = slots[slot];
                for (std::size_t pi = 0; pi < parts.size(); ++pi) {
                    const InputPartition& p = parts[pi];
                    const BigInt mc = min_cut(graph, p).weight;
                    const BigInt lb = power_of_p_lower_bound(graph, p);
                    const IndexPartition mp = IndexPartition::from_rows(p.a, cfg.n);
                    for (std::size_t s = 0; s < cfg.weight_seeds_per_config; ++s) {
                        const std::size_t rank = numerical_rank(
                            svd_spectrum_precise(matricize(tensors[s], mp)),
                            cfg.rank_tol);
                        SimulationRecord rec;
                        rec.arrangement_id = aid;
                        rec.channels = channels;
                        rec.partition_id = part_ids[pi];
                        rec.partition_mask = p.mask(cfg.n);
                        rec.rank = rank;
                        rec.mincut = mc;
                        rec.lower_bound = lb;
                        rec.ratio = static_cast<double>(rank) / mc.convert_to<double>();
                        rec.deviated = BigInt(rank) < mc;
                        if (BigInt(rank) > mc)
                            throw Error(
                                "run_simulation: rank " + std::to_string(rank) +
                                " exceeds min-cut " + mc.str() + " (arrangement " +
                                std::to_string(aid) + ", partition " +
                                std::to_string(part_ids[pi]) +
                                "); the upper bound must hold for every record");
                        out.push_back(std::move(rec));
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const std::size_t n_threads =
        std::max<std::size_t>(1, std::min(cfg.threads, arr_ids.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::vector<SimulationRecord>& slot : slots)
        for (SimulationRecord& rec : slot) report.records.push_back(std::move(rec));

    for (const SimulationRecord& rec : report.records) {
        if (rec.deviated) ++report.deviation_count;
        report.min_ratio = std::min(report.min_ratio, rec.ratio);
        if (BigInt(rec.rank) < rec.lower_bound) ++report.lower_bound_violations;
    }
    report.max_deviation = 1.0 - report.min_ratio;
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string simulation_csv(const std::vector<SimulationRecord>& records) {
    std::ostringstream os;
    os << "arrangement_id,channels,partition_id,partition_mask,rank,mincut,"
          "lower_bound,ratio,deviated\n";
    for (const SimulationRecord& r : records) {
        os << r.arrangement_id << ',' << join_channels(r.channels) << ','
           << r.partition_id << ',' << r.partition_mask << ',' << r.rank << ','
           << r.mincut.str() << ',' << r.lower_bound.str() << ','
           << format_ratio(r.ratio) << ',' << (r.deviated ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string summary_json(const SimulationReport& report, int indent) {
    json j;
    j["records"] = report.records.size();
    j["deviation_count"] = report.deviation_count;
    j["deviation_fraction"] =
        report.records.empty()
            ? 0.0
            : static_cast<double>(report.deviation_count) /
                  static_cast<double>(report.records.size());
    j["max_deviation"] = report.max_deviation;
    j["min_ratio"] = report.min_ratio;
    j["lower_bound_violations"] = report.lower_bound_violations;
    j["runtime_seconds"] = report.runtime_seconds;
    return j.dump(indent);
}

std::string Advice::to_json(int indent) const {
    json j;
    j["feature_size"] = feature_size;
    j["critical_layer"] = critical_layer;
    j["bounding_channels"] = bounding_channels;
    j["notes"] = notes;
    j["min_cuts"]["left_right"] = left_right_cut.str();
    j["min_cuts"]["interleaved"] = interleaved_cut.str();
    j["min_cuts"]["segment"] = segment_cut.str();
    return j.dump(indent);
}

Advice advise(const ConvACSpec& spec, std::size_t feature_size) {
    spec.check();
    if (spec.kind != DepthKind::deep)
        throw ValidationError("advise: needs a deep spec");
    if (feature_size < 1 || feature_size > spec.n_inputs / 2)
        throw ValidationError("advise: feature size must lie in [1, n/2]");

    Advice adv;
    adv.feature_size = feature_size;
    std::size_t critical = 0;
    while ((std::size_t{1} << critical) < feature_size) ++critical;
    adv.critical_layer = std::min(critical, spec.depth() - 1);
    adv.bounding_channels = bounding_layers(spec, feature_size);

    const AnalysisGraph graph = analysis_graph_for(spec);
    adv.left_right_cut = min_cut(graph, left_right_partition(spec.n_inputs)).weight;
    adv.interleaved_cut = min_cut(graph, interleaved_partition(spec.n_inputs)).weight;
    adv.segment_cut =
        min_cut(graph, segment_partition(spec.n_inputs, feature_size)).weight;

    for (std::size_t l = 0; l < spec.depth(); ++l) {
        std::ostringstream note;
        note << "r_" << l << "=" << spec.channels[l] << ": ";
        if (l <= adv.critical_layer)
            note << "bounds cuts for feature size " << feature_size
                 << "; widening it raises the supported correlations";
        else
            note << "beyond the minimal cut for feature size " << feature_size
                 << "; matters for longer-range partitions";
        adv.notes.push_back(note.str());
    }
    return adv;
}

} // namespace tnarch
