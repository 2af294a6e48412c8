#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tnarch/analysis.hpp"
#include "tnarch/spectrum.hpp"

namespace tnarch {

// Balanced input partitions in canonical form (1 in A), ordered
// lexicographically by the A side, exposed as a lazy random-access sequence
// so that full sweeps and index-based sampling share one id space.
class BalancedPartitions {
public:
    explicit BalancedPartitions(std::size_t n); // n even, n <= 28
    std::uint64_t size() const { return count_; }
    InputPartition at(std::uint64_t index) const;
    std::size_t n() const { return n_; }

private:
    std::size_t n_;
    std::uint64_t count_;
};

std::vector<InputPartition> enumerate_balanced_partitions(std::size_t n);

// Ordered length-k selections without repetition from `pool` (sorted
// ascending), in lexicographic order.
std::uint64_t count_arrangements(std::size_t pool_size, std::size_t length);
std::vector<std::size_t> arrangement_at(const std::vector<std::size_t>& pool,
                                        std::size_t length, std::uint64_t index);

struct Selection {
    bool sample = false;     // false: all
    std::uint64_t count = 0; // used when sample

    static Selection all() { return Selection{}; }
    static Selection take(std::uint64_t k) { return Selection{true, k}; }
};

// Rank threshold for the simulation sweeps, applied to the extended-precision
// spectrum (svd_spectrum_precise). Deep products of normal weights have
// genuine singular values well below 1e-13 relative, overlapping the double
// SVD noise floor, so ranks here come from the long-double decomposition:
// its zeros stay near 1e-17 relative (limited by entry rounding), leaving
// two orders of margin on each side of 1e-15. The general-purpose 1e-7
// default would misclassify whole bands of genuine values as deviations.
constexpr double kSimulationRankTol = 1e-15;

struct SimulationConfig {
    std::size_t n = 16;
    std::size_t m = 2;
    std::vector<std::size_t> dim_pool{2, 3, 5, 7, 11, 13};
    Selection arrangements = Selection::all();
    Selection partitions = Selection::all();
    std::uint64_t master_seed = 1;
    std::size_t weight_seeds_per_config = 1;
    double rank_tol = kSimulationRankTol;
    std::size_t threads = 1;
    std::size_t size_cap = default_size_cap();
};

struct SimulationRecord {
    std::uint64_t arrangement_id = 0;
    std::vector<std::size_t> channels;
    std::uint64_t partition_id = 0;
    std::string partition_mask;
    std::size_t rank = 0;
    BigInt mincut;
    BigInt lower_bound;
    double ratio = 0.0;
    bool deviated = false;
};

struct SimulationReport {
    std::vector<SimulationRecord> records;
    std::uint64_t deviation_count = 0;
    double max_deviation = 0.0; // 1 - min ratio
    double min_ratio = 1.0;
    std::uint64_t lower_bound_violations = 0; // records with rank < lower_bound
    double runtime_seconds = 0.0;
};

// Sweeps channel arrangements x balanced partitions on a deep pool-2 ConvAC,
// comparing the matricization rank of the weights tensor against the min-cut
// upper bound and the power-of-p lower bound. Aborts if any record violates
// rank <= mincut.
SimulationReport run_simulation(const SimulationConfig& cfg);

// Fixed CSV schema; rows ordered by (arrangement_id, partition_id, seed).
std::string simulation_csv(const std::vector<SimulationRecord>& records);
std::string summary_json(const SimulationReport& report, int indent = -1);

struct Advice {
    std::size_t feature_size = 0;
    std::size_t critical_layer = 0;
    std::vector<std::string> bounding_channels;
    std::vector<std::string> notes;
    BigInt left_right_cut;
    BigInt interleaved_cut;
    BigInt segment_cut;

    std::string to_json(int indent = -1) const;
};

// Channel-allocation guidance for a feature scale D: which layers bound the
// relevant min-cuts, with the cut values computed on the actual graph.
Advice advise(const ConvACSpec& spec, std::size_t feature_size);

} // namespace tnarch
