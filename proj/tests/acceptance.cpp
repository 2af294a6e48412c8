// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Each criterion pins its tolerances in code; seeds are fixed so the
// run is reproducible.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "tnarch/analysis.hpp"
#include "tnarch/convac.hpp"
#include "tnarch/simulation.hpp"
#include "tnarch/spectrum.hpp"

using namespace tnarch;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

ConvACSpec make_spec(std::size_t n, std::size_t m, std::vector<std::size_t> channels,
                     DepthKind kind, std::size_t classes = 1, std::size_t pool = 2) {
    ConvACSpec s;
    s.n_inputs = n;
    s.rep_dim = m;
    s.channels = std::move(channels);
    s.n_classes = classes;
    s.pool_arity = pool;
    s.kind = kind;
    s.check();
    return s;
}

// ---------------------------------------------------------------------------
// 1. Equivalence triangle: brute-force score sum == forward recursion ==
//    TN contraction, pairwise relative error <= 1e-9, N in {2,4,8},
//    M in {2,3}, 100 seeds each.
// ---------------------------------------------------------------------------
Outcome criterion1() {
    constexpr double kTol = 1e-9;
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t n : {2, 4, 8}) {
        for (std::size_t m : {2, 3}) {
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                auto gen = oracle::rng_at(1000 * n + 10 * m + seed);
                std::uniform_int_distribution<std::size_t> ch(1, 4);
                std::size_t L = 0;
                while ((std::size_t{1} << L) < n) ++L;
                std::vector<std::size_t> channels;
                for (std::size_t l = 0; l < L; ++l) channels.push_back(ch(gen));
                const bool shallow = seed % 3 == 2; // mix both families
                const ConvACSpec spec =
                    shallow ? make_spec(n, m, {ch(gen)}, DepthKind::shallow)
                            : make_spec(n, m, channels, DepthKind::deep);
                const WeightSet w = random_weights(spec, seed);

                RepresentationInput in;
                std::normal_distribution<double> normal;
                for (std::size_t j = 0; j < n; ++j) {
                    std::vector<double> v(m);
                    for (double& e : v) e = normal(gen);
                    in.x.push_back(std::move(v));
                }

                const double brute = oracle::convac_score(spec, w, in, 1);
                const double fwd = forward(spec, w, in)[0];
                const DenseTensor scores =
                    contract(oracle::attach_inputs(build_tn(spec, w), in));
                const double tn = scores.data[0];

                worst = std::max({worst, rel_err(brute, fwd), rel_err(fwd, tn),
                                  rel_err(brute, tn)});
                ++checked;
            }
        }
    }
    Outcome out;
    out.pass = worst <= kTol;
    std::ostringstream os;
    os << checked << " configs, worst pairwise relative error " << worst;
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 2. Upper bound: rank <= min-cut on every balanced partition, N in {4,8},
//    20 seeds, zero violations.
// ---------------------------------------------------------------------------
Outcome criterion2() {
    std::size_t records = 0, violations = 0;
    for (std::size_t n : {4, 8}) {
        const auto partitions = enumerate_balanced_partitions(n);
        std::size_t L = 0;
        while ((std::size_t{1} << L) < n) ++L;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto gen = oracle::rng_at(4000 + 100 * n + seed);
            std::uniform_int_distribution<std::size_t> ch(2, 6);
            std::vector<std::size_t> channels;
            for (std::size_t l = 0; l < L; ++l) channels.push_back(ch(gen));
            const ConvACSpec spec = make_spec(n, 2, channels, DepthKind::deep);
            const AnalysisGraph g = analysis_graph_for(spec);
            const DenseTensor a = weights_tensor(spec, random_weights(spec, seed), 1);
            for (const InputPartition& p : partitions) {
                const auto rank = numerical_rank(
                    svd_spectrum_precise(matricize(a, IndexPartition::from_rows(p.a, n))),
                    kSimulationRankTol);
                if (BigInt(rank) > min_cut(g, p).weight) ++violations;
                ++records;
            }
        }
    }
    Outcome out;
    out.pass = violations == 0;
    std::ostringstream os;
    os << records << " records, " << violations << " violations of rank <= min-cut";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 3. Bound tightness: all dimensions powers of 2 at N=8, M=2:
//    rank == min-cut in >= 99% of 200 records.
// ---------------------------------------------------------------------------
Outcome criterion3() {
    const std::vector<std::size_t> pool{2, 4, 8};
    const auto partitions = enumerate_balanced_partitions(8);
    std::size_t equal = 0;
    const std::size_t total = 200;
    for (std::uint64_t seed = 0; seed < total; ++seed) {
        auto gen = oracle::rng_at(5000 + seed);
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::vector<std::size_t> channels{pool[pick(gen)], pool[pick(gen)],
                                                pool[pick(gen)]};
        const ConvACSpec spec = make_spec(8, 2, channels, DepthKind::deep);
        const AnalysisGraph g = analysis_graph_for(spec);
        const InputPartition& p =
            partitions[gen() % partitions.size()];
        const DenseTensor a = weights_tensor(spec, random_weights(spec, seed), 1);
        const auto rank = numerical_rank(
            svd_spectrum_precise(matricize(a, IndexPartition::from_rows(p.a, 8))),
            kSimulationRankTol);
        if (BigInt(rank) == min_cut(g, p).weight) ++equal;
    }
    Outcome out;
    out.pass = 100.0 * static_cast<double>(equal) >=
               99.0 * static_cast<double>(total);
    std::ostringstream os;
    os << equal << "/" << total << " records reach the upper bound";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 4. Desk-scale sweep: N=16, M=2, dims from the first 6 primes, 50 sampled
//    arrangements x 500 sampled balanced partitions; deviation fraction <= 1%
//    and every deviating record has rank >= 0.9 * min-cut.
// ---------------------------------------------------------------------------
Outcome criterion4() {
    SimulationConfig cfg;
    cfg.n = 16;
    cfg.m = 2;
    cfg.dim_pool = {2, 3, 5, 7, 11, 13};
    cfg.arrangements = Selection::take(50);
    cfg.partitions = Selection::take(500);
    cfg.master_seed = 1;
    cfg.threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());

    const SimulationReport rep = run_simulation(cfg);
    const double fraction =
        static_cast<double>(rep.deviation_count) /
        static_cast<double>(rep.records.size());

    Outcome out;
    out.pass = rep.records.size() == 25000 && fraction <= 0.01 &&
               rep.min_ratio >= 0.9 && rep.runtime_seconds < 3600.0;
    std::ostringstream os;
    os << rep.records.size() << " records, deviation fraction " << fraction
       << ", min ratio " << rep.min_ratio << ", " << rep.lower_bound_violations
       << " lower-bound flags, " << rep.runtime_seconds << "s with " << cfg.threads
       << " workers";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 5. Closed forms equal the flow computations exactly: left-right on the
//    binary tree (N in {8,16}), shallow on the star, interleaved on the
//    quad-tree checkerboard (N=16).
// ---------------------------------------------------------------------------
Outcome criterion5() {
    std::size_t checked = 0, mismatches = 0;
    auto gen = oracle::rng_at(6000);
    std::uniform_int_distribution<std::size_t> ch(2, 13);
    for (std::size_t n : {8, 16}) {
        std::size_t L = 0;
        while ((std::size_t{1} << L) < n) ++L;
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::size_t> channels;
            for (std::size_t l = 0; l < L; ++l) channels.push_back(ch(gen));
            const ConvACSpec deep = make_spec(n, 2, channels, DepthKind::deep);
            if (closed_form(deep, ClosedFormKind::left_right) !=
                min_cut(analysis_graph_for(deep), left_right_partition(n)).weight)
                ++mismatches;
            ++checked;

            const std::size_t k = ch(gen);
            const ConvACSpec shallow = make_spec(n, 2, {k}, DepthKind::shallow);
            const AnalysisGraph gs = analysis_graph_for(shallow);
            std::vector<std::size_t> a;
            for (std::size_t j = 1; j <= n / 2; ++j) a.push_back(j);
            if (closed_form(shallow, ClosedFormKind::shallow, n / 2) !=
                modified_min_cut(gs, InputPartition::from_a(a, n)).weight)
                ++mismatches;
            ++checked;
        }
    }
    for (int trial = 0; trial < 20; ++trial) {
        const ConvACSpec quad =
            make_spec(16, 2, {ch(gen), ch(gen)}, DepthKind::deep, 1, 4);
        if (closed_form(quad, ClosedFormKind::interleaved) !=
            modified_min_cut(analysis_graph_for(quad), checkerboard_partition(16))
                .weight)
            ++mismatches;
        ++checked;
    }
    Outcome out;
    out.pass = mismatches == 0;
    std::ostringstream os;
    os << checked << " closed-form comparisons, " << mismatches << " mismatches";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 6. Depth efficiency at N=8, M=2: the computed interleaved min-cut of the
//    deep r0=2 network is 16, the shallow k=4 value follows
//    min(M^min(|A|,|B|), k) = 4 exactly, and shallow < deep.
// ---------------------------------------------------------------------------
Outcome criterion6() {
    const ConvACSpec deep = make_spec(8, 2, {2, 4, 4}, DepthKind::deep);
    const BigInt deep_cut =
        min_cut(analysis_graph_for(deep), interleaved_partition(8)).weight;

    const ConvACSpec shallow = make_spec(8, 2, {4}, DepthKind::shallow);
    const BigInt shallow_cut =
        modified_min_cut(analysis_graph_for(shallow), interleaved_partition(8)).weight;
    const BigInt shallow_formula = closed_form(shallow, ClosedFormKind::shallow, 4);

    Outcome out;
    out.pass = deep_cut == 16 && shallow_cut == 4 && shallow_formula == shallow_cut &&
               shallow_cut < deep_cut;
    std::ostringstream os;
    os << "deep interleaved cut " << deep_cut.str() << ", shallow cut "
       << shallow_cut.str() << " (formula " << shallow_formula.str() << ")";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 7. Flow equals exhaustive cut enumeration on every test graph with <= 20
//    edges, for both plain and modified weights.
// ---------------------------------------------------------------------------
Outcome criterion7() {
    std::vector<AnalysisGraph> graphs;
    auto gen = oracle::rng_at(7000);
    std::uniform_int_distribution<std::size_t> ch(2, 9);
    for (int trial = 0; trial < 3; ++trial)
        graphs.push_back(
            analysis_graph_for(make_spec(4, 2, {ch(gen), ch(gen)}, DepthKind::deep)));
    for (std::size_t n : {4, 5, 6})
        graphs.push_back(analysis_graph_for(make_spec(n, 2, {ch(gen)}, DepthKind::shallow)));
    graphs.push_back(
        analysis_graph_for(make_spec(4, 3, {ch(gen)}, DepthKind::deep, 1, 4)));

    std::size_t checked = 0, mismatches = 0;
    for (const AnalysisGraph& g : graphs) {
        if (g.edges.size() > 20) return Outcome{false, "test graph exceeds 20 edges"};
        const std::size_t n = g.n_inputs;
        for (std::size_t bits = 0; bits + 1 < (std::size_t{1} << (n - 1)); ++bits) {
            std::vector<std::size_t> a{1};
            for (std::size_t j = 0; j + 1 < n; ++j)
                if (bits & (std::size_t{1} << j)) a.push_back(j + 2);
            if (a.size() == n) continue;
            const InputPartition p = InputPartition::from_a(a, n);
            if (min_cut(g, p).weight != min_cut_exhaustive(g, p, false).weight)
                ++mismatches;
            if (modified_min_cut(g, p).weight !=
                min_cut_exhaustive(g, p, true).weight)
                ++mismatches;
            checked += 2;
        }
    }
    Outcome out;
    out.pass = mismatches == 0;
    std::ostringstream os;
    os << checked << " flow-vs-enumeration comparisons, " << mismatches
       << " mismatches";
    out.detail = os.str();
    return out;
}

// ---------------------------------------------------------------------------
// 8. Entanglement measures: maximally mixed spectra give entropy ln r within
//    1e-12; 100 random rank-1 constructions give entropy 0, geometric 0,
//    schmidt 1.
// ---------------------------------------------------------------------------
Outcome criterion8() {
    std::size_t failures = 0;
    for (std::size_t r = 2; r <= 32; ++r) {
        const SingularSpectrum s{std::vector<double>(r, 1.0 / std::sqrt(double(r)))};
        const EntanglementReport rep = entanglement_measures(s);
        if (std::abs(rep.entropy - std::log(static_cast<double>(r))) > 1e-12)
            ++failures;
    }
    auto gen = oracle::rng_at(8000);
    std::uniform_int_distribution<std::size_t> order(2, 5), dim(2, 3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = order(gen), m = dim(gen);
        std::vector<DenseTensor> vs;
        for (std::size_t j = 0; j < n; ++j) {
            DenseTensor v = oracle::random_tensor({m}, gen);
            bool zero = true;
            for (double x : v.data) zero &= x == 0.0;
            if (zero) v.data[0] = 1.0;
            vs.push_back(std::move(v));
        }
        std::vector<std::size_t> rows{1};
        for (std::size_t j = 2; j <= n; ++j)
            if (gen() % 2) rows.push_back(j);
        if (rows.size() == n) rows.pop_back();
        const auto s = svd_spectrum(
            matricize(rank1_from_vectors(vs), IndexPartition::from_rows(rows, n)));
        const EntanglementReport rep = entanglement_measures(s);
        if (rep.schmidt != 1 || rep.entropy > 1e-12 || rep.geometric > 1e-6)
            ++failures;
    }
    Outcome out;
    out.pass = failures == 0;
    std::ostringstream os;
    os << "31 mixed spectra + 100 rank-1 constructions, " << failures << " failures";
    out.detail = os.str();
    return out;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"equivalence triangle (score sum / forward / contraction)", criterion1},
        {"min-cut upper bound on all balanced partitions", criterion2},
        {"bound tightness for power-of-2 dimensions", criterion3},
        {"desk-scale rank-vs-min-cut sweep (N=16, 25000 records)", criterion4},
        {"closed forms equal flow results", criterion5},
        {"depth efficiency at fixed width", criterion6},
        {"flow equals exhaustive enumeration (<= 20 edges)", criterion7},
        {"entanglement measures on mixed and separable states", criterion8},
    };

    bool all_pass = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("[%s] criterion %zu: %s — %s (%.1fs)\n",
                    out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        all_pass &= out.pass;
    }
    return all_pass ? 0 : 1;
}
