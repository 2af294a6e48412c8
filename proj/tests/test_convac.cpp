#include "doctest.h"

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tnarch/convac.hpp"
#include "tnarch/spectrum.hpp"

using namespace tnarch;

namespace {

ConvACSpec deep_spec(std::size_t n, std::size_t m, std::vector<std::size_t> channels,
                     std::size_t classes = 1, std::size_t pool = 2) {
    ConvACSpec s;
    s.n_inputs = n;
    s.rep_dim = m;
    s.channels = std::move(channels);
    s.n_classes = classes;
    s.pool_arity = pool;
    s.kind = DepthKind::deep;
    s.check();
    return s;
}

ConvACSpec shallow_spec(std::size_t n, std::size_t m, std::size_t k,
                        std::size_t classes = 1) {
    ConvACSpec s;
    s.n_inputs = n;
    s.rep_dim = m;
    s.channels = {k};
    s.n_classes = classes;
    s.kind = DepthKind::shallow;
    s.check();
    return s;
}

RepresentationInput random_input(const ConvACSpec& spec, std::uint64_t seed) {
    auto gen = oracle::rng_at(seed);
    std::normal_distribution<double> normal;
    RepresentationInput in;
    for (std::size_t j = 0; j < spec.n_inputs; ++j) {
        std::vector<double> v(spec.rep_dim);
        for (double& e : v) e = normal(gen);
        in.x.push_back(std::move(v));
    }
    return in;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

} // namespace

TEST_SUITE_BEGIN("convac");

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(deep_spec(6, 2, {2, 2}), ValidationError); // 6 != 2^2
    CHECK_THROWS_AS(deep_spec(4, 2, {}), ValidationError);
    CHECK_NOTHROW(deep_spec(16, 2, {2, 3, 5, 7}));
    CHECK_NOTHROW(deep_spec(16, 2, {3, 5}, 1, 4)); // quad tree
    ConvACSpec s = shallow_spec(6, 2, 4);
    s.channels = {4, 4};
    CHECK_THROWS_AS(s.check(), ValidationError);
}

TEST_CASE("spec JSON round trip matches the documented schema") {
    const ConvACSpec s = deep_spec(16, 2, {2, 3, 5, 7});
    const std::string text = s.to_json();
    CHECK(text ==
          R"({"channels":[2,3,5,7],"classes":1,"kind":"deep","m":2,"n":16,"pool":2})");
    const ConvACSpec back = ConvACSpec::from_json(text);
    CHECK(back.to_json() == text);
    CHECK_THROWS_AS(ConvACSpec::from_json("{\"n\":4}"), ValidationError);
}

TEST_CASE("random_weights is reproducible and seed-sensitive") {
    const ConvACSpec s = deep_spec(8, 2, {2, 3, 4});
    const WeightSet a = random_weights(s, 42);
    const WeightSet b = random_weights(s, 42);
    CHECK(a.to_json() == b.to_json()); // bit-identical
    const WeightSet c = random_weights(s, 43);
    CHECK(a.to_json() != c.to_json());

    const WeightSet back = WeightSet::from_json(a.to_json());
    CHECK(back.to_json() == a.to_json());
}

TEST_CASE("random_weights entries look standard normal") {
    // one layer of 2 matrices of 250x200 gives 10^5 entries
    const ConvACSpec s = shallow_spec(2, 200, 250);
    const WeightSet w = random_weights(s, 7);
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto& layer : w.layers)
        for (const DenseTensor& m : layer)
            for (double v : m.data) {
                sum += v;
                sum_sq += v * v;
                ++n;
            }
    REQUIRE(n == 100000);
    const double mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - mean * mean;
    // 3 sigma: sd(mean) = 1/sqrt(n), sd(var) ~ sqrt(2/n)
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("shallow N=2 K=1 weights tensor is a single outer product") {
    const ConvACSpec s = shallow_spec(2, 2, 1);
    const WeightSet w = random_weights(s, 5);
    const DenseTensor a = weights_tensor(s, w, 1);
    const double v1 = w.output.data[0];
    for (std::size_t d1 = 0; d1 < 2; ++d1)
        for (std::size_t d2 = 0; d2 < 2; ++d2)
            CHECK(a.at({d1, d2}) ==
                  doctest::Approx(v1 * w.layers[0][0].at({0, d1}) *
                                  w.layers[0][1].at({0, d2}))
                      .epsilon(1e-12));
}

TEST_CASE("shallow N=2 contraction equals the explicit CP sum") {
    const ConvACSpec s = shallow_spec(2, 2, 2);
    const WeightSet w = random_weights(s, 6);
    const DenseTensor a = weights_tensor(s, w, 1);
    for (std::size_t d1 = 0; d1 < 2; ++d1)
        for (std::size_t d2 = 0; d2 < 2; ++d2) {
            double want = 0.0;
            for (std::size_t k = 0; k < 2; ++k)
                want += w.output.at({0, k}) * w.layers[0][0].at({k, d1}) *
                        w.layers[0][1].at({k, d2});
            CHECK(rel_err(a.at({d1, d2}), want) < 1e-12);
        }
}

TEST_CASE("shallow matricization rank is at most min(K, M^min(|A|,|B|))") {
    for (std::size_t n : {4, 6}) {
        for (std::size_t k : {1, 2, 3}) {
            const ConvACSpec s = shallow_spec(n, 2, k);
            const DenseTensor a = weights_tensor(s, random_weights(s, 100 + k), 1);
            for (std::size_t bits = 1; bits + 1 < (std::size_t{1} << n); ++bits) {
                std::vector<std::size_t> rows;
                for (std::size_t j = 0; j < n; ++j)
                    if (bits & (std::size_t{1} << j)) rows.push_back(j + 1);
                const std::size_t small = std::min(rows.size(), n - rows.size());
                const std::size_t bound =
                    std::min(k, std::size_t{1} << small); // M = 2
                const auto spec =
                    svd_spectrum(matricize(a, IndexPartition::from_rows(rows, n)));
                CHECK(numerical_rank(spec) <= bound);
            }
        }
    }
}

TEST_CASE("deep N=4 network census and bond dimensions") {
    const ConvACSpec s = deep_spec(4, 2, {3, 5}, 7);
    const ConvACNetwork net = build_deep_tn(s, random_weights(s, 1));
    REQUIRE(validate(net.tn).empty());

    std::size_t a0 = 0, d0 = 0, a1 = 0, d1 = 0, g = 0;
    for (const TNode& node : net.tn.nodes) {
        if (node.is_delta()) {
            if (node.delta().dim == 3) ++d0;
            if (node.delta().dim == 5) ++d1;
        } else if (node.dense().shape == std::vector<std::size_t>{3, 2}) {
            ++a0;
        } else if (node.dense().shape == std::vector<std::size_t>{5, 3}) {
            ++a1;
        } else if (node.dense().shape == std::vector<std::size_t>{7, 5}) {
            ++g;
        }
    }
    CHECK(a0 == 4);
    CHECK(d0 == 2);
    CHECK(a1 == 2);
    CHECK(d1 == 1);
    CHECK(g == 1);
    CHECK(net.tn.nodes.size() == 10);

    // bond dimensions along the tree: 4x M, 4+2x r0, 2+1x r1, 1x Y
    std::multiset<std::size_t> dims;
    for (const TEdge& e : net.tn.edges) dims.insert(e.bond);
    CHECK(dims == std::multiset<std::size_t>{2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 5, 5, 5, 7});

    // tree shape: internal edges = nodes - 1, open edges dangle
    std::size_t internal = 0;
    for (const TEdge& e : net.tn.edges)
        if (!e.is_open()) ++internal;
    CHECK(internal == net.tn.nodes.size() - 1);
}

TEST_CASE("deep contraction equals the recursion oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ConvACSpec s = deep_spec(4, 2, {2, 3}, 2);
        const WeightSet w = random_weights(s, seed);
        for (std::size_t y = 1; y <= 2; ++y) {
            const DenseTensor got = weights_tensor(s, w, y);
            const DenseTensor want = oracle::ht_weights_tensor(s, w, y);
            REQUIRE(got.shape == want.shape);
            for (std::size_t f = 0; f < got.data.size(); ++f)
                CHECK(rel_err(got.data[f], want.data[f]) < 1e-9);
        }
    }
}

TEST_CASE("quad-tree builder validates and matches the recursion oracle") {
    const ConvACSpec s = deep_spec(16, 2, {2, 3}, 1, 4);
    const WeightSet w = random_weights(s, 3);
    const ConvACNetwork net = build_deep_tn(s, w);
    REQUIRE(validate(net.tn).empty());
    const DenseTensor got = weights_tensor(s, w, 1);
    const DenseTensor want = oracle::ht_weights_tensor(s, w, 1);
    REQUIRE(got.shape == want.shape);
    double max_rel = 0.0;
    for (std::size_t f = 0; f < got.data.size(); ++f)
        max_rel = std::max(max_rel, rel_err(got.data[f], want.data[f]));
    CHECK(max_rel < 1e-9);
}

TEST_CASE("builder output validates across randomized specs") {
    auto gen = oracle::rng_at(62);
    std::uniform_int_distribution<std::size_t> ch(1, 5), cls(1, 3), lvl(1, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t L = lvl(gen);
        std::vector<std::size_t> channels;
        for (std::size_t l = 0; l < L; ++l) channels.push_back(ch(gen));
        const ConvACSpec s =
            deep_spec(std::size_t{1} << L, ch(gen), channels, cls(gen));
        CHECK(validate(build_deep_tn(s, random_weights(s, trial)).tn).empty());

        const ConvACSpec sh = shallow_spec(2 + trial % 5, ch(gen), ch(gen), cls(gen));
        CHECK(validate(build_shallow_tn(sh, random_weights(sh, trial)).tn).empty());
    }
}

TEST_CASE("degenerate all-ones network multiplies its two inputs") {
    ConvACSpec s = deep_spec(2, 1, {1});
    WeightSet w;
    w.layers = {{DenseTensor({1, 1}, {1.0}), DenseTensor({1, 1}, {1.0})}};
    w.output = DenseTensor({1, 1}, {1.0});
    RepresentationInput in;
    in.x = {{3.0}, {4.0}};
    const std::vector<double> h = forward(s, w, in);
    REQUIRE(h.size() == 1);
    CHECK(h[0] == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("forward equals the brute-force score sum and the attached-input TN") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ConvACSpec s = deep_spec(4, 3, {2, 4}, 2);
        const WeightSet w = random_weights(s, seed);
        const RepresentationInput in = random_input(s, 1000 + seed);

        const std::vector<double> h = forward(s, w, in);
        REQUIRE(h.size() == 2);
        for (std::size_t y = 1; y <= 2; ++y) {
            const double brute = oracle::convac_score(s, w, in, y);
            CHECK(rel_err(h[y - 1], brute) < 1e-9);
        }
        const TensorNetwork full = oracle::attach_inputs(build_deep_tn(s, w), in);
        REQUIRE(validate(full).empty());
        const DenseTensor scores = contract(full);
        REQUIRE(scores.shape == std::vector<std::size_t>{2});
        for (std::size_t y = 0; y < 2; ++y) CHECK(rel_err(scores.data[y], h[y]) < 1e-9);
    }
}

TEST_CASE("score_inner_product on rank-1 tensors and zeros") {
    const DenseTensor u({2}, {1, 2});
    const DenseTensor v({3}, {3, 4, 5});
    const DenseTensor a = rank1_from_vectors({u, v});
    RepresentationInput in;
    in.x = {{1, 2}, {3, 4, 5}};
    CHECK(score_inner_product(a, in) == doctest::Approx(5.0 * 50.0).epsilon(1e-12));

    const DenseTensor zeros = DenseTensor::zeros({2, 3});
    CHECK(score_inner_product(zeros, in) == 0.0);

    RepresentationInput bad;
    bad.x = {{1, 2}};
    CHECK_THROWS_AS(score_inner_product(a, bad), ValidationError);
}

TEST_CASE("score_inner_product of the weights tensor equals the forward score") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ConvACSpec s = deep_spec(8, 2, {2, 3, 2}, 3);
        const WeightSet w = random_weights(s, seed);
        const RepresentationInput in = random_input(s, 2000 + seed);
        const std::vector<double> h = forward(s, w, in);
        for (std::size_t y = 1; y <= 3; ++y) {
            const double got = score_inner_product(weights_tensor(s, w, y), in);
            CHECK(rel_err(got, h[y - 1]) < 1e-9);
        }
    }
}

TEST_CASE("deep N=16 M=2 weights tensor has 65536 entries") {
    const ConvACSpec s = deep_spec(16, 2, {2, 3, 5, 7});
    const DenseTensor a = weights_tensor(s, random_weights(s, 1), 1);
    CHECK(a.size() == 65536);
    CHECK(a.shape == std::vector<std::size_t>(16, 2));
}

TEST_CASE("identical spec and seed give bit-identical TN serializations") {
    const ConvACSpec s = deep_spec(8, 2, {2, 3, 4}, 2);
    const std::string t1 =
        network_to_json(build_deep_tn(s, random_weights(s, 9)).tn);
    const std::string t2 =
        network_to_json(build_deep_tn(s, random_weights(s, 9)).tn);
    CHECK(t1 == t2);
}

TEST_CASE("weights_tensor respects the size cap and class range") {
    const ConvACSpec s = deep_spec(16, 2, {2, 2, 2, 2});
    const WeightSet w = random_weights(s, 1);
    CHECK_THROWS_AS(weights_tensor(s, w, 1, /*cap=*/1000), SizeLimitError);
    CHECK_THROWS_AS(weights_tensor(s, w, 5), ValidationError);
}

TEST_CASE("representation input JSON round trip") {
    RepresentationInput in;
    in.x = {{1.0, 2.0}, {3.0, 4.0}};
    CHECK(in.to_json() == R"({"x":[[1.0,2.0],[3.0,4.0]]})");
    CHECK(RepresentationInput::from_json(in.to_json()).x == in.x);
}

TEST_SUITE_END();
