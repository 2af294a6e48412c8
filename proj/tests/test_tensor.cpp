#include "doctest.h"

#include <algorithm>

#include "oracles.hpp"
#include "tnarch/tensor.hpp"

using namespace tnarch;

TEST_SUITE_BEGIN("tensor");

TEST_CASE("tensor product of two vectors is the outer product") {
    const DenseTensor a({2}, {1, 2});
    const DenseTensor b({2}, {3, 4});
    const DenseTensor c = tensor_product(a, b);
    CHECK(c.shape == std::vector<std::size_t>{2, 2});
    CHECK(c.data == std::vector<double>{3, 4, 6, 8});
}

TEST_CASE("tensor product with a length-1 factor scales the other factor") {
    const DenseTensor a({1}, {2.5});
    const DenseTensor b({2, 2}, {1, 2, 3, 4});
    const DenseTensor c = tensor_product(a, b);
    CHECK(c.shape == std::vector<std::size_t>{1, 2, 2});
    for (std::size_t i = 0; i < b.data.size(); ++i)
        CHECK(c.data[i] == 2.5 * b.data[i]);
}

TEST_CASE("tensor product equals the nested-loop oracle") {
    auto gen = oracle::rng_at(11);
    const DenseTensor a = oracle::random_tensor({2, 3}, gen);
    const DenseTensor b = oracle::random_tensor({2}, gen);
    const DenseTensor got = tensor_product(a, b);
    const DenseTensor want = oracle::tensor_product(a, b);
    REQUIRE(got.shape == want.shape);
    for (std::size_t i = 0; i < want.data.size(); ++i)
        CHECK(got.data[i] == want.data[i]);
}

TEST_CASE("tensor product oracle agreement, random shapes up to 256 entries") {
    auto gen = oracle::rng_at(12);
    std::uniform_int_distribution<std::size_t> dim(1, 4), order(1, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> sa(order(gen)), sb(order(gen));
        for (auto& d : sa) d = dim(gen);
        for (auto& d : sb) d = dim(gen);
        const DenseTensor a = oracle::random_tensor(sa, gen);
        const DenseTensor b = oracle::random_tensor(sb, gen);
        if (a.size() * b.size() > 256) continue;
        const DenseTensor got = tensor_product(a, b);
        const DenseTensor want = oracle::tensor_product(a, b);
        REQUIRE(got.shape == want.shape);
        CHECK(got.data == want.data);
    }
}

TEST_CASE("tensor product respects the size cap") {
    const DenseTensor a({4, 4}, std::vector<double>(16, 1.0));
    CHECK_THROWS_AS(tensor_product(a, a, /*cap=*/100), SizeLimitError);
}

TEST_CASE("rank1_from_vectors basic values") {
    CHECK(rank1_from_vectors({DenseTensor({2}, {1, 0}), DenseTensor({2}, {1, 0})}).data ==
          std::vector<double>{1, 0, 0, 0});
    CHECK(rank1_from_vectors({DenseTensor({2}, {1, 2}), DenseTensor({2}, {3, 4})}).data ==
          std::vector<double>{3, 4, 6, 8});
    CHECK_THROWS_AS(rank1_from_vectors({}), ValidationError);
    CHECK_THROWS_AS(rank1_from_vectors({DenseTensor({2, 2}, {1, 2, 3, 4})}),
                    ValidationError);
}

TEST_CASE("matricize places entries by the row/column index formula") {
    // order-3 tensor, entries 0..7 in row-major order, I={1,3}, J={2}
    DenseTensor a({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
    const DenseTensor m = matricize(a, IndexPartition({1, 3}, {2}));
    CHECK(m.shape == std::vector<std::size_t>{4, 2});
    CHECK(m.data == std::vector<double>{0, 2, 1, 3, 4, 6, 5, 7});
}

TEST_CASE("matricize of an order-2 tensor with the identity partition") {
    auto gen = oracle::rng_at(13);
    const DenseTensor a = oracle::random_tensor({3, 4}, gen);
    const DenseTensor m = matricize(a, IndexPartition({1}, {2}));
    CHECK(m.shape == a.shape);
    CHECK(m.data == a.data);
}

TEST_CASE("matricize is a bijection on entries and dematricize inverts it") {
    auto gen = oracle::rng_at(14);
    std::uniform_int_distribution<std::size_t> dim(1, 4), order(2, 4);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<std::size_t> shape(order(gen));
        for (auto& d : shape) d = dim(gen);
        const DenseTensor a = oracle::random_tensor(shape, gen);

        std::vector<std::size_t> rows;
        for (std::size_t mmode = 1; mmode <= shape.size(); ++mmode)
            if (coin(gen)) rows.push_back(mmode);
        const IndexPartition p = IndexPartition::from_rows(rows, shape.size());

        const DenseTensor m = matricize(a, p);
        REQUIRE(m.size() == a.size());
        std::vector<double> sa = a.data, sm = m.data;
        std::sort(sa.begin(), sa.end());
        std::sort(sm.begin(), sm.end());
        CHECK(sa == sm); // multiset of entries preserved

        const DenseTensor back = dematricize(m, p, a.shape);
        CHECK(back.shape == a.shape);
        CHECK(back.data == a.data); // bit-exact round trip
    }
}

TEST_CASE("matricize rejects bad partitions") {
    DenseTensor a({2, 2, 2}, std::vector<double>(8, 0.0));
    CHECK_THROWS_AS(matricize(a, IndexPartition({1}, {2})), ValidationError);
    CHECK_THROWS_AS(IndexPartition({1, 2}, {2, 3}), ValidationError);
    CHECK_THROWS_AS(IndexPartition({2, 1}, {3}), ValidationError);
}

TEST_CASE("DenseTensor invariants") {
    CHECK_THROWS_AS(DenseTensor({}, {}), ValidationError);
    CHECK_THROWS_AS(DenseTensor({2, 0}, {}), ValidationError);
    CHECK_THROWS_AS(DenseTensor({2, 2}, {1.0}), ValidationError);
}

TEST_SUITE_END();
