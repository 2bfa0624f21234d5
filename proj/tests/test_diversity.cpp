#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <array>

using namespace simdiv;
using namespace testsupport;

namespace {
const std::array<Order, 8> kOrderGrid = {-order::infinity, -2.0, 0.0, 0.5,
                                         1.0, 2.0, 5.0, order::infinity};
}

TEST_CASE("hill numbers match hand values", "[diversity]") {
    SECTION("uniform distribution gives n at every order") {
        auto p = Abundance::uniform(7);
        for (Order q : kOrderGrid) {
            CHECK(hill_number(p, q).value == Catch::Approx(7.0).epsilon(1e-12));
        }
    }
    SECTION("a single support point gives 1") {
        Vector v(3);
        v << 1.0, 0.0, 0.0;
        auto p = Abundance(v);
        for (Order q : kOrderGrid) {
            CHECK(hill_number(p, q).value == Catch::Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("q=2 on (1/2, 1/4, 1/4)") {
        Vector v(3);
        v << 0.5, 0.25, 0.25;
        CHECK(hill_number(Abundance(v), 2.0).value ==
              Catch::Approx(8.0 / 3.0).epsilon(1e-12));
    }
    SECTION("extreme orders are the inverse extreme frequencies") {
        Vector v(3);
        v << 0.6, 0.3, 0.1;
        auto p = Abundance(v);
        CHECK(hill_number(p, order::infinity).value ==
              Catch::Approx(1.0 / 0.6).epsilon(1e-12));
        CHECK(hill_number(p, -order::infinity).value ==
              Catch::Approx(10.0).epsilon(1e-12));
    }
}

TEST_CASE("hill numbers agree with the direct power-sum oracle", "[diversity]") {
    Rng rng(101);
    for (int trial = 0; trial < 40; ++trial) {
        auto p = random_abundance(rng, 2 + static_cast<Index>(rng.below(20)),
                                  trial % 2 == 1);
        for (Order q : {-order::infinity, -3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.5,
                        10.0, order::infinity}) {
            const double expected = oracle_hill(p.vector(), q);
            CHECK(rel_diff(hill_number(p, q).value, expected) < 1e-11);
        }
    }
}

TEST_CASE("ordinariness is the similarity-weighted frequency", "[diversity]") {
    SECTION("identity leaves p unchanged") {
        Vector v(3);
        v << 0.5, 0.3, 0.2;
        auto p = Abundance(v);
        auto z = SimilarityMatrix::adopt(Matrix::Identity(3, 3));
        CHECK((ordinariness(p, z) - v).norm() == 0.0);
    }
    SECTION("all-ones makes every element fully ordinary") {
        auto p = Abundance::uniform(4);
        auto z = SimilarityMatrix::adopt(Matrix::Ones(4, 4));
        auto zp = ordinariness(p, z);
        for (Index i = 0; i < 4; ++i) {
            CHECK(zp(i) == Catch::Approx(1.0).epsilon(1e-14));
        }
    }
    SECTION("2x2 at similarity one half") {
        Matrix z(2, 2);
        z << 1.0, 0.5, 0.5, 1.0;
        auto zp = ordinariness(Abundance::uniform(2), SimilarityMatrix::adopt(z));
        CHECK(zp(0) == Catch::Approx(0.75).epsilon(1e-15));
        CHECK(zp(1) == Catch::Approx(0.75).epsilon(1e-15));
    }
    SECTION("dimension mismatch is rejected") {
        auto z = SimilarityMatrix::adopt(Matrix::Identity(3, 3));
        CHECK_THROWS_AS(ordinariness(Abundance::uniform(2), z), Error);
    }
    SECTION("p_i <= (Zp)_i <= 1 on the support") {
        Rng rng(102);
        for (int trial = 0; trial < 20; ++trial) {
            const int m = 3 + static_cast<int>(rng.below(10));
            auto z = random_gram(rng, m, 2 + static_cast<int>(rng.below(3)));
            auto p = random_abundance(rng, m);
            auto zp = ordinariness(p, z);
            for (Index i = 0; i < m; ++i) {
                CHECK(zp(i) >= p[i] - 1e-14);
                CHECK(zp(i) <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("similarity diversity matches hand values", "[diversity]") {
    Matrix half(2, 2);
    half << 1.0, 0.5, 0.5, 1.0;
    auto z_half = SimilarityMatrix::adopt(half);
    auto uniform2 = Abundance::uniform(2);

    SECTION("all-ones collapses to a single effective element") {
        auto z = SimilarityMatrix::adopt(Matrix::Ones(3, 3));
        auto p = Abundance::uniform(3);
        for (Order q : kOrderGrid) {
            CHECK(lcr_diversity(p, z, q).value == Catch::Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("2x2 similarity one half at q=1 and q=2") {
        CHECK(lcr_diversity(uniform2, z_half, 1.0).value ==
              Catch::Approx(4.0 / 3.0).epsilon(1e-12));
        CHECK(lcr_diversity(uniform2, z_half, 2.0).value ==
              Catch::Approx(4.0 / 3.0).epsilon(1e-12));
    }
    SECTION("identity similarity reduces to the hill number") {
        Rng rng(103);
        for (int trial = 0; trial < 25; ++trial) {
            const Index m = 2 + static_cast<Index>(rng.below(12));
            auto p = random_abundance(rng, m, trial % 3 == 0);
            auto z = SimilarityMatrix::adopt(Matrix::Identity(m, m));
            for (Order q : kOrderGrid) {
                CHECK(rel_diff(lcr_diversity(p, z, q).value,
                               hill_number(p, q).value) < 1e-12);
            }
        }
    }
    SECTION("agrees with the direct oracle") {
        Rng rng(104);
        for (int trial = 0; trial < 25; ++trial) {
            const int m = 2 + static_cast<int>(rng.below(10));
            auto z = random_gram(rng, m, 2 + static_cast<int>(rng.below(3)));
            auto p = random_abundance(rng, m);
            for (Order q : {-2.0, 0.0, 0.5, 1.0, 2.0, 5.0}) {
                CHECK(rel_diff(lcr_diversity(p, z, q).value,
                               oracle_lcr(p.vector(), z.matrix(), q)) < 1e-11);
            }
        }
    }
}

TEST_CASE("profile shares one ordinariness across orders", "[diversity]") {
    SECTION("identity over three elements") {
        auto z = SimilarityMatrix::adopt(Matrix::Identity(3, 3));
        const Order qs[] = {0.0, 1.0, order::infinity};
        auto profile = lcr_profile(Abundance::uniform(3), z, qs);
        REQUIRE(profile.size() == 3);
        for (const auto& [q, value] : profile) {
            CHECK(value.value == Catch::Approx(3.0).epsilon(1e-12));
        }
    }
    SECTION("all-ones gives ones") {
        auto z = SimilarityMatrix::adopt(Matrix::Ones(4, 4));
        const Order qs[] = {0.0, 1.0, order::infinity};
        for (const auto& [q, value] : lcr_profile(Abundance::uniform(4), z, qs)) {
            CHECK(value.value == Catch::Approx(1.0).epsilon(1e-12));
        }
    }
    SECTION("matches individual evaluations") {
        Rng rng(105);
        auto z = random_gram(rng, 6, 3);
        auto p = random_abundance(rng, 6);
        const Order qs[] = {-order::infinity, -1.0, 0.0, 1.0, 2.0, order::infinity};
        for (const auto& [q, value] : lcr_profile(p, z, qs)) {
            CHECK(value.value == lcr_diversity(p, z, q).value);
        }
    }
    SECTION("empty order list is rejected") {
        auto z = SimilarityMatrix::adopt(Matrix::Identity(2, 2));
        CHECK_THROWS_AS(lcr_profile(Abundance::uniform(2), z, {}), Error);
    }
}

TEST_CASE("diversity range and monotonicity", "[diversity]") {
    Rng rng(106);

    SECTION("1 <= LCR <= Hill, and Hill <= support size for q >= 0") {
        for (int trial = 0; trial < 30; ++trial) {
            const int m = 2 + static_cast<int>(rng.below(12));
            auto z = random_gram(rng, m, 2 + static_cast<int>(rng.below(4)));
            auto p = random_abundance(rng, m, trial % 3 == 0);
            for (Order q : kOrderGrid) {
                const double lcr = lcr_diversity(p, z, q).value;
                const double hill = hill_number(p, q).value;
                CHECK(lcr >= 1.0 - 1e-12);
                CHECK(lcr <= hill * (1.0 + 1e-12));
                if (q >= 0.0) {
                    CHECK(hill <=
                          static_cast<double>(p.support_size()) * (1.0 + 1e-12));
                }
            }
        }
    }
    SECTION("nonincreasing in q") {
        for (int trial = 0; trial < 30; ++trial) {
            const int m = 2 + static_cast<int>(rng.below(12));
            auto z = random_gram(rng, m, 2 + static_cast<int>(rng.below(4)));
            auto p = random_abundance(rng, m);
            double previous = std::numeric_limits<double>::infinity();
            for (Order q : kOrderGrid) {
                const double value = lcr_diversity(p, z, q).value;
                CHECK(value <= previous * (1.0 + 1e-11));
                previous = value;
            }
        }
    }
    SECTION("raising off-diagonal similarity does not raise diversity") {
        for (int trial = 0; trial < 20; ++trial) {
            const int m = 3 + static_cast<int>(rng.below(8));
            auto z = random_gram(rng, m, 2);
            Matrix bumped = z.matrix();
            for (Index i = 0; i < m; ++i) {
                for (Index j = i + 1; j < m; ++j) {
                    const double v = std::min(
                        1.0, bumped(i, j) + 0.2 * rng.uniform01() *
                                                (1.0 - bumped(i, j)));
                    bumped(i, j) = v;
                    bumped(j, i) = v;
                }
            }
            auto z_up = SimilarityMatrix::adopt(bumped);
            auto p = random_abundance(rng, m);
            for (Order q : {1.0, 2.0}) {
                CHECK(lcr_diversity(p, z_up, q).value <=
                      lcr_diversity(p, z, q).value + 1e-12);
            }
        }
    }
    SECTION("continuous through q = 1") {
        for (int trial = 0; trial < 20; ++trial) {
            const int m = 2 + static_cast<int>(rng.below(10));
            auto z = random_gram(rng, m, 2 + static_cast<int>(rng.below(3)));
            auto p = random_abundance(rng, m);
            const double at_one = lcr_diversity(p, z, 1.0).value;
            CHECK(rel_diff(lcr_diversity(p, z, 1.0 + 1e-6).value, at_one) <= 1e-4);
            CHECK(rel_diff(lcr_diversity(p, z, 1.0 - 1e-6).value, at_one) <= 1e-4);
        }
    }
    SECTION("permutation invariance") {
        for (int trial = 0; trial < 15; ++trial) {
            const int m = 3 + static_cast<int>(rng.below(8));
            auto z = random_gram(rng, m, 3);
            auto p = random_abundance(rng, m);
            std::vector<Index> perm(static_cast<std::size_t>(m));
            for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
            for (Index i = m - 1; i > 0; --i) {
                std::swap(perm[static_cast<std::size_t>(i)],
                          perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
            }
            Matrix zp(m, m);
            Vector pp(m);
            for (Index i = 0; i < m; ++i) {
                pp(i) = p[perm[static_cast<std::size_t>(i)]];
                for (Index j = 0; j < m; ++j) {
                    zp(i, j) = z.matrix()(perm[static_cast<std::size_t>(i)],
                                          perm[static_cast<std::size_t>(j)]);
                }
            }
            auto z2 = SimilarityMatrix::adopt(zp);
            auto p2 = Abundance(pp);
            for (Order q : kOrderGrid) {
                CHECK(rel_diff(lcr_diversity(p2, z2, q).value,
                               lcr_diversity(p, z, q).value) < 1e-12);
            }
        }
    }
}

TEST_CASE("diversity edge handling", "[diversity]") {
    SECTION("zero-frequency elements cannot affect the result") {
        Matrix z3(3, 3);
        z3 << 1.0, 0.2, 0.9,
              0.2, 1.0, 0.9,
              0.9, 0.9, 1.0;
        Vector p3(3);
        p3 << 0.5, 0.5, 0.0;
        Matrix z2(2, 2);
        z2 << 1.0, 0.2, 0.2, 1.0;
        Vector p2(2);
        p2 << 0.5, 0.5;
        for (Order q : kOrderGrid) {
            CHECK(rel_diff(
                      lcr_diversity(Abundance(p3), SimilarityMatrix::adopt(z3), q).value,
                      lcr_diversity(Abundance(p2), SimilarityMatrix::adopt(z2), q).value) <
                  1e-12);
        }
    }
    SECTION("orders beyond the cutoff collapse to the infinite form") {
        Rng rng(107);
        auto z = random_gram(rng, 5, 3);
        auto p = random_abundance(rng, 5);
        CHECK(lcr_diversity(p, z, 1e7).value ==
              lcr_diversity(p, z, order::infinity).value);
        CHECK(lcr_diversity(p, z, -1e7).value ==
              lcr_diversity(p, z, -order::infinity).value);
    }
    SECTION("NaN orders are rejected") {
        auto z = SimilarityMatrix::adopt(Matrix::Identity(2, 2));
        CHECK_THROWS_AS(
            lcr_diversity(Abundance::uniform(2), z,
                          std::numeric_limits<double>::quiet_NaN()),
            Error);
    }
}
