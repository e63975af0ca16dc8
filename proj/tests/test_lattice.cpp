#include "aimc/lattice.hpp"
#include "aimc/common.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace aimc;

TEST(SpinConfiguration, RejectsNonUnitEntries)
{
    EXPECT_THROW(SpinConfiguration({1, 0, -1}), DomainError);
    EXPECT_THROW(SpinConfiguration(std::vector<std::int8_t>{2}), DomainError);
}

TEST(SpinConfiguration, FlipSwapKey)
{
    const SpinConfiguration s{1, -1, -1, 1};
    EXPECT_EQ(s.magnetization(), 0);
    EXPECT_EQ(s.flipped(), (SpinConfiguration{-1, 1, 1, -1}));
    EXPECT_EQ(s.swapped(0, 1), (SpinConfiguration{-1, 1, -1, 1}));
    EXPECT_EQ(s.key(), 0b0110u);
}

TEST(Lattice, Periodic4x4Has32Bonds)
{
    const auto lat = build_lattice(4, 4, true);
    EXPECT_EQ(lat.sites(), 16u);
    EXPECT_EQ(lat.bonds.size(), 32u);
    EXPECT_TRUE(lat.bipartite);
    EXPECT_EQ(lat.duplicate_bonds_removed, 0u);
}

TEST(Lattice, BondsAreNearestNeighboursWithoutDuplicates)
{
    const auto lat = build_lattice(4, 4, true);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [a, b] : lat.bonds) {
        EXPECT_TRUE(seen.insert(std::minmax(a, b)).second);
        const long dx = std::abs(static_cast<long>(a % 4) - static_cast<long>(b % 4));
        const long dy = std::abs(static_cast<long>(a / 4) - static_cast<long>(b / 4));
        const long wx = std::min(dx, 4 - dx);
        const long wy = std::min(dy, 4 - dy);
        EXPECT_EQ(wx + wy, 1);
        EXPECT_NE(lat.sublattice[a], lat.sublattice[b]);
    }
}

TEST(Lattice, Open2x2HasFourBonds)
{
    EXPECT_EQ(build_lattice(2, 2, false).bonds.size(), 4u);
}

TEST(Lattice, Periodic2x2DeduplicatesWrapBonds)
{
    const auto lat = build_lattice(2, 2, true);
    EXPECT_EQ(lat.bonds.size(), 4u);
    EXPECT_GT(lat.duplicate_bonds_removed, 0u);
}

TEST(Lattice, Periodic3x3IsNotBipartite)
{
    const auto lat = build_lattice(3, 3, true);
    EXPECT_FALSE(lat.bipartite);
    EXPECT_EQ(lat.bonds.size(), 18u);
    EXPECT_TRUE(build_lattice(3, 3, false).bipartite);
}

TEST(Lattice, RejectsDegenerateExtents)
{
    EXPECT_THROW(build_lattice(1, 4, true), DomainError);
    EXPECT_THROW(build_chain(1, false), DomainError);
}

TEST(Lattice, Chains)
{
    EXPECT_EQ(build_chain(2, false).bonds.size(), 1u);
    EXPECT_EQ(build_chain(16, true).bonds.size(), 16u);
    EXPECT_EQ(build_chain(16, false).bonds.size(), 15u);
}
