#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace aimc {

// A configuration of N spin-1/2 projections, each stored as -1 or +1.
class SpinConfiguration {
  public:
    SpinConfiguration() = default;
    explicit SpinConfiguration(std::vector<std::int8_t> spins);
    SpinConfiguration(std::initializer_list<int> spins);

    std::size_t size() const { return spins_.size(); }
    int operator[](std::size_t i) const { return spins_[i]; }
    std::span<const std::int8_t> spins() const { return spins_; }

    int magnetization() const;
    SpinConfiguration flipped() const;
    SpinConfiguration swapped(std::size_t i, std::size_t j) const;

    // Bit i set <=> spin i is down. Only valid for N <= 64.
    std::uint64_t key() const;

    friend bool operator==(const SpinConfiguration&, const SpinConfiguration&) = default;

  private:
    std::vector<std::int8_t> spins_;
};

struct Bond {
    std::size_t a;
    std::size_t b;
    friend bool operator==(const Bond&, const Bond&) = default;
};

enum class Sublattice : std::uint8_t { A, B };

struct LatticeSpec {
    std::size_t lx = 0;
    std::size_t ly = 0;
    bool periodic = true;
    std::vector<Bond> bonds;
    std::vector<Sublattice> sublattice;
    // False when some bond joins two sites with the same (x + y) parity.
    bool bipartite = true;
    // Bonds dropped because a periodic wrap repeated an existing bond.
    std::size_t duplicate_bonds_removed = 0;

    std::size_t sites() const { return lx * ly; }
};

// Square lattice, site index = y * lx + x, nearest-neighbour bonds.
LatticeSpec build_lattice(std::size_t lx, std::size_t ly, bool periodic);

// One-dimensional chain of l sites (ly = 1). l = 2 open gives the single-bond dimer.
LatticeSpec build_chain(std::size_t l, bool periodic);

}  // namespace aimc
