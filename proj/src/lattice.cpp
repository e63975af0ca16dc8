#include "aimc/lattice.hpp"

#include "aimc/common.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

namespace aimc {

SpinConfiguration::SpinConfiguration(std::vector<std::int8_t> spins) : spins_(std::move(spins))
{
    for (auto s : spins_) {
        if (s != 1 && s != -1) {
            throw DomainError("spin entries must be -1 or +1");
        }
    }
}

SpinConfiguration::SpinConfiguration(std::initializer_list<int> spins)
{
    spins_.reserve(spins.size());
    for (int s : spins) {
        if (s != 1 && s != -1) {
            throw DomainError("spin entries must be -1 or +1");
        }
        spins_.push_back(static_cast<std::int8_t>(s));
    }
}

int SpinConfiguration::magnetization() const
{
    return std::accumulate(spins_.begin(), spins_.end(), 0);
}

SpinConfiguration SpinConfiguration::flipped() const
{
    SpinConfiguration out = *this;
    for (auto& s : out.spins_) {
        s = static_cast<std::int8_t>(-s);
    }
    return out;
}

SpinConfiguration SpinConfiguration::swapped(std::size_t i, std::size_t j) const
{
    SpinConfiguration out = *this;
    std::swap(out.spins_.at(i), out.spins_.at(j));
    return out;
}

std::uint64_t SpinConfiguration::key() const
{
    if (spins_.size() > 64) {
        throw DomainError("key() supports at most 64 spins");
    }
    std::uint64_t k = 0;
    for (std::size_t i = 0; i < spins_.size(); ++i) {
        if (spins_[i] < 0) {
            k |= std::uint64_t{1} << i;
        }
    }
    return k;
}

namespace {

LatticeSpec assemble(std::size_t lx, std::size_t ly, bool periodic,
                     const std::vector<Bond>& candidates)
{
    LatticeSpec lat;
    lat.lx = lx;
    lat.ly = ly;
    lat.periodic = periodic;
    lat.sublattice.resize(lx * ly);
    for (std::size_t y = 0; y < ly; ++y) {
        for (std::size_t x = 0; x < lx; ++x) {
            lat.sublattice[y * lx + x] = (x + y) % 2 == 0 ? Sublattice::A : Sublattice::B;
        }
    }
    for (Bond b : candidates) {
        if (b.a > b.b) {
            std::swap(b.a, b.b);
        }
        if (b.a == b.b || std::find(lat.bonds.begin(), lat.bonds.end(), b) != lat.bonds.end()) {
            ++lat.duplicate_bonds_removed;
            continue;
        }
        if (lat.sublattice[b.a] == lat.sublattice[b.b]) {
            lat.bipartite = false;
        }
        lat.bonds.push_back(b);
    }
    if (lat.duplicate_bonds_removed > 0) {
        std::clog << "warning: " << lx << "x" << ly
                  << " periodic lattice repeats bonds under wrap; removed "
                  << lat.duplicate_bonds_removed << " duplicate(s)\n";
    }
    return lat;
}

}  // namespace

LatticeSpec build_lattice(std::size_t lx, std::size_t ly, bool periodic)
{
    if (lx < 2 || ly < 2) {
        throw DomainError("lattice extents must be at least 2");
    }
    std::vector<Bond> cand;
    for (std::size_t y = 0; y < ly; ++y) {
        for (std::size_t x = 0; x < lx; ++x) {
            const std::size_t i = y * lx + x;
            if (x + 1 < lx) {
                cand.push_back({i, y * lx + x + 1});
            } else if (periodic) {
                cand.push_back({i, y * lx});
            }
            if (y + 1 < ly) {
                cand.push_back({i, (y + 1) * lx + x});
            } else if (periodic) {
                cand.push_back({i, x});
            }
        }
    }
    return assemble(lx, ly, periodic, cand);
}

LatticeSpec build_chain(std::size_t l, bool periodic)
{
    if (l < 2) {
        throw DomainError("chain needs at least 2 sites");
    }
    std::vector<Bond> cand;
    for (std::size_t x = 0; x + 1 < l; ++x) {
        cand.push_back({x, x + 1});
    }
    if (periodic) {
        cand.push_back({l - 1, 0});
    }
    return assemble(l, 1, periodic, cand);
}

}  // namespace aimc
