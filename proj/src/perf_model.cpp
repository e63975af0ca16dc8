#include "aimc/perf_model.hpp"

#include "aimc/common.hpp"

#include <algorithm>

namespace aimc {

void ArchConfig::validate() const
{
    if (n_tiles == 0 || rows == 0 || cols == 0) {
        throw DomainError("architecture needs at least one non-empty tile");
    }
    if (!(t_analog > 0.0) || t_stage < t_analog) {
        throw DomainError("stage time must cover the analog latency");
    }
    if (p_xbar < 0.0 || p_ldpu < 0.0 || p_dpu < 0.0) {
        throw DomainError("powers must be non-negative");
    }
    if (peripheral_fraction < 0.0 || peripheral_fraction > 1.0) {
        throw DomainError("peripheral fraction must lie in [0, 1]");
    }
}

std::size_t PipelineMapping::tile_stages() const
{
    return static_cast<std::size_t>(std::count_if(stages.begin(), stages.end(), [](const auto& s) {
        return s.kind == PipelineStage::Kind::tile;
    }));
}

void PipelineMapping::validate(const ArchConfig& arch) const
{
    if (stages.empty() || stages.back().kind != PipelineStage::Kind::dpu) {
        throw MappingError("pipeline must end in exactly one DPU stage");
    }
    if (tile_stages() + 1 != stages.size()) {
        throw MappingError("pipeline must contain exactly one DPU stage");
    }
    if (tile_stages() > arch.n_tiles) {
        throw MappingError("pipeline uses more tiles than the architecture has");
    }
    for (const auto& s : stages) {
        if (s.kind == PipelineStage::Kind::tile &&
            (s.rows_used > arch.rows || s.cols_used > arch.cols || s.tile_index >= arch.n_tiles)) {
            throw MappingError("tile stage does not fit the crossbar");
        }
    }
}

PipelineMapping map_network(const std::vector<std::pair<std::size_t, std::size_t>>& layer_dims,
                            const ArchConfig& arch, std::string workload_id)
{
    arch.validate();
    if (layer_dims.size() > arch.n_tiles) {
        throw MappingError("network has " + std::to_string(layer_dims.size()) +
                           " MVM layers but only " + std::to_string(arch.n_tiles) +
                           " tiles; multi-pass reuse is not supported");
    }
    PipelineMapping m;
    m.workload_id = std::move(workload_id);
    for (std::size_t l = 0; l < layer_dims.size(); ++l) {
        const auto [in, out] = layer_dims[l];
        if (in > arch.rows || out > arch.cols) {
            throw MappingError("layer " + std::to_string(l) + " (" + std::to_string(in) + " x " +
                               std::to_string(out) + ") exceeds the " + std::to_string(arch.rows) +
                               " x " + std::to_string(arch.cols) + " crossbar");
        }
        m.stages.push_back({PipelineStage::Kind::tile, l, in, out});
    }
    m.stages.push_back(PipelineStage::dpu());
    return m;
}

PipelineMetrics pipeline_metrics(const PipelineMapping& m, const ArchConfig& arch)
{
    m.validate(arch);
    return {1.0 / arch.t_stage, static_cast<double>(m.stages.size()) * arch.t_stage};
}

double power_model(const PipelineMapping& m, const ArchConfig& arch)
{
    double p = arch.p_dpu;
    for (const auto& s : m.stages) {
        if (s.kind != PipelineStage::Kind::tile) {
            continue;
        }
        double xbar = arch.p_xbar;
        if (arch.utilization_scaling) {
            const double util = static_cast<double>(s.rows_used * s.cols_used) /
                                static_cast<double>(arch.rows * arch.cols);
            xbar = arch.p_xbar * (arch.peripheral_fraction + (1.0 - arch.peripheral_fraction) * util);
        }
        p += xbar + arch.p_ldpu;
    }
    return p;
}

double energy_per_inference(double power, double throughput)
{
    if (!(throughput > 0.0)) {
        throw DomainError("throughput must be positive");
    }
    return power / throughput;
}

PerfReport estimate_performance(const PipelineMapping& m, const ArchConfig& arch)
{
    const auto metrics = pipeline_metrics(m, arch);
    PerfReport r;
    r.throughput = metrics.throughput;
    r.latency = metrics.latency;
    r.power = power_model(m, arch);
    r.energy_per_inference = energy_per_inference(r.power, r.throughput);
    r.stages = m.stages.size();
    return r;
}

}  // namespace aimc
