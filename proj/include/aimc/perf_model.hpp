#pragma once

// Analytical timing, power and energy model of the pipelined four-tile
// architecture. All durations are seconds, powers watts, energies joules.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace aimc {

struct ArchConfig {
    std::size_t n_tiles = 4;
    std::size_t rows = 512;
    std::size_t cols = 512;
    double t_analog = 40e-9;  // DAC + crossbar + ADC
    double t_stage = 50e-9;   // slowest pipeline stage
    double p_xbar = 0.13;     // array incl. converters, at maximum load
    double p_ldpu = 0.33;
    double p_dpu = 0.18;
    double peripheral_fraction = 0.90;
    // Scale the array's non-peripheral share by rows_used * cols_used / (rows * cols).
    bool utilization_scaling = false;

    void validate() const;
};

struct PipelineStage {
    enum class Kind { tile, dpu };
    Kind kind = Kind::tile;
    std::size_t tile_index = 0;
    std::size_t rows_used = 0;
    std::size_t cols_used = 0;

    static PipelineStage dpu() { return {Kind::dpu, 0, 0, 0}; }
};

struct PipelineMapping {
    std::vector<PipelineStage> stages;
    std::string workload_id;

    std::size_t tile_stages() const;
    void validate(const ArchConfig& arch) const;
};

// layer_dims holds (in, out) per MVM layer.
PipelineMapping map_network(const std::vector<std::pair<std::size_t, std::size_t>>& layer_dims,
                            const ArchConfig& arch, std::string workload_id = {});

struct PipelineMetrics {
    double throughput = 0.0;  // samples / s
    double latency = 0.0;     // s
};

PipelineMetrics pipeline_metrics(const PipelineMapping& m, const ArchConfig& arch);

double power_model(const PipelineMapping& m, const ArchConfig& arch);

double energy_per_inference(double power, double throughput);

struct PerfReport {
    double throughput = 0.0;
    double latency = 0.0;
    double power = 0.0;
    double energy_per_inference = 0.0;
    std::size_t stages = 0;
};

PerfReport estimate_performance(const PipelineMapping& m, const ArchConfig& arch);

}  // namespace aimc
