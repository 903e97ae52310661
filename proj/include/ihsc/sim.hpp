#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ihsc/domain.hpp"

namespace ihsc::sim {

class SimError : public std::runtime_error {
public:
    explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

enum class ChainMode { TwoLayer, SingleChain };
enum class IntegrityMode { WithBlockchain, WithoutBlockchain };

ChainMode chain_mode_from_name(std::string_view name);
IntegrityMode integrity_mode_from_name(std::string_view name);

struct StageRange {
    double lo = 0;
    double hi = 0;
};

/// Season parameters. Counts are full-scale baselines; `scale` shrinks the
/// lot count and every resource pool proportionally so queueing ratios are
/// preserved at desk scale.
struct SimConfig {
    std::uint64_t lot_count = 40000;
    std::uint64_t transplant_harvest_machines = 8000;  // shared by both uses
    std::uint64_t test_equipment = 8000;
    std::uint64_t drying_machines = 2400;
    std::uint64_t processing_machines = 1600;
    std::uint32_t shard_count = 4;
    std::uint64_t validators_per_shard = 175;
    std::uint64_t regulators = 50;
    double scale = 1.0 / 40.0;

    double tamper_probability = 0.30;  // chance a violating lot falsifies

    // service means in days
    double onsite_service_mean_days = 0.1;
    double confirm_service_mean_days = 0.005;
    double single_service_mean_days = 0.1;

    std::int64_t shard_interval_s = 15;
    std::int64_t root_interval_s = 90;
    std::size_t shard_block_capacity = 4;
    std::size_t root_block_capacity = 24;
    std::size_t single_block_capacity = 4;
    std::int64_t single_interval_s = 90;

    // true-violation model (independent per lot, all configurable)
    double p_thc_violation = 0.10;
    double p_harvest_window_violation = 0.10;
    double p_final_quality_violation = 0.02;

    // physical stage model, in days
    double start_window_days = 20.0;
    StageRange seed_pickup_delay{1.0, 3.0};
    StageRange transit{0.5, 2.0};
    StageRange germination{5.0, 10.0};
    double holding_days = 2.0;
    StageRange soil_preparation{1.0, 2.0};
    StageRange transplant_service{1.0, 2.0};
    StageRange cultivation{50.0, 60.0};
    StageRange sample_delay{0.5, 1.5};
    StageRange test_service{2.0, 7.0};
    StageRange harvest_delay_compliant{3.0, 12.0};
    StageRange harvest_delay_violating{16.0, 25.0};
    StageRange harvest_service{0.5, 1.0};
    StageRange pickup_delay{0.5, 1.5};
    StageRange drying_service{1.0, 2.0};
    StageRange dried_pickup_delay{1.0, 3.0};
    StageRange extraction_service{1.0, 2.0};
    StageRange winterization_service{1.0, 3.0};
    StageRange plc_service{1.0, 2.0};

    std::uint64_t seed = 1;

    std::uint64_t scaled(std::uint64_t full) const;
    std::uint64_t effective_lots() const { return scaled(lot_count); }
    void validate() const;

    static SimConfig from_json(const nlohmann::json& j);
    static SimConfig from_file(const std::filesystem::path& path);
};

/// One run's output: safety counts, arrivals and waiting-time samples per
/// operation type.
struct SeasonMetrics {
    std::uint64_t lots = 0;
    std::uint64_t destroyed = 0;
    std::uint64_t completed = 0;

    std::uint64_t false_pass_preharvest = 0;  // K_fp
    std::uint64_t false_pass_harvest = 0;     // K_fh
    std::uint64_t fake_qualified = 0;         // K_fq
    double q_fp = 0, q_fh = 0, q_fq = 0;

    std::uint64_t total_records = 0;
    std::uint64_t committed_records = 0;
    double max_commit_rate_per_min = 0;

    // per operation unit (indexed by OperationUnit)
    std::array<std::map<std::int64_t, std::uint64_t>, domain::kOperationCount>
        arrivals_by_day{};
    std::array<std::vector<double>, domain::kOperationCount>
        online_wait_minutes{};
    std::array<std::vector<double>, domain::kOperationCount>
        onsite_wait_minutes{};

    std::uint64_t arrivals_total() const;
};

/// Simulate one season of all lots through the stage model with resource
/// contention, regulated checkpoints and the selected verification network.
SeasonMetrics run_season(const SimConfig& config, ChainMode chain_mode,
                         IntegrityMode integrity);

/// Empirical nearest-rank percentile (p in [0,100]). Errors on no samples.
double waiting_percentile(std::vector<double> samples, double p);
double waiting_percentile(const SeasonMetrics& metrics,
                          domain::OperationUnit op, double p,
                          bool onsite = false);

/// Steady-state commit throughput (records/minute) of the block machinery
/// under a saturating pre-verified workload.
double measure_commit_ceiling(const SimConfig& config, ChainMode chain_mode,
                              double horizon_minutes);

/// Theoretical ceilings from the block parameters, records/minute.
double commit_ceiling_per_min(const SimConfig& config, ChainMode chain_mode);

/// arrivals.csv, waits_online.csv, waits_onsite.csv under out_dir;
/// byte-stable for a fixed seed.
void export_metrics(const SeasonMetrics& metrics,
                    const std::filesystem::path& out_dir);

/// safety.csv: one row per replication plus mean and ci95 summary rows.
void export_safety(const std::vector<std::pair<std::uint64_t, SeasonMetrics>>&
                       replications,
                   const std::filesystem::path& out_dir);

}  // namespace ihsc::sim
