#include "ihsc/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <queue>

#include "ihsc/rng.hpp"

namespace ihsc::sim {

namespace {

constexpr double kMinutesPerDay = 24.0 * 60.0;

using domain::OperationUnit;

std::size_t op_index(OperationUnit op) { return static_cast<std::size_t>(op); }

double seconds_to_days(std::int64_t s) {
    return static_cast<double>(s) / 86400.0;
}

// ---------------------------------------------------------------------------
// per-lot pre-drawn randomness (common random numbers across modes and p2)
// ---------------------------------------------------------------------------

struct LotPlan {
    double t0 = 0;
    double seed_pickup_delay = 0, seed_transit = 0;
    double germination = 0, soil_prep = 0, transplant_service = 0;
    double cultivation = 0, sample_delay = 0, test_service = 0;
    bool thc_violation = false;
    double tamper_draw_pre = 0;
    bool window_violation = false;
    double tamper_draw_harvest = 0;
    double harvest_delay = 0, harvest_service = 0;
    double ih_pickup_delay = 0, ih_transit = 0, drying_service = 0;
    double dried_pickup_delay = 0, dried_transit = 0;
    double extraction_service = 0, winterization_service = 0, plc_service = 0;
    bool final_violation = false;
    double tamper_draw_final = 0;
};

double draw(Rng& rng, const StageRange& range) {
    return rng.uniform_range(range.lo, range.hi);
}

LotPlan make_plan(const SimConfig& cfg, std::uint64_t seed,
                  std::uint64_t lot) {
    Rng rng(derive_seed(seed, "lot-" + std::to_string(lot)));
    LotPlan p;
    p.t0 = rng.uniform_range(0.0, cfg.start_window_days);
    p.seed_pickup_delay = draw(rng, cfg.seed_pickup_delay);
    p.seed_transit = draw(rng, cfg.transit);
    p.germination = draw(rng, cfg.germination);
    p.soil_prep = draw(rng, cfg.soil_preparation);
    p.transplant_service = draw(rng, cfg.transplant_service);
    p.cultivation = draw(rng, cfg.cultivation);
    p.sample_delay = draw(rng, cfg.sample_delay);
    p.test_service = draw(rng, cfg.test_service);
    p.thc_violation = rng.bernoulli(cfg.p_thc_violation);
    p.tamper_draw_pre = rng.uniform01();
    p.window_violation = rng.bernoulli(cfg.p_harvest_window_violation);
    p.tamper_draw_harvest = rng.uniform01();
    p.harvest_delay = p.window_violation
                          ? draw(rng, cfg.harvest_delay_violating)
                          : draw(rng, cfg.harvest_delay_compliant);
    p.harvest_service = draw(rng, cfg.harvest_service);
    p.ih_pickup_delay = draw(rng, cfg.pickup_delay);
    p.ih_transit = draw(rng, cfg.transit);
    p.drying_service = draw(rng, cfg.drying_service);
    p.dried_pickup_delay = draw(rng, cfg.dried_pickup_delay);
    p.dried_transit = draw(rng, cfg.transit);
    p.extraction_service = draw(rng, cfg.extraction_service);
    p.winterization_service = draw(rng, cfg.winterization_service);
    p.plc_service = draw(rng, cfg.plc_service);
    p.final_violation = rng.bernoulli(cfg.p_final_quality_violation);
    p.tamper_draw_final = rng.uniform01();
    return p;
}

// ---------------------------------------------------------------------------
// event engine
// ---------------------------------------------------------------------------

enum class Milestone : std::uint8_t {
    SeedSourcing,
    SeedPickup,
    SeedArrival,
    TransplantRequest,
    TransplantDone,
    CultivationDone,
    Sample,
    TestDone,
    HarvestRequest,
    HarvestDone,
    IHPickup,
    IHArrival,
    DryDone,
    DriedPickup,
    DriedArrival,
    ExtractDone,
    WinterDone,
    PlcDone,
};

enum class EvKind : std::uint8_t {
    Milestone,
    MachineDone,
    VerifyDone,
    HeaderReady,
    ConfirmDone,
    CommitGroup,
    CommitSingle,
};

struct Event {
    double t = 0;
    std::uint64_t seq = 0;
    EvKind kind = EvKind::Milestone;
    std::uint32_t a = 0;  // lot / record / group index
    std::uint8_t b = 0;   // milestone
};

struct EventOrder {
    bool operator()(const Event& x, const Event& y) const {
        if (x.t != y.t) return x.t > y.t;
        return x.seq > y.seq;
    }
};

struct MachinePool {
    std::uint64_t free = 0;
    std::deque<std::tuple<std::uint32_t, double, Milestone>> waiting;
};

struct RecordSim {
    std::uint32_t lot = 0;
    OperationUnit op = OperationUnit::SeedSourcing;
    double submit_t = 0;
    bool onsite = false;
    bool approved = true;
};

struct BlockGroup {
    std::uint32_t shard = 0;
    double block_t = 0;
    std::vector<std::uint32_t> records;
};

struct ServicePool {
    std::uint64_t free = 0;
    double mean_days = 0;
    Rng rng;
    std::deque<std::uint32_t> waiting;

    ServicePool(std::uint64_t servers, double mean, std::uint64_t seed)
        : free(servers), mean_days(mean), rng(seed) {}
};

struct TickScheduler {
    double interval_days = 0;
    std::size_t capacity = 0;
    std::int64_t tick = 0;
    std::size_t used = 0;

    std::int64_t assign_tick(double t) {
        auto k = static_cast<std::int64_t>(
            std::ceil(t / interval_days - 1e-12));
        if (k < 1) k = 1;
        if (k > tick) {
            tick = k;
            used = 0;
        }
        if (used == capacity) {
            tick += 1;
            used = 0;
        }
        used += 1;
        return tick;
    }
    double tick_time(std::int64_t k) const { return k * interval_days; }
};

class SeasonEngine {
public:
    SeasonEngine(const SimConfig& cfg, ChainMode chain_mode,
                 IntegrityMode integrity)
        : cfg_(cfg),
          chain_mode_(chain_mode),
          integrity_(integrity),
          confirm_pool_(cfg.scaled(cfg.regulators),
                        cfg.confirm_service_mean_days,
                        derive_seed(cfg.seed, "confirm-pool")),
          single_pool_(cfg.scaled(cfg.regulators),
                       cfg.single_service_mean_days,
                       derive_seed(cfg.seed, "single-pool")) {
        const std::uint64_t lots = cfg_.effective_lots();
        metrics_.lots = lots;

        machines_[0].free = cfg_.scaled(cfg_.transplant_harvest_machines);
        machines_[1].free = cfg_.scaled(cfg_.test_equipment);
        machines_[2].free = cfg_.scaled(cfg_.drying_machines);
        machines_[3].free = cfg_.scaled(cfg_.processing_machines);

        for (std::uint32_t s = 0; s < cfg_.shard_count; ++s) {
            validator_pools_.emplace_back(
                cfg_.scaled(cfg_.validators_per_shard),
                cfg_.onsite_service_mean_days,
                derive_seed(cfg_.seed, "validators-" + std::to_string(s + 1)));
            shard_sched_.push_back(
                TickScheduler{seconds_to_days(cfg_.shard_interval_s),
                              cfg_.shard_block_capacity});
        }
        root_sched_ = TickScheduler{seconds_to_days(cfg_.root_interval_s),
                                    cfg_.root_block_capacity};
        single_sched_ = TickScheduler{seconds_to_days(cfg_.single_interval_s),
                                      cfg_.single_block_capacity};

        plans_.reserve(lots);
        alive_.assign(lots, true);
        for (std::uint64_t lot = 0; lot < lots; ++lot) {
            plans_.push_back(make_plan(cfg_, cfg_.seed, lot));
            push(plans_.back().t0, EvKind::Milestone,
                 static_cast<std::uint32_t>(lot),
                 static_cast<std::uint8_t>(Milestone::SeedSourcing));
        }
    }

    SeasonMetrics run() {
        while (!events_.empty()) {
            Event ev = events_.top();
            events_.pop();
            dispatch(ev);
        }
        finalize();
        return metrics_;
    }

private:
    void push(double t, EvKind kind, std::uint32_t a, std::uint8_t b = 0) {
        events_.push(Event{t, seq_++, kind, a, b});
    }

    std::uint32_t shard_of(std::uint32_t lot) const {
        return lot % cfg_.shard_count;
    }

    // ---- machines ----------------------------------------------------------

    static int machine_for(Milestone m) {
        switch (m) {
            case Milestone::TransplantDone:
            case Milestone::HarvestDone: return 0;
            case Milestone::TestDone: return 1;
            case Milestone::DryDone: return 2;
            default: return 3;  // extraction, winterization, PLC
        }
    }

    void machine_request(double t, std::uint32_t lot, double service,
                         Milestone done) {
        auto& pool = machines_[machine_for(done)];
        if (pool.free > 0) {
            --pool.free;
            push(t + service, EvKind::MachineDone, lot,
                 static_cast<std::uint8_t>(done));
        } else {
            pool.waiting.emplace_back(lot, service, done);
        }
    }

    void machine_release(double t, Milestone done) {
        auto& pool = machines_[machine_for(done)];
        if (!pool.waiting.empty()) {
            auto [lot, service, milestone] = pool.waiting.front();
            pool.waiting.pop_front();
            push(t + service, EvKind::MachineDone, lot,
                 static_cast<std::uint8_t>(milestone));
        } else {
            ++pool.free;
        }
    }

    // ---- chain network ------------------------------------------------------

    void service_start(ServicePool& pool, bool group, std::uint32_t idx,
                       double t) {
        if (pool.free > 0) {
            --pool.free;
            const double service = pool.mean_days <= 0
                                       ? 0.0
                                       : pool.rng.exponential(pool.mean_days);
            push(t + service,
                 group ? EvKind::ConfirmDone : EvKind::VerifyDone, idx);
        } else {
            pool.waiting.push_back(idx);
        }
    }

    void service_release(ServicePool& pool, bool group, double t) {
        if (!pool.waiting.empty()) {
            const std::uint32_t next = pool.waiting.front();
            pool.waiting.pop_front();
            const double service = pool.mean_days <= 0
                                       ? 0.0
                                       : pool.rng.exponential(pool.mean_days);
            push(t + service,
                 group ? EvKind::ConfirmDone : EvKind::VerifyDone, next);
        } else {
            ++pool.free;
        }
    }

    void to_shard_block(std::uint32_t rec_idx, double t) {
        const auto& rec = records_[rec_idx];
        const std::uint32_t shard = shard_of(rec.lot);
        auto& sched = shard_sched_[shard];
        const std::int64_t tick = sched.assign_tick(t);
        const auto key = std::make_pair(shard, tick);
        auto it = group_index_.find(key);
        if (it == group_index_.end()) {
            const auto g = static_cast<std::uint32_t>(groups_.size());
            groups_.push_back(
                BlockGroup{shard, sched.tick_time(tick), {rec_idx}});
            group_index_.emplace(key, g);
            push(sched.tick_time(tick), EvKind::HeaderReady, g);
        } else {
            groups_[it->second].records.push_back(rec_idx);
        }
    }

    void submit_to_network(std::uint32_t rec_idx) {
        const auto& rec = records_[rec_idx];
        if (integrity_ == IntegrityMode::WithoutBlockchain) return;
        if (chain_mode_ == ChainMode::SingleChain) {
            service_start(single_pool_, false, rec_idx, rec.submit_t);
            return;
        }
        if (rec.onsite) {
            service_start(validator_pools_[shard_of(rec.lot)], false, rec_idx,
                          rec.submit_t);
        } else {
            to_shard_block(rec_idx, rec.submit_t);
        }
    }

    // ---- records and checkpoints -------------------------------------------

    enum class Checkpoint { None, PreHarvest, HarvestWindow, FinalQuality };

    static Checkpoint checkpoint_for(OperationUnit op) {
        switch (op) {
            case OperationUnit::PreHarvestTest: return Checkpoint::PreHarvest;
            case OperationUnit::Harvest: return Checkpoint::HarvestWindow;
            case OperationUnit::PLC: return Checkpoint::FinalQuality;
            default: return Checkpoint::None;
        }
    }

    void count_false_pass(Checkpoint cp) {
        // Structural safety: reaching this site under with-blockchain mode
        // is a bug, not a metric.
        if (integrity_ != IntegrityMode::WithoutBlockchain) {
            throw SimError("false pass generated in with-blockchain mode");
        }
        switch (cp) {
            case Checkpoint::PreHarvest: ++metrics_.false_pass_preharvest; break;
            case Checkpoint::HarvestWindow: ++metrics_.false_pass_harvest; break;
            case Checkpoint::FinalQuality: ++metrics_.fake_qualified; break;
            default: break;
        }
    }

    /// Creates the record, applies the regulated-checkpoint outcome to the
    /// lot, and hands the record to the verification network. Returns false
    /// when the lot is destroyed at this checkpoint.
    bool submit_record(std::uint32_t lot, OperationUnit op, double t) {
        const auto& plan = plans_[lot];
        RecordSim rec;
        rec.lot = lot;
        rec.op = op;
        rec.submit_t = t;
        rec.onsite = domain::requires_onsite(op);
        ++metrics_.total_records;
        metrics_.arrivals_by_day[op_index(op)]
                               [static_cast<std::int64_t>(std::floor(t))]++;

        bool lot_survives = true;
        const Checkpoint cp = checkpoint_for(op);
        if (cp != Checkpoint::None) {
            bool violation = false;
            double tamper_draw = 1.0;
            switch (cp) {
                case Checkpoint::PreHarvest:
                    violation = plan.thc_violation;
                    tamper_draw = plan.tamper_draw_pre;
                    break;
                case Checkpoint::HarvestWindow:
                    violation = plan.window_violation;
                    tamper_draw = plan.tamper_draw_harvest;
                    break;
                case Checkpoint::FinalQuality:
                    violation = plan.final_violation;
                    tamper_draw = plan.tamper_draw_final;
                    break;
                default: break;
            }
            // Only a lot with something to hide attempts tampering.
            const bool tampered =
                violation && tamper_draw < cfg_.tamper_probability;
            if (integrity_ == IntegrityMode::WithBlockchain) {
                // On-site inspection sees the ground truth: a falsified
                // record is rejected, an honest one (violating or not) is
                // approved; the violation itself surfaces either way.
                rec.approved = !tampered;
                lot_survives = !violation;
            } else {
                rec.approved = true;
                if (violation && tampered) {
                    count_false_pass(cp);
                    lot_survives = true;
                } else {
                    lot_survives = !violation;
                }
            }
        }

        const auto rec_idx = static_cast<std::uint32_t>(records_.size());
        records_.push_back(rec);
        submit_to_network(rec_idx);

        if (!lot_survives) {
            alive_[lot] = false;
            ++metrics_.destroyed;
        }
        return lot_survives;
    }

    // ---- lot timeline -------------------------------------------------------

    void milestone(std::uint32_t lot, Milestone m, double t) {
        const auto& p = plans_[lot];
        switch (m) {
            case Milestone::SeedSourcing:
                submit_record(lot, OperationUnit::SeedSourcing, t);
                push(t + p.seed_pickup_delay, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::SeedPickup));
                break;
            case Milestone::SeedPickup:
                submit_record(lot, OperationUnit::SeedPickup, t);
                push(t + p.seed_transit, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::SeedArrival));
                break;
            case Milestone::SeedArrival: {
                submit_record(lot, OperationUnit::SeedArrival, t);
                const double ready =
                    t + std::max(p.germination + cfg_.holding_days,
                                 p.soil_prep);
                push(ready, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::TransplantRequest));
                break;
            }
            case Milestone::TransplantRequest:
                machine_request(t, lot, p.transplant_service,
                                Milestone::TransplantDone);
                break;
            case Milestone::TransplantDone:
                submit_record(lot,
                              OperationUnit::GerminationFieldPreparation, t);
                push(t + p.cultivation, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::CultivationDone));
                break;
            case Milestone::CultivationDone:
                submit_record(lot, OperationUnit::Cultivation, t);
                push(t + p.sample_delay, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::Sample));
                break;
            case Milestone::Sample:
                submit_record(lot, OperationUnit::PreHarvestSample, t);
                machine_request(t, lot, p.test_service, Milestone::TestDone);
                break;
            case Milestone::TestDone:
                if (submit_record(lot, OperationUnit::PreHarvestTest, t)) {
                    push(t + p.harvest_delay, EvKind::Milestone, lot,
                         static_cast<std::uint8_t>(Milestone::HarvestRequest));
                }
                break;
            case Milestone::HarvestRequest:
                machine_request(t, lot, p.harvest_service,
                                Milestone::HarvestDone);
                break;
            case Milestone::HarvestDone:
                if (submit_record(lot, OperationUnit::Harvest, t)) {
                    push(t + p.ih_pickup_delay, EvKind::Milestone, lot,
                         static_cast<std::uint8_t>(Milestone::IHPickup));
                }
                break;
            case Milestone::IHPickup:
                submit_record(lot, OperationUnit::IHPickup, t);
                push(t + p.ih_transit, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::IHArrival));
                break;
            case Milestone::IHArrival:
                submit_record(lot, OperationUnit::IHArrival, t);
                machine_request(t, lot, p.drying_service, Milestone::DryDone);
                break;
            case Milestone::DryDone:
                submit_record(lot, OperationUnit::DryingStabilizing, t);
                push(t + p.dried_pickup_delay, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::DriedPickup));
                break;
            case Milestone::DriedPickup:
                submit_record(lot, OperationUnit::DriedIHPickup, t);
                push(t + p.dried_transit, EvKind::Milestone, lot,
                     static_cast<std::uint8_t>(Milestone::DriedArrival));
                break;
            case Milestone::DriedArrival:
                submit_record(lot, OperationUnit::DriedIHArrival, t);
                machine_request(t, lot, p.extraction_service,
                                Milestone::ExtractDone);
                break;
            case Milestone::ExtractDone:
                submit_record(lot, OperationUnit::Extraction, t);
                machine_request(t, lot, p.winterization_service,
                                Milestone::WinterDone);
                break;
            case Milestone::WinterDone:
                submit_record(lot, OperationUnit::Winterization, t);
                machine_request(t, lot, p.plc_service, Milestone::PlcDone);
                break;
            case Milestone::PlcDone:
                if (submit_record(lot, OperationUnit::PLC, t)) {
                    ++metrics_.completed;
                }
                break;
        }
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EvKind::Milestone:
                milestone(ev.a, static_cast<Milestone>(ev.b), ev.t);
                break;
            case EvKind::MachineDone: {
                const auto m = static_cast<Milestone>(ev.b);
                machine_release(ev.t, m);
                milestone(ev.a, m, ev.t);
                break;
            }
            case EvKind::VerifyDone: {
                auto& rec = records_[ev.a];
                const bool single = chain_mode_ == ChainMode::SingleChain;
                auto& pool = single ? single_pool_
                                    : validator_pools_[shard_of(rec.lot)];
                service_release(pool, false, ev.t);
                if (rec.onsite) {
                    metrics_.onsite_wait_minutes[op_index(rec.op)].push_back(
                        (ev.t - rec.submit_t) * kMinutesPerDay);
                }
                if (!rec.approved) break;  // rejected: dropped, never blocked
                if (single) {
                    const std::int64_t tick = single_sched_.assign_tick(ev.t);
                    push(single_sched_.tick_time(tick), EvKind::CommitSingle,
                         ev.a);
                } else {
                    to_shard_block(ev.a, ev.t);
                }
                break;
            }
            case EvKind::HeaderReady:
                service_start(confirm_pool_, true, ev.a, ev.t);
                break;
            case EvKind::ConfirmDone: {
                service_release(confirm_pool_, true, ev.t);
                const std::int64_t tick = root_sched_.assign_tick(ev.t);
                push(root_sched_.tick_time(tick), EvKind::CommitGroup, ev.a);
                break;
            }
            case EvKind::CommitGroup: {
                const auto& group = groups_[ev.a];
                for (const auto rec_idx : group.records) {
                    commit_record(rec_idx, ev.t);
                }
                commit_counts_[static_cast<std::int64_t>(
                    std::llround(ev.t / root_sched_.interval_days))] +=
                    group.records.size();
                break;
            }
            case EvKind::CommitSingle:
                commit_record(ev.a, ev.t);
                commit_counts_[static_cast<std::int64_t>(
                    std::llround(ev.t / single_sched_.interval_days))] += 1;
                break;
        }
    }

    void commit_record(std::uint32_t rec_idx, double t) {
        const auto& rec = records_[rec_idx];
        ++metrics_.committed_records;
        metrics_.online_wait_minutes[op_index(rec.op)].push_back(
            (t - rec.submit_t) * kMinutesPerDay);
    }

    void finalize() {
        const double lots = static_cast<double>(metrics_.lots);
        metrics_.q_fp = metrics_.false_pass_preharvest / lots;
        metrics_.q_fh = metrics_.false_pass_harvest / lots;
        metrics_.q_fq = metrics_.fake_qualified / lots;

        const double interval_min =
            (chain_mode_ == ChainMode::SingleChain
                 ? static_cast<double>(cfg_.single_interval_s)
                 : static_cast<double>(cfg_.root_interval_s)) /
            60.0;
        for (const auto& [tick, count] : commit_counts_) {
            metrics_.max_commit_rate_per_min =
                std::max(metrics_.max_commit_rate_per_min,
                         static_cast<double>(count) / interval_min);
        }
    }

    SimConfig cfg_;
    ChainMode chain_mode_;
    IntegrityMode integrity_;
    SeasonMetrics metrics_;

    std::priority_queue<Event, std::vector<Event>, EventOrder> events_;
    std::uint64_t seq_ = 0;

    std::vector<LotPlan> plans_;
    std::vector<bool> alive_;
    std::array<MachinePool, 4> machines_{};

    std::vector<ServicePool> validator_pools_;
    ServicePool confirm_pool_;
    ServicePool single_pool_;

    std::vector<TickScheduler> shard_sched_;
    TickScheduler root_sched_;
    TickScheduler single_sched_;

    std::vector<RecordSim> records_;
    std::vector<BlockGroup> groups_;
    std::map<std::pair<std::uint32_t, std::int64_t>, std::uint32_t>
        group_index_;
    std::map<std::int64_t, std::uint64_t> commit_counts_;
};

void write_wait_csv(const std::filesystem::path& path,
                    const std::array<std::vector<double>,
                                     domain::kOperationCount>& samples) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw SimError("cannot write " + path.string());
    out << "operation,samples,p5_minutes,p50_minutes,p95_minutes,mean_minutes\n";
    char buf[64];
    for (auto op : domain::all_operations()) {
        const auto& s = samples[op_index(op)];
        if (s.empty()) continue;
        double mean = 0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        out << domain::operation_name(op) << ',' << s.size();
        for (double v : {waiting_percentile(s, 5), waiting_percentile(s, 50),
                         waiting_percentile(s, 95), mean}) {
            std::snprintf(buf, sizeof(buf), ",%.6f", v);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace

ChainMode chain_mode_from_name(std::string_view name) {
    if (name == "two_layer") return ChainMode::TwoLayer;
    if (name == "single_chain") return ChainMode::SingleChain;
    throw SimError("unknown chain mode: " + std::string(name));
}

IntegrityMode integrity_mode_from_name(std::string_view name) {
    if (name == "with") return IntegrityMode::WithBlockchain;
    if (name == "without") return IntegrityMode::WithoutBlockchain;
    throw SimError("unknown integrity mode: " + std::string(name));
}

std::uint64_t SimConfig::scaled(std::uint64_t full) const {
    const auto v = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(full) * scale));
    if (v == 0) {
        throw SimError("scaling factor " + std::to_string(scale) +
                       " zeroes a resource pool (baseline " +
                       std::to_string(full) + ")");
    }
    return v;
}

void SimConfig::validate() const {
    if (scale <= 0) throw SimError("scale must be positive");
    for (double p : {tamper_probability, p_thc_violation,
                     p_harvest_window_violation, p_final_quality_violation}) {
        if (p < 0 || p > 1) throw SimError("probabilities must be in [0,1]");
    }
    if (shard_count == 0) throw SimError("shard count must be positive");
    if (shard_interval_s <= 0 || root_interval_s <= 0 ||
        single_interval_s <= 0) {
        throw SimError("block intervals must be positive");
    }
    if (shard_block_capacity == 0 || root_block_capacity == 0 ||
        single_block_capacity == 0) {
        throw SimError("block capacities must be positive");
    }
    // every pool must survive scaling
    scaled(lot_count);
    scaled(transplant_harvest_machines);
    scaled(test_equipment);
    scaled(drying_machines);
    scaled(processing_machines);
    scaled(validators_per_shard);
    scaled(regulators);
}

namespace {

StageRange range_from_json(const nlohmann::json& j, StageRange fallback) {
    if (j.is_array() && j.size() == 2) {
        return StageRange{j[0].get<double>(), j[1].get<double>()};
    }
    return fallback;
}

}  // namespace

SimConfig SimConfig::from_json(const nlohmann::json& j) {
    SimConfig c;
    c.lot_count = j.value("lots", c.lot_count);
    c.transplant_harvest_machines =
        j.value("transplant_harvest_machines", c.transplant_harvest_machines);
    c.test_equipment = j.value("test_equipment", c.test_equipment);
    c.drying_machines = j.value("drying_machines", c.drying_machines);
    c.processing_machines =
        j.value("processing_machines", c.processing_machines);
    c.shard_count = j.value("shard_count", c.shard_count);
    c.validators_per_shard =
        j.value("validators_per_shard", c.validators_per_shard);
    c.regulators = j.value("regulators", c.regulators);
    c.scale = j.value("scale", c.scale);
    c.tamper_probability = j.value("tamper_probability", c.tamper_probability);
    c.onsite_service_mean_days =
        j.value("onsite_service_mean_days", c.onsite_service_mean_days);
    c.confirm_service_mean_days =
        j.value("confirm_service_mean_days", c.confirm_service_mean_days);
    c.single_service_mean_days =
        j.value("single_service_mean_days", c.single_service_mean_days);
    c.shard_interval_s = j.value("shard_interval", c.shard_interval_s);
    c.root_interval_s = j.value("root_interval", c.root_interval_s);
    c.shard_block_capacity =
        j.value("shard_block_capacity", c.shard_block_capacity);
    c.root_block_capacity =
        j.value("root_block_capacity", c.root_block_capacity);
    c.single_block_capacity =
        j.value("single_block_capacity", c.single_block_capacity);
    c.single_interval_s = j.value("single_interval", c.single_interval_s);
    c.p_thc_violation = j.value("p_thc_violation", c.p_thc_violation);
    c.p_harvest_window_violation =
        j.value("p_harvest_window_violation", c.p_harvest_window_violation);
    c.p_final_quality_violation =
        j.value("p_final_quality_violation", c.p_final_quality_violation);
    c.start_window_days = j.value("start_window_days", c.start_window_days);
    c.holding_days = j.value("holding_days", c.holding_days);
    if (j.contains("stages")) {
        const auto& s = j.at("stages");
        auto get = [&](const char* key, StageRange r) {
            return s.contains(key) ? range_from_json(s.at(key), r) : r;
        };
        c.seed_pickup_delay = get("seed_pickup_delay", c.seed_pickup_delay);
        c.transit = get("transit", c.transit);
        c.germination = get("germination", c.germination);
        c.soil_preparation = get("soil_preparation", c.soil_preparation);
        c.transplant_service = get("transplant_service", c.transplant_service);
        c.cultivation = get("cultivation", c.cultivation);
        c.sample_delay = get("sample_delay", c.sample_delay);
        c.test_service = get("test_service", c.test_service);
        c.harvest_delay_compliant =
            get("harvest_delay_compliant", c.harvest_delay_compliant);
        c.harvest_delay_violating =
            get("harvest_delay_violating", c.harvest_delay_violating);
        c.harvest_service = get("harvest_service", c.harvest_service);
        c.pickup_delay = get("pickup_delay", c.pickup_delay);
        c.drying_service = get("drying_service", c.drying_service);
        c.dried_pickup_delay =
            get("dried_pickup_delay", c.dried_pickup_delay);
        c.extraction_service =
            get("extraction_service", c.extraction_service);
        c.winterization_service =
            get("winterization_service", c.winterization_service);
        c.plc_service = get("plc_service", c.plc_service);
    }
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

SimConfig SimConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot open sim config " + path.string());
    return from_json(nlohmann::json::parse(in));
}

std::uint64_t SeasonMetrics::arrivals_total() const {
    std::uint64_t total = 0;
    for (const auto& per_op : arrivals_by_day) {
        for (const auto& [day, count] : per_op) total += count;
    }
    return total;
}

SeasonMetrics run_season(const SimConfig& config, ChainMode chain_mode,
                         IntegrityMode integrity) {
    config.validate();
    SeasonEngine engine(config, chain_mode, integrity);
    return engine.run();
}

double waiting_percentile(std::vector<double> samples, double p) {
    if (samples.empty()) {
        throw SimError("no waiting-time samples for percentile");
    }
    if (p < 0 || p > 100) throw SimError("percentile out of range");
    std::sort(samples.begin(), samples.end());
    // nearest-rank
    auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(samples.size())));
    if (rank == 0) rank = 1;
    return samples[rank - 1];
}

double waiting_percentile(const SeasonMetrics& metrics,
                          domain::OperationUnit op, double p, bool onsite) {
    const auto& samples = onsite ? metrics.onsite_wait_minutes[op_index(op)]
                                 : metrics.online_wait_minutes[op_index(op)];
    return waiting_percentile(samples, p);
}

double commit_ceiling_per_min(const SimConfig& config, ChainMode chain_mode) {
    if (chain_mode == ChainMode::SingleChain) {
        return static_cast<double>(config.single_block_capacity) /
               (static_cast<double>(config.single_interval_s) / 60.0);
    }
    return static_cast<double>(config.shard_count) *
           static_cast<double>(config.shard_block_capacity) /
           (static_cast<double>(config.shard_interval_s) / 60.0);
}

double measure_commit_ceiling(const SimConfig& config, ChainMode chain_mode,
                              double horizon_minutes) {
    const double horizon_days = horizon_minutes / kMinutesPerDay;
    const double warmup_days = horizon_days / 3.0;
    const double ceiling = commit_ceiling_per_min(config, chain_mode);
    const auto flood = static_cast<std::uint64_t>(
        std::ceil(ceiling * horizon_minutes * 2.0));

    // commit times of the flooded records
    std::vector<double> commits;
    commits.reserve(flood);
    if (chain_mode == ChainMode::SingleChain) {
        TickScheduler sched{seconds_to_days(config.single_interval_s),
                            config.single_block_capacity};
        for (std::uint64_t r = 0; r < flood; ++r) {
            commits.push_back(sched.tick_time(sched.assign_tick(0.0)));
        }
    } else {
        std::vector<TickScheduler> shard_sched(
            config.shard_count,
            TickScheduler{seconds_to_days(config.shard_interval_s),
                          config.shard_block_capacity});
        // (block time, shard) -> records per produced shard block
        std::map<std::pair<double, std::uint32_t>, std::uint64_t> headers;
        for (std::uint64_t r = 0; r < flood; ++r) {
            const auto shard = static_cast<std::uint32_t>(
                r % config.shard_count);
            auto& sched = shard_sched[shard];
            headers[{sched.tick_time(sched.assign_tick(0.0)), shard}] += 1;
        }
        TickScheduler root{seconds_to_days(config.root_interval_s),
                           config.root_block_capacity};
        for (const auto& [key, count] : headers) {
            // instant confirmation: header eligible at its block time
            const double t = root.tick_time(root.assign_tick(key.first));
            for (std::uint64_t c = 0; c < count; ++c) commits.push_back(t);
        }
    }

    // Steady-state rate over a tick-aligned window so that the batch at a
    // boundary is attributed to the interval it closes.
    double window_start = -1, window_end = -1;
    std::uint64_t committed = 0;
    for (double t : commits) {
        if (t > warmup_days && (window_start < 0 || t < window_start)) {
            window_start = t;
        }
        if (t <= horizon_days && t > window_end) window_end = t;
    }
    if (window_start < 0 || window_end <= window_start) {
        throw SimError("saturation horizon too short to measure");
    }
    for (double t : commits) {
        if (t > window_start && t <= window_end) ++committed;
    }
    return static_cast<double>(committed) /
           ((window_end - window_start) * kMinutesPerDay);
}

void export_metrics(const SeasonMetrics& metrics,
                    const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "arrivals.csv", std::ios::trunc);
        if (!out) throw SimError("cannot write arrivals.csv");
        out << "operation,day,count\n";
        for (auto op : domain::all_operations()) {
            for (const auto& [day, count] :
                 metrics.arrivals_by_day[op_index(op)]) {
                out << domain::operation_name(op) << ',' << day << ','
                    << count << '\n';
            }
        }
    }
    write_wait_csv(out_dir / "waits_online.csv", metrics.online_wait_minutes);
    write_wait_csv(out_dir / "waits_onsite.csv", metrics.onsite_wait_minutes);
}

void export_safety(const std::vector<std::pair<std::uint64_t, SeasonMetrics>>&
                       replications,
                   const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir / "safety.csv", std::ios::trunc);
    if (!out) throw SimError("cannot write safety.csv");
    out << "seed,q_fp,q_fh,q_fq,lots,destroyed,completed\n";
    char buf[128];
    std::array<std::vector<double>, 3> columns;
    for (const auto& [seed, m] : replications) {
        std::snprintf(buf, sizeof(buf), "%llu,%.6f,%.6f,%.6f,%llu,%llu,%llu\n",
                      static_cast<unsigned long long>(seed), m.q_fp, m.q_fh,
                      m.q_fq, static_cast<unsigned long long>(m.lots),
                      static_cast<unsigned long long>(m.destroyed),
                      static_cast<unsigned long long>(m.completed));
        out << buf;
        columns[0].push_back(m.q_fp);
        columns[1].push_back(m.q_fh);
        columns[2].push_back(m.q_fq);
    }
    if (replications.size() >= 2) {
        double mean[3], half[3];
        const auto n = static_cast<double>(replications.size());
        for (int c = 0; c < 3; ++c) {
            mean[c] = 0;
            for (double v : columns[c]) mean[c] += v;
            mean[c] /= n;
            double var = 0;
            for (double v : columns[c]) var += (v - mean[c]) * (v - mean[c]);
            var /= (n - 1);
            half[c] = 1.96 * std::sqrt(var / n);
        }
        std::snprintf(buf, sizeof(buf), "mean,%.6f,%.6f,%.6f,,,\n", mean[0],
                      mean[1], mean[2]);
        out << buf;
        std::snprintf(buf, sizeof(buf), "ci95,%.6f,%.6f,%.6f,,,\n", half[0],
                      half[1], half[2]);
        out << buf;
    }
}

}  // namespace ihsc::sim
