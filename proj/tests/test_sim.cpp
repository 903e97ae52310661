#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "ihsc/sim.hpp"

using namespace ihsc;
using namespace ihsc::sim;
using domain::OperationUnit;

namespace fs = std::filesystem;

namespace {

SimConfig desk_config(std::uint64_t seed) {
    SimConfig cfg;  // paper baselines, desk scale 1/40
    cfg.seed = seed;
    return cfg;
}

SimConfig small_config(std::uint64_t seed) {
    SimConfig cfg;
    cfg.lot_count = 8000;  // 200 lots at desk scale
    cfg.seed = seed;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("with blockchain no false pass is possible, any seed or p2") {
    for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
        auto cfg = small_config(seed);
        cfg.tamper_probability = 0.8;  // even under heavy tampering
        auto m = run_season(cfg, ChainMode::TwoLayer,
                            IntegrityMode::WithBlockchain);
        CHECK(m.false_pass_preharvest == 0);
        CHECK(m.false_pass_harvest == 0);
        CHECK(m.fake_qualified == 0);
        CHECK(m.q_fp == 0.0);
        CHECK(m.q_fh == 0.0);
        CHECK(m.q_fq == 0.0);
    }
}

TEST_CASE("without blockchain and zero tampering all rates are zero") {
    auto cfg = small_config(3);
    cfg.tamper_probability = 0.0;
    auto m = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithoutBlockchain);
    CHECK(m.q_fp == 0.0);
    CHECK(m.q_fh == 0.0);
    CHECK(m.q_fq == 0.0);
}

TEST_CASE("without blockchain rates land near the violation-model products") {
    // q_fp ~ p_thc * p2; q_fh ~ (1 - p_thc(1-p2)) * p_hw * p2;
    // q_fq ~ survivors * p_fq * p2. Desk scale, one seed, generous bands.
    auto cfg = desk_config(12);
    auto m = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithoutBlockchain);
    CHECK(m.lots == 1000);
    CHECK(m.q_fp > 0.010);
    CHECK(m.q_fp < 0.055);
    CHECK(m.q_fh > 0.010);
    CHECK(m.q_fh < 0.055);
    CHECK(m.q_fq > 0.0005);
    CHECK(m.q_fq < 0.015);
}

TEST_CASE("false-pass rates are monotone in the tamper probability (CRN)") {
    for (std::uint64_t seed : {5ull, 6ull}) {
        double prev_fp = -1, prev_fh = -1, prev_fq = -1;
        for (double p2 : {0.0, 0.15, 0.30}) {
            auto cfg = desk_config(seed);
            cfg.tamper_probability = p2;
            auto m = run_season(cfg, ChainMode::TwoLayer,
                                IntegrityMode::WithoutBlockchain);
            CHECK(m.q_fp >= prev_fp);
            CHECK(m.q_fh >= prev_fh);
            CHECK(m.q_fq >= prev_fq);
            prev_fp = m.q_fp;
            prev_fh = m.q_fh;
            prev_fq = m.q_fq;
        }
    }
}

TEST_CASE("every lot ends in exactly one terminal state") {
    for (auto integrity : {IntegrityMode::WithBlockchain,
                           IntegrityMode::WithoutBlockchain}) {
        auto cfg = small_config(9);
        auto m = run_season(cfg, ChainMode::TwoLayer, integrity);
        CHECK(m.destroyed + m.completed == m.lots);
    }
}

TEST_CASE("identical config and seed reproduce identical metrics") {
    auto cfg = small_config(21);
    auto a = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithBlockchain);
    auto b = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithBlockchain);
    CHECK(a.total_records == b.total_records);
    CHECK(a.committed_records == b.committed_records);
    CHECK(a.destroyed == b.destroyed);
    CHECK(a.online_wait_minutes == b.online_wait_minutes);
    CHECK(a.onsite_wait_minutes == b.onsite_wait_minutes);
    CHECK(a.arrivals_by_day == b.arrivals_by_day);
}

TEST_CASE("waiting percentile is nearest-rank and ordered") {
    CHECK(waiting_percentile({10.0, 10.0, 10.0}, 5) == 10.0);
    CHECK(waiting_percentile({10.0, 10.0, 10.0}, 50) == 10.0);
    CHECK(waiting_percentile({10.0, 10.0, 10.0}, 95) == 10.0);

    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(static_cast<double>(i));
    CHECK(waiting_percentile(v, 5) == 5.0);
    CHECK(waiting_percentile(v, 50) == 50.0);
    CHECK(waiting_percentile(v, 95) == 95.0);
    CHECK_THROWS_AS(waiting_percentile({}, 50), SimError);

    auto cfg = small_config(31);
    auto m = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithBlockchain);
    for (auto op : domain::all_operations()) {
        const auto& samples =
            m.online_wait_minutes[static_cast<size_t>(op)];
        if (samples.empty()) continue;
        const double p5 = waiting_percentile(m, op, 5);
        const double p50 = waiting_percentile(m, op, 50);
        const double p95 = waiting_percentile(m, op, 95);
        CHECK(p5 <= p50);
        CHECK(p50 <= p95);
    }
}

TEST_CASE("two-layer online waits sit below single-chain at equal load") {
    auto cfg = small_config(41);
    auto two = run_season(cfg, ChainMode::TwoLayer,
                          IntegrityMode::WithBlockchain);
    auto one = run_season(cfg, ChainMode::SingleChain,
                          IntegrityMode::WithBlockchain);
    CHECK(two.total_records == one.total_records);  // identical arrivals
    int compared = 0;
    for (auto op : domain::all_operations()) {
        const auto idx = static_cast<size_t>(op);
        if (two.online_wait_minutes[idx].size() < 50) continue;
        REQUIRE(one.online_wait_minutes[idx].size() ==
                two.online_wait_minutes[idx].size());
        CHECK(waiting_percentile(two, op, 50) < waiting_percentile(one, op, 50));
        CHECK(waiting_percentile(two, op, 95) < waiting_percentile(one, op, 95));
        ++compared;
    }
    CHECK(compared >= 10);

    // on-site verification waits improve as well
    for (auto op : {OperationUnit::PreHarvestTest, OperationUnit::Harvest,
                    OperationUnit::PLC}) {
        CHECK(waiting_percentile(two, op, 50, true) <
              waiting_percentile(one, op, 50, true));
    }
}

TEST_CASE("measured commit rates respect the block-parameter ceilings") {
    auto cfg = small_config(51);
    auto two = run_season(cfg, ChainMode::TwoLayer,
                          IntegrityMode::WithBlockchain);
    CHECK(two.max_commit_rate_per_min <=
          commit_ceiling_per_min(cfg, ChainMode::TwoLayer) + 1e-9);
    auto one = run_season(cfg, ChainMode::SingleChain,
                          IntegrityMode::WithBlockchain);
    CHECK(one.max_commit_rate_per_min <=
          commit_ceiling_per_min(cfg, ChainMode::SingleChain) + 1e-9);
}

TEST_CASE("a saturating workload reaches the throughput ceilings") {
    SimConfig cfg;
    // ceilings from the block parameters: 4 shards x 4 / 15 s and 4 / 1.5 min
    CHECK(commit_ceiling_per_min(cfg, ChainMode::TwoLayer) ==
          doctest::Approx(64.0));
    CHECK(commit_ceiling_per_min(cfg, ChainMode::SingleChain) ==
          doctest::Approx(8.0 / 3.0));

    for (auto mode : {ChainMode::TwoLayer, ChainMode::SingleChain}) {
        const double ceiling = commit_ceiling_per_min(cfg, mode);
        const double measured = measure_commit_ceiling(cfg, mode, 30.0);
        CHECK(measured <= ceiling * 1.0001);
        CHECK(measured >= ceiling * 0.90);
    }
}

TEST_CASE("arrival counts cross-check against the record log") {
    auto cfg = small_config(61);
    auto m = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithBlockchain);
    CHECK(m.arrivals_total() == m.total_records);
    CHECK(m.committed_records <= m.total_records);
    // every op type gathered arrivals
    std::uint64_t ops_with_arrivals = 0;
    for (const auto& per_op : m.arrivals_by_day) {
        if (!per_op.empty()) ++ops_with_arrivals;
    }
    CHECK(ops_with_arrivals == domain::kOperationCount);
}

TEST_CASE("metric exports are byte-stable for a fixed seed") {
    auto cfg = small_config(71);
    auto m = run_season(cfg, ChainMode::TwoLayer,
                        IntegrityMode::WithBlockchain);
    fs::path dir = fs::temp_directory_path() /
                   ("ihsc-sim-test-" + std::to_string(::getpid()));
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    export_metrics(m, dir / "a");
    export_metrics(m, dir / "b");
    for (const char* name :
         {"arrivals.csv", "waits_online.csv", "waits_onsite.csv"}) {
        CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
        CHECK_FALSE(slurp(dir / "a" / name).empty());
    }

    std::vector<std::pair<std::uint64_t, SeasonMetrics>> reps;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto c = small_config(seed);
        reps.emplace_back(seed, run_season(c, ChainMode::TwoLayer,
                                           IntegrityMode::WithoutBlockchain));
    }
    export_safety(reps, dir / "a");
    export_safety(reps, dir / "b");
    CHECK(slurp(dir / "a" / "safety.csv") == slurp(dir / "b" / "safety.csv"));
    fs::remove_all(dir);
}

TEST_CASE("scaling that zeroes a pool is a config error") {
    SimConfig cfg;
    cfg.scale = 1e-6;
    CHECK_THROWS_AS(cfg.validate(), SimError);
    CHECK_THROWS_AS(
        run_season(cfg, ChainMode::TwoLayer, IntegrityMode::WithBlockchain),
        SimError);

    SimConfig bad;
    bad.tamper_probability = 1.5;
    CHECK_THROWS_AS(bad.validate(), SimError);
}

TEST_CASE("mode names parse") {
    CHECK(chain_mode_from_name("two_layer") == ChainMode::TwoLayer);
    CHECK(chain_mode_from_name("single_chain") == ChainMode::SingleChain);
    CHECK_THROWS_AS(chain_mode_from_name("x"), SimError);
    CHECK(integrity_mode_from_name("with") == IntegrityMode::WithBlockchain);
    CHECK(integrity_mode_from_name("without") ==
          IntegrityMode::WithoutBlockchain);
    CHECK_THROWS_AS(integrity_mode_from_name("x"), SimError);
}
