#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ugrasp/harness/commands.hpp"
#include "ugrasp/sim/gridio.hpp"

using namespace ugrasp;
using namespace ugrasp::harness;

namespace {

namespace fs = std::filesystem;

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

train::RunConfig tiny_config(uint64_t seed) {
    train::RunConfig config;
    config.seed = seed;
    config.n_members = 2;
    config.model.patch_window = 3;
    config.model.hidden = {8};
    config.pretrain_steps = 30;
    config.training_steps = 24;
    config.checkpoint_every = 12;
    config.sync_mode = true;
    config.export_maps = false;
    config.scene_gen.rows = 24;
    config.scene_gen.cols = 24;
    config.objects_min = 3;
    config.objects_max = 4;
    config.offline_scenes = 2;
    config.offline_objects_min = 2;
    config.offline_objects_max = 3;
    config.ucb.horizon = 24;
    return config;
}

}  // namespace

TEST_CASE("config file: save, load, overrides, unknown keys") {
    const auto tmp = fs::temp_directory_path() / "ugrasp_cfg";
    fs::create_directories(tmp);
    train::RunConfig config = tiny_config(5);
    config.ucb.delta = 0.75;
    config.model.critic.kind = critic::CriticKind::quantile;
    config.model.critic.quantile_count = 10;
    train::save_run_config(config, (tmp / "run.cfg").string());

    const train::RunConfig back = train::load_run_config((tmp / "run.cfg").string());
    CHECK(back.seed == 5);
    CHECK(back.ucb.delta == 0.75);
    CHECK(back.model.critic.kind == critic::CriticKind::quantile);
    CHECK(back.model.critic.quantile_count == 10);
    CHECK(back.sync_mode == true);

    train::RunConfig o;
    train::apply_config_pair(o, "uncertainty", "epi");
    train::apply_config_pair(o, "schedule", "cosine");
    CHECK(o.ucb.kind == actor::UncertaintyKind::epistemic);
    CHECK(o.ucb.schedule == actor::ScheduleKind::cosine_adaptive);
    CHECK_THROWS_AS(train::apply_config_pair(o, "no_such_key", "1"), std::invalid_argument);

    fs::remove_all(tmp);
}

TEST_CASE("gen-offline: empty run, determinism") {
    const auto tmp = fs::temp_directory_path() / "ugrasp_gen";
    fs::remove_all(tmp);

    train::RunConfig config = tiny_config(1);
    cmd_gen_offline(config, 0, 5, 10, sim::Difficulty::easy, (tmp / "empty").string());
    CHECK(fs::exists(tmp / "empty" / "dataset.manifest"));
    CHECK(!fs::exists(tmp / "empty" / ".partial"));
    CHECK(train::load_offline_dataset((tmp / "empty").string()).empty());

    cmd_gen_offline(config, 3, 3, 5, sim::Difficulty::easy, (tmp / "a").string());
    cmd_gen_offline(config, 3, 3, 5, sim::Difficulty::easy, (tmp / "b").string());
    CHECK(file_bytes(tmp / "a" / "sample_00000.bin") == file_bytes(tmp / "b" / "sample_00000.bin"));
    CHECK(file_bytes(tmp / "a" / "sample_00002.bin") == file_bytes(tmp / "b" / "sample_00002.bin"));

    fs::remove_all(tmp);
}

TEST_CASE("pretrain/online/eval command chain") {
    const auto tmp = fs::temp_directory_path() / "ugrasp_chain";
    fs::remove_all(tmp);

    train::RunConfig config = tiny_config(3);
    cmd_gen_offline(config, 2, 3, 4, sim::Difficulty::easy, (tmp / "data").string());
    cmd_pretrain(config, (tmp / "data").string(), (tmp / "pre").string());
    CHECK(fs::exists(tmp / "pre" / "ensemble.manifest"));

    CHECK_THROWS_AS(cmd_pretrain(config, (tmp / "nope").string(), (tmp / "pre2").string()),
                    MissingInput);

    config.pretrained_dir = (tmp / "pre").string();
    config.out_dir = (tmp / "run").string();
    const train::RunArtifacts art = cmd_online(config);
    CHECK(!art.failed);
    CHECK(art.updates == 24);
    // checkpoint cadence: step_0 plus one directory per checkpoint_every steps
    CHECK(fs::exists(tmp / "run" / "checkpoints" / "step_0"));
    CHECK(fs::exists(tmp / "run" / "checkpoints" / "step_12"));
    CHECK(fs::exists(tmp / "run" / "checkpoints" / "step_24"));
    CHECK(fs::exists(tmp / "run" / "config.txt"));
    CHECK(fs::exists(tmp / "run" / "metrics.jsonl"));

    EvalProtocol protocol;
    protocol.scene_seeds = {9001, 9002};
    protocol.n_objects = 4;
    protocol.max_attempts = 10;
    const RunMetrics m1 = cmd_eval((tmp / "run" / "checkpoints" / "step_24").string(), protocol,
                                   config, (tmp / "eval.json").string());
    const RunMetrics m2 = cmd_eval((tmp / "run" / "checkpoints" / "step_24").string(), protocol,
                                   config, "");
    CHECK(m1.grasp_success_rate == m2.grasp_success_rate);
    CHECK(m1.clearing_rate == m2.clearing_rate);
    CHECK(m1.episodes.size() == 2);
    CHECK(m1.checkpoint_step == 24);
    CHECK(fs::exists(tmp / "eval.json"));

    // rates recomputed from the raw episodes match the aggregates exactly
    int64_t attempts = 0, successes = 0, initial = 0, removed = 0;
    for (const auto& ep : m1.episodes) {
        attempts += ep.attempts;
        successes += ep.successes;
        initial += ep.initial_objects;
        removed += ep.initial_objects - ep.remaining;
    }
    CHECK(m1.grasp_success_rate == static_cast<double>(successes) / attempts);
    CHECK(m1.clearing_rate == static_cast<double>(removed) / initial);

    CHECK_THROWS_AS(cmd_eval((tmp / "missing").string(), protocol, config, ""), MissingInput);

    fs::remove_all(tmp);
}

TEST_CASE("ablate: single cell table plus aggregate recomputation") {
    const auto tmp = fs::temp_directory_path() / "ugrasp_ablate";
    fs::remove_all(tmp);

    train::RunConfig config = tiny_config(2);
    EvalProtocol protocol;
    protocol.scene_seeds = {9001};
    protocol.n_objects = 3;
    protocol.max_attempts = 6;

    const AblationTable single = cmd_ablate(config, {"mv"}, {"epi"}, {}, {4}, protocol,
                                            (tmp / "one").string(), 1);
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].ok);
    CHECK(single.rows[0].name == "mv-epi");
    CHECK(fs::exists(single.csv_path));

    const AblationTable grid = cmd_ablate(config, {"mv"}, {"none", "epi-adaptive"}, {}, {4, 5},
                                          protocol, (tmp / "grid").string(), 2);
    REQUIRE(grid.rows.size() == 4);
    int ok = 0;
    for (const auto& row : grid.rows) ok += row.ok;
    CHECK(ok == 4);

    // aggregates in the CSV match recomputation from per-seed rows
    double epi_sum = 0.0;
    int epi_n = 0;
    for (const auto& row : grid.rows)
        if (row.name == "mv-epi-adaptive" && row.ok) {
            epi_sum += row.clearing_rate;
            ++epi_n;
        }
    const double epi_mean = epi_sum / epi_n;
    std::ifstream csv(grid.csv_path);
    std::string line;
    bool found = false;
    while (std::getline(csv, line)) {
        if (line.rfind("mv-epi-adaptive,,,,aggregate", 0) == 0) {
            // config,,,,aggregate,count,success_mean,success_std,clearing_mean,clearing_std
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            REQUIRE(cells.size() == 10);
            CHECK(std::stod(cells[8]) == doctest::Approx(epi_mean).epsilon(1e-9));
            found = true;
        }
    }
    CHECK(found);

    fs::remove_all(tmp);
}

TEST_CASE("export-maps: identical members give an all-zero epistemic map") {
    const auto tmp = fs::temp_directory_path() / "ugrasp_export";
    fs::remove_all(tmp);

    train::RunConfig config = tiny_config(6);
    auto members = train::init_ensemble(config.seed, 3, config.model);
    members[1] = members[0];
    members[2] = members[0];
    train::save_ensemble(members, config.model, (tmp / "ck").string());

    config.objects_max = 4;
    cmd_export_maps((tmp / "ck").string(), 9005, config, (tmp / "maps").string());
    const Grid v_epi = sim::read_grid_csv((tmp / "maps" / "v_epi.csv").string());
    for (size_t i = 0; i < v_epi.size(); ++i) CHECK(v_epi.at_index(i) == 0.0);

    // non-constant maps span the full 16-bit range
    const Grid q_pgm = sim::read_grid_pgm16((tmp / "maps" / "q_mean.pgm").string());
    const Grid q_csv = sim::read_grid_csv((tmp / "maps" / "q_mean.csv").string());
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < q_csv.size(); ++i) {
        lo = std::min(lo, q_csv.at_index(i));
        hi = std::max(hi, q_csv.at_index(i));
    }
    if (hi > lo) {
        double plo = 1e300, phi = -1e300;
        for (size_t i = 0; i < q_pgm.size(); ++i) {
            plo = std::min(plo, q_pgm.at_index(i));
            phi = std::max(phi, q_pgm.at_index(i));
        }
        CHECK(plo == doctest::Approx(lo).epsilon(1e-9));
        CHECK(phi == doctest::Approx(hi).epsilon(1e-9));
    }

    CHECK_THROWS_AS(cmd_export_maps((tmp / "absent").string(), 1, config, (tmp / "m2").string()),
                    MissingInput);
    fs::remove_all(tmp);
}

#ifdef UGRASP_CLI_PATH
TEST_CASE("CLI: exit codes for missing inputs and bad flags") {
    const std::string cli = UGRASP_CLI_PATH;
    const auto tmp = fs::temp_directory_path() / "ugrasp_cli_test";
    fs::create_directories(tmp);

    // missing checkpoint -> documented exit code 3
    const int missing = std::system(
        (cli + " --out " + (tmp / "o").string() + " eval --checkpoint " + (tmp / "nope").string() +
         " >/dev/null 2>&1")
            .c_str());
    CHECK(WEXITSTATUS(missing) == 3);

    // unknown config key -> exit code 2
    const int bad = std::system(
        (cli + " --set bogus=1 eval --checkpoint x >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(bad) == 2);

    // usage error -> CLI11's exit code
    const int usage = std::system((cli + " no-such-subcommand >/dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(usage) != 0);

    fs::remove_all(tmp);
}
#endif
