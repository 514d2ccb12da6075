#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plepi/report.hpp"
#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Outcome {
    int code = -1;
    std::string output;
};

/// Runs the CLI with `args`, capturing stdout and stderr together.
Outcome run(const std::string& args, const fs::path& dir) {
    const auto log = dir / "cli.log";
    const std::string cmd = "cd \"" + dir.string() + "\" && \"" + PLEPI_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.output = read(log);
    return o;
}

/// Writes a config into `dir` whose codebook is the committed benchmark book
/// and whose outputs land in `dir/out`.
fs::path write_config(const fs::path& dir, std::string text, const std::string& extra_run = "") {
    const std::string head = "[run]\n";
    text.insert(head.size(), "codebook = " + (testing::bench_dir() / "codebook_186.csv").string() +
                                 "\nout = out\n" + extra_run);
    const auto path = dir / "run.ini";
    std::ofstream(path) << text;
    return path;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("bad inputs exit with code 2 and name the problem") {
    const auto dir = testing::scratch_dir("cli_errors");
    auto o = run("pipeline --config " + quoted(dir / "absent.ini"), dir);
    CHECK(o.code == 2);
    CHECK(o.output.find("absent.ini") != std::string::npos);

    std::ofstream(dir / "bad.ini") << "[sim]\nphasing = lots\n";
    CHECK(run("pipeline --config " + quoted(dir / "bad.ini"), dir).code == 2);

    std::ofstream(dir / "nobook.ini") << "[run]\ncodebook = nowhere.csv\n"
                                         "labeled_fields = 0\nunlabeled_fields = 1\ntest_fields = 2\n"
                                         "[sim]\nn_fields = 3\n";
    o = run("simulate --config " + quoted(dir / "nobook.ini"), dir);
    CHECK(o.code == 2);
    CHECK(o.output.find("nowhere.csv") != std::string::npos);

    const auto cfg = write_config(dir, testing::noiseless_config_text());
    o = run("pipeline --config " + quoted(cfg) + " --quality mq", dir);
    CHECK(o.code == 2);
    // Overlap introduced only through the file is still caught at startup.
    std::ofstream(dir / "overlap.ini") << "[run]\ncodebook = " << (testing::bench_dir() / "codebook_186.csv").string()
                                       << "\nlabeled_fields = 0-1\nunlabeled_fields = 1\ntest_fields = 2\n"
                                          "[sim]\nn_fields = 3\n";
    o = run("pipeline --config " + quoted(dir / "overlap.ini"), dir);
    CHECK(o.code == 2);
    CHECK_FALSE(fs::exists(dir / "out" / "well.json"));
    CHECK(run("nosuchcommand", dir).code == 2);
}

TEST_CASE("stages run one after another through the output directory") {
    const auto dir = testing::scratch_dir("cli_stages");
    const auto cfg = quoted(write_config(dir, testing::noiseless_config_text()));
    const auto out = dir / "out";
    for (const char* stage : {"simulate", "annotate", "burnin", "train", "decode", "call-cells", "evaluate", "report"}) {
        const auto o = run(std::string(stage) + " --config " + cfg, dir);
        CHECK_MESSAGE(o.code == 0, stage << ": " << o.output);
    }
    for (const char* name : {"well.json", "reference_abundance.csv", "labels.csv", "model_burnin.json",
                             "teacher.json", "history.jsonl", "spot_calls.csv", "cell_calls.csv", "report.json",
                             "report.txt", "abundance_scatter.svg", "accuracy_curve.svg"})
        CHECK_MESSAGE(fs::exists(out / name), name);
    // The staged run reproduces the in-memory pipeline on a noise-free well.
    const auto rep = plepi::report_from_json(read(out / "report.json"));
    CHECK(*rep.spot_accuracy == 1.0);
    CHECK(*rep.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*rep.cell_recovery_rate == 1.0);
}

TEST_CASE("simulate is byte-identical across reruns and thread counts") {
    const auto dir = testing::scratch_dir("cli_simulate");
    const auto cfg = quoted(write_config(dir, testing::noisy_config_text()));
    REQUIRE(run("simulate --config " + cfg + " --threads 1 --out a", dir).code == 0);
    REQUIRE(run("simulate --config " + cfg + " --threads 1 --out b", dir).code == 0);
    REQUIRE(run("simulate --config " + cfg + " --threads 4 --out c", dir).code == 0);
    for (const char* name : {"well.json", "reference_abundance.csv"}) {
        CHECK(read(dir / "a" / name) == read(dir / "b" / name));
        CHECK(read(dir / "a" / name) == read(dir / "c" / name));
    }
    for (const auto& e : fs::directory_iterator(dir / "a" / "tiles"))
        CHECK(read(e.path()) == read(dir / "c" / "tiles" / e.path().filename()));
    REQUIRE(run("simulate --config " + cfg + " --seed 77 --out d", dir).code == 0);
    CHECK(read(dir / "a" / "well.json") != read(dir / "d" / "well.json"));
}

TEST_CASE("pipeline reports are reproducible and zero rounds give the baseline") {
    const auto dir = testing::scratch_dir("cli_pipeline");
    const auto cfg = quoted(write_config(dir, testing::noisy_config_text(1)));
    REQUIRE(run("pipeline --config " + cfg + " --threads 1 --out one", dir).code == 0);
    REQUIRE(run("pipeline --config " + cfg + " --threads 8 --out eight", dir).code == 0);
    CHECK(read(dir / "one" / "report.json") == read(dir / "eight" / "report.json"));
    CHECK(read(dir / "one" / "spot_calls.csv") == read(dir / "eight" / "spot_calls.csv"));

    REQUIRE(run("pipeline --config " + cfg + " --rounds 0 --out zero", dir).code == 0);
    CHECK(read(dir / "zero" / "teacher.json") == read(dir / "zero" / "model_burnin.json"));
    CHECK(read(dir / "zero" / "history.jsonl").empty());
}

TEST_CASE("ablate prints the six-cell table") {
    const auto dir = testing::scratch_dir("cli_ablate");
    const auto cfg = quoted(write_config(dir, testing::noisy_config_text(1)));
    const auto o = run("ablate --config " + cfg, dir);
    REQUIRE(o.code == 0);
    CHECK(fs::exists(dir / "out" / "ablation.md"));
    CHECK(fs::exists(dir / "out" / "ablation.json"));
    CHECK(o.output.find("location") != std::string::npos);
}

TEST_CASE("make-codebook writes a loadable book") {
    const auto dir = testing::scratch_dir("cli_codebook");
    const auto o = run("make-codebook --targeted 40 --cycles 7 --min-dist 3 --trick 3 --seed 1 " +
                           quoted(dir / "cb.csv"),
                       dir);
    REQUIRE(o.code == 0);
    const auto cb = plepi::load_codebook(dir / "cb.csv");
    CHECK(cb.size() == 43);
}
