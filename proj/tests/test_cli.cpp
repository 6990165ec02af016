#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "irrkit/dataio.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d =
            fs::temp_directory_path() / ("irrkit-cli-test-" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

CliResult run_cli(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string command = std::string("\"") + IRRKIT_CLI_PATH + "\" " + args + " > \"" +
                                out.string() + "\" 2> \"" + err.string() + "\"";
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

std::string quoted(const fs::path& p) {
    return "\"" + p.string() + "\"";
}

std::string data_file(const char* name) {
    return std::string("\"") + IRRKIT_DATA_DIR + "/" + name + "\"";
}

void write_runs_file(const fs::path& path) {
    std::ofstream runs(path, std::ios::binary);
    for (const std::string topic : {"t01", "t02", "t03"}) {
        for (int rank = 1; rank <= 10; ++rank) {
            char doc[16];
            std::snprintf(doc, sizeof doc, "d%03d", rank);
            runs << topic << " Q0 " << doc << ' ' << rank << ' ' << 1.0 / rank << " SOLR\n";
        }
        for (int rank = 1; rank <= 10; ++rank) {
            char doc[16];
            std::snprintf(doc, sizeof doc, "d%03d", 31 - rank);
            runs << topic << " Q0 " << doc << ' ' << rank << ' ' << 1.0 / rank << " RAND\n";
        }
    }
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("agree --no-such-flag x").exit_code == 2);
    CHECK(run_cli("agree").exit_code == 2);  // missing required --assessments
    CHECK(run_cli("").exit_code == 2);       // a subcommand is required
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("study --help").exit_code == 0);
}

TEST_CASE("input errors exit with 1 and name the file") {
    const auto missing = run_cli("agree --assessments /nonexistent/a.tsv");
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("/nonexistent/a.tsv") != std::string::npos);

    const fs::path bad = work_dir() / "bad.tsv";
    {
        std::ofstream out(bad);
        out << "session\ttopic\tassessor\tdoc\trelevance\n2010\t83\ta1\td1\tyes\n";
    }
    const auto malformed = run_cli("agree --assessments " + quoted(bad));
    CHECK(malformed.exit_code == 1);
    CHECK(malformed.err.find("bad.tsv:2") != std::string::npos);
}

TEST_CASE("filter replays a pre-scored table") {
    const auto result = run_cli("filter --agreement " + data_file("sample_agreement.tsv") +
                                " --measures kappa --kappa-min 0.4");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("dropped 17") != std::string::npos);
    CHECK(result.out.find("Kept 13 of 30") != std::string::npos);

    const auto alpha =
        run_cli("filter --agreement " + data_file("sample_agreement.tsv") +
                " --measures alpha --alpha-min 0.1 --availability " +
                data_file("sample_availability.tsv"));
    CHECK(alpha.exit_code == 0);
    CHECK(alpha.out.find("dropped 11") != std::string::npos);
    CHECK(alpha.out.find("Surviving cells") != std::string::npos);
}

TEST_CASE("study equals the stepwise composition") {
    const fs::path dir = work_dir();
    const fs::path raw = dir / "raw.tsv";
    const fs::path runs = dir / "runs.txt";
    write_runs_file(runs);

    REQUIRE(run_cli("simulate --seed 7 --assessors 5 --docs 30 --error 0.25"
                    " --missing-rate 0.05 --sessions 2 --topic-count 3 --out " +
                    quoted(raw))
                .exit_code == 0);

    const std::string study_common = "study --assessments " + quoted(raw) + " --runs " +
                                     quoted(runs) + " --max-missing 0.2";
    REQUIRE(run_cli(study_common + " --format json --out " + quoted(dir / "study.json"))
                .exit_code == 0);
    REQUIRE(run_cli(study_common + " --format markdown --out " + quoted(dir / "study.md"))
                .exit_code == 0);

    // the same pipeline, one subcommand at a time
    REQUIRE(run_cli("clean --assessments " + quoted(raw) + " --runs " + quoted(runs) +
                    " --max-missing 0.2 --out " + quoted(dir / "cleaned.tsv") + " --log " +
                    quoted(dir / "clean.json"))
                .exit_code == 0);
    REQUIRE(run_cli("agree --assessments " + quoted(dir / "cleaned.tsv") +
                    " --format json --out " + quoted(dir / "records.json"))
                .exit_code == 0);
    REQUIRE(run_cli("filter --agreement " + quoted(dir / "records.json") +
                    " --measures kappa --format json --out " + quoted(dir / "fk.json"))
                .exit_code == 0);
    REQUIRE(run_cli("filter --agreement " + quoted(dir / "records.json") +
                    " --measures alpha --format json --out " + quoted(dir / "fa.json"))
                .exit_code == 0);
    const std::string eval_common =
        "eval --assessments " + quoted(dir / "cleaned.tsv") + " --runs " + quoted(runs);
    REQUIRE(run_cli(eval_common + " --format json --out " + quoted(dir / "p0.json"))
                .exit_code == 0);
    REQUIRE(run_cli(eval_common + " --filter " + quoted(dir / "fk.json") +
                    " --format json --out " + quoted(dir / "pk.json"))
                .exit_code == 0);
    REQUIRE(run_cli(eval_common + " --filter " + quoted(dir / "fa.json") +
                    " --format json --out " + quoted(dir / "pa.json"))
                .exit_code == 0);
    REQUIRE(run_cli("diff --original " + quoted(dir / "p0.json") + " --filtered " +
                    quoted(dir / "pk.json") + " --format json --out " + quoted(dir / "rk.json"))
                .exit_code == 0);
    const std::string report_common =
        "report --records " + quoted(dir / "records.json") + " --clean-log " +
        quoted(dir / "clean.json") + " --kappa-filter " + quoted(dir / "fk.json") +
        " --alpha-filter " + quoted(dir / "fa.json") + " --unfiltered " +
        quoted(dir / "p0.json") + " --kappa-precision " + quoted(dir / "pk.json") +
        " --alpha-precision " + quoted(dir / "pa.json");
    REQUIRE(run_cli(report_common + " --format json --out " + quoted(dir / "report.json"))
                .exit_code == 0);
    REQUIRE(run_cli(report_common + " --format markdown --out " + quoted(dir / "report.md"))
                .exit_code == 0);

    CHECK(slurp(dir / "report.json") == slurp(dir / "study.json"));
    CHECK(slurp(dir / "report.md") == slurp(dir / "study.md"));

    // diff reproduces the study's kappa RMS row
    const auto study_json = nlohmann::json::parse(slurp(dir / "study.json"));
    const auto rms_json = nlohmann::json::parse(slurp(dir / "rk.json"));
    CHECK(rms_json.at("rms") == study_json.at("rms").at("kappa"));
}

TEST_CASE("study accepts a topic legend") {
    const fs::path dir = work_dir();
    const fs::path raw = dir / "legend-raw.tsv";
    const fs::path runs = dir / "legend-runs.txt";
    write_runs_file(runs);
    REQUIRE(run_cli("simulate --seed 3 --assessors 4 --docs 30 --sessions 1 --topic-count 3"
                    " --out " +
                    quoted(raw))
                .exit_code == 0);
    const auto result = run_cli(
        "study --assessments " + quoted(raw) + " --runs " + quoted(runs) +
        " --max-missing 0.2 --topics " + data_file("topics.tsv"));
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("## Topics") != std::string::npos);
    CHECK(result.out.find("Media and War") != std::string::npos);
}

TEST_CASE("eval rejects mismatched filter and assessments quietly with exit 1") {
    const auto result = run_cli("diff --original /nope.json --filtered /nope2.json");
    CHECK(result.exit_code == 1);
}

TEST_CASE("config file merges with lowest precedence") {
    const fs::path dir = work_dir();
    const fs::path config = dir / "irrkit.ini";
    {
        std::ofstream out(config);
        out << "[simulate]\nassessors=3\ndocs=8\nseed=5\n";
    }
    const fs::path from_config = dir / "sim-config.tsv";
    REQUIRE(run_cli("--config " + quoted(config) + " simulate --out " + quoted(from_config))
                .exit_code == 0);
    const auto data = [&] {
        std::ifstream in(from_config);
        return irrkit::dataio::parse_assessments(in, "sim-config.tsv");
    }();
    CHECK(data.sets.at(0).assessor_count() == 3);
    CHECK(data.sets.at(0).document_count() == 8);

    // command line wins over the config value
    const fs::path overridden = dir / "sim-override.tsv";
    REQUIRE(run_cli("--config " + quoted(config) + " simulate --assessors 2 --out " +
                    quoted(overridden))
                .exit_code == 0);
    const auto data2 = [&] {
        std::ifstream in(overridden);
        return irrkit::dataio::parse_assessments(in, "sim-override.tsv");
    }();
    CHECK(data2.sets.at(0).assessor_count() == 2);
}
