#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <sys/wait.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "topofeat/pipeline.hpp"
#include "topofeat/rng.hpp"

using namespace topofeat;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int status = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TOPOFEAT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int rc = pclose(pipe);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

fs::path fresh_dir() {
    static std::atomic<int> counter{0};
    const fs::path p =
        fs::temp_directory_path() / ("topofeat_cli_" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

GrayImage ring_image() {
    GrayImage img(3, 3, 0);
    img.at(1, 1) = 5;
    return img;
}

GrayImage noisy_image(std::uint64_t seed, int w = 8, int h = 8) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.bounded(256));
    return img;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("version and usage errors") {
    const RunResult v = run_cli("--version");
    CHECK(v.status == 0);
    CHECK(v.out.find("topofeat 0.1.0") != std::string::npos);

    CHECK(run_cli("").status != 0);               // a subcommand is required
    CHECK(run_cli("--no-such-flag").status != 0);
    CHECK(run_cli("frobnicate").status != 0);
}

TEST_CASE("the selector table lists all 56 canonical codes") {
    const RunResult r = run_cli("ulbp-table");
    REQUIRE(r.status == 0);
    CHECK(count_lines(r.out) == 57);
    CHECK(r.out.rfind("selector,code,decimal\n", 0) == 0);
    CHECK(r.out.find("G1R1,00000001,128") != std::string::npos);
    CHECK(r.out.find("G3R1,00000111,224") != std::string::npos);
}

TEST_CASE("landmark extraction") {
    const fs::path dir = fresh_dir();
    GrayImage tiny(1, 1);
    tiny.at(0, 0) = 5;
    write_pgm(tiny, (dir / "tiny.pgm").string());
    GrayImage bright(4, 4, 10);
    bright.at(2, 1) = 200;
    write_pgm(bright, (dir / "bright.pgm").string());

    const RunResult empty = run_cli((dir / "tiny.pgm").string() + " --selector G3R1 landmarks");
    CHECK(empty.status != 0); // positional before the subcommand is an error

    const RunResult ok = run_cli("landmarks " + (dir / "tiny.pgm").string() + " --selector G3R1");
    CHECK(ok.status == 0);
    CHECK(ok.out == "x,y\n");

    std::string expected = "x,y\n";
    for (const auto& p : extract_landmarks(bright, GeometrySelector{3, 1}).points)
        expected += std::to_string(p.x) + "," + std::to_string(p.y) + "\n";
    const RunResult full =
        run_cli("landmarks " + (dir / "bright.pgm").string() + " --selector G3R1");
    CHECK(full.status == 0);
    CHECK(full.out == expected);

    CHECK(run_cli("landmarks " + (dir / "bright.pgm").string() + " --selector G9R1").status != 0);
    CHECK(run_cli("landmarks " + (dir / "absent.pgm").string() + " --selector G3R1").status != 0);
}

TEST_CASE("single diagram computation") {
    const fs::path dir = fresh_dir();
    write_pgm(ring_image(), (dir / "ring.pgm").string());
    write_pgm(GrayImage(5, 5, 7), (dir / "flat.pgm").string());

    const RunResult raw = run_cli("ph " + (dir / "ring.pgm").string() + " --mode cubical");
    REQUIRE(raw.status == 0);
    const nlohmann::json j = nlohmann::json::parse(raw.out);
    CHECK(j.at("selector") == "cubical");
    CHECK(j.at("scale_max") == 5.0);
    CHECK(j.at("finitize_policy").is_null());
    REQUIRE(j.at("dim0").size() == 1);
    CHECK(j.at("dim0")[0][0] == 0.0);
    CHECK(j.at("dim0")[0][1] == "inf");
    REQUIRE(j.at("dim1").size() == 1);
    CHECK(j.at("dim1")[0][0] == 0.0);
    CHECK(j.at("dim1")[0][1] == 5.0);

    const RunResult capped =
        run_cli("ph " + (dir / "ring.pgm").string() + " --mode cubical --finitize cap");
    REQUIRE(capped.status == 0);
    const nlohmann::json jc = nlohmann::json::parse(capped.out);
    CHECK(jc.at("finitize_policy") == "cap");
    CHECK(jc.at("dim0")[0][1] == 5.0);

    // A constant image has no G1R1 landmarks: valid run, empty diagram.
    const RunResult flat = run_cli("ph " + (dir / "flat.pgm").string() + " --selector G1R1");
    REQUIRE(flat.status == 0);
    const nlohmann::json jf = nlohmann::json::parse(flat.out);
    CHECK(jf.at("dim0").empty());
    CHECK(jf.at("dim1").empty());

    // G3R1 picks up exactly the top-right corner: one everlasting component.
    const RunResult corner = run_cli("ph " + (dir / "flat.pgm").string() + " --selector G3R1");
    REQUIRE(corner.status == 0);
    const nlohmann::json jcorner = nlohmann::json::parse(corner.out);
    REQUIRE(jcorner.at("dim0").size() == 1);
    CHECK(jcorner.at("dim0")[0][1] == "inf");
    CHECK(jcorner.at("dim1").empty());

    CHECK(run_cli("ph " + (dir / "ring.pgm").string()).status != 0); // vr needs a selector
    CHECK(run_cli("ph " + (dir / "ring.pgm").string() + " --mode voxel").status != 0);
}

TEST_CASE("feature extraction is reproducible across runs and workers") {
    const fs::path dir = fresh_dir();
    std::ofstream manifest(dir / "m.csv");
    manifest << "path,label\n";
    for (int i = 0; i < 4; ++i) {
        const std::string name = "img" + std::to_string(i) + ".pgm";
        write_pgm(noisy_image(200 + static_cast<std::uint64_t>(i)), (dir / name).string());
        manifest << name << "," << (i % 2 == 0 ? "normal" : "abnormal") << "\n";
    }
    manifest.close();

    const std::string base = "features --manifest " + (dir / "m.csv").string();
    const std::string f1 = (dir / "f1.csv").string();
    REQUIRE(run_cli(base + " --out " + f1 + " --meta " + (dir / "meta1.json").string()).status == 0);
    const std::string first_csv = slurp(f1);
    const std::string first_meta = slurp(dir / "meta1.json");

    REQUIRE(run_cli(base + " --out " + f1 + " --meta " + (dir / "meta1.json").string()).status == 0);
    CHECK(slurp(f1) == first_csv); // byte-identical rerun
    CHECK(slurp(dir / "meta1.json") == first_meta);

    const std::string f3 = (dir / "f3.csv").string();
    REQUIRE(run_cli(base + " --out " + f3 + " --parallelism 3").status == 0);
    CHECK(slurp(f3) == first_csv); // worker count is invisible in the output

    const FeatureMatrix m = read_feature_csv(f1);
    CHECK(m.rows.size() == 4);
    CHECK(m.rows.front().size() == 160); // 8 sources x 2 dims x 10 statistics
    const nlohmann::json meta = nlohmann::json::parse(first_meta);
    CHECK(meta.at("columns") == 160);
    CHECK(meta.at("strategy").at("mode") == "per-geometry");

    const fs::path dumps = dir / "diagrams";
    REQUIRE(run_cli(base + " --out " + (dir / "f4.csv").string() + " --dump-diagrams " +
                    dumps.string())
                .status == 0);
    std::size_t json_files = 0;
    for (const auto& e : fs::directory_iterator(dumps))
        if (e.path().extension() == ".json") ++json_files;
    CHECK(json_files == 4u * 8u);

    CHECK(run_cli(base + " --out " + (dir / "bad.csv").string() + " --lambda 9").status != 0);
    CHECK(run_cli("features --manifest " + (dir / "absent.csv").string() + " --out " +
                  (dir / "bad2.csv").string())
              .status != 0);
    CHECK(!fs::exists(dir / "bad2.csv")); // failed runs leave no partial output
}

TEST_CASE("evaluation of a feature matrix") {
    const fs::path dir = fresh_dir();
    FeatureMatrix m;
    m.layout = {{"cubical", 0, VectorizeMethod::Statistics, 3}};
    Rng rng(77);
    for (int i = 0; i < 20; ++i) {
        const bool abnormal = i >= 10;
        const double center = abnormal ? 10.0 : -10.0;
        m.paths.push_back("img" + std::to_string(i) + ".pgm");
        m.labels.push_back(abnormal ? Label::Abnormal : Label::Normal);
        m.rows.push_back({center + rng.uniform(-1.0, 1.0), center + rng.uniform(-1.0, 1.0),
                          center + rng.uniform(-1.0, 1.0)});
    }
    const std::string features = (dir / "features.csv").string();
    write_feature_csv(m, features);

    const std::string report = (dir / "report.json").string();
    const RunResult r = run_cli("evaluate --features " + features + " --out " + report);
    REQUIRE(r.status == 0);
    CHECK(r.out.find("mean sensitivity 1.0000") != std::string::npos);
    CHECK(r.out.find("mean specificity 1.0000") != std::string::npos);

    const nlohmann::json j = nlohmann::json::parse(slurp(report));
    CHECK(j.at("k") == 5);
    CHECK(j.at("seed") == 7);
    CHECK(j.at("folds").size() == 5);
    CHECK(j.at("mean_sensitivity") == 1.0);

    // More folds than the smaller class has members cannot work.
    CHECK(run_cli("evaluate --features " + features + " --folds 12").status != 0);
}
