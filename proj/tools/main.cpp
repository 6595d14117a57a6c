#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topofeat/pipeline.hpp"

#ifndef TOPOFEAT_VERSION
#define TOPOFEAT_VERSION "0.0.0"
#endif

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

void emit(const std::string& content, const std::string& out_path) {
    if (out_path.empty()) {
        std::fputs(content.c_str(), stdout);
    } else {
        topofeat::atomic_write_file(out_path, content);
    }
}

topofeat::GeometrySelector parse_selector(const std::string& s) {
    const auto sel = topofeat::selector_from_string(s);
    if (!sel)
        throw CLI::ValidationError("--selector", "'" + s + "' is not a selector (expected G<1-7>R<1-8>)");
    return *sel;
}

std::string basename_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

struct LandmarksOpts {
    std::string image;
    std::string selector;
    std::string out;
};

void run_landmarks(const LandmarksOpts& o) {
    const topofeat::GeometrySelector sel = parse_selector(o.selector);
    const topofeat::GrayImage img = topofeat::load_image(o.image);
    const topofeat::PointCloud cloud = topofeat::extract_landmarks(img, sel);
    std::string content = "x,y\n";
    for (const auto& p : cloud.points)
        content += std::to_string(p.x) + "," + std::to_string(p.y) + "\n";
    emit(content, o.out);
    std::fprintf(stderr, "%zu landmarks for %s in %s\n", cloud.size(), o.selector.c_str(),
                 o.image.c_str());
}

struct PhOpts {
    std::string image;
    std::string mode = "vr";
    std::string selector;
    std::string finitize = "none";
    double eps_max = 0.0;
    bool has_eps = false;
    std::size_t max_landmarks = 1000;
    std::string out;
};

void run_ph(const PhOpts& o) {
    const topofeat::GrayImage img = topofeat::load_image(o.image);
    topofeat::PersistenceDiagram pd;
    std::string source;
    if (o.mode == "cubical") {
        source = "cubical";
        pd = topofeat::compute_persistence(topofeat::cubical_filtration(img));
    } else if (o.mode == "vr") {
        if (o.selector.empty())
            throw CLI::ValidationError("--selector", "required when --mode vr");
        source = o.selector;
        const topofeat::GeometrySelector sel = parse_selector(o.selector);
        const topofeat::PointCloud cloud = topofeat::extract_landmarks(img, sel);
        if (cloud.empty()) {
            std::fprintf(stderr, "note: no landmarks for %s; diagram is empty\n", source.c_str());
            pd.scale_max = 0.0;
        } else {
            const auto sub = topofeat::subsample_cloud(cloud, o.max_landmarks);
            if (sub.subsampled)
                std::fprintf(stderr, "note: subsampled %zu -> %zu landmarks\n", sub.original_n,
                             sub.cloud.size());
            const auto d = topofeat::pairwise_distances(sub.cloud);
            const double eps = o.has_eps ? o.eps_max : topofeat::max_pairwise_distance(d);
            pd = topofeat::compute_persistence(topofeat::vr_filtration(d, eps));
        }
    } else {
        throw CLI::ValidationError("--mode", "'" + o.mode + "' (expected vr or cubical)");
    }
    if (o.finitize == "cap") pd = topofeat::finitize(pd, topofeat::FinitizePolicy::Cap);
    else if (o.finitize == "drop") pd = topofeat::finitize(pd, topofeat::FinitizePolicy::Drop);
    else if (o.finitize != "none")
        throw CLI::ValidationError("--finitize", "'" + o.finitize + "' (expected none, cap or drop)");
    emit(topofeat::diagram_to_json(pd, o.image, source), o.out);
}

struct FeaturesOpts {
    std::string manifest;
    std::string mode = "per-geometry";
    int lambda = 3;
    std::vector<int> dims = {0, 1};
    std::string method = "statistics";
    int k = 100;
    int samples = 100;
    int resolution = 30;
    double sigma = 1.0;
    int omega = 30;
    std::string finitize = "cap";
    double eps_max = 0.0;
    bool has_eps = false;
    std::size_t max_landmarks = 1000;
    int parallelism = 1;
    std::string out;
    std::string meta;
    std::string dump_dir;
};

topofeat::AssemblyStrategy build_strategy(const FeaturesOpts& o) {
    topofeat::AssemblyStrategy s;
    s.mode = topofeat::assembly_mode_from_string(o.mode);
    s.lambda = o.lambda;
    s.dims = o.dims;
    if (o.method == "landscape") s.vectorizer.method = topofeat::VectorizeMethod::Landscape;
    else if (o.method == "image") s.vectorizer.method = topofeat::VectorizeMethod::Image;
    else if (o.method == "binning") s.vectorizer.method = topofeat::VectorizeMethod::Binning;
    else if (o.method == "statistics") s.vectorizer.method = topofeat::VectorizeMethod::Statistics;
    else
        throw CLI::ValidationError(
            "--method", "'" + o.method + "' (expected landscape, image, binning or statistics)");
    s.vectorizer.k = o.k;
    s.vectorizer.samples = o.samples;
    s.vectorizer.resolution = o.resolution;
    s.vectorizer.sigma = o.sigma;
    s.vectorizer.omega = o.omega;
    if (o.finitize == "cap") s.finitize_policy = topofeat::FinitizePolicy::Cap;
    else if (o.finitize == "drop") s.finitize_policy = topofeat::FinitizePolicy::Drop;
    else throw CLI::ValidationError("--finitize", "'" + o.finitize + "' (expected cap or drop)");
    if (o.has_eps) s.vr_eps_max = o.eps_max;
    s.max_landmarks = o.max_landmarks;
    topofeat::validate_strategy(s);
    return s;
}

void run_features(const FeaturesOpts& o) {
    const topofeat::AssemblyStrategy strategy = build_strategy(o);
    const topofeat::DatasetManifest manifest = topofeat::load_manifest(o.manifest);
    const std::vector<topofeat::GrayImage> images = topofeat::load_images(manifest);

    topofeat::FeatureMatrix m;
    for (const auto& e : manifest.entries) {
        m.paths.push_back(e.path);
        m.labels.push_back(e.label);
    }
    const auto diagrams =
        topofeat::compute_diagrams(images, m.paths, strategy, o.parallelism, &m.events);
    std::vector<std::size_t> all(images.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const topofeat::Calibration cal = topofeat::calibrate_diagrams(diagrams, all, strategy);
    for (const auto& w : cal.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    m.rows = topofeat::vectorize_diagrams(diagrams, strategy, cal, o.parallelism);
    m.layout = topofeat::strategy_layout(strategy);

    topofeat::write_feature_csv(m, o.out);
    if (!o.meta.empty()) topofeat::write_metadata(m, strategy, cal, o.meta);
    if (!o.dump_dir.empty()) {
        std::filesystem::create_directories(o.dump_dir);
        const auto sources = topofeat::strategy_sources(strategy);
        char prefix[16];
        for (std::size_t i = 0; i < images.size(); ++i) {
            std::snprintf(prefix, sizeof prefix, "%04zu", i);
            for (std::size_t s = 0; s < sources.size(); ++s) {
                const std::string file = std::string(prefix) + "_" + basename_stem(m.paths[i]) +
                                         "_" + sources[s] + ".json";
                topofeat::atomic_write_file(
                    (std::filesystem::path(o.dump_dir) / file).string(),
                    topofeat::diagram_to_json(diagrams[i].by_source[s], m.paths[i], sources[s]));
            }
        }
    }
    std::fprintf(stderr, "wrote %zu x %zu feature matrix to %s\n", m.rows.size(),
                 m.rows.empty() ? 0 : m.rows.front().size(), o.out.c_str());
}

struct EvaluateOpts {
    std::string features;
    int folds = 5;
    std::uint64_t seed = 7;
    double reg_lambda = 0.01;
    int iterations = 400;
    std::string out;
};

void run_evaluate(const EvaluateOpts& o) {
    const topofeat::FeatureMatrix m = topofeat::read_feature_csv(o.features);
    topofeat::TrainOptions topts;
    topts.lambda = o.reg_lambda;
    topts.iterations = o.iterations;
    const topofeat::EvalReport rep =
        topofeat::cross_validate(m.rows, m.labels, o.folds, o.seed, topts);
    std::fputs(topofeat::report_to_text(rep).c_str(), stdout);
    if (!o.out.empty()) topofeat::atomic_write_file(o.out, topofeat::report_to_json(rep));
}

void run_ulbp_table(const std::string& out) {
    std::string content = "selector,code,decimal\n";
    for (const auto& sel : topofeat::all_selectors()) {
        const topofeat::LbpCode code = topofeat::canonical_code(sel);
        content += topofeat::to_string(sel) + "," + topofeat::to_string(code) + "," +
                   std::to_string(topofeat::lbp_decimal(code)) + "\n";
    }
    emit(content, out);
}

} // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    topofeat::set_cancel_flag(&g_interrupted);

    CLI::App app{"topological feature extraction for grayscale images"};
    app.set_version_flag("--version", std::string("topofeat ") + TOPOFEAT_VERSION);
    app.set_config("--config", "", "read options from an INI/TOML file");
    app.require_subcommand(1);

    LandmarksOpts lo;
    auto* lm = app.add_subcommand("landmarks", "extract landmark pixels for one selector");
    lm->add_option("image", lo.image, "input image (PGM or PNG)")->required();
    lm->add_option("--selector", lo.selector, "geometry selector, e.g. G3R1")->required();
    lm->add_option("--out", lo.out, "output file (default: stdout)");
    lm->callback([&lo] { run_landmarks(lo); });

    PhOpts po;
    auto* ph = app.add_subcommand("ph", "compute one persistence diagram");
    ph->add_option("image", po.image, "input image (PGM or PNG)")->required();
    ph->add_option("--mode", po.mode, "vr or cubical")->capture_default_str();
    ph->add_option("--selector", po.selector, "geometry selector for vr mode");
    auto* eps_opt = ph->add_option("--eps-max", po.eps_max, "scale cutoff for vr mode");
    ph->add_option("--max-landmarks", po.max_landmarks, "subsample clouds larger than this")
        ->capture_default_str();
    ph->add_option("--finitize", po.finitize, "none, cap or drop")->capture_default_str();
    ph->add_option("--out", po.out, "output file (default: stdout)");
    ph->callback([&po, eps_opt] {
        po.has_eps = eps_opt->count() > 0;
        run_ph(po);
    });

    FeaturesOpts fo;
    auto* ft = app.add_subcommand("features", "featurize a dataset manifest");
    ft->add_option("--manifest", fo.manifest, "csv with a path,label header")->required();
    ft->add_option("--mode", fo.mode, "per-geometry, all-geometries or cubical")
        ->capture_default_str();
    ft->add_option("--lambda", fo.lambda, "geometry for per-geometry mode")->capture_default_str();
    ft->add_option("--dims", fo.dims, "homology dimensions")->delimiter(',')->capture_default_str();
    ft->add_option("--method", fo.method, "landscape, image, binning or statistics")
        ->capture_default_str();
    ft->add_option("--k", fo.k, "landscape levels")->capture_default_str();
    ft->add_option("--samples", fo.samples, "landscape samples per level")->capture_default_str();
    ft->add_option("--resolution", fo.resolution, "persistence image side")->capture_default_str();
    ft->add_option("--sigma", fo.sigma, "persistence image spread")->capture_default_str();
    ft->add_option("--omega", fo.omega, "binning line count")->capture_default_str();
    ft->add_option("--finitize", fo.finitize, "cap or drop")->capture_default_str();
    auto* feps_opt = ft->add_option("--eps-max", fo.eps_max, "fixed vr scale cutoff");
    ft->add_option("--max-landmarks", fo.max_landmarks, "subsample clouds larger than this")
        ->capture_default_str();
    ft->add_option("--parallelism", fo.parallelism, "worker threads")->capture_default_str();
    ft->add_option("--out", fo.out, "feature matrix csv")->required();
    ft->add_option("--meta", fo.meta, "metadata json sidecar");
    ft->add_option("--dump-diagrams", fo.dump_dir, "directory for per-source diagram json");
    ft->callback([&fo, feps_opt] {
        fo.has_eps = feps_opt->count() > 0;
        run_features(fo);
    });

    EvaluateOpts eo;
    auto* ev = app.add_subcommand("evaluate", "cross-validate a feature matrix");
    ev->add_option("--features", eo.features, "feature matrix csv")->required();
    ev->add_option("--folds", eo.folds, "fold count")->capture_default_str();
    ev->add_option("--seed", eo.seed, "fold assignment seed")->capture_default_str();
    ev->add_option("--reg-lambda", eo.reg_lambda, "L2 penalty")->capture_default_str();
    ev->add_option("--iterations", eo.iterations, "gradient steps")->capture_default_str();
    ev->add_option("--out", eo.out, "report json");
    ev->callback([&eo] { run_evaluate(eo); });

    std::string to;
    auto* tb = app.add_subcommand("ulbp-table", "print the 56 uniform two-transition codes");
    tb->add_option("--out", to, "output file (default: stdout)");
    tb->callback([&to] { run_ulbp_table(to); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const topofeat::Cancelled&) {
        std::fprintf(stderr, "interrupted\n");
        return 130;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
