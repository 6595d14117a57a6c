#include "topofeat/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "topofeat/errors.hpp"

#ifndef TOPOFEAT_VERSION
#define TOPOFEAT_VERSION "0.0.0"
#endif

namespace topofeat {

namespace {

std::atomic<const std::atomic<bool>*> g_cancel{nullptr};

void check_cancel() {
    const std::atomic<bool>* flag = g_cancel.load(std::memory_order_relaxed);
    if (flag && flag->load(std::memory_order_relaxed)) throw Cancelled("operation cancelled");
}

/// Runs fn(0..n-1) over up to `parallelism` workers. Task indices map to fixed
/// output slots, so scheduling order never changes results. The first thrown
/// exception wins; remaining tasks are abandoned.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            check_cancel();
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto body = [&] {
        for (;;) {
            if (abort.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                check_cancel();
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                abort.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string policy_name(FinitizePolicy p) { return p == FinitizePolicy::Cap ? "cap" : "drop"; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string image_name(const std::vector<std::string>& names, std::size_t i) {
    if (i < names.size() && !names[i].empty()) return names[i];
    return "image" + std::to_string(i);
}

const std::vector<PersistencePair>& pairs_of(const PersistenceDiagram& pd, int dim) {
    return dim == 0 ? pd.dim0 : pd.dim1;
}

/// Finitized diagram of one image for one source, plus any events.
PersistenceDiagram source_diagram(const GrayImage& img, const AssemblyStrategy& strategy,
                                  const std::string& source, std::string* empty_event,
                                  std::string* subsample_event) {
    if (source == "cubical") {
        const Filtration f = cubical_filtration(img);
        return finitize(compute_persistence(f), strategy.finitize_policy);
    }
    const auto sel = selector_from_string(source);
    if (!sel) throw std::invalid_argument("unknown diagram source '" + source + "'");
    PointCloud cloud = extract_landmarks(img, *sel);
    if (cloud.empty()) {
        if (empty_event) *empty_event = source;
        PersistenceDiagram empty;
        empty.scale_max = 0.0;
        return finitize(empty, strategy.finitize_policy);
    }
    SubsampleResult sub = subsample_cloud(cloud, strategy.max_landmarks);
    if (sub.subsampled && subsample_event)
        *subsample_event =
            source + " " + std::to_string(sub.original_n) + "->" + std::to_string(sub.cloud.size());
    const DistanceMatrix d = pairwise_distances(sub.cloud);
    const double eps = strategy.vr_eps_max.value_or(max_pairwise_distance(d));
    const Filtration f = vr_filtration(d, eps);
    return finitize(compute_persistence(f), strategy.finitize_policy);
}

} // namespace

void set_cancel_flag(const std::atomic<bool>* flag) { g_cancel.store(flag); }

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest '" + path + "'");
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    DatasetManifest m;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!saw_header) {
            const auto cols = split(line, ',');
            if (cols.size() != 2 || trim(lower(cols[0])) != "path" || trim(lower(cols[1])) != "label")
                throw std::invalid_argument("manifest '" + path + "' must start with a 'path,label' header");
            saw_header = true;
            continue;
        }
        const std::size_t comma = line.rfind(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("manifest '" + path + "' line " + std::to_string(lineno) +
                                        ": expected 'path,label'");
        ManifestEntry e;
        e.path = trim(line.substr(0, comma));
        e.label = label_from_string(trim(lower(line.substr(comma + 1))));
        if (e.path.empty())
            throw std::invalid_argument("manifest '" + path + "' line " + std::to_string(lineno) +
                                        ": empty path");
        std::filesystem::path p(e.path);
        if (p.is_relative()) e.path = (base / p).string();
        m.entries.push_back(std::move(e));
    }
    if (!saw_header || m.entries.empty())
        throw std::invalid_argument("manifest '" + path + "' has no entries");
    return m;
}

std::vector<GrayImage> load_images(const DatasetManifest& manifest) {
    std::vector<GrayImage> images;
    images.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        try {
            images.push_back(load_image(e.path));
        } catch (const std::exception& ex) {
            throw std::runtime_error("failed to load '" + e.path + "': " + ex.what());
        }
    }
    return images;
}

std::string to_string(AssemblyMode m) {
    switch (m) {
    case AssemblyMode::PerGeometry: return "per-geometry";
    case AssemblyMode::AllGeometries: return "all-geometries";
    case AssemblyMode::Cubical: return "cubical";
    }
    throw std::invalid_argument("unknown assembly mode");
}

AssemblyMode assembly_mode_from_string(const std::string& s) {
    if (s == "per-geometry") return AssemblyMode::PerGeometry;
    if (s == "all-geometries") return AssemblyMode::AllGeometries;
    if (s == "cubical") return AssemblyMode::Cubical;
    throw std::invalid_argument("unknown assembly mode '" + s +
                                "' (expected per-geometry, all-geometries or cubical)");
}

void validate_strategy(const AssemblyStrategy& s) {
    if (s.mode == AssemblyMode::PerGeometry && (s.lambda < 1 || s.lambda > 7))
        throw std::invalid_argument("geometry index must be in 1..7");
    if (s.dims.empty()) throw std::invalid_argument("need at least one homology dimension");
    for (std::size_t i = 0; i < s.dims.size(); ++i) {
        if (s.dims[i] != 0 && s.dims[i] != 1)
            throw std::invalid_argument("homology dimensions must be 0 or 1");
        if (i > 0 && s.dims[i] <= s.dims[i - 1])
            throw std::invalid_argument("homology dimensions must be strictly ascending");
    }
    if (s.max_landmarks < 1) throw std::invalid_argument("max landmarks must be at least 1");
    if (s.vr_eps_max && !(*s.vr_eps_max > 0.0))
        throw std::invalid_argument("scale cutoff must be positive");
    vector_length(s.vectorizer); // validates the vectorizer parameters
}

std::vector<std::string> strategy_sources(const AssemblyStrategy& s) {
    validate_strategy(s);
    std::vector<std::string> out;
    switch (s.mode) {
    case AssemblyMode::PerGeometry:
        for (int xi = 1; xi <= 8; ++xi) out.push_back(to_string(GeometrySelector{s.lambda, xi}));
        break;
    case AssemblyMode::AllGeometries:
        for (const auto& sel : all_selectors()) out.push_back(to_string(sel));
        break;
    case AssemblyMode::Cubical:
        out.push_back("cubical");
        break;
    }
    return out;
}

std::vector<LayoutSegment> strategy_layout(const AssemblyStrategy& s) {
    const std::size_t len = vector_length(s.vectorizer);
    std::vector<LayoutSegment> layout;
    for (const auto& source : strategy_sources(s))
        for (int d : s.dims) layout.push_back({source, d, s.vectorizer.method, len});
    return layout;
}

std::size_t feature_width(const AssemblyStrategy& s) {
    std::size_t w = 0;
    for (const auto& seg : strategy_layout(s)) w += seg.length;
    return w;
}

std::string stream_key(const std::string& source, int dim) {
    return source + "/dim" + std::to_string(dim);
}

std::vector<DiagramSet> compute_diagrams(const std::vector<GrayImage>& images,
                                         const std::vector<std::string>& names,
                                         const AssemblyStrategy& strategy, int parallelism,
                                         FeaturizeEvents* events) {
    const std::vector<std::string> sources = strategy_sources(strategy);
    const std::size_t ns = sources.size();
    std::vector<DiagramSet> out(images.size());
    for (auto& ds : out) ds.by_source.resize(ns);

    const std::size_t n_tasks = images.size() * ns;
    std::vector<std::string> empty_slots(n_tasks), sub_slots(n_tasks);
    parallel_for(n_tasks, parallelism, [&](std::size_t t) {
        const std::size_t img_i = t / ns;
        const std::size_t src_j = t % ns;
        std::string empty_event, sub_event;
        out[img_i].by_source[src_j] =
            source_diagram(images[img_i], strategy, sources[src_j], &empty_event, &sub_event);
        if (!empty_event.empty())
            empty_slots[t] = image_name(names, img_i) + ":" + empty_event;
        if (!sub_event.empty()) sub_slots[t] = image_name(names, img_i) + ":" + sub_event;
    });
    if (events) {
        for (std::size_t t = 0; t < n_tasks; ++t) {
            if (!empty_slots[t].empty()) events->empty_clouds.push_back(empty_slots[t]);
            if (!sub_slots[t].empty()) events->subsampled.push_back(sub_slots[t]);
        }
    }
    return out;
}

Calibration calibrate_diagrams(const std::vector<DiagramSet>& diagrams,
                               const std::vector<std::size_t>& indices,
                               const AssemblyStrategy& strategy) {
    const std::vector<std::string> sources = strategy_sources(strategy);
    Calibration cal;
    for (std::size_t si = 0; si < sources.size(); ++si) {
        for (int d : strategy.dims) {
            double hi = 0.0;
            bool seen = false;
            for (std::size_t i : indices) {
                for (const auto& p : pairs_of(diagrams.at(i).by_source.at(si), d)) {
                    if (p.is_infinite()) continue;
                    hi = std::max(hi, p.death);
                    seen = true;
                }
            }
            const std::string key = stream_key(sources[si], d);
            if (seen && hi > 0.0) {
                cal.ranges[key] = Range{0.0, hi};
            } else {
                cal.ranges[key] = Range{0.0, 1.0};
                cal.warnings.push_back("stream " + key +
                                       " had no bars during calibration; using range [0, 1]");
            }
        }
    }
    return cal;
}

Calibration calibrate(const DatasetManifest& manifest, const AssemblyStrategy& strategy) {
    const std::vector<GrayImage> images = load_images(manifest);
    std::vector<std::string> names;
    names.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) names.push_back(e.path);
    const auto diagrams = compute_diagrams(images, names, strategy, 1, nullptr);
    std::vector<std::size_t> idx(images.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return calibrate_diagrams(diagrams, idx, strategy);
}

std::vector<std::vector<double>> vectorize_diagrams(const std::vector<DiagramSet>& diagrams,
                                                    const AssemblyStrategy& strategy,
                                                    const Calibration& calibration,
                                                    int parallelism) {
    const std::vector<std::string> sources = strategy_sources(strategy);
    const std::size_t ns = sources.size();
    const std::size_t seg_len = vector_length(strategy.vectorizer);
    const std::size_t per_source = seg_len * strategy.dims.size();
    const std::size_t width = per_source * ns;

    // Resolve every stream range up front so a missing key fails before any work.
    std::vector<Range> stream_ranges(ns * strategy.dims.size());
    for (std::size_t si = 0; si < ns; ++si) {
        for (std::size_t di = 0; di < strategy.dims.size(); ++di) {
            const std::string key = stream_key(sources[si], strategy.dims[di]);
            const auto it = calibration.ranges.find(key);
            if (it == calibration.ranges.end())
                throw std::invalid_argument("calibration is missing stream " + key);
            stream_ranges[si * strategy.dims.size() + di] = it->second;
        }
    }

    std::vector<std::vector<double>> rows(diagrams.size(), std::vector<double>(width, 0.0));
    const std::size_t n_tasks = diagrams.size() * ns;
    parallel_for(n_tasks, parallelism, [&](std::size_t t) {
        const std::size_t img_i = t / ns;
        const std::size_t src_j = t % ns;
        const PersistenceDiagram& pd = diagrams[img_i].by_source[src_j];
        for (std::size_t di = 0; di < strategy.dims.size(); ++di) {
            VectorizerConfig cfg = strategy.vectorizer;
            cfg.range = stream_ranges[src_j * strategy.dims.size() + di];
            const FeatureVector fv = vectorize(pairs_of(pd, strategy.dims[di]), cfg);
            const std::size_t offset = src_j * per_source + di * seg_len;
            std::copy(fv.values.begin(), fv.values.end(), rows[img_i].begin() +
                                                              static_cast<std::ptrdiff_t>(offset));
        }
    });
    return rows;
}

ImageFeatures featurize_image(const GrayImage& img, const AssemblyStrategy& strategy,
                              const Calibration& calibration) {
    ImageFeatures out;
    std::vector<GrayImage> images{img};
    const auto diagrams = compute_diagrams(images, {"image"}, strategy, 1, &out.events);
    auto rows = vectorize_diagrams(diagrams, strategy, calibration, 1);
    out.vec.values = std::move(rows.front());
    out.vec.layout = strategy_layout(strategy);
    return out;
}

FeatureMatrix featurize_dataset(const DatasetManifest& manifest, const AssemblyStrategy& strategy,
                                const Calibration& calibration, int parallelism) {
    FeatureMatrix m;
    const std::vector<GrayImage> images = load_images(manifest);
    for (const auto& e : manifest.entries) {
        m.paths.push_back(e.path);
        m.labels.push_back(e.label);
    }
    const auto diagrams = compute_diagrams(images, m.paths, strategy, parallelism, &m.events);
    m.rows = vectorize_diagrams(diagrams, strategy, calibration, parallelism);
    m.layout = strategy_layout(strategy);
    return m;
}

EvalReport cross_validate_images(const std::vector<GrayImage>& images,
                                 const std::vector<Label>& labels,
                                 const AssemblyStrategy& strategy, int k, std::uint64_t seed,
                                 int parallelism, const TrainOptions& opts) {
    if (images.size() != labels.size()) throw std::invalid_argument("image/label count mismatch");
    if (images.empty()) throw std::invalid_argument("no images");
    const auto diagrams = compute_diagrams(images, {}, strategy, parallelism, nullptr);

    EvalReport rep;
    rep.k = k;
    rep.seed = seed;
    rep.classifier = "l2-squared-hinge-gd(lambda=" + format_double(opts.lambda) +
                     ",iterations=" + std::to_string(opts.iterations) + "),per-fold-calibration";
    rep.fold_assignment = stratified_kfold(labels, k, seed);

    std::vector<double> sens, spec;
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t i = 0; i < images.size(); ++i)
            if (rep.fold_assignment[i] != f) train_idx.push_back(i);
        const Calibration cal = calibrate_diagrams(diagrams, train_idx, strategy);
        const auto rows = vectorize_diagrams(diagrams, strategy, cal, parallelism);

        std::vector<std::vector<double>> train_rows, test_rows;
        std::vector<Label> train_labels, test_labels;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rep.fold_assignment[i] == f) {
                test_rows.push_back(rows[i]);
                test_labels.push_back(labels[i]);
            } else {
                train_rows.push_back(rows[i]);
                train_labels.push_back(labels[i]);
            }
        }
        const LinearClassifier clf = train_baseline(train_rows, train_labels, opts);
        FoldResult fr;
        fr.fold = f;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            const Label got = predict(clf, test_rows[i]);
            if (test_labels[i] == Label::Abnormal)
                (got == Label::Abnormal ? fr.counts.tp : fr.counts.fn)++;
            else
                (got == Label::Normal ? fr.counts.tn : fr.counts.fp)++;
        }
        fr.sensitivity = sensitivity(fr.counts);
        fr.specificity = specificity(fr.counts);
        sens.push_back(fr.sensitivity);
        spec.push_back(fr.specificity);
        rep.folds.push_back(fr);
    }
    double ms = 0.0, mp = 0.0;
    for (double v : sens) ms += v;
    for (double v : spec) mp += v;
    ms /= static_cast<double>(sens.size());
    mp /= static_cast<double>(spec.size());
    double vs = 0.0, vp = 0.0;
    for (double v : sens) vs += (v - ms) * (v - ms);
    for (double v : spec) vp += (v - mp) * (v - mp);
    rep.mean_sensitivity = ms;
    rep.std_sensitivity = std::sqrt(vs / static_cast<double>(sens.size()));
    rep.mean_specificity = mp;
    rep.std_specificity = std::sqrt(vp / static_cast<double>(spec.size()));
    return rep;
}

EvalReport cross_validate_dataset(const DatasetManifest& manifest,
                                  const AssemblyStrategy& strategy, int k, std::uint64_t seed,
                                  int parallelism, const TrainOptions& opts) {
    const std::vector<GrayImage> images = load_images(manifest);
    std::vector<Label> labels;
    labels.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) labels.push_back(e.label);
    return cross_validate_images(images, labels, strategy, k, seed, parallelism, opts);
}

void write_feature_csv(const FeatureMatrix& m, const std::string& path) {
    if (m.rows.size() != m.paths.size() || m.rows.size() != m.labels.size())
        throw std::invalid_argument("inconsistent feature matrix");
    std::string out = "path,label";
    for (const auto& seg : m.layout)
        for (std::size_t i = 0; i < seg.length; ++i)
            out += "," + seg.source + "/dim" + std::to_string(seg.dim) + "/" +
                   to_string(seg.method) + "/" + std::to_string(i);
    out += "\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        const std::string& p = m.paths[r];
        if (p.find_first_of(",\"\n") != std::string::npos)
            throw std::invalid_argument("image path '" + p + "' cannot be stored in csv");
        out += p;
        out += ",";
        out += to_string(m.labels[r]);
        for (double v : m.rows[r]) {
            out += ",";
            out += format_double(v);
        }
        out += "\n";
    }
    atomic_write_file(path, out);
}

FeatureMatrix read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open feature matrix '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("feature matrix '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    if (header.size() < 3 || header[0] != "path" || header[1] != "label")
        throw std::invalid_argument("feature matrix '" + path + "' has an unexpected header");

    FeatureMatrix m;
    for (std::size_t c = 2; c < header.size(); ++c) {
        const auto parts = split(header[c], '/');
        if (parts.size() != 4 || parts[1].rfind("dim", 0) != 0)
            throw std::invalid_argument("bad feature column name '" + header[c] + "'");
        const std::string& source = parts[0];
        const int dim = std::stoi(parts[1].substr(3));
        VectorizeMethod method;
        if (parts[2] == "landscape") method = VectorizeMethod::Landscape;
        else if (parts[2] == "image") method = VectorizeMethod::Image;
        else if (parts[2] == "binning") method = VectorizeMethod::Binning;
        else if (parts[2] == "statistics") method = VectorizeMethod::Statistics;
        else throw std::invalid_argument("bad feature column name '" + header[c] + "'");
        if (!m.layout.empty() && m.layout.back().source == source && m.layout.back().dim == dim &&
            m.layout.back().method == method)
            m.layout.back().length++;
        else
            m.layout.push_back({source, dim, method, 1});
    }

    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != header.size())
            throw std::invalid_argument("feature matrix '" + path + "' line " +
                                        std::to_string(lineno) + ": wrong column count");
        m.paths.push_back(cols[0]);
        m.labels.push_back(label_from_string(cols[1]));
        std::vector<double> row;
        row.reserve(cols.size() - 2);
        for (std::size_t c = 2; c < cols.size(); ++c) row.push_back(parse_double(cols[c]));
        m.rows.push_back(std::move(row));
    }
    if (m.rows.empty())
        throw std::invalid_argument("feature matrix '" + path + "' has no data rows");
    return m;
}

void write_metadata(const FeatureMatrix& m, const AssemblyStrategy& strategy,
                    const Calibration& calibration, const std::string& path) {
    nlohmann::json j;
    j["tool"] = std::string("topofeat ") + TOPOFEAT_VERSION;

    nlohmann::json js;
    js["mode"] = to_string(strategy.mode);
    if (strategy.mode == AssemblyMode::PerGeometry) js["lambda"] = strategy.lambda;
    js["dims"] = strategy.dims;
    js["finitize"] = policy_name(strategy.finitize_policy);
    if (strategy.vr_eps_max) js["eps_max"] = *strategy.vr_eps_max;
    else js["eps_max"] = nullptr;
    js["max_landmarks"] = strategy.max_landmarks;
    nlohmann::json jv;
    jv["method"] = to_string(strategy.vectorizer.method);
    jv["k"] = strategy.vectorizer.k;
    jv["samples"] = strategy.vectorizer.samples;
    jv["resolution"] = strategy.vectorizer.resolution;
    jv["sigma"] = strategy.vectorizer.sigma;
    jv["omega"] = strategy.vectorizer.omega;
    js["vectorizer"] = jv;
    j["strategy"] = js;

    nlohmann::json jr = nlohmann::json::object();
    for (const auto& [key, range] : calibration.ranges) jr[key] = {range.lo, range.hi};
    j["calibration"]["ranges"] = jr;
    j["calibration"]["warnings"] = calibration.warnings;

    j["layout"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& seg : m.layout) {
        nlohmann::json e;
        e["source"] = seg.source;
        e["dim"] = seg.dim;
        e["method"] = to_string(seg.method);
        e["length"] = seg.length;
        e["offset"] = offset;
        offset += seg.length;
        j["layout"].push_back(e);
    }
    j["rows"] = m.rows.size();
    j["columns"] = offset;

    j["images"] = nlohmann::json::array();
    std::size_t normal = 0, abnormal = 0;
    for (std::size_t i = 0; i < m.paths.size(); ++i) {
        (m.labels[i] == Label::Abnormal ? abnormal : normal)++;
        j["images"].push_back({{"path", m.paths[i]}, {"label", to_string(m.labels[i])}});
    }
    j["label_counts"] = {{"normal", normal}, {"abnormal", abnormal}};
    j["events"]["empty_clouds"] = m.events.empty_clouds;
    j["events"]["subsampled"] = m.events.subsampled;

    atomic_write_file(path, j.dump(2) + "\n");
}

std::string diagram_to_json(const PersistenceDiagram& pd, const std::string& image,
                            const std::string& source) {
    nlohmann::json j;
    j["source"] = image;
    j["selector"] = source;
    j["scale_max"] = pd.scale_max;
    if (pd.finitized) j["finitize_policy"] = policy_name(*pd.finitized);
    else j["finitize_policy"] = nullptr;
    auto dump_pairs = [](const std::vector<PersistencePair>& pairs) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& p : pairs) {
            nlohmann::json pair = nlohmann::json::array();
            pair.push_back(p.birth);
            if (p.is_infinite()) pair.push_back("inf");
            else pair.push_back(p.death);
            arr.push_back(pair);
        }
        return arr;
    };
    j["dim0"] = dump_pairs(pd.dim0);
    j["dim1"] = dump_pairs(pd.dim1);
    return j.dump(2) + "\n";
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
            out << content;
            out.flush();
            if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

} // namespace topofeat
