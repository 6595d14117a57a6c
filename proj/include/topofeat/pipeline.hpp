#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "topofeat/eval.hpp"
#include "topofeat/image.hpp"
#include "topofeat/persistence.hpp"
#include "topofeat/ulbp.hpp"
#include "topofeat/vectorize.hpp"

namespace topofeat {

struct ManifestEntry {
    std::string path;
    Label label = Label::Normal;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

/// CSV with a "path,label" header; relative paths resolve against the
/// manifest's directory.
DatasetManifest load_manifest(const std::string& path);

/// Loads every image up front, failing on the first unreadable file with the
/// offending path in the message.
std::vector<GrayImage> load_images(const DatasetManifest& manifest);

enum class AssemblyMode { PerGeometry, AllGeometries, Cubical };

std::string to_string(AssemblyMode m);
AssemblyMode assembly_mode_from_string(const std::string& s);

struct AssemblyStrategy {
    AssemblyMode mode = AssemblyMode::PerGeometry;
    int lambda = 3;                  // geometry for PerGeometry mode
    std::vector<int> dims = {0, 1};  // homology dimensions, ascending subset of {0,1}
    VectorizerConfig vectorizer;     // range is overridden per stream by calibration
    FinitizePolicy finitize_policy = FinitizePolicy::Cap;
    std::optional<double> vr_eps_max; // default: each cloud's own diameter
    std::size_t max_landmarks = 1000; // larger clouds are stride-subsampled
};

void validate_strategy(const AssemblyStrategy& s);

/// Diagram sources in feature order: the eight rotations of one geometry, all
/// 56 selectors, or the single "cubical" source.
std::vector<std::string> strategy_sources(const AssemblyStrategy& s);

/// Feature layout: for each source, one segment per homology dimension.
std::vector<LayoutSegment> strategy_layout(const AssemblyStrategy& s);

std::size_t feature_width(const AssemblyStrategy& s);

/// One stream = one (source, dimension) pair, keyed like "G3R1/dim0".
std::string stream_key(const std::string& source, int dim);

struct Calibration {
    std::map<std::string, Range> ranges; // stream key -> frozen value range
    std::vector<std::string> warnings;   // streams that fell back to [0,1]
};

/// Finitized diagrams of one image, indexed like strategy_sources.
struct DiagramSet {
    std::vector<PersistenceDiagram> by_source;
};

struct FeaturizeEvents {
    std::vector<std::string> empty_clouds; // "name:source"
    std::vector<std::string> subsampled;   // "name:source 1532->1000"
};

/// Computes every per-source diagram, distributing (image, source) tasks over
/// `parallelism` workers; results and events land in per-task slots, so the
/// output is identical for any worker count. Empty names fall back to
/// "image<index>".
std::vector<DiagramSet> compute_diagrams(const std::vector<GrayImage>& images,
                                         const std::vector<std::string>& names,
                                         const AssemblyStrategy& strategy, int parallelism,
                                         FeaturizeEvents* events);

/// Freezes one value range per stream from the given images' diagrams:
/// [0, max finite death]. Streams with no bars fall back to [0, 1] and are
/// listed in warnings.
Calibration calibrate_diagrams(const std::vector<DiagramSet>& diagrams,
                               const std::vector<std::size_t>& indices,
                               const AssemblyStrategy& strategy);

/// Calibrates over the whole manifest.
Calibration calibrate(const DatasetManifest& manifest, const AssemblyStrategy& strategy);

std::vector<std::vector<double>> vectorize_diagrams(const std::vector<DiagramSet>& diagrams,
                                                    const AssemblyStrategy& strategy,
                                                    const Calibration& calibration,
                                                    int parallelism);

struct ImageFeatures {
    FeatureVector vec;
    FeaturizeEvents events;
};

/// Features of one image under an already-frozen calibration.
ImageFeatures featurize_image(const GrayImage& img, const AssemblyStrategy& strategy,
                              const Calibration& calibration);

struct FeatureMatrix {
    std::vector<std::string> paths;
    std::vector<Label> labels;
    std::vector<LayoutSegment> layout;
    std::vector<std::vector<double>> rows;
    FeaturizeEvents events;
};

/// Featurizes a whole manifest under a frozen calibration.
FeatureMatrix featurize_dataset(const DatasetManifest& manifest, const AssemblyStrategy& strategy,
                                const Calibration& calibration, int parallelism);

/// Stratified k-fold cross-validation where features are rebuilt per fold:
/// calibration is frozen on each fold's training images only, then applied to
/// both splits.
EvalReport cross_validate_images(const std::vector<GrayImage>& images,
                                 const std::vector<Label>& labels,
                                 const AssemblyStrategy& strategy, int k, std::uint64_t seed,
                                 int parallelism, const TrainOptions& opts = {});

EvalReport cross_validate_dataset(const DatasetManifest& manifest,
                                  const AssemblyStrategy& strategy, int k, std::uint64_t seed,
                                  int parallelism, const TrainOptions& opts = {});

/// Feature matrix CSV: header "path,label,<source>/dim<d>/<method>/<i>,...",
/// values printed with enough digits to round-trip exactly.
void write_feature_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_feature_csv(const std::string& path);

/// JSON sidecar describing how a feature matrix was produced: strategy,
/// calibration, layout, label counts and per-image events. No timestamps, so
/// reruns are byte-identical.
void write_metadata(const FeatureMatrix& m, const AssemblyStrategy& strategy,
                    const Calibration& calibration, const std::string& path);

/// One diagram as a JSON document; infinite deaths serialize as "inf".
std::string diagram_to_json(const PersistenceDiagram& pd, const std::string& image,
                            const std::string& source);

/// Writes via a temp file in the same directory plus rename, so readers never
/// observe a partial file.
void atomic_write_file(const std::string& path, const std::string& content);

struct Cancelled : std::runtime_error {
    explicit Cancelled(const std::string& what) : std::runtime_error(what) {}
};

/// When set, parallel work polls the flag between tasks and aborts with
/// Cancelled once it turns true. Pass nullptr to clear.
void set_cancel_flag(const std::atomic<bool>* flag);

} // namespace topofeat
