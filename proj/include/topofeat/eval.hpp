#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace topofeat {

enum class Label { Normal, Abnormal };

std::string to_string(Label l);
Label label_from_string(const std::string& s);

/// Abnormal is the positive class throughout.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
};

/// tp / (tp + fn). Throws UndefinedMetric when no positives were evaluated.
double sensitivity(const ConfusionCounts& c);

/// tn / (tn + fp). Throws UndefinedMetric when no negatives were evaluated.
double specificity(const ConfusionCounts& c);

/// Fold index in [0, k) per example. Each class is shuffled and dealt
/// round-robin, so per-class fold sizes differ by at most one. Throws
/// InsufficientClass when any class has fewer than k members.
std::vector<int> stratified_kfold(const std::vector<Label>& labels, int k, std::uint64_t seed);

struct TrainOptions {
    double lambda = 0.01; // L2 penalty
    int iterations = 400; // gradient steps
};

/// Linear classifier over standardized features; decision >= 0 reads Abnormal.
struct LinearClassifier {
    std::vector<double> weights; // in standardized coordinates
    double bias = 0.0;
    std::vector<double> mean;    // per-column training mean
    std::vector<double> inv_std; // 1/std, or 0 for constant columns
};

/// Full-batch accelerated gradient descent on L2-regularized squared hinge
/// loss. Deterministic: no sampling, fixed iteration count, step size from
/// a power-iteration curvature estimate.
LinearClassifier train_baseline(const std::vector<std::vector<double>>& rows,
                                const std::vector<Label>& labels, const TrainOptions& opts = {});

double decision_value(const LinearClassifier& clf, const std::vector<double>& row);
Label predict(const LinearClassifier& clf, const std::vector<double>& row);

struct FoldResult {
    int fold = 0;
    ConfusionCounts counts;
    double sensitivity = 0.0;
    double specificity = 0.0;
};

struct EvalReport {
    int k = 0;
    std::uint64_t seed = 0;
    std::string classifier;
    std::vector<int> fold_assignment;
    std::vector<FoldResult> folds;
    double mean_sensitivity = 0.0;
    double std_sensitivity = 0.0; // population std over folds
    double mean_specificity = 0.0;
    double std_specificity = 0.0;
};

/// Stratified k-fold cross-validation of the baseline classifier on a fixed
/// feature matrix. Same rows, labels, k and seed always give the same report.
EvalReport cross_validate(const std::vector<std::vector<double>>& rows,
                          const std::vector<Label>& labels, int k, std::uint64_t seed,
                          const TrainOptions& opts = {});

std::string report_to_text(const EvalReport& r);
std::string report_to_json(const EvalReport& r);

} // namespace topofeat
